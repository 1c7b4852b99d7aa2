"""Estimator-style wrappers: configure with parameters, ``fit`` resolves, ``predict`` evaluates."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_eta_pairs, check_method
from .codes import parse_code
from .estimate import ThresholdQuery, exact_success, find_threshold, mc_success
from .lobsm import parse_model
from .protocols import SINGLE_CODE


class SuccessProbabilityEstimator(BaseEstimator):
    """Success probability of a logical BSM (or single-code task) as a function of transmission.

    ``predict`` takes rows of (eta_a, eta_b), or a 1-D array of symmetric
    transmissions, and returns one probability per row.
    """

    def __init__(self, protocol="static", code="surface:3", model="random-basis",
                 method="exact", trials=10_000, random_state=None, n_jobs=1):
        self.protocol = protocol
        self.code = code
        self.model = model
        self.method = method
        self.trials = trials
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        """Parse the code and model; no data is needed."""
        check_method(self.method, self.random_state)
        self.code_ = parse_code(self.code)
        self.model_ = None if self.protocol in SINGLE_CODE else parse_model(self.model)
        return self

    def _results(self, X):
        check_is_fitted(self, "code_")
        etas = check_eta_pairs(X)
        if self.method == "exact":
            return [exact_success(self.protocol, self.code_, self.model_, a, b) for a, b in etas]
        return [mc_success(self.protocol, self.code_, self.model_, a, b, self.trials,
                           self.random_state, threads=self.n_jobs) for a, b in etas]

    def predict(self, X) -> np.ndarray:
        return np.array([r.mean for r in self._results(X)])

    def predict_interval(self, X) -> np.ndarray:
        """(k, 2) array of confidence bounds; degenerate for exact evaluation."""
        return np.array([(r.ci_low, r.ci_high) for r in self._results(X)])


class ThresholdEstimator(BaseEstimator):
    """Finite-size loss thresholds of a code family.

    ``family`` is a template such as ``"surface:{s}"``; ``fit(sizes)`` locates
    the crossing for each size.
    """

    def __init__(self, protocol="static", family="surface:{s}", model="random-basis",
                 target_success=0.5, tolerance=1e-3, method="exact", trials=10_000,
                 random_state=None, n_jobs=1):
        self.protocol = protocol
        self.family = family
        self.model = model
        self.target_success = target_success
        self.tolerance = tolerance
        self.method = method
        self.trials = trials
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        check_method(self.method, self.random_state)
        sizes = [int(s) for s in np.ravel(X)]
        template = self.family
        model = None if self.protocol in SINGLE_CODE else parse_model(self.model)
        query = ThresholdQuery(self.protocol, lambda s: parse_code(template.replace("{s}", str(s))),
                               sizes, model, self.target_success, tolerance=self.tolerance,
                               method=self.method, trials=self.trials, seed=self.random_state,
                               threads=self.n_jobs, family_name=template)
        self.result_ = find_threshold(query)
        self.crossings_ = np.array([np.nan if c is None else c for c in self.result_.crossings])
        self.threshold_ = self.result_.estimate
        return self

    def predict(self, X) -> np.ndarray:
        """Crossing for each requested size among those fitted (NaN when too weak)."""
        check_is_fitted(self, "result_")
        lookup = dict(zip(self.result_.sizes, self.crossings_))
        try:
            return np.array([lookup[int(s)] for s in np.ravel(X)])
        except KeyError as exc:
            raise ValueError(f"size {exc.args[0]} was not fitted") from None
