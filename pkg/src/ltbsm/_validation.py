"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_eta_pairs(X) -> np.ndarray:
    """Coerce to an (k, 2) array of (eta_a, eta_b) transmissions.

    A 1-D input means symmetric loss: each value is used for both parties.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = np.column_stack([arr, arr])
    arr = check_array(arr, dtype=float, ensure_min_samples=1)
    if arr.shape[1] != 2:
        raise ValueError(f"expected columns (eta_a, eta_b), got {arr.shape[1]} columns")
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("transmissions must lie in [0, 1]")
    return arr


def check_method(method: str, seed) -> str:
    if method not in ("exact", "monte-carlo"):
        raise ValueError(f"method must be 'exact' or 'monte-carlo', got {method!r}")
    if method == "monte-carlo" and seed is None:
        raise ValueError("monte-carlo needs random_state set to an int")
    return method
