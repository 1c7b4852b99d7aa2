"""Analytic loss thresholds and the single-link repeater distance budget."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple, Union

from .erasure import check_probability

ASSISTED_P = (0.5, 0.9, 1.0)


class InvalidParameter(ValueError):
    pass


@dataclass(frozen=True)
class Infeasible:
    """No positive distance works: the detectors alone already exceed the loss budget."""

    eta_b_eta_d: float
    one_minus_threshold: float

    def __str__(self):
        return "infeasible"


Distance = Union[float, Infeasible]


def static_bound_product(p: float) -> float:
    """Smallest (1 - eps_a)(1 - eps_b) a static protocol can tolerate with capability ``p``."""
    p = check_probability(p, "p")
    return 1.0 / (1.0 + p)


def adaptive_bound_product() -> float:
    return 0.5


def static_symmetric(p: float) -> float:
    return 1.0 - math.sqrt(static_bound_product(p))


def adaptive_symmetric() -> float:
    return 1.0 - math.sqrt(adaptive_bound_product())


def table1_thresholds() -> Dict[Tuple[str, str], float]:
    """Symmetric-loss thresholds keyed by (BSM regime, protocol class)."""
    table = {
        ("lobsm p=0.5", "static"): 1.0 - math.sqrt(2.0 / 3.0),
        ("lobsm p=0.5", "adaptive-bsm"): 1.0 - 1.0 / math.sqrt(2.0),
        ("lobsm p=0.5", "adaptive-bsm-sqm"): 0.5,
    }
    for p in ASSISTED_P:
        table[(f"assisted p={p}", "static")] = 1.0 - 1.0 / math.sqrt(1.0 + p)
    table[("assisted p->1", "adaptive-bsm")] = 1.0 - 1.0 / math.sqrt(2.0)
    for cls in ("static", "adaptive-bsm", "adaptive-bsm-sqm"):
        table[("deterministic", cls)] = 0.5
    return table


REGIMES = {
    "static": math.sqrt(2.0 / 3.0),
    "adaptive-bsm": 1.0 / math.sqrt(2.0),
    "bsm+sqm": 0.5,
}


def repeater_max_distance(eta_b: float, eta_d: float, one_minus_threshold: float,
                          attenuation_db_per_km: float = 0.2) -> Distance:
    """Largest internode fibre length (km) keeping per-photon transmission above the threshold.

    Fibre transmission is 10^(-att * L / 10); the link works while
    eta_b * eta_d * transmission >= one_minus_threshold.
    """
    for v, name in ((eta_b, "eta_b"), (eta_d, "eta_d"), (one_minus_threshold, "one_minus_threshold")):
        check_probability(v, name)
        if v <= 0:
            raise InvalidParameter(f"{name} must be positive")
    if not attenuation_db_per_km > 0:
        raise InvalidParameter("attenuation must be positive")
    budget = eta_b * eta_d
    if budget <= one_minus_threshold:
        return Infeasible(budget, one_minus_threshold)
    return (10.0 / attenuation_db_per_km) * math.log10(budget / one_minus_threshold)


def format_distance(d: Distance) -> str:
    return str(d) if isinstance(d, Infeasible) else f"{d:.3f}"


def detection_window() -> Tuple[float, float]:
    """Range of eta_b * eta_d where only measurement-assisted decoding yields a working link."""
    return 0.5, math.sqrt(0.5)
