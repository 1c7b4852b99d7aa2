import math

import numpy as np
import pytest

from ltbsm.bounds import (Infeasible, InvalidParameter, adaptive_bound_product,
                          adaptive_symmetric, detection_window, format_distance,
                          repeater_max_distance, static_bound_product, static_symmetric,
                          table1_thresholds)


def test_table_values():
    t = table1_thresholds()
    assert abs(t[("lobsm p=0.5", "static")] - 0.18350341907227397) < 1e-12
    assert abs(t[("lobsm p=0.5", "adaptive-bsm")] - 0.29289321881345254) < 1e-12
    assert t[("lobsm p=0.5", "adaptive-bsm-sqm")] == 0.5
    for p in (0.5, 0.9, 1.0):
        assert abs(t[(f"assisted p={p}", "static")] - (1 - 1 / math.sqrt(1 + p))) < 1e-12
    assert all(v == 0.5 for (regime, _), v in t.items() if regime == "deterministic")


def test_product_bounds():
    assert abs(static_bound_product(0.5) - 2 / 3) < 1e-15
    assert static_bound_product(1.0) == 0.5 == adaptive_bound_product()
    assert static_bound_product(0.0) == 1.0
    assert abs(adaptive_symmetric() - (1 - 1 / math.sqrt(2))) < 1e-15


@pytest.mark.parametrize("p", np.linspace(0, 1, 21))
def test_threshold_ordering(p):
    s, a = static_symmetric(p), adaptive_symmetric()
    assert s <= a + 1e-15 <= 0.5
    if p < 1:
        assert s < a


def test_repeater_examples():
    assert isinstance(repeater_max_distance(0.8, 1, math.sqrt(2 / 3)), Infeasible)
    adaptive = repeater_max_distance(0.9, 0.8 / 0.9, 1 / math.sqrt(2))
    assert 2 <= adaptive <= 3 and format_distance(adaptive) == "2.680"
    sqm = repeater_max_distance(0.8, 1, 0.5)
    assert 9.5 <= sqm <= 10.5 and format_distance(sqm) == "10.206"
    assert str(repeater_max_distance(0.4, 1, 0.5)) == "infeasible"


def test_repeater_monotone():
    grid = np.linspace(0.55, 1.0, 10)
    d = [repeater_max_distance(g, 1, 0.5) for g in grid]
    assert all(b > a for a, b in zip(d, d[1:]))
    d = [repeater_max_distance(0.9, 1, t) for t in (0.5, 0.6, 0.7, 0.8)]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_repeater_errors():
    with pytest.raises(InvalidParameter):
        repeater_max_distance(0.9, 0.9, 0.5, 0.0)
    with pytest.raises(InvalidParameter):
        repeater_max_distance(0.0, 0.9, 0.5)


def test_detection_window():
    lo, hi = detection_window()
    assert lo == 0.5 and hi == 0.7071067811865476
    assert lo < 0.6 < hi
