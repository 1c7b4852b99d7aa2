import pytest
from scipy.stats import binom

from ltbsm import bounds
from ltbsm.codes import build_qpc2_variant, build_repetition, parse_code
from ltbsm.decodability import exact_probability
from ltbsm.erasure import CapacityError
from ltbsm.estimate import (EstimateResult, ThresholdQuery, bell_repetition_closed_form,
                            exact_success, find_threshold, mc_success, qpc_closed_form,
                            qpc_closed_form_for)
from ltbsm.lobsm import zz_deterministic


def test_result_invariants():
    with pytest.raises(ValueError):
        EstimateResult(0.5, 0.6, 0.7, "monte-carlo")
    with pytest.raises(ValueError):
        EstimateResult(0.5, 0.4, 0.6, "exact")
    with pytest.raises(ValueError):
        EstimateResult(0.5, 0.5, 0.5, "guess")
    assert EstimateResult.point(0.3).trials == 0


def test_exact_examples():
    assert exact_success("adaptive-qpc-sqm", "qpc2var:1/inner=rep:1", "zz-det", 1, 1).mean == 0.5
    r = exact_success("static", "bellrep:2", "zz-det", 0.8, 0.8)
    assert abs(r.mean - (1 - (1 - 0.5 * 0.64) ** 2)) < 1e-12
    r = exact_success("static", "bellrep:3", "deterministic", 0.9, 0.9)
    assert abs(r.mean - 0.993141) < 1e-12


def test_exact_capacity(monkeypatch):
    monkeypatch.setenv("LTBSM_ENUM_CAP", "10")
    with pytest.raises(CapacityError, match="enumeration cap"):
        exact_success("static", "surface:3", "random-basis", 1, 1)


def test_static_surface_exact_vs_mc():
    exact = exact_success("static", "surface:3", "random-basis", 1.0, 1.0)
    mc = mc_success("static", "surface:3", "random-basis", 1.0, 1.0, 1_000_000, seed=101)
    assert mc.ci_low <= exact.mean <= mc.ci_high


def test_static_qpc32_zzdet_lossless_enumeration():
    # outcomes are Both or ZZ-only with probability 1/2 each; enumerate them directly
    from itertools import product
    from ltbsm.decodability import measurable_with
    code = parse_code("qpc:3,2")
    total = 0.0
    for both in product([False, True], repeat=6):
        if measurable_with(code, "X", both, [True] * 6) and \
                measurable_with(code, "Z", both, [True] * 6):
            total += 0.5 ** 6
    assert abs(exact_success("static", code, "zz-det", 1, 1).mean - total) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_closed_form_ideal_inner(n):
    r = qpc_closed_form(n, 1, 1, 0.5, 1, 1, 1, 1)
    assert abs(r.mean - (1 - 0.5 ** n)) < 1e-15 and r.method == "closed-form"


def test_closed_form_single_block():
    assert abs(qpc_closed_form(1, 1, 1, 1, 0.9, 0.2, 0.8, 0.3).mean - 0.72) < 1e-15


def test_closed_form_rejects_bad_input():
    with pytest.raises(ValueError):
        qpc_closed_form(2, 1.2, 1, 0.5, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        qpc_closed_form(0, 1, 1, 0.5, 1, 1, 1, 1)


def test_closed_form_tree_matches_exact():
    v = build_qpc2_variant(3, parse_code("tree:2-2"))
    inner = v.inner
    px, pz = exact_probability(inner, 0.9, "X"), exact_probability(inner, 0.9, "Z")
    cf = qpc_closed_form(3, 0.9, 0.9, 0.5, px, pz, px, pz)
    assert abs(cf.mean - exact_success("adaptive-qpc-sqm", v, "zz-det", 0.9, 0.9).mean) < 1e-12


def test_closed_form_asymmetric_matches_exact():
    v = build_qpc2_variant(4, parse_code("tree:2-2"))
    for ea, eb in ((0.95, 0.7), (0.6, 0.99)):
        assert abs(qpc_closed_form_for(v, zz_deterministic(), ea, eb).mean
                   - exact_success("adaptive-qpc-sqm", v, "zz-det", ea, eb).mean) < 1e-12


def test_mc_deterministic_success():
    r = mc_success("static", "surface:3", "deterministic", 1, 1, 500, seed=1)
    assert r.mean == 1.0 and r.ci_high == 1.0 and r.ci_low > 0.99


def test_mc_requires_seed():
    with pytest.raises(ValueError):
        mc_success("static", "rep:3", "zz-det", 1, 1, 10, seed=None)


def test_mc_thread_invariance():
    args = ("adaptive-qpc-sqm", "qpc2var:4/inner=tree:2-2", "zz-det", 0.8, 0.85, 20_000)
    assert mc_success(*args, seed=5, threads=1) == mc_success(*args, seed=5, threads=4)


def test_mc_half_width():
    r = mc_success("adaptive-qpc-sqm", "qpc2var:5/inner=tree:2-2", "zz-det", 0.85, 0.85,
                   100_000, seed=6)
    assert r.half_width < 0.005


def test_mc_width_scaling():
    w = [mc_success("static", "qpc:2,2", "random-basis", 0.8, 0.8, t, seed=7).half_width
         for t in (1_000, 100_000)]
    assert 5 <= w[0] / w[1] <= 20


CALIBRATION = [("static", "rep:3", "random-basis", 0.8, 0.9),
               ("static", "qpc:2,2", "zz-det", 0.7, 0.7),
               ("adaptive-qpc-sqm", "qpc2var:2/inner=tree:2-2", "zz-det", 0.85, 0.85),
               ("measure-z", "tree:2-2", None, 0.6, 0.6),
               ("static", "bellrep:3", "random-basis", 0.75, 0.9)]


def test_mc_calibration():
    runs, misses = 0, 0
    for k, (proto, code, model, ea, eb) in enumerate(CALIBRATION):
        exact = exact_success(proto, code, model, ea, eb).mean
        for seed in range(60):
            r = mc_success(proto, code, model, ea, eb, 2_000, seed=1000 * k + seed,
                           confidence=0.99)
            runs += 1
            misses += not (r.ci_low <= exact <= r.ci_high)
    # coverage must not be significantly below 99% (one-sided, alpha = 0.001)
    assert misses <= binom.ppf(0.999, runs, 0.01)


@pytest.mark.parametrize("proto,code,model", [
    ("static", "qpc:2,2", "random-basis"), ("static", "bellrep:3", "zz-det"),
    ("adaptive-bsm", "qpc:2,2", "zz-det"), ("adaptive-bsm", "tree:2-2", "random-basis")])
def test_loss_product_equivalence(proto, code, model):
    a = exact_success(proto, code, model, 0.9, 0.8).mean
    b = exact_success(proto, code, model, 0.72, 1.0).mean
    c = exact_success(proto, code, model, 0.8, 0.9).mean
    assert abs(a - b) < 1e-12 and abs(a - c) < 1e-12


def test_qpc_sqm_party_symmetry():
    v = "qpc2var:3/inner=tree:3-2"
    assert abs(exact_success("adaptive-qpc-sqm", v, "zz-det", 0.9, 0.7).mean
               - exact_success("adaptive-qpc-sqm", v, "zz-det", 0.7, 0.9).mean) < 1e-12


def test_bell_repetition_closed_form_matches():
    for n in (1, 2, 4):
        cf = bell_repetition_closed_form(n, 0.7, 0.8, 0.5).mean
        assert abs(cf - exact_success("static", f"bellrep:{n}", "zz-det", 0.7, 0.8).mean) < 1e-12


def test_threshold_repetition_goes_to_zero():
    q = ThresholdQuery("decode", lambda s: build_repetition(s), [2, 4, 8, 16])
    res = find_threshold(q)
    assert list(res.crossings) == sorted(res.crossings, reverse=True)
    assert res.crossings[-1] < 0.05
    assert all(0 <= c <= 1 for c in res.crossings)


def test_threshold_too_weak():
    q = ThresholdQuery("static", lambda s: parse_code(f"rep:{s}"), [1, 2], "zz-det",
                       target_success=0.9)
    res = find_threshold(q)
    assert res.crossings == (None, None) and res.estimate is None
    assert set(res.flags) == {"too-weak"}


def test_threshold_flags_non_monotone(monkeypatch):
    import ltbsm.estimate as est

    def bumpy(query, code, eps):
        return EstimateResult.point(1.0 - eps + (0.3 if 0.55 < eps < 0.65 else 0.0))
    monkeypatch.setattr(est, "_success_at", bumpy)
    res = find_threshold(ThresholdQuery("decode", lambda s: build_repetition(3), [3]))
    assert res.flags == ("non-monotone",)


def test_threshold_qpc_tree_family_increases():
    q = ThresholdQuery("adaptive-qpc-sqm",
                       lambda s: parse_code(f"qpc2var:{2 * s}/inner=tree:{s + 1}-2"),
                       [1, 2, 3, 4, 5], "zz-det")
    res = find_threshold(q)
    assert res.nondecreasing
    assert res.crossings[-1] > bounds.static_symmetric(0.5)
    assert res.estimate <= 0.5 + q.tolerance


def test_threshold_query_validation():
    with pytest.raises(ValueError):
        ThresholdQuery("static", str, [1], target_success=1.0)
    with pytest.raises(ValueError):
        ThresholdQuery("static", str, [1], tolerance=0)
    with pytest.raises(ValueError):
        ThresholdQuery("static", str, [1], method="monte-carlo")


def test_simulated_thresholds_respect_bounds():
    tol = 1e-3
    static = find_threshold(ThresholdQuery("static", lambda s: parse_code(f"surface:{s}"), [3],
                                           "random-basis"))
    assert static.estimate <= bounds.static_symmetric(0.5) + tol
    adaptive = find_threshold(ThresholdQuery("adaptive-bsm", parse_code,
                                             ["qpc:2,2", "qpc:3,2", "tree:2-2"], "zz-det"))
    assert max(adaptive.crossings) <= bounds.adaptive_symmetric() + tol
