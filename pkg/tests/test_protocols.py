import numpy as np
import pytest

from ltbsm.codes import build_qpc, build_qpc2_variant, build_repetition, build_tree_code, parse_code
from ltbsm.erasure import LossPattern, sample_loss, trial_seed
from ltbsm.lobsm import LobsmOutcome, assisted, random_basis, zz_deterministic
from ltbsm.protocols import (GreedyStrategy, InvalidOperation, Lobsm, ProtocolViolation, Sqm,
                             Stop, Verdict, recovered, run_adaptive_bsm_only,
                             run_adaptive_qpc_sqm, run_protocol, run_static_bsm,
                             run_teleport_decode, sqm_logical_measure)

FULL = LossPattern.all_survive


def test_sqm_examples():
    rep = build_repetition(3)
    assert sqm_logical_measure(rep, "Z", LossPattern.from_surviving(3, [0, 1]))
    assert not sqm_logical_measure(rep, "X", LossPattern.from_surviving(3, [0, 1]))
    tree = build_tree_code([2, 2], root="physical")
    assert sqm_logical_measure(tree, "Z", LossPattern.from_surviving(7, [2, 5, 6]))
    with pytest.raises(InvalidOperation):
        sqm_logical_measure(rep, "Y", FULL(3))


def test_static_lossless_deterministic():
    code = parse_code("surface:3")
    for seed in range(20):
        run = run_static_bsm(code, assisted(1.0), FULL(9), FULL(9), seed)
        assert run.success and run.verdict is Verdict.SUCCESS


def test_static_lost_pair_reports_photon_lost():
    code = build_qpc(2, 2)
    run = run_static_bsm(code, zz_deterministic(), LossPattern.from_surviving(4, [1, 2, 3]),
                         FULL(4), 0)
    assert run.outcomes[0] is LobsmOutcome.PHOTON_LOST


def test_static_length_mismatch():
    with pytest.raises(ValueError):
        run_static_bsm(build_qpc(2, 2), zz_deterministic(), FULL(3), FULL(4), 0)


def test_joint_semantics_every_run():
    code = parse_code("qpc:2,2")
    for i in range(200):
        rng = np.random.default_rng(trial_seed(4, i))
        la, lb = sample_loss(4, 0.8, rng), sample_loss(4, 0.8, rng)
        for proto in ("static", "adaptive-bsm"):
            run = run_protocol(proto, code, random_basis(), la, lb, rng)
            assert run.success == (run.xx and run.zz)


def test_recovered_joint_vs_single_code():
    rep = parse_code("bellrep:3")
    assert recovered(rep, [0, 1, 0], [1, 0, 0]) == (True, True)
    assert recovered(rep, [0, 0, 0], [1, 1, 1]) == (False, True)


def test_adaptive_replay_is_deterministic():
    code = build_qpc(4, 2)
    a = run_adaptive_bsm_only(code, zz_deterministic(), None, FULL(8), FULL(8), 11)
    b = run_adaptive_bsm_only(code, zz_deterministic(), None, FULL(8), FULL(8), 11)
    assert a == b


def test_adaptive_rejects_sqm_strategy():
    code = build_qpc(2, 2)

    def rogue(history, remaining):
        return Sqm("a", 0, "X")
    with pytest.raises(ProtocolViolation):
        run_adaptive_bsm_only(code, zz_deterministic(), rogue, FULL(4), FULL(4), 0)


def test_greedy_stops_when_done():
    code = build_qpc(2, 2)
    g = GreedyStrategy(code, zz_deterministic())
    first = g((), (0, 1, 2, 3))
    assert isinstance(first, Lobsm) and first.pair == 0
    hist = tuple((i, g.zz_config, LobsmOutcome.BOTH) for i in range(2))
    hist += ((2, g.zz_config, LobsmOutcome.ZZ_ONLY),)
    assert isinstance(g(hist, (3,)), Stop)


def test_qpc_sqm_single_block():
    v = build_qpc2_variant(1, build_repetition(1))
    wins = [run_adaptive_qpc_sqm(v, zz_deterministic(), FULL(2), FULL(2), s).success
            for s in range(400)]
    assert 0.4 < np.mean(wins) < 0.6


def test_qpc_sqm_records():
    v = build_qpc2_variant(3, build_tree_code([2, 2]))
    run = run_adaptive_qpc_sqm(v, zz_deterministic(), FULL(v.n), FULL(v.n), 5)
    assert len(run.sqm) == 6 and all(r.success for r in run.sqm)
    xblocks = [o is LobsmOutcome.BOTH for o in run.outcomes]
    assert run.success == any(xblocks)
    assert [r.basis for r in run.sqm[::2]] == ["X" if x else "Z" for x in xblocks]


def test_qpc_sqm_requires_variant():
    with pytest.raises(InvalidOperation):
        run_adaptive_qpc_sqm(build_qpc(2, 2), zz_deterministic(), FULL(4), FULL(4), 0)


def test_reuse_partial_never_hurts():
    v = build_qpc2_variant(3, build_tree_code([2, 2]))
    for i in range(100):
        rng = np.random.default_rng(trial_seed(8, i))
        la, lb = sample_loss(v.n, 0.75, rng), sample_loss(v.n, 0.75, rng)
        base = run_adaptive_qpc_sqm(v, zz_deterministic(), la, lb, trial_seed(9, i))
        more = run_adaptive_qpc_sqm(v, zz_deterministic(), la, lb, trial_seed(9, i),
                                    reuse_partial=True)
        assert more.success or not base.success


def test_teleport_equals_bsm():
    code = parse_code("surface:3")
    for i in range(50):
        la = sample_loss(9, 0.85, i)
        bsm = run_protocol("static", code, random_basis(), la, FULL(9), trial_seed(1, i))
        assert run_teleport_decode(code, "static", random_basis(), la, trial_seed(1, i)) \
            is bsm.verdict
    assert run_teleport_decode(code, "static", assisted(1.0), FULL(9), 0) is Verdict.SUCCESS


def test_unknown_protocol():
    with pytest.raises(InvalidOperation):
        run_protocol("magic", build_qpc(2, 2), zz_deterministic(), FULL(4), FULL(4), 0)
