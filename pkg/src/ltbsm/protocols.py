"""Logical Bell-measurement procedures built from pairwise LOBSMs and single-qubit measurements.

Pair ``i`` couples qubit ``i`` of code a with qubit ``i`` of code b.  A pair
measurement that yields XX contributes X information on qubit i, ZZ
contributes Z information, and a logical XX (ZZ) is recovered when the
logical X (Z) operator has a representative built only from the available
information (a Y component needs both).  For CSS codes this is the familiar
rule "X-bar measurable from the set of XX pairs".

Every runner draws its random numbers up front from the supplied seed, so
identical inputs give identical runs, and runs at different loss with the
same seed are coupled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .codes import JointBellCode, QpcVariantCode, StabilizerCode
from .decodability import (jointly_measurable, measurable, measurable_batch,
                           measurable_with)
from .erasure import LossPattern, SeedLike, as_generator
from .gf2 import PauliOperator, pack_bool, qubit_words
from .lobsm import (LobsmModel, LobsmOutcome, LobsmVectorModel, as_vector,
                    outcome_from_uniform, single_model)

PROTOCOLS = ("static", "adaptive-bsm", "adaptive-qpc-sqm", "teleport")
SINGLE_CODE = ("decode", "measure-x", "measure-z")


class ProtocolViolation(RuntimeError):
    """A strategy asked for an action its protocol does not allow."""


class InvalidOperation(ValueError):
    pass


class Verdict(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class SqmRecord:
    side: str
    block: int
    basis: str
    success: bool


@dataclass(frozen=True)
class ProtocolRun:
    protocol: str
    code: str
    loss_a: LossPattern
    loss_b: LossPattern
    outcomes: Tuple[LobsmOutcome, ...]
    xx: bool
    zz: bool
    sqm: Tuple[SqmRecord, ...] = ()
    actions: Tuple[Tuple[int, str], ...] = ()

    @property
    def success(self) -> bool:
        return self.xx and self.zz

    @property
    def verdict(self) -> Verdict:
        return Verdict.SUCCESS if self.success else Verdict.FAILURE


# ---------------------------------------------------------------------------
# single-code measurements

def sqm_logical_measure(code: StabilizerCode, basis, loss: LossPattern) -> bool:
    """Measure a logical Pauli by single-qubit measurements on the surviving qubits."""
    if isinstance(basis, str) and basis.upper() in ("X", "Z"):
        return measurable(code, basis.upper(), loss)
    if isinstance(basis, PauliOperator):
        return measurable(code, basis, loss)
    raise InvalidOperation(f"{basis!r} is not a transverse logical operator")


# ---------------------------------------------------------------------------
# helpers

def _pair_flags(outcomes: Sequence[LobsmOutcome]):
    xx = np.array([o.has_xx for o in outcomes], dtype=bool)
    zz = np.array([o.has_zz for o in outcomes], dtype=bool)
    return xx, zz


def recovered(code: Union[StabilizerCode, JointBellCode], xx_pairs, zz_pairs) -> Tuple[bool, bool]:
    """Which joint logical operators follow from the per-pair XX/ZZ information."""
    xx_pairs = np.asarray(xx_pairs, bool)
    zz_pairs = np.asarray(zz_pairs, bool)
    if isinstance(code, JointBellCode):
        n = code.n_pairs
        measured = [PauliOperator.from_sparse(code.n, xs=(i, n + i)) for i in np.flatnonzero(xx_pairs)]
        measured += [PauliOperator.from_sparse(code.n, zs=(i, n + i)) for i in np.flatnonzero(zz_pairs)]
        return (jointly_measurable(code, code.logical_xx, measured),
                jointly_measurable(code, code.logical_zz, measured))
    return (measurable_with(code, "X", xx_pairs, zz_pairs),
            measurable_with(code, "Z", xx_pairs, zz_pairs))


def _pair_count(code) -> int:
    if isinstance(code, JointBellCode):
        return code.n_pairs
    return code.n


def _check_losses(n: int, loss_a: LossPattern, loss_b: LossPattern):
    if loss_a.n != n or loss_b.n != n:
        raise ValueError(f"loss patterns on {loss_a.n}/{loss_b.n} qubits, code has {n}")


def _local_code(code):
    if isinstance(code, QpcVariantCode):
        return code.flattened
    return code


# ---------------------------------------------------------------------------
# static

def run_static_bsm(code, models: Union[LobsmModel, LobsmVectorModel], loss_a: LossPattern,
                   loss_b: LossPattern, seed: SeedLike) -> ProtocolRun:
    """Every pair measured once with a basis fixed in advance; outcomes post-processed."""
    code = _local_code(code)
    n = _pair_count(code)
    models = as_vector(models, n)
    _check_losses(n, loss_a, loss_b)
    u = as_generator(seed).random(n)
    detected = loss_a.survived & loss_b.survived
    outcomes = tuple(outcome_from_uniform(models[i], u[i]) if detected[i]
                     else LobsmOutcome.PHOTON_LOST for i in range(n))
    xx, zz = recovered(code, *_pair_flags(outcomes))
    return ProtocolRun("static", code.label, loss_a, loss_b, outcomes, xx, zz)


# ---------------------------------------------------------------------------
# adaptive, BSM only

@dataclass(frozen=True)
class Lobsm:
    pair: int
    config: LobsmModel


@dataclass(frozen=True)
class Sqm:
    side: str
    qubit: int
    basis: str


@dataclass(frozen=True)
class Stop:
    pass


Action = Union[Lobsm, Sqm, Stop]
History = Tuple[Tuple[int, LobsmModel, LobsmOutcome], ...]


class GreedyStrategy:
    """Reference feed-forward policy for BSM-only logical measurements.

    Pairs are taken in index order.  Each pair gets the configuration that
    favours ZZ (the model as given, oriented so p_zz >= p_xx) unless only X-bar
    still depends on that pair, in which case the mirrored configuration is
    used.  Stops once both operators are recovered or one becomes impossible.
    """

    # decisions depend only on the recovered x/z information and the remaining pairs
    markov_on_information = True

    def __init__(self, code: StabilizerCode, model: LobsmModel):
        self.code = code
        self.zz_config = model if model.p_zz >= model.p_xx else model.mirror()
        self.xx_config = self.zz_config.mirror()
        self._memo: dict = {}

    def _ok(self, which, x_ok, z_ok) -> bool:
        return measurable_with(self.code, which, x_ok, z_ok)

    def __call__(self, history: History, remaining: Sequence[int]) -> Action:
        n = self.code.n
        x_ok = np.zeros(n, bool)
        z_ok = np.zeros(n, bool)
        for pair, _, outcome in history:
            x_ok[pair] |= outcome.has_xx
            z_ok[pair] |= outcome.has_zz
        key = (x_ok.tobytes(), z_ok.tobytes(), tuple(remaining))
        action = self._memo.get(key)
        if action is None:
            action = self._memo[key] = self._decide(x_ok, z_ok, remaining)
        return action

    def _decide(self, x_ok, z_ok, remaining) -> Action:
        n = self.code.n
        x_done = self._ok("X", x_ok, z_ok)
        z_done = self._ok("Z", x_ok, z_ok)
        if (x_done and z_done) or not remaining:
            return Stop()
        rest = np.zeros(n, bool)
        rest[list(remaining)] = True
        if not (x_done or self._ok("X", x_ok | rest, z_ok | rest)):
            return Stop()
        if not (z_done or self._ok("Z", x_ok | rest, z_ok | rest)):
            return Stop()
        i = remaining[0]
        if x_done:
            return Lobsm(i, self.zz_config)
        if z_done:
            return Lobsm(i, self.xx_config)
        rest[i] = False
        x_needs = not self._ok("X", x_ok | rest, z_ok | rest)
        z_needs = not self._ok("Z", x_ok | rest, z_ok | rest)
        if x_needs and not z_needs:
            return Lobsm(i, self.xx_config)
        return Lobsm(i, self.zz_config)


def _replay_adaptive(code, strategy, detected, u) -> Tuple[History, bool, bool]:
    n = code.n
    history: History = ()
    remaining = list(range(n))
    while True:
        action = strategy(history, tuple(remaining))
        if isinstance(action, Stop):
            break
        if isinstance(action, Sqm):
            raise ProtocolViolation("BSM-only protocol received a single-qubit measurement")
        if not isinstance(action, Lobsm) or action.pair not in remaining:
            raise ProtocolViolation(f"invalid action {action!r}")
        i = action.pair
        outcome = (outcome_from_uniform(action.config, u[i]) if detected[i]
                   else LobsmOutcome.PHOTON_LOST)
        history = history + ((i, action.config, outcome),)
        remaining.remove(i)
    x_ok = np.zeros(n, bool)
    z_ok = np.zeros(n, bool)
    for pair, _, outcome in history:
        x_ok[pair] |= outcome.has_xx
        z_ok[pair] |= outcome.has_zz
    return history, measurable_with(code, "X", x_ok, z_ok), measurable_with(code, "Z", x_ok, z_ok)


def run_adaptive_bsm_only(code, model: LobsmModel, strategy: Optional[Callable] = None,
                          loss_a: LossPattern = None, loss_b: LossPattern = None,
                          seed: SeedLike = None) -> ProtocolRun:
    """Pairwise LOBSMs chosen by ``strategy`` from the outcomes seen so far."""
    code = _local_code(code)
    model = single_model(model)
    if strategy is None:
        strategy = GreedyStrategy(code, model)
    n = code.n
    _check_losses(n, loss_a, loss_b)
    u = as_generator(seed).random(n)
    detected = loss_a.survived & loss_b.survived
    history, xx, zz = _replay_adaptive(code, strategy, detected, u)
    outcomes = [LobsmOutcome.NEITHER] * n
    for pair, _, outcome in history:
        outcomes[pair] = outcome
    actions = tuple((pair, str(cfg)) for pair, cfg, _ in history)
    return ProtocolRun("adaptive-bsm", code.label, loss_a, loss_b, tuple(outcomes), xx, zz,
                       actions=actions)


# ---------------------------------------------------------------------------
# adaptive, BSM + single-qubit measurements on the QPC(n,2) variant

def _inner_forbid(variant: QpcVariantCode, loss: LossPattern) -> np.ndarray:
    idx = np.array([blk[1] for blk in variant.block_map])
    lost = ~loss.survived[idx]
    return pack_bool(lost, qubit_words(variant.inner.n))


def run_adaptive_qpc_sqm(variant: QpcVariantCode, model: LobsmModel, loss_a: LossPattern,
                         loss_b: LossPattern, seed: SeedLike,
                         reuse_partial: bool = False) -> ProtocolRun:
    """LOBSM on each block's bare photons, then X or Z logical SQMs on the inner blocks.

    A block whose LOBSM returned both XX and ZZ is an X-block; its inner codes
    are measured in X-bar on both sides, otherwise in Z-bar.  Success needs at
    least one X-block and every single-qubit logical measurement to succeed.
    With ``reuse_partial`` a Z-block whose LOBSM still returned ZZ no longer
    needs its inner Z measurements (experimental).
    """
    if not isinstance(variant, QpcVariantCode):
        raise InvalidOperation("adaptive-qpc-sqm needs a qpc2var code")
    model = single_model(model)
    _check_losses(variant.n, loss_a, loss_b)
    nb = variant.n_blocks
    u = as_generator(seed).random(nb)
    q1 = np.array([blk[0] for blk in variant.block_map])
    detected = loss_a.survived[q1] & loss_b.survived[q1]
    outcomes = tuple(outcome_from_uniform(model, u[i]) if detected[i]
                     else LobsmOutcome.PHOTON_LOST for i in range(nb))
    x_block = np.array([o is LobsmOutcome.BOTH for o in outcomes])

    inner = variant.inner
    ok = {}
    for side, loss in (("a", loss_a), ("b", loss_b)):
        forbid = _inner_forbid(variant, loss)
        res = np.empty(nb, bool)
        if x_block.any():
            res[x_block] = measurable_batch(inner, "X", forbid[x_block])
        if (~x_block).any():
            res[~x_block] = measurable_batch(inner, "Z", forbid[~x_block])
        ok[side] = res
    sqm = tuple(SqmRecord(side, i, "X" if x_block[i] else "Z", bool(ok[side][i]))
                for i in range(nb) for side in ("a", "b"))
    both_ok = ok["a"] & ok["b"]
    if reuse_partial:
        zz_only = np.array([o is LobsmOutcome.ZZ_ONLY for o in outcomes])
        both_ok = both_ok | zz_only
    xx = bool(x_block.any() and both_ok[x_block].all())
    zz = bool(both_ok[~x_block].all())
    return ProtocolRun("adaptive-qpc-sqm", variant.label, loss_a, loss_b, outcomes, xx, zz, sqm)


# ---------------------------------------------------------------------------
# teleportation decoder

def default_bsm_protocol(code) -> str:
    return "adaptive-qpc-sqm" if isinstance(code, QpcVariantCode) else "static"


def run_protocol(protocol: str, code, model, loss_a: LossPattern, loss_b: LossPattern,
                 seed: SeedLike, **options) -> ProtocolRun:
    """Dispatch by protocol id."""
    if protocol == "static":
        return run_static_bsm(code, model, loss_a, loss_b, seed)
    if protocol == "adaptive-bsm":
        return run_adaptive_bsm_only(code, model, options.get("strategy"), loss_a, loss_b, seed)
    if protocol == "adaptive-qpc-sqm":
        return run_adaptive_qpc_sqm(code, model, loss_a, loss_b, seed,
                                    reuse_partial=options.get("reuse_partial", False))
    if protocol == "teleport":
        via = options.get("via") or default_bsm_protocol(code)
        if via == "teleport":
            raise InvalidOperation("teleport cannot wrap itself")
        run = run_protocol(via, code, model, loss_a, loss_b, seed, **options)
        return ProtocolRun("teleport", run.code, run.loss_a, run.loss_b, run.outcomes,
                           run.xx, run.zz, run.sqm, run.actions)
    raise InvalidOperation(f"unknown protocol {protocol!r}")


def run_teleport_decode(code, protocol: str, model, loss: LossPattern, seed: SeedLike,
                        loss_b: Optional[LossPattern] = None, **options) -> Verdict:
    """Recover the state of code a by a logical BSM against half of a logical Bell pair.

    Succeeds exactly when the logical BSM does.
    """
    if loss_b is None:
        loss_b = LossPattern.all_survive(loss.n)
    return run_protocol(protocol, code, model, loss, loss_b, seed, **options).verdict
