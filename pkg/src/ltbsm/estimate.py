"""Exact, closed-form and Monte Carlo success probabilities, and loss-threshold search."""

from __future__ import annotations

import math
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from .codes import JointBellCode, QpcVariantCode, StabilizerCode, parse_code
from .decodability import (decodable, exact_probability, joint_recovered_batch, measurable_batch,
                           measurable_with)
from .erasure import LossPattern, check_capacity, check_probability, trial_seed
from .gf2 import pack_bool, qubit_words
from .lobsm import (LobsmModel, LobsmOutcome, LobsmVectorModel, ModelLike, as_vector,
                    outcomes_from_uniform, parse_model, single_model)
from .protocols import (PROTOCOLS, SINGLE_CODE, GreedyStrategy, InvalidOperation,
                        ProtocolViolation, Sqm, Stop, _replay_adaptive, default_bsm_protocol)

METHODS = ("exact", "closed-form", "monte-carlo")
_PREDICATE = {"decode": "decodable", "measure-x": "X", "measure-z": "Z"}


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    ci_low: float
    ci_high: float
    method: str
    trials: int = 0
    seed: Optional[int] = None
    protocol: str = ""
    code: str = ""
    model: str = ""
    eta_a: float = float("nan")
    eta_b: float = float("nan")

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.ci_low <= self.mean <= self.ci_high:
            raise ValueError(f"interval [{self.ci_low}, {self.ci_high}] excludes {self.mean}")
        if self.method != "monte-carlo" and not self.ci_low == self.mean == self.ci_high:
            raise ValueError("exact results carry a degenerate interval")

    @classmethod
    def point(cls, value: float, method: str = "exact", **context) -> "EstimateResult":
        value = min(1.0, max(0.0, float(value)))
        return cls(value, value, value, method, **context)

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2


def _label(obj) -> str:
    return getattr(obj, "label", None) or str(obj)


def _context(protocol, code, model, eta_a, eta_b) -> dict:
    return dict(protocol=protocol, code=_label(code), model=str(model) if model is not None else "",
                eta_a=float(eta_a), eta_b=float(eta_b))


# ---------------------------------------------------------------------------
# exact enumeration

def pair_distribution(model: LobsmModel, eta_a: float, eta_b: float) -> np.ndarray:
    """Probabilities of (no info, XX only, ZZ only, both) for one pair.

    The three loss configurations of the pair are summed explicitly.
    """
    la, lb = 1.0 - eta_a, 1.0 - eta_b
    lost = la * lb + la * eta_b + eta_a * lb
    det = eta_a * eta_b
    neither, xx, zz, both = model.outcome_probabilities()
    return np.array([lost + det * neither, det * xx, det * zz, det * both])


_STATIC_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _static_success_table(code) -> Tuple[np.ndarray, np.ndarray]:
    """Success flag for every per-pair information pattern, plus the digits table.

    Pattern index c encodes pair i's information in base-4 digit i:
    bit 0 of the digit = XX available, bit 1 = ZZ available.
    """
    if code in _STATIC_CACHE:
        return _STATIC_CACHE[code]
    n = code.n_pairs if isinstance(code, JointBellCode) else code.n
    check_capacity(2 * n, "bits of per-pair outcome configurations")
    c = np.arange(4 ** n, dtype=np.int64)
    digits = np.stack([(c >> (2 * i)) & 3 for i in range(n)], axis=1).astype(np.int8)
    if isinstance(code, JointBellCode):
        rx, rz = joint_recovered_batch(code, (digits & 1).astype(bool), (digits >> 1).astype(bool))
        ok = rx & rz
    else:
        xbits = np.zeros(len(c), dtype=np.uint64)
        zbits = np.zeros(len(c), dtype=np.uint64)
        for i in range(n):
            xbits |= ((digits[:, i] & 1).astype(np.uint64) << np.uint64(i))
            zbits |= ((digits[:, i] >> 1).astype(np.uint64) << np.uint64(i))
        full = np.uint64((1 << n) - 1)
        fx = (full & ~xbits).reshape(-1, 1)
        fz = (full & ~zbits).reshape(-1, 1)
        ok = measurable_batch(code, "X", fx, fz) & measurable_batch(code, "Z", fx, fz)
    _STATIC_CACHE[code] = (ok, digits)
    return ok, digits


def _exact_static(code, models: LobsmVectorModel, eta_a: float, eta_b: float) -> float:
    ok, digits = _static_success_table(code)
    prob = np.ones(len(ok))
    for i in range(digits.shape[1]):
        prob *= pair_distribution(models[i], eta_a, eta_b)[digits[:, i]]
    return float(math.fsum(prob[ok]))


def _outcome_probs(config: LobsmModel, eta_a: float, eta_b: float) -> Dict[LobsmOutcome, float]:
    la, lb = 1.0 - eta_a, 1.0 - eta_b
    det = eta_a * eta_b
    neither, xx, zz, both = config.outcome_probabilities()
    return {LobsmOutcome.PHOTON_LOST: la * lb + la * eta_b + eta_a * lb,
            LobsmOutcome.NEITHER: det * neither, LobsmOutcome.XX_ONLY: det * xx,
            LobsmOutcome.ZZ_ONLY: det * zz, LobsmOutcome.BOTH: det * both}


def _exact_adaptive(code: StabilizerCode, model: LobsmModel, strategy, eta_a, eta_b) -> float:
    """Walk the strategy's decision tree over every outcome sequence."""
    n = code.n
    check_capacity(2 * n, "bits of per-pair outcome configurations")
    markov = getattr(strategy, "markov_on_information", False)
    memo: Dict = {}

    def info(history):
        x = z = 0
        for pair, _, o in history:
            x |= o.has_xx << pair
            z |= o.has_zz << pair
        return x, z

    def value(history, remaining) -> float:
        key = (info(history), remaining) if markov else None
        if key is not None and key in memo:
            return memo[key]
        action = strategy(history, remaining)
        if isinstance(action, Stop):
            x, z = info(history)
            xs = np.array([(x >> i) & 1 for i in range(n)], bool)
            zs = np.array([(z >> i) & 1 for i in range(n)], bool)
            v = float(measurable_with(code, "X", xs, zs) and measurable_with(code, "Z", xs, zs))
        elif isinstance(action, Sqm):
            raise ProtocolViolation("BSM-only protocol received a single-qubit measurement")
        else:
            i = action.pair
            rest = tuple(j for j in remaining if j != i)
            v = math.fsum(p * value(history + ((i, action.config, o),), rest)
                          for o, p in _outcome_probs(action.config, eta_a, eta_b).items() if p > 0)
        if key is not None:
            memo[key] = v
        return v

    return value((), tuple(range(n)))


def _block_terms(variant: QpcVariantCode, model: LobsmModel, eta_a, eta_b, reuse_partial):
    """Per-block probabilities: (X-block and its SQMs succeed, Z-block and its SQMs succeed)."""
    probs = _outcome_probs(model, eta_a, eta_b)
    inner = variant.inner
    px = exact_probability(inner, eta_a, "X") * exact_probability(inner, eta_b, "X")
    pz = exact_probability(inner, eta_a, "Z") * exact_probability(inner, eta_b, "Z")
    x_term = probs[LobsmOutcome.BOTH] * px
    z_term = 0.0
    for o, p in probs.items():
        if o is LobsmOutcome.BOTH:
            continue
        z_term += p * (1.0 if (reuse_partial and o is LobsmOutcome.ZZ_ONLY) else pz)
    return x_term, z_term


def _exact_qpc(variant: QpcVariantCode, model: LobsmModel, eta_a, eta_b, reuse_partial=False):
    check_capacity(variant.inner.n)
    x_term, z_term = _block_terms(variant, model, eta_a, eta_b, reuse_partial)
    none_yet, some = 1.0, 0.0
    for _ in range(variant.n_blocks):
        none_yet, some = none_yet * z_term, some * (x_term + z_term) + none_yet * x_term
    return some


def _resolve(protocol: str, code, model):
    code = parse_code(code)
    if protocol in SINGLE_CODE:
        return code, None
    if protocol not in PROTOCOLS:
        raise InvalidOperation(f"unknown protocol {protocol!r}")
    return code, parse_model(model)


def exact_success(protocol: str, code, model: ModelLike, eta_a: float, eta_b: float,
                  **options) -> EstimateResult:
    """Exact success probability by enumerating loss patterns and pair outcomes."""
    eta_a = check_probability(eta_a, "eta_a")
    eta_b = check_probability(eta_b, "eta_b")
    code, model = _resolve(protocol, code, model)
    ctx = _context(protocol, code, model, eta_a, eta_b)
    if protocol == "teleport":
        protocol = options.pop("via", None) or default_bsm_protocol(code)
    if protocol in SINGLE_CODE:
        local = code.flattened if isinstance(code, QpcVariantCode) else code
        return EstimateResult.point(exact_probability(local, eta_a, _PREDICATE[protocol]), **ctx)
    if protocol == "static":
        local = code.flattened if isinstance(code, QpcVariantCode) else code
        n = local.n_pairs if isinstance(local, JointBellCode) else local.n
        value = _exact_static(local, as_vector(model, n), eta_a, eta_b)
    elif protocol == "adaptive-bsm":
        local = code.flattened if isinstance(code, QpcVariantCode) else code
        model = single_model(model)
        strategy = options.get("strategy") or GreedyStrategy(local, model)
        value = _exact_adaptive(local, model, strategy, eta_a, eta_b)
    elif protocol == "adaptive-qpc-sqm":
        if not isinstance(code, QpcVariantCode):
            raise InvalidOperation("adaptive-qpc-sqm needs a qpc2var code")
        value = _exact_qpc(code, single_model(model), eta_a, eta_b,
                           options.get("reuse_partial", False))
    else:
        raise InvalidOperation(f"no exact method for {protocol!r}")
    return EstimateResult.point(value, **ctx)


def qpc_closed_form(n_blocks: int, eta_a: float, eta_b: float, p: float, inner_px_a: float,
                    inner_pz_a: float, inner_px_b: float, inner_pz_b: float) -> EstimateResult:
    """Binomial sum over the number k >= 1 of blocks whose LOBSM fully succeeds.

    Each such block needs both inner X measurements, every other block both
    inner Z measurements; a block succeeds its LOBSM with q = p * eta_a * eta_b.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    vals = [check_probability(v, name) for v, name in (
        (eta_a, "eta_a"), (eta_b, "eta_b"), (p, "p"), (inner_px_a, "inner_px_a"),
        (inner_pz_a, "inner_pz_a"), (inner_px_b, "inner_px_b"), (inner_pz_b, "inner_pz_b"))]
    eta_a, eta_b, p, pxa, pza, pxb, pzb = vals
    q = p * eta_a * eta_b
    x, z = pxa * pxb, pza * pzb
    total = math.fsum(math.comb(n_blocks, k) * q ** k * (1 - q) ** (n_blocks - k)
                      * x ** k * z ** (n_blocks - k) for k in range(1, n_blocks + 1))
    return EstimateResult.point(total, "closed-form", eta_a=eta_a, eta_b=eta_b)


def qpc_closed_form_for(variant: QpcVariantCode, model: LobsmModel, eta_a: float,
                        eta_b: float) -> EstimateResult:
    """Closed form with the inner-code factors taken from exact enumeration."""
    inner = variant.inner
    res = qpc_closed_form(variant.n_blocks, eta_a, eta_b, model.p_both,
                          exact_probability(inner, eta_a, "X"), exact_probability(inner, eta_a, "Z"),
                          exact_probability(inner, eta_b, "X"), exact_probability(inner, eta_b, "Z"))
    return replace(res, protocol="adaptive-qpc-sqm", code=variant.label, model=str(model))


def bell_repetition_closed_form(n_pairs: int, eta_a: float, eta_b: float,
                                p: float) -> EstimateResult:
    """Independent pairs, each a full BSM with probability ``p`` once both photons arrive."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    eta_a = check_probability(eta_a, "eta_a")
    eta_b = check_probability(eta_b, "eta_b")
    p = check_probability(p, "p")
    value = 1.0 - (1.0 - p * eta_a * eta_b) ** n_pairs
    return EstimateResult.point(value, "closed-form", code=f"bellrep:{n_pairs}",
                                eta_a=eta_a, eta_b=eta_b)


# ---------------------------------------------------------------------------
# Monte Carlo

def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


BATCH = 4096
_BATCH_CELLS = 1 << 23


def batch_size(n_qubits: int) -> int:
    """Trials per batch; depends on the code only, so results never depend on threading."""
    return max(16, min(BATCH, _BATCH_CELLS // max(1, n_qubits)))


def _pack_rows(lost: np.ndarray, n: int) -> np.ndarray:
    return np.ascontiguousarray(pack_bool(lost, qubit_words(n)))


def _batch_successes(protocol, code, model, eta_a, eta_b, rng, size, options) -> int:
    """Successes among ``size`` trials drawn from ``rng``.

    Draw order per batch: party-a loss uniforms, party-b loss uniforms, then
    one outcome uniform per measured pair (or block).
    """
    if protocol == "teleport":
        protocol = options.get("via") or default_bsm_protocol(code)
        if protocol == "teleport":
            raise InvalidOperation("teleport cannot wrap itself")
    local = code.flattened if isinstance(code, QpcVariantCode) and protocol != "adaptive-qpc-sqm" \
        else code
    n = local.n_pairs if isinstance(local, JointBellCode) else local.n
    alive_a = rng.random((size, n)) < eta_a
    if protocol in SINGLE_CODE:
        pred = _PREDICATE[protocol]
        if pred != "decodable":
            return int(measurable_batch(local, pred, _pack_rows(~alive_a, n)).sum())
        return sum(decodable(local, LossPattern(n, row)) for row in alive_a)
    alive_b = rng.random((size, n)) < eta_b
    if protocol == "static":
        vec = as_vector(model, n)
        detected = alive_a & alive_b
        u = rng.random((size, n))
        xx, zz = outcomes_from_uniform(vec.p_both, vec.p_xx, vec.p_zz, detected, u)
        if isinstance(local, JointBellCode):
            rx, rz = joint_recovered_batch(local, xx, zz)
            return int((rx & rz).sum())
        fx, fz = _pack_rows(~xx, n), _pack_rows(~zz, n)
        ok = measurable_batch(local, "X", fx, fz) & measurable_batch(local, "Z", fx, fz)
        return int(ok.sum())
    if protocol == "adaptive-bsm":
        model = single_model(model)
        strategy = options.get("strategy") or GreedyStrategy(local, model)
        detected = alive_a & alive_b
        u = rng.random((size, n))
        wins = 0
        for d, uu in zip(detected, u):
            _, x, z = _replay_adaptive(local, strategy, d, uu)
            wins += bool(x and z)
        return wins
    if protocol == "adaptive-qpc-sqm":
        if not isinstance(code, QpcVariantCode):
            raise InvalidOperation("adaptive-qpc-sqm needs a qpc2var code")
        return _qpc_batch(code, single_model(model), alive_a, alive_b, rng,
                          options.get("reuse_partial", False))
    raise InvalidOperation(f"unknown protocol {protocol!r}")


def _qpc_batch(variant: QpcVariantCode, model: LobsmModel, alive_a, alive_b, rng,
               reuse_partial: bool) -> int:
    size, nb = alive_a.shape[0], variant.n_blocks
    q1 = np.array([blk[0] for blk in variant.block_map])
    inner_idx = np.array([blk[1] for blk in variant.block_map]).reshape(nb, -1)
    detected = alive_a[:, q1] & alive_b[:, q1]
    u = rng.random((size, nb))
    x_block = detected & (u < model.p_both)
    zz_only = detected & ~x_block & (u >= model.p_xx) & (u < model.p_xx + model.p_zz - model.p_both)
    inner = variant.inner
    flat_x = x_block.reshape(-1)
    both_ok = np.ones(size * nb, dtype=bool)
    for alive in (alive_a, alive_b):
        lost = ~alive[:, inner_idx].reshape(size * nb, -1)
        forbid = _pack_rows(lost, inner.n)
        res = np.empty(size * nb, dtype=bool)
        if flat_x.any():
            res[flat_x] = measurable_batch(inner, "X", forbid[flat_x])
        if (~flat_x).any():
            res[~flat_x] = measurable_batch(inner, "Z", forbid[~flat_x])
        both_ok &= res
    both_ok = both_ok.reshape(size, nb)
    if reuse_partial:
        both_ok |= zz_only
    xx = x_block.any(axis=1) & (both_ok | ~x_block).all(axis=1)
    zz = (both_ok | x_block).all(axis=1)
    return int((xx & zz).sum())


def mc_success(protocol: str, code, model: ModelLike, eta_a: float, eta_b: float, trials: int,
               seed: int, threads: int = 1, confidence: float = 0.95, **options) -> EstimateResult:
    """Monte Carlo estimate with a Wilson score interval.

    Trials are grouped in fixed batches (see ``batch_size``); batch b draws from its own
    stream derived from (seed, b), so the estimate does not depend on ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed is None:
        raise ValueError("Monte Carlo needs an explicit seed")
    eta_a = check_probability(eta_a, "eta_a")
    eta_b = check_probability(eta_b, "eta_b")
    code, model = _resolve(protocol, code, model)
    if isinstance(code, JointBellCode) and protocol not in ("static", "teleport"):
        raise InvalidOperation(f"{protocol} does not apply to {code.label}")
    step = batch_size(code.n)
    sizes = [min(step, trials - start) for start in range(0, trials, step)]

    def run(b: int) -> int:
        rng = np.random.default_rng(trial_seed(seed, b))
        return _batch_successes(protocol, code, model, eta_a, eta_b, rng, sizes[b], options)

    threads = max(1, int(threads))
    if threads == 1:
        wins = sum(run(b) for b in range(len(sizes)))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            wins = sum(pool.map(run, range(len(sizes))))
    mean = wins / trials
    lo, hi = wilson_interval(wins, trials, confidence)
    return EstimateResult(mean, min(lo, mean), max(hi, mean), "monte-carlo", trials, int(seed),
                          **_context(protocol, code, model, eta_a, eta_b))


# ---------------------------------------------------------------------------
# thresholds

@dataclass(frozen=True)
class ThresholdQuery:
    """Search for the loss at which a family's success probability falls to ``target_success``.

    ``family`` maps a size to a code (or code spec).  With ``symmetric`` both
    parties see loss epsilon; otherwise party b has the fixed loss ``eps_b``.
    """

    protocol: str
    family: Callable[[int], object]
    sizes: Sequence[int]
    model: Optional[ModelLike] = None
    target_success: float = 0.5
    symmetric: bool = True
    eps_b: float = 0.0
    tolerance: float = 1e-3
    method: str = "exact"
    trials: int = 10_000
    seed: Optional[int] = None
    threads: int = 1
    max_iter: int = 40
    family_name: str = ""
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.target_success < 1.0:
            raise ValueError("target_success must lie strictly between 0 and 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.method not in ("exact", "monte-carlo"):
            raise ValueError("method must be 'exact' or 'monte-carlo'")
        if self.method == "monte-carlo" and self.seed is None:
            raise ValueError("Monte Carlo threshold search needs a seed")
        if not self.sizes:
            raise ValueError("at least one family size is required")


@dataclass(frozen=True)
class ThresholdResult:
    family: str
    sizes: Tuple[int, ...]
    crossings: Tuple[Optional[float], ...]
    flags: Tuple[str, ...]
    target: float
    tolerance: float
    estimate: Optional[float]
    uncertainty: Optional[float]
    nondecreasing: bool

    def __post_init__(self):
        for c in self.crossings:
            if c is not None and not 0.0 <= c <= 1.0:
                raise ValueError(f"crossing {c} outside [0, 1]")


def _success_at(query: ThresholdQuery, code, eps: float) -> EstimateResult:
    eta_a = 1.0 - eps
    eta_b = eta_a if query.symmetric else 1.0 - query.eps_b
    if query.method == "exact":
        return exact_success(query.protocol, code, query.model, eta_a, eta_b, **query.options)
    return mc_success(query.protocol, code, query.model, eta_a, eta_b, query.trials, query.seed,
                      threads=query.threads, **query.options)


def _crossing(query: ThresholdQuery, code) -> Tuple[Optional[float], str]:
    cache: Dict[float, EstimateResult] = {}

    def at(eps):
        eps = min(1.0, max(0.0, eps))
        if eps not in cache:
            cache[eps] = _success_at(query, code, eps)
        return cache[eps]

    grid = [float(e) for e in np.linspace(0.0, 1.0, 11 if query.method == "exact" else 6)]
    values = [at(e) for e in grid]
    slack = 1e-12 if query.method == "exact" else 0.0
    flag = "ok"
    for prev, cur in zip(values, values[1:]):
        allowed = slack if query.method == "exact" else (prev.half_width + cur.half_width)
        if cur.mean > prev.mean + allowed:
            flag = "non-monotone"
    if values[0].mean < query.target_success:
        return None, "too-weak"
    if values[-1].mean >= query.target_success:
        return 1.0, flag
    # tighten the bracket from the grid before bisecting
    lo, hi = 0.0, 1.0
    for e, v in zip(grid, values):
        if v.mean >= query.target_success:
            lo = e
        else:
            hi = e
            break
    for _ in range(query.max_iter):
        if hi - lo <= query.tolerance:
            break
        mid = (lo + hi) / 2
        if at(mid).mean >= query.target_success:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2), flag


def find_threshold(query: ThresholdQuery) -> ThresholdResult:
    """Finite-size crossing points eps*(s) for each family size, plus their trend."""
    crossings, flags = [], []
    for s in query.sizes:
        c, flag = _crossing(query, query.family(s))
        crossings.append(c)
        flags.append(flag)
    found = [c for c in crossings if c is not None]
    estimate = found[-1] if found else None
    if len(found) >= 2:
        uncertainty = max(abs(found[-1] - found[-2]), query.tolerance)
    elif found:
        uncertainty = query.tolerance
    else:
        uncertainty = None
    nondecreasing = all(b >= a - query.tolerance for a, b in zip(found, found[1:]))
    name = query.family_name or getattr(query.family, "__name__", "family")
    return ThresholdResult(name, tuple(query.sizes), tuple(crossings), tuple(flags),
                           query.target_success, query.tolerance, estimate, uncertainty,
                           nondecreasing)
