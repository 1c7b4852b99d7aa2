"""Exact erasure oracle: logical measurability and decodability from a surviving set.

A logical operator O is measurable from R when some representative O*S
(S in the stabilizer group) acts trivially outside R.  Restricting every
generator to the lost columns turns that into a GF(2) span-membership test.
The same test with separate x/z masks answers the more general question
"which logical operators can be assembled when qubit i only offers X (or only
Z) information", which is what pairwise Bell measurements produce.
"""

from __future__ import annotations

import weakref
from typing import Union

import numpy as np
from numba import njit

from .codes import JointBellCode, StabilizerCode
from .erasure import LossPattern, check_capacity, check_probability, weight_polynomial
from .gf2 import (PauliOperator, _masked_in_span, _masked_in_span_batch, _masked_rank,
                  pack_bool, pack_int, pauli_matrix, qubit_words, symplectic_product)

Which = Union[str, PauliOperator]

PREDICATES = ("decodable", "X", "Z")


class InvalidOperator(ValueError):
    """The operator is not a logical operator of the code."""


def _resolve(code: StabilizerCode, which: Which) -> PauliOperator:
    if isinstance(which, PauliOperator):
        if which.n != code.n:
            raise InvalidOperator(f"{which.n}-qubit operator on an {code.n}-qubit code")
        for s in code.stabilizers:
            if symplectic_product(which, s):
                raise InvalidOperator(f"{which.label()} anticommutes with {s.label()}")
        return which
    return code.logical(which)


def _plan(code: StabilizerCode, op: PauliOperator):
    """Pick rows/target for the query; CSS codes with a pure-type target use one half only.

    For a CSS code and a pure-X target, the Z-type generators cannot help (their
    combination must vanish on every forbidden column), so only X-type rows and
    x columns matter, and symmetrically for pure-Z targets.
    """
    css = code.css_tableaux
    qw = qubit_words(code.n)
    if css is not None and op.z == 0:
        return css[0], pack_int(op.x, qw), "x"
    if css is not None and op.x == 0:
        return css[1], pack_int(op.z, qw), "z"
    return code.tableau, op.packed(), "xz"


def _mask_for(kind: str, forbid_x: np.ndarray, forbid_z: np.ndarray) -> np.ndarray:
    if kind == "x":
        return forbid_x
    if kind == "z":
        return forbid_z
    return np.concatenate([forbid_x, forbid_z], axis=-1)


def _query(code: StabilizerCode, op: PauliOperator, forbid_x, forbid_z) -> bool:
    rows, target, kind = _plan(code, op)
    if rows.shape[0] == 0:
        rows = np.zeros((0, target.shape[0]), dtype=np.uint64)
    return bool(_masked_in_span(rows, target, _mask_for(kind, forbid_x, forbid_z)))


def measurable(code: StabilizerCode, which: Which, r: LossPattern) -> bool:
    """True iff the logical operator has a representative supported on ``r``."""
    op = _resolve(code, which)
    if r.n != code.n:
        raise ValueError(f"loss pattern on {r.n} qubits, code has {code.n}")
    lost = r.lost_words()
    return _query(code, op, lost, lost)


def measurable_with(code: StabilizerCode, which: Which, x_ok, z_ok) -> bool:
    """Representative exists using X components only where ``x_ok`` and Z only where ``z_ok``.

    A Y component needs both.  With ``x_ok == z_ok == R`` this is ``measurable``.
    """
    op = _resolve(code, which)
    qw = qubit_words(code.n)
    return _query(code, op, pack_bool(~np.asarray(x_ok, bool), qw),
                  pack_bool(~np.asarray(z_ok, bool), qw))


def measurable_batch(code: StabilizerCode, which: Which, forbid_x: np.ndarray,
                     forbid_z: np.ndarray = None) -> np.ndarray:
    """Vectorised ``measurable_with`` over packed forbidden-qubit masks.

    ``forbid_x``/``forbid_z`` have shape (k, qubit_words(n)); ``forbid_z``
    defaults to ``forbid_x`` (plain loss).
    """
    op = _resolve(code, which)
    if forbid_z is None:
        forbid_z = forbid_x
    rows, target, kind = _plan(code, op)
    masks = np.ascontiguousarray(_mask_for(kind, forbid_x, forbid_z), dtype=np.uint64)
    if rows.shape[0] == 0:
        rows = np.zeros((0, target.shape[0]), dtype=np.uint64)
    out = np.empty(masks.shape[0], dtype=np.bool_)
    _masked_in_span_batch(rows, target, masks, out)
    return out


def decodable(code: StabilizerCode, r: LossPattern) -> bool:
    """Erasure of the lost set is correctable.

    Rank test: Paulis on the lost set L that commute with every generator form a
    space of dimension 2|L| - rank(G|_L); stabilizers supported on L form one of
    dimension (n-1) - rank(G|_R).  Correctable iff the two coincide.
    """
    if r.n != code.n:
        raise ValueError(f"loss pattern on {r.n} qubits, code has {code.n}")
    lost = r.lost_words()
    kept = r.survived
    keep = pack_bool(kept, qubit_words(code.n))
    n_lost = code.n - int(kept.sum())
    if not code.stabilizers:
        return n_lost == 0
    rank_l = _masked_rank(code.tableau, np.concatenate([lost, lost]))
    rank_r = _masked_rank(code.tableau, np.concatenate([keep, keep]))
    return 2 * n_lost - rank_l == len(code.stabilizers) - rank_r


def jointly_measurable(joint: JointBellCode, target: PauliOperator, measured) -> bool:
    """``target`` lies in the group generated by the joint stabilizers and ``measured``."""
    ops = list(joint.stabilizers) + list(measured)
    if not ops:
        return target.is_identity()
    rows = pauli_matrix(ops, joint.n)
    full = np.full(rows.shape[1], ~np.uint64(0), dtype=np.uint64)
    return bool(_masked_in_span(rows, target.packed(), full))


_TAGGED: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _tagged_rows(joint: JointBellCode) -> np.ndarray:
    """Stabilizer rows plus one row per pair operator (XX_i then ZZ_i), each
    carrying its own tag column so that unmeasured operators can be masked out."""
    if joint not in _TAGGED:
        n, N = joint.n_pairs, joint.n
        pair_ops = [PauliOperator.from_sparse(N, xs=(i, n + i)) for i in range(n)]
        pair_ops += [PauliOperator.from_sparse(N, zs=(i, n + i)) for i in range(n)]
        phys = pauli_matrix(list(joint.stabilizers) + pair_ops, N)
        tags = np.zeros((phys.shape[0], 2 * n), dtype=bool)
        tags[len(joint.stabilizers):] = np.eye(2 * n, dtype=bool)
        _TAGGED[joint] = np.ascontiguousarray(np.concatenate([phys, pack_bool(tags)], axis=1))
    return _TAGGED[joint]


def joint_recovered_batch(joint: JointBellCode, xx: np.ndarray, zz: np.ndarray):
    """Vectorised ``jointly_measurable`` for both joint logicals.

    ``xx``/``zz`` are (k, n_pairs) flags of which pair operators were measured.
    Returns two boolean arrays (XX-bar recovered, ZZ-bar recovered).
    """
    rows = _tagged_rows(joint)
    xx = np.atleast_2d(np.asarray(xx, bool))
    zz = np.atleast_2d(np.asarray(zz, bool))
    unmeasured = pack_bool(~np.concatenate([xx, zz], axis=1))
    phys_words = rows.shape[1] - unmeasured.shape[1]
    full = np.full((unmeasured.shape[0], phys_words), ~np.uint64(0), dtype=np.uint64)
    masks = np.ascontiguousarray(np.concatenate([full, unmeasured], axis=1))
    out = []
    for target in (joint.logical_xx, joint.logical_zz):
        t = np.concatenate([target.packed(), np.zeros(unmeasured.shape[1], dtype=np.uint64)])
        res = np.empty(masks.shape[0], dtype=np.bool_)
        _masked_in_span_batch(rows, t, masks, res)
        out.append(res)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# exhaustive aggregation

@njit(cache=True, nogil=True)
def _weight_counts(rows, target, n, mode):
    """Count surviving sets by size for which the predicate holds.

    mode 0: target measurable; mode 1: decodable (rank test).
    """
    counts = np.zeros(n + 1, dtype=np.int64)
    full = (np.uint64(1) << np.uint64(n)) - np.uint64(1) if n < 64 else ~np.uint64(0)
    r = rows.shape[0]
    mask = np.empty(2, dtype=np.uint64)
    for m in range(1 << n):
        surv = np.uint64(m)
        lost = full & ~surv
        k = 0
        t = m
        while t:
            t &= t - 1
            k += 1
        if mode == 0:
            mask[0] = lost
            mask[1] = lost
            ok = _masked_in_span(rows, target, mask)
        else:
            if r == 0:
                ok = k == n
            else:
                mask[0] = lost
                mask[1] = lost
                rl = _masked_rank(rows, mask)
                mask[0] = surv
                mask[1] = surv
                rr = _masked_rank(rows, mask)
                ok = 2 * (n - k) - rl == r - rr
        if ok:
            counts[k] += 1
    return counts


_COUNT_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def success_counts(code: StabilizerCode, predicate: str) -> np.ndarray:
    """Number of surviving sets of each size satisfying ``predicate``.

    ``predicate`` is "decodable", "X" or "Z".  Cached per code.
    """
    if predicate not in PREDICATES:
        raise ValueError(f"predicate must be one of {PREDICATES}")
    check_capacity(code.n)
    per_code = _COUNT_CACHE.setdefault(code, {})
    if predicate not in per_code:
        if code.n > 63:
            raise AssertionError("unreachable: enumeration cap below 64")
        rows = code.tableau if code.stabilizers else np.zeros((0, 2), dtype=np.uint64)
        if predicate == "decodable":
            target = np.zeros(2, dtype=np.uint64)
            mode = 1
        else:
            target = code.logical(predicate).packed()
            mode = 0
        counts = _weight_counts(rows, target, code.n, mode)
        counts.setflags(write=False)
        per_code[predicate] = counts
    return per_code[predicate]


def exact_probability(code: StabilizerCode, eta: float, predicate: str = "decodable") -> float:
    """Sum of P(N -> R | eta) over every R satisfying the predicate."""
    eta = check_probability(eta, "eta")
    return weight_polynomial(success_counts(code, predicate), eta)
