"""Shared fixtures-by-import for the test modules."""

from itertools import combinations

import numpy as np

from ltbsm.codes import parse_code
from ltbsm.erasure import LossPattern

# every built code family at n <= 10
SMALL_SPECS = [
    "rep:1", "rep:2", "rep:3", "rep:5",
    "qpc:1,1", "qpc:2,2", "qpc:2,3", "qpc:3,2", "qpc:3,3",
    "tree:1", "tree:2", "tree:3", "tree:2-2", "tree:3-2", "tree:2-1-1",
    "treeroot:1", "treeroot:2", "treeroot:2-2",
    "surface:3",
    "qpc2var:2/inner=rep:1", "qpc2var:3/inner=rep:1", "qpc2var:2/inner=tree:2",
    "qpc2var:2/inner=tree:3",
]


def small_code(spec):
    code = parse_code(spec)
    return getattr(code, "flattened", code)


def all_patterns(n):
    return [LossPattern.from_mask(n, m) for m in range(1 << n)]


def brute_span(target, rows):
    """Exhaustive search over all 2^r row combinations."""
    rows = [np.asarray(r, dtype=np.uint8) for r in rows]
    target = np.asarray(target, dtype=np.uint8)
    for k in range(len(rows) + 1):
        for combo in combinations(range(len(rows)), k):
            acc = np.zeros_like(target)
            for i in combo:
                acc ^= rows[i]
            if np.array_equal(acc, target):
                return True
    return False


GRID = [round(0.05 * k, 2) for k in range(21)]


def inequality_violations(code, tol=1e-12):
    """Exhaustive subset checks plus probability checks on a 0.05 grid.

    Returns a list of human-readable violations (empty when all hold).
    """
    from ltbsm.decodability import decodable, exact_probability, measurable_batch
    from ltbsm.gf2 import pack_bool, qubit_words

    n = code.n
    full = (1 << n) - 1
    masks = np.arange(1 << n)
    surv = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    lost = pack_bool(~surv, qubit_words(n))
    mx = measurable_batch(code, "X", lost)
    mz = measurable_batch(code, "Z", lost)
    dec = np.array([decodable(code, LossPattern.from_mask(n, int(m))) for m in masks])
    bad = []
    for name, f in (("X", mx), ("Z", mz), ("decodable", dec)):
        for i in range(n):
            up = masks | (1 << i)
            if np.any(f & ~f[up]):
                bad.append(f"{name} not monotone adding qubit {i}")
    comp = full ^ masks
    if np.any(dec & dec[comp]):
        bad.append("decodable on both R and its complement")
    if np.any(mx & mz[comp]) or np.any(mz & mx[comp]):
        bad.append("X-bar on R and Z-bar on complement")
    if np.any(dec & ~(mx & mz)):
        bad.append("decodable but a logical is not measurable")
    for eps in GRID:
        pd = exact_probability(code, 1 - eps), exact_probability(code, eps)
        if pd[0] + pd[1] > 1 + tol:
            bad.append(f"decoder no-cloning sum {sum(pd)} at eps={eps}")
        for a, b in (("X", "Z"), ("Z", "X")):
            s = exact_probability(code, 1 - eps, a) + exact_probability(code, eps, b)
            if s > 1 + tol:
                bad.append(f"P({a}|1-eps)+P({b}|eps)={s} at eps={eps}")
        for pred in ("X", "Z"):
            if exact_probability(code, 1 - eps, "decodable") > exact_probability(code, 1 - eps, pred) + tol:
                bad.append(f"decoder exceeds {pred} at eps={eps}")
    for pred in ("decodable", "X", "Z"):
        vals = [exact_probability(code, e, pred) for e in GRID]
        if any(b < a - tol for a, b in zip(vals, vals[1:])):
            bad.append(f"P({pred}) not nondecreasing in eta")
    return bad
