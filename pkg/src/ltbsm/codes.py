"""Stabilizer codes used by the logical Bell-measurement protocols.

Every constructor returns an immutable code whose invariants (commuting,
independent generators; logical operators in the normalizer and mutually
anticommuting) are checked on construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

from .gf2 import (Gf2Matrix, PauliOperator, pack_int, pauli_matrix, qubit_words, rank,
                  symplectic_product, unpack_bool)


class InvalidCode(ValueError):
    pass


def _check_commuting(ops: Sequence[PauliOperator], what: str):
    """All pairwise symplectic products vanish; computed as an integer matrix product mod 2."""
    if len(ops) < 2:
        return
    n = ops[0].n
    dense = unpack_bool(pauli_matrix(ops, n), 2 * qubit_words(n) * 64).astype(np.float32)
    half = qubit_words(n) * 64
    x, z = dense[:, :half], dense[:, half:]
    step = max(1, (1 << 24) // max(1, len(ops)))
    for start in range(0, len(ops), step):
        block = (x[start:start + step] @ z.T + z[start:start + step] @ x.T) % 2
        hit = np.argwhere(block)
        if hit.size:
            a, b = ops[start + hit[0][0]], ops[hit[0][1]]
            raise InvalidCode(f"{what}: {a.label()} and {b.label()} anticommute")


def _independent(ops: Sequence[PauliOperator], n: int) -> bool:
    if not ops:
        return True
    m = Gf2Matrix(len(ops), 2 * qubit_words(n) * 64, pauli_matrix(ops, n))
    return rank(m) == len(ops)


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """One logical qubit in ``n`` physical qubits."""

    n: int
    stabilizers: Tuple[PauliOperator, ...]
    logical_x: PauliOperator
    logical_z: PauliOperator
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stabilizers", tuple(self.stabilizers))
        if self.n < 1:
            raise InvalidCode("a code needs at least one qubit")
        for p in (*self.stabilizers, self.logical_x, self.logical_z):
            if p.n != self.n:
                raise InvalidCode(f"{p.label()} acts on {p.n} qubits, code has {self.n}")
        _check_commuting(self.stabilizers, "stabilizers")
        for name, op in (("logical X", self.logical_x), ("logical Z", self.logical_z)):
            for s in self.stabilizers:
                if symplectic_product(op, s):
                    raise InvalidCode(f"{name} anticommutes with stabilizer {s.label()}")
        if symplectic_product(self.logical_x, self.logical_z) != 1:
            raise InvalidCode("logical X and Z must anticommute")
        if len(self.stabilizers) != self.n - 1 or not _independent(self.stabilizers, self.n):
            raise InvalidCode(
                f"need {self.n - 1} independent stabilizers, got {len(self.stabilizers)}")

    @cached_property
    def tableau(self) -> np.ndarray:
        """Packed stabilizer generators, shape (n-1, 2*qubit_words(n))."""
        t = pauli_matrix(self.stabilizers, self.n)
        t.setflags(write=False)
        return t

    @cached_property
    def css_tableaux(self):
        """(X-type rows, Z-type rows) packed over qubit words, or None if not CSS."""
        xs, zs = [], []
        for s in self.stabilizers:
            if s.z == 0:
                xs.append(s.x)
            elif s.x == 0:
                zs.append(s.z)
            else:
                return None
        qw = qubit_words(self.n)
        out = tuple(np.array([pack_int(v, qw) for v in group], dtype=np.uint64).reshape(-1, qw)
                    for group in (xs, zs))
        for t in out:
            t.setflags(write=False)
        return out

    def logical(self, which: str) -> PauliOperator:
        which = which.upper()
        if which == "X":
            return self.logical_x
        if which == "Z":
            return self.logical_z
        raise ValueError(f"unknown logical operator {which!r}")

    def __repr__(self):
        return f"StabilizerCode({self.label or 'n=%d' % self.n})"


@dataclass(frozen=True, eq=False)
class QpcVariantCode:
    """QPC(n, 2) whose second qubit in every block is replaced by an inner code.

    Block ``i`` occupies qubits ``[i*(1+k), (i+1)*(1+k))`` of the flattened code:
    the bare photon ``q1`` first, then the ``k`` inner qubits.
    """

    n_blocks: int
    inner: StabilizerCode

    @property
    def block_size(self) -> int:
        return 1 + self.inner.n

    @property
    def n(self) -> int:
        return self.n_blocks * self.block_size

    @property
    def label(self) -> str:
        return f"qpc2var:{self.n_blocks}/inner={self.inner.label}"

    @cached_property
    def block_map(self) -> Tuple[Tuple[int, Tuple[int, ...]], ...]:
        """(bare photon index, inner qubit indices) for every block."""
        bs = self.block_size
        return tuple((i * bs, tuple(range(i * bs + 1, (i + 1) * bs))) for i in range(self.n_blocks))

    @cached_property
    def flattened(self) -> StabilizerCode:
        """The whole code as one stabilizer code; built on first use."""
        return _flatten_qpc2(self)


@dataclass(frozen=True, eq=False)
class JointBellCode:
    """Two logical qubits on ``2 * n_pairs`` qubits; pair i is (i, n_pairs + i).

    Only the two joint logical operators ``xx`` and ``zz`` are tracked; a logical
    Bell measurement recovers both.
    """

    n_pairs: int
    stabilizers: Tuple[PauliOperator, ...]
    logical_xx: PauliOperator
    logical_zz: PauliOperator
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stabilizers", tuple(self.stabilizers))
        _check_commuting((*self.stabilizers, self.logical_xx, self.logical_zz),
                         "joint Bell code operators")

    @property
    def n(self) -> int:
        return 2 * self.n_pairs

    @cached_property
    def tableau(self) -> np.ndarray:
        t = pauli_matrix(self.stabilizers, self.n)
        t.setflags(write=False)
        return t


def _require(cond: bool, msg: str):
    if not cond:
        raise InvalidCode(msg)


def build_repetition(n: int) -> StabilizerCode:
    """Bit-flip repetition code: Z_i Z_{i+1} checks, X-bar = X...X, Z-bar = Z_0."""
    _require(n >= 1, "repetition code needs n >= 1")
    stabs = [PauliOperator.from_sparse(n, zs=(i, i + 1)) for i in range(n - 1)]
    return StabilizerCode(n, stabs, PauliOperator.from_sparse(n, xs=range(n)),
                          PauliOperator.from_sparse(n, zs=(0,)), f"rep:{n}")


def build_qpc(n: int, m: int) -> StabilizerCode:
    """Quantum parity code QPC(n, m); qubit (block i, position j) is ``i*m + j``.

    X-bar is X on every qubit of block 0; Z-bar is Z on the first qubit of each
    block.  Checks: Z Z between neighbours inside a block, and X^m X^m between
    consecutive blocks.
    """
    _require(n >= 1 and m >= 1, "QPC needs n >= 1 and m >= 1")
    N = n * m
    stabs = []
    for i in range(n):
        for j in range(m - 1):
            stabs.append(PauliOperator.from_sparse(N, zs=(i * m + j, i * m + j + 1)))
    for i in range(n - 1):
        stabs.append(PauliOperator.from_sparse(N, xs=range(i * m, (i + 2) * m)))
    lx = PauliOperator.from_sparse(N, xs=range(m))
    lz = PauliOperator.from_sparse(N, zs=[i * m for i in range(n)])
    return StabilizerCode(N, stabs, lx, lz, f"qpc:{n},{m}")


def _tree_edges(branching: Sequence[int]) -> Tuple[int, List[Tuple[int, int]]]:
    """Vertices in BFS order with the root as 0; returns (vertex count, edges)."""
    edges = []
    level = [0]
    count = 1
    for b in branching:
        nxt = []
        for parent in level:
            for _ in range(b):
                edges.append((parent, count))
                nxt.append(count)
                count += 1
        level = nxt
    return count, edges


def build_tree_code(branching: Sequence[int], root: str = "virtual") -> StabilizerCode:
    """Tree graph code with branching vector ``branching``.

    ``root="virtual"`` (default): the root carries the input and is not a
    physical qubit.  Physical qubits are the non-root vertices in BFS order
    (index = vertex - 1).  X-bar = product of Z on the first-level qubits,
    Z-bar = X_c times Z on the children of a first-level qubit c; both logical
    operators tolerate loss up to 1/2 as the branching grows.

    ``root="physical"``: the root is qubit 0 and is transmitted like the others.
    Checks are the graph generators of the non-root vertices, X-bar is the
    root generator and Z-bar is Z_root.  Every X-bar representative needs the
    root, so its X loss threshold is 0.
    """
    branching = list(branching)
    _require(len(branching) > 0, "tree branching must be non-empty")
    _require(all(b >= 1 for b in branching), "tree branching entries must be >= 1")
    nv, edges = _tree_edges(branching)
    nbrs = [[] for _ in range(nv)]
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    shape = "-".join(map(str, branching))

    if root == "physical":
        def gen(v):
            return PauliOperator.from_sparse(nv, xs=(v,), zs=nbrs[v])
        stabs = [gen(v) for v in range(1, nv)]
        return StabilizerCode(nv, stabs, gen(0), PauliOperator.from_sparse(nv, zs=(0,)),
                              f"treeroot:{shape}")
    if root != "virtual":
        raise ValueError(f"root must be 'virtual' or 'physical', not {root!r}")

    n = nv - 1
    first = nbrs[0]

    def gen(v):
        # graph generator with the root factor dropped
        return PauliOperator.from_sparse(n, xs=(v - 1,), zs=[w - 1 for w in nbrs[v] if w != 0])

    stabs = [gen(v) for v in range(1, nv) if v not in first]
    stabs += [gen(first[i]) * gen(first[i + 1]) for i in range(len(first) - 1)]
    lx = PauliOperator.from_sparse(n, zs=[c - 1 for c in first])
    lz = gen(first[0])
    return StabilizerCode(n, stabs, lx, lz, f"tree:{shape}")


def build_rotated_surface(d: int) -> StabilizerCode:
    """Rotated surface code; qubit (row r, column c) is ``r*d + c``.

    The plaquette with top-left corner (r, c), r, c in [-1, d-1], is X-type when
    r + c is even.  Weight-2 X checks sit on the top and bottom edges, weight-2
    Z checks on the left and right.  X-bar is column 0, Z-bar is row 0.
    """
    _require(d >= 1 and d % 2 == 1, "surface code distance must be odd")
    n = d * d

    def q(r, c):
        return r * d + c

    stabs = []
    for r in range(-1, d):
        for c in range(-1, d):
            cells = [(rr, cc) for rr in (r, r + 1) for cc in (c, c + 1)
                     if 0 <= rr < d and 0 <= cc < d]
            is_x = (r + c) % 2 == 0
            if len(cells) == 4:
                pass
            elif len(cells) == 2:
                top_bottom = r in (-1, d - 1)
                if top_bottom != is_x:
                    continue
            else:
                continue
            idx = [q(rr, cc) for rr, cc in cells]
            stabs.append(PauliOperator.from_sparse(n, xs=idx) if is_x
                         else PauliOperator.from_sparse(n, zs=idx))
    lx = PauliOperator.from_sparse(n, xs=[q(r, 0) for r in range(d)])
    lz = PauliOperator.from_sparse(n, zs=[q(0, c) for c in range(d)])
    return StabilizerCode(n, stabs, lx, lz, f"surface:{d}")


def build_bell_repetition(n: int) -> JointBellCode:
    """Bell repetition code: logical Bell states are n copies of a physical Bell pair."""
    _require(n >= 1, "Bell repetition code needs n >= 1")
    N = 2 * n
    stabs = []
    for i in range(n - 1):
        idx = (i, n + i, i + 1, n + i + 1)
        stabs.append(PauliOperator.from_sparse(N, xs=idx))
        stabs.append(PauliOperator.from_sparse(N, zs=idx))
    return JointBellCode(n, stabs, PauliOperator.from_sparse(N, xs=(0, n)),
                         PauliOperator.from_sparse(N, zs=(0, n)), f"bellrep:{n}")


def joint_code(code: StabilizerCode) -> JointBellCode:
    """Two independent copies of ``code`` viewed as one joint code (a on 0..n-1, b after)."""
    n = code.n
    ident = PauliOperator(n)
    stabs = [s.tensor(ident) for s in code.stabilizers] + [ident.tensor(s) for s in code.stabilizers]
    return JointBellCode(n, stabs, code.logical_x.tensor(code.logical_x),
                         code.logical_z.tensor(code.logical_z), f"joint({code.label})")


def build_qpc2_variant(n_blocks: int, inner: StabilizerCode) -> QpcVariantCode:
    """Concatenate QPC(n_blocks, 2) with ``inner`` on the second qubit of each block."""
    _require(n_blocks >= 1, "QPC variant needs at least one block")
    if not isinstance(inner, StabilizerCode):
        raise InvalidCode("inner code must be a StabilizerCode")
    return QpcVariantCode(n_blocks, inner)


def _flatten_qpc2(variant: QpcVariantCode) -> StabilizerCode:
    n_blocks, inner, block_map, N = variant.n_blocks, variant.inner, variant.block_map, variant.n

    def inner_op(p: PauliOperator, i: int) -> PauliOperator:
        return p.embed(N, block_map[i][1])

    def q1(i, kind):
        return PauliOperator.from_sparse(N, **{kind: (block_map[i][0],)})

    stabs = []
    for i in range(n_blocks):
        stabs.append(q1(i, "zs") * inner_op(inner.logical_z, i))
        stabs.extend(inner_op(s, i) for s in inner.stabilizers)
    for i in range(n_blocks - 1):
        stabs.append(q1(i, "xs") * inner_op(inner.logical_x, i)
                     * q1(i + 1, "xs") * inner_op(inner.logical_x, i + 1))
    lx = q1(0, "xs") * inner_op(inner.logical_x, 0)
    lz = PauliOperator(N)
    for i in range(n_blocks):
        lz = lz * q1(i, "zs")
    return StabilizerCode(N, stabs, lx, lz, variant.label)


def _ints(text: str, sep: str, spec: str) -> List[int]:
    try:
        return [int(x) for x in text.split(sep)]
    except ValueError:
        raise InvalidCode(f"malformed code spec {spec!r}") from None


def parse_code(spec):
    """Build a code from ``rep:n``, ``qpc:n,m``, ``tree:b1-b2-...``, ``treeroot:b1-...``,
    ``surface:d``, ``bellrep:n`` or ``qpc2var:n/inner=<spec>``.

    Code objects are returned unchanged.
    """
    if isinstance(spec, (StabilizerCode, QpcVariantCode, JointBellCode)):
        return spec
    spec = str(spec).strip()
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise InvalidCode(f"malformed code spec {spec!r}")
    if kind == "rep":
        (n,) = _ints(arg, ",", spec)
        return build_repetition(n)
    if kind == "qpc":
        vals = _ints(arg, ",", spec)
        if len(vals) != 2:
            raise InvalidCode(f"qpc needs n,m: {spec!r}")
        return build_qpc(*vals)
    if kind == "tree":
        return build_tree_code(_ints(arg, "-", spec))
    if kind == "treeroot":
        return build_tree_code(_ints(arg, "-", spec), root="physical")
    if kind == "surface":
        (d,) = _ints(arg, ",", spec)
        return build_rotated_surface(d)
    if kind == "bellrep":
        (n,) = _ints(arg, ",", spec)
        return build_bell_repetition(n)
    if kind == "qpc2var":
        head, sep2, inner = arg.partition("/inner=")
        if not sep2:
            raise InvalidCode(f"qpc2var needs /inner=<spec>: {spec!r}")
        (n,) = _ints(head, ",", spec)
        inner_code = parse_code(inner)
        if not isinstance(inner_code, StabilizerCode):
            raise InvalidCode("qpc2var inner code must encode a single qubit")
        return build_qpc2_variant(n, inner_code)
    raise InvalidCode(f"unknown code family {kind!r}")
