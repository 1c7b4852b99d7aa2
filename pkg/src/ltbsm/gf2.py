"""Bit-packed GF(2) linear algebra and phase-free Pauli operators.

Vectors of length ``c`` are packed little-endian into ``ceil(c / 64)`` uint64
words: bit ``j`` lives in word ``j // 64`` at position ``j % 64``.

A Pauli on ``n`` qubits is the symplectic vector ``(x | z)``.  In packed form
the x half and the z half each occupy ``qubit_words(n)`` words, so a
qubit-level mask can be applied to both halves without shuffling bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from numba import njit

WORD = 64
_U64 = np.uint64


class DimensionError(ValueError):
    """Operands have incompatible sizes."""


def n_words(n_bits: int) -> int:
    return max(1, (n_bits + WORD - 1) // WORD)


def qubit_words(n: int) -> int:
    return n_words(n)


def pack_int(value: int, words: int) -> np.ndarray:
    """Pack a non-negative Python int into ``words`` uint64 words."""
    out = np.zeros(words, dtype=_U64)
    mask = (1 << WORD) - 1
    for w in range(words):
        out[w] = (value >> (WORD * w)) & mask
    return out


def unpack_int(words: np.ndarray) -> int:
    value = 0
    for w in range(len(words) - 1, -1, -1):
        value = (value << WORD) | int(words[w])
    return value


def pack_bool(bits: np.ndarray, words: Optional[int] = None) -> np.ndarray:
    """Pack boolean arrays along the last axis into uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[-1]
    if words is None:
        words = n_words(n)
    padded = np.zeros(bits.shape[:-1] + (words * WORD,), dtype=np.uint8)
    padded[..., :n] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return packed.view("<u8").astype(_U64, copy=False)


def unpack_bool(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :n].astype(bool)


# ---------------------------------------------------------------------------
# numba kernels

@njit(cache=True, nogil=True)
def _lowest_bit(v):
    for w in range(v.shape[0]):
        word = v[w]
        if word != 0:
            low = word & (~word + np.uint64(1))
            return w * 64 + int(np.log2(np.float64(low)))
    return -1


@njit(cache=True, nogil=True)
def _insert(basis, pivots, pivot_row, nb, v):
    """Reduce ``v`` in place against the echelon basis; append it if independent.

    Every stored basis vector has its pivot at its lowest set bit, so xoring it
    in clears that bit without touching lower ones.
    """
    W = v.shape[0]
    while True:
        c = _lowest_bit(v)
        if c < 0:
            return nb
        k = pivot_row[c]
        if k < 0:
            for w in range(W):
                basis[nb, w] = v[w]
            pivots[nb] = c
            pivot_row[c] = nb
            return nb + 1
        for w in range(W):
            v[w] ^= basis[k, w]


@njit(cache=True, nogil=True)
def _masked_rank(rows, mask):
    r, W = rows.shape
    basis = np.empty((r, W), dtype=np.uint64)
    pivots = np.empty(r, dtype=np.int64)
    pivot_row = np.full(W * 64, -1, dtype=np.int64)
    v = np.empty(W, dtype=np.uint64)
    nb = 0
    for i in range(r):
        for w in range(W):
            v[w] = rows[i, w] & mask[w]
        nb = _insert(basis, pivots, pivot_row, nb, v)
    return nb


@njit(cache=True, nogil=True)
def _masked_in_span(rows, target, mask):
    """True iff ``target & mask`` lies in the span of ``rows & mask``."""
    r, W = rows.shape
    v = np.empty(W, dtype=np.uint64)
    nonzero = False
    for w in range(W):
        v[w] = target[w] & mask[w]
        if v[w] != 0:
            nonzero = True
    if not nonzero:
        return True
    basis = np.empty((r, W), dtype=np.uint64)
    pivots = np.empty(r, dtype=np.int64)
    pivot_row = np.full(W * 64, -1, dtype=np.int64)
    row = np.empty(W, dtype=np.uint64)
    nb = 0
    for i in range(r):
        any_bit = False
        for w in range(W):
            row[w] = rows[i, w] & mask[w]
            if row[w] != 0:
                any_bit = True
        if any_bit:
            nb = _insert(basis, pivots, pivot_row, nb, row)
    while True:
        c = _lowest_bit(v)
        if c < 0:
            return True
        k = pivot_row[c]
        if k < 0:
            return False
        for w in range(W):
            v[w] ^= basis[k, w]


@njit(cache=True, nogil=True)
def _masked_in_span_batch(rows, target, masks, out):
    for t in range(masks.shape[0]):
        out[t] = _masked_in_span(rows, target, masks[t])


@njit(cache=True, nogil=True)
def _solve(rows, target):
    """Solve ``coeffs . rows = target``; returns (ok, coefficient bits as uint8)."""
    r, W = rows.shape
    TW = max(1, (r + 63) // 64)
    basis = np.zeros((r, W), dtype=np.uint64)
    tags = np.zeros((r, TW), dtype=np.uint64)
    pivot_row = np.full(W * 64, -1, dtype=np.int64)
    nb = 0
    for i in range(r):
        v = rows[i].copy()
        tag = np.zeros(TW, dtype=np.uint64)
        tag[i // 64] |= np.uint64(1) << np.uint64(i % 64)
        while True:
            c = _lowest_bit(v)
            if c < 0:
                break
            k = pivot_row[c]
            if k < 0:
                basis[nb] = v
                tags[nb] = tag
                pivot_row[c] = nb
                nb += 1
                break
            for w in range(W):
                v[w] ^= basis[k, w]
            for w in range(TW):
                tag[w] ^= tags[k, w]
    v = target.copy()
    acc = np.zeros(TW, dtype=np.uint64)
    coeffs = np.zeros(r, dtype=np.uint8)
    while True:
        c = _lowest_bit(v)
        if c < 0:
            break
        k = pivot_row[c]
        if k < 0:
            return False, coeffs
        for w in range(W):
            v[w] ^= basis[k, w]
        for w in range(TW):
            acc[w] ^= tags[k, w]
    for i in range(r):
        coeffs[i] = (acc[i // 64] >> np.uint64(i % 64)) & np.uint64(1)
    return True, coeffs


# ---------------------------------------------------------------------------
# matrices

@dataclass(frozen=True, eq=False)
class Gf2Matrix:
    """Immutable dense GF(2) matrix with packed row-major storage."""

    rows: int
    cols: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=_U64)
        if bits.shape != (self.rows, n_words(self.cols)):
            raise DimensionError(
                f"packed shape {bits.shape} does not match {self.rows}x{self.cols}")
        tail = self.cols % WORD
        if tail and self.rows and np.any(bits[:, -1] >> _U64(tail)):
            raise DimensionError("bits set beyond the last column")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], cols: Optional[int] = None) -> "Gf2Matrix":
        dense = [list(map(int, r)) for r in rows]
        if cols is None:
            if not dense:
                raise DimensionError("cannot infer column count of an empty matrix")
            cols = len(dense[0])
        if any(len(r) != cols for r in dense):
            raise DimensionError("ragged rows")
        arr = np.array(dense, dtype=bool).reshape(len(dense), cols)
        return cls(len(dense), cols, pack_bool(arr, n_words(cols)))

    @classmethod
    def from_strings(cls, rows: Sequence[str]) -> "Gf2Matrix":
        return cls.from_rows([[int(ch) for ch in r] for r in rows])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Gf2Matrix":
        return cls(rows, cols, np.zeros((rows, n_words(cols)), dtype=_U64))

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls.from_rows(np.eye(n, dtype=int).tolist(), n)

    def to_dense(self) -> np.ndarray:
        return unpack_bool(self.bits, self.cols).astype(np.uint8).reshape(self.rows, self.cols)

    def __eq__(self, other):
        if not isinstance(other, Gf2Matrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and np.array_equal(
            self.bits, other.bits)

    def __hash__(self):
        return hash((self.rows, self.cols, self.bits.tobytes()))


def rank(m: Gf2Matrix) -> int:
    """Row rank over GF(2)."""
    if m.rows == 0:
        return 0
    full = np.full(m.bits.shape[1], ~_U64(0), dtype=_U64)
    return int(_masked_rank(m.bits, full))


def in_row_span(target: Sequence[int], basis: Gf2Matrix) -> Optional[np.ndarray]:
    """Coefficients ``lam`` with ``lam . basis == target``, or None if unsolvable."""
    target = np.asarray(target, dtype=bool)
    if target.shape != (basis.cols,):
        raise DimensionError(f"target has length {target.size}, basis has {basis.cols} columns")
    if basis.rows == 0:
        return np.zeros(0, dtype=np.uint8) if not target.any() else None
    ok, coeffs = _solve(basis.bits, pack_bool(target, basis.bits.shape[1]))
    return coeffs if ok else None


# ---------------------------------------------------------------------------
# Pauli operators

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


@dataclass(frozen=True)
class PauliOperator:
    """Phase-free n-qubit Pauli; ``x`` and ``z`` are bitsets (bit i = qubit i)."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", int(self.x))
        object.__setattr__(self, "z", int(self.z))
        if self.n < 0 or self.x < 0 or self.z < 0 or (self.x | self.z) >> self.n:
            raise DimensionError(f"Pauli bits exceed {self.n} qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliOperator":
        x = z = 0
        for i, ch in enumerate(label.upper()):
            if ch in "XY":
                x |= 1 << i
            if ch in "ZY":
                z |= 1 << i
            if ch not in "IXYZ_":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(len(label), x, z)

    @classmethod
    def from_sparse(cls, n: int, xs: Iterable[int] = (), zs: Iterable[int] = ()) -> "PauliOperator":
        x = z = 0
        for i in xs:
            x ^= 1 << int(i)
        for i in zs:
            z ^= 1 << int(i)
        return cls(n, x, z)

    @property
    def x_bits(self) -> np.ndarray:
        return np.array([(self.x >> i) & 1 for i in range(self.n)], dtype=np.uint8)

    @property
    def z_bits(self) -> np.ndarray:
        return np.array([(self.z >> i) & 1 for i in range(self.n)], dtype=np.uint8)

    @property
    def support_mask(self) -> int:
        return self.x | self.z

    def support(self) -> frozenset:
        s = self.support_mask
        return frozenset(i for i in range(self.n) if (s >> i) & 1)

    @property
    def weight(self) -> int:
        return bin(self.support_mask).count("1")

    def is_identity(self) -> bool:
        return self.support_mask == 0

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if other.n != self.n:
            raise DimensionError(f"{self.n}-qubit vs {other.n}-qubit Pauli")
        return PauliOperator(self.n, self.x ^ other.x, self.z ^ other.z)

    def tensor(self, other: "PauliOperator") -> "PauliOperator":
        return PauliOperator(self.n + other.n, self.x | (other.x << self.n),
                             self.z | (other.z << self.n))

    def embed(self, n: int, positions: Sequence[int]) -> "PauliOperator":
        """Place qubit i of this operator on qubit ``positions[i]`` of an n-qubit register."""
        if len(positions) != self.n:
            raise DimensionError("one position per qubit required")
        x = z = 0
        for i, q in enumerate(positions):
            x |= ((self.x >> i) & 1) << q
            z |= ((self.z >> i) & 1) << q
        return PauliOperator(n, x, z)

    def packed(self) -> np.ndarray:
        """Symplectic vector as 2*qubit_words(n) uint64 words, x half first."""
        qw = qubit_words(self.n)
        return np.concatenate([pack_int(self.x, qw), pack_int(self.z, qw)])

    def label(self) -> str:
        return "".join(_LETTERS[((self.x >> i) & 1, (self.z >> i) & 1)] for i in range(self.n))

    def __repr__(self):
        return f"PauliOperator({self.label()!r})"


def symplectic_product(p: PauliOperator, q: PauliOperator) -> int:
    """0 if ``p`` and ``q`` commute, 1 if they anticommute."""
    if p.n != q.n:
        raise DimensionError(f"{p.n}-qubit vs {q.n}-qubit Pauli")
    return (bin(p.x & q.z).count("1") + bin(p.z & q.x).count("1")) & 1


def pauli_matrix(paulis: Sequence[PauliOperator], n: int) -> np.ndarray:
    """Pack Paulis as rows of a (len, 2*qubit_words(n)) uint64 array."""
    qw = qubit_words(n)
    out = np.zeros((len(paulis), 2 * qw), dtype=_U64)
    for i, p in enumerate(paulis):
        if p.n != n:
            raise DimensionError(f"{p.n}-qubit Pauli in an {n}-qubit tableau")
        out[i] = p.packed()
    return out
