"""The i.i.d. loss channel: subset probabilities, sampling and enumeration."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union

import numpy as np

from .gf2 import pack_bool, qubit_words

DEFAULT_ENUM_CAP = 22

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


class CapacityError(RuntimeError):
    """Exhaustive enumeration requested beyond the configured cap."""


def enum_cap() -> int:
    return int(os.environ.get("LTBSM_ENUM_CAP", DEFAULT_ENUM_CAP))


def check_capacity(n_bits: int, what: str = "qubits"):
    cap = enum_cap()
    if n_bits > cap:
        raise CapacityError(
            f"{n_bits} {what} exceeds the enumeration cap of {cap} "
            "(set LTBSM_ENUM_CAP or use Monte Carlo)")


def check_probability(value: float, name: str = "probability") -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or value != value:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class ChannelParams:
    eta: float

    def __post_init__(self):
        check_probability(self.eta, "eta")

    @property
    def epsilon(self) -> float:
        return 1.0 - self.eta

    @classmethod
    def from_loss(cls, epsilon: float) -> "ChannelParams":
        return cls(1.0 - check_probability(epsilon, "epsilon"))


@dataclass(frozen=True, eq=False)
class LossPattern:
    """Surviving set R of an n-qubit register; ``survived[i]`` is True for i in R."""

    n: int
    survived: np.ndarray

    def __post_init__(self):
        arr = np.array(self.survived, dtype=bool).reshape(-1)
        if arr.shape != (self.n,):
            raise ValueError(f"loss pattern needs {self.n} flags, got {arr.size}")
        arr.setflags(write=False)
        object.__setattr__(self, "survived", arr)

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "LossPattern":
        return cls(n, [(mask >> i) & 1 for i in range(n)])

    @classmethod
    def from_surviving(cls, n: int, surviving) -> "LossPattern":
        arr = np.zeros(n, dtype=bool)
        arr[list(surviving)] = True
        return cls(n, arr)

    @classmethod
    def all_survive(cls, n: int) -> "LossPattern":
        return cls(n, np.ones(n, dtype=bool))

    @cached_property
    def mask(self) -> int:
        return int(sum(1 << int(i) for i in np.flatnonzero(self.survived)))

    @property
    def surviving(self) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(self.survived))

    @property
    def lost(self) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(~self.survived))

    @property
    def n_surviving(self) -> int:
        return int(self.survived.sum())

    def complement(self) -> "LossPattern":
        return LossPattern(self.n, ~self.survived)

    def restrict(self, qubits) -> "LossPattern":
        return LossPattern(len(qubits), self.survived[list(qubits)])

    def lost_words(self) -> np.ndarray:
        """Packed lost-qubit mask, qubit_words(n) uint64 words."""
        return pack_bool(~self.survived, qubit_words(self.n))

    def __eq__(self, other):
        if not isinstance(other, LossPattern):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.survived, other.survived)

    def __hash__(self):
        return hash((self.n, self.survived.tobytes()))

    def __repr__(self):
        return f"LossPattern(n={self.n}, surviving={sorted(self.surviving)})"


def subset_probability(n: int, r: LossPattern, eta: float) -> float:
    """P(N -> R | eta) = eta^|R| (1 - eta)^(n - |R|)."""
    eta = check_probability(eta, "eta")
    if r.n != n:
        raise ValueError(f"pattern on {r.n} qubits, channel on {n}")
    k = r.n_surviving
    return eta ** k * (1.0 - eta) ** (n - k)


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.default_rng(seed)


def trial_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Independent stream for trial ``index`` of a run seeded with ``seed``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))


def sample_loss(n: int, eta: float, seed: SeedLike) -> LossPattern:
    """Each qubit survives independently with probability ``eta``.

    Qubit i survives iff its uniform draw is below eta, so patterns drawn from
    the same seed are nested: raising eta only adds survivors.
    """
    eta = check_probability(eta, "eta")
    u = as_generator(seed).random(n)
    return LossPattern(n, u < eta)


def enumerate_patterns(n: int) -> Iterator[LossPattern]:
    """All 2^n loss patterns in increasing order of the surviving bitmask."""
    check_capacity(n)
    for mask in range(1 << n):
        yield LossPattern.from_mask(n, mask)


def weight_polynomial(counts, eta: float) -> float:
    """Sum_k counts[k] eta^k (1-eta)^(n-k) with n = len(counts) - 1."""
    counts = np.asarray(counts, dtype=float)
    n = len(counts) - 1
    k = np.arange(n + 1)
    return float(np.sum(counts * eta ** k * (1.0 - eta) ** (n - k)))
