"""Abstract linear-optical Bell measurement (LOBSM) on one photon pair.

A pair where both photons arrive yields XX and ZZ with probability
``p_both``, XX alone with ``p_xx - p_both``, ZZ alone with ``p_zz - p_both``
and nothing otherwise.  Capability constraints: ``p_both <= p`` and
``p_xx + p_zz <= 1 + p``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from .erasure import SeedLike, as_generator, check_probability

_TOL = 1e-12


class InvalidModel(ValueError):
    pass


class LobsmOutcome(enum.IntEnum):
    PHOTON_LOST = 0
    NEITHER = 1
    XX_ONLY = 2
    ZZ_ONLY = 3
    BOTH = 4

    @property
    def has_xx(self) -> bool:
        return self in (LobsmOutcome.XX_ONLY, LobsmOutcome.BOTH)

    @property
    def has_zz(self) -> bool:
        return self in (LobsmOutcome.ZZ_ONLY, LobsmOutcome.BOTH)


@dataclass(frozen=True)
class LobsmModel:
    p: float
    p_xx: float
    p_zz: float
    p_both: float
    name: str = ""

    def __post_init__(self):
        for field_name in ("p", "p_xx", "p_zz", "p_both"):
            check_probability(getattr(self, field_name), field_name)
        if self.p_both > self.p + _TOL:
            raise InvalidModel(f"p_both={self.p_both} exceeds capability p={self.p}")
        if self.p_xx + self.p_zz > 1 + self.p + _TOL:
            raise InvalidModel(f"p_xx + p_zz = {self.p_xx + self.p_zz} exceeds 1 + p")
        if self.p_both > min(self.p_xx, self.p_zz) + _TOL:
            raise InvalidModel("p_both cannot exceed p_xx or p_zz")
        if self.p_both < self.p_xx + self.p_zz - 1 - _TOL:
            raise InvalidModel("p_both below p_xx + p_zz - 1 (inconsistent marginals)")

    def mirror(self) -> "LobsmModel":
        """Same device with the roles of XX and ZZ exchanged."""
        name = {"zz-det": "xx-det", "xx-det": "zz-det"}.get(self.name, self.name + "~")
        return LobsmModel(self.p, self.p_zz, self.p_xx, self.p_both, name)

    def outcome_probabilities(self) -> Tuple[float, float, float, float]:
        """(neither, xx only, zz only, both) given both photons detected."""
        xx = self.p_xx - self.p_both
        zz = self.p_zz - self.p_both
        return (max(0.0, 1.0 - xx - zz - self.p_both), xx, zz, self.p_both)

    def cutpoints(self) -> np.ndarray:
        """Thresholds on a uniform draw: Both | XX only | ZZ only | Neither."""
        return np.array([self.p_both, self.p_xx, self.p_xx + self.p_zz - self.p_both])

    def __str__(self):
        return self.name or f"lobsm(p={self.p},xx={self.p_xx},zz={self.p_zz},both={self.p_both})"


def zz_deterministic() -> LobsmModel:
    return LobsmModel(0.5, 0.5, 1.0, 0.5, "zz-det")


def xx_deterministic() -> LobsmModel:
    return LobsmModel(0.5, 1.0, 0.5, 0.5, "xx-det")


def random_basis() -> LobsmModel:
    return LobsmModel(0.5, 0.75, 0.75, 0.5, "random-basis")


def assisted(p: float) -> LobsmModel:
    p = check_probability(p, "p")
    return LobsmModel(p, (1 + p) / 2, (1 + p) / 2, p, f"assisted:p={p!r}")


def standard_models() -> Dict[str, LobsmModel]:
    return {
        "zz-det": zz_deterministic(),
        "xx-det": xx_deterministic(),
        "random-basis": random_basis(),
        "assisted": assisted(0.5),
        "deterministic": assisted(1.0),
    }


@dataclass(frozen=True)
class LobsmVectorModel:
    """One model per photon pair, for static protocols with heterogeneous devices."""

    models: Tuple[LobsmModel, ...]

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise InvalidModel("vector model needs at least one pair")

    @classmethod
    def uniform(cls, model: LobsmModel, n: int) -> "LobsmVectorModel":
        return cls((model,) * n)

    def __len__(self):
        return len(self.models)

    def __getitem__(self, i) -> LobsmModel:
        return self.models[i]

    @property
    def p_xx(self) -> np.ndarray:
        return np.array([m.p_xx for m in self.models])

    @property
    def p_zz(self) -> np.ndarray:
        return np.array([m.p_zz for m in self.models])

    @property
    def p_both(self) -> np.ndarray:
        return np.array([m.p_both for m in self.models])

    def is_uniform(self) -> bool:
        return all(m == self.models[0] for m in self.models)

    def __str__(self):
        if self.is_uniform():
            return str(self.models[0])
        return f"vector[{len(self.models)}]"


def sample_outcome(model: LobsmModel, a_detected: bool, b_detected: bool,
                   seed: SeedLike) -> LobsmOutcome:
    if not (a_detected and b_detected):
        return LobsmOutcome.PHOTON_LOST
    return outcome_from_uniform(model, as_generator(seed).random())


def outcome_from_uniform(model: LobsmModel, u: float) -> LobsmOutcome:
    both, xx, xz = model.cutpoints()
    if u < both:
        return LobsmOutcome.BOTH
    if u < xx:
        return LobsmOutcome.XX_ONLY
    if u < xz:
        return LobsmOutcome.ZZ_ONLY
    return LobsmOutcome.NEITHER


def outcomes_from_uniform(p_both: np.ndarray, p_xx: np.ndarray, p_zz: np.ndarray,
                          detected: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised outcome draw; returns (xx recovered, zz recovered) flags."""
    both = u < p_both
    xx_only = ~both & (u < p_xx)
    zz_only = ~both & ~xx_only & (u < p_xx + p_zz - p_both)
    return detected & (both | xx_only), detected & (both | zz_only)


ModelLike = Union[str, LobsmModel, LobsmVectorModel]


def parse_model(spec: ModelLike) -> Union[LobsmModel, LobsmVectorModel]:
    """Parse ``zz-det``, ``xx-det``, ``random-basis``, ``assisted:p=<float>``,
    ``deterministic`` or ``vector:<file>``."""
    if isinstance(spec, (LobsmModel, LobsmVectorModel)):
        return spec
    spec = spec.strip()
    table = standard_models()
    if spec in table and spec != "assisted":
        return table[spec]
    if spec.startswith("assisted:"):
        key, _, value = spec[len("assisted:"):].partition("=")
        if key.strip() != "p" or not value:
            raise InvalidModel(f"expected assisted:p=<float>, got {spec!r}")
        return assisted(float(value))
    if spec.startswith("vector:"):
        return load_vector_model(spec[len("vector:"):])
    raise InvalidModel(f"unknown LOBSM model {spec!r}")


def load_vector_model(path: Union[str, Path]) -> LobsmVectorModel:
    """One pair per line: either a model name or ``p,p_xx,p_zz,p_both``."""
    models = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [x.strip() for x in line.split(",")]
        if len(parts) == 4:
            models.append(LobsmModel(*map(float, parts)))
        elif len(parts) == 1:
            m = parse_model(parts[0])
            if isinstance(m, LobsmVectorModel):
                raise InvalidModel("nested vector models are not allowed")
            models.append(m)
        else:
            raise InvalidModel(f"cannot parse model line {line!r}")
    return LobsmVectorModel(models)


def as_vector(model: Union[LobsmModel, LobsmVectorModel], n: int) -> LobsmVectorModel:
    if isinstance(model, LobsmModel):
        return LobsmVectorModel.uniform(model, n)
    if len(model) != n:
        raise InvalidModel(f"vector model has {len(model)} entries, code has {n} pairs")
    return model


def single_model(model: Union[LobsmModel, LobsmVectorModel]) -> LobsmModel:
    if isinstance(model, LobsmModel):
        return model
    if model.is_uniform():
        return model.models[0]
    raise InvalidModel("this protocol takes a single LOBSM model")
