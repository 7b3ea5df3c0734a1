"""Rotary position embedding: frequency spectra and rotations.

Feature pairs are interleaved, i.e. component ``j`` (1-based) rotates
``(x[2j-2], x[2j-1])`` in 0-based storage. Block-split checkpoints must be
permuted by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidBaseError,
    InvalidDimensionError,
    UnknownAxisError,
)

AXIS_IDS = ("time", "height", "width")


def _check_d_prime(d_prime: int) -> None:
    if isinstance(d_prime, bool) or int(d_prime) != d_prime or d_prime < 2 or d_prime % 2:
        raise InvalidDimensionError(f"d_prime must be an even integer >= 2, got {d_prime!r}")


@dataclass(frozen=True)
class FrequencySpec:
    """Rotation rates for one axis.

    ``thetas[j-1]`` is the angle (radians) component ``j`` turns per unit step
    of position. ``base`` is recorded only when every entry was generated
    from it, which NTK and the base-form RIFLEx variants rely on.
    """

    d_prime: int
    thetas: tuple
    base: Optional[float] = None

    def __post_init__(self):
        _check_d_prime(self.d_prime)
        thetas = tuple(float(t) for t in self.thetas)
        if len(thetas) != self.d_prime // 2:
            raise InvalidDimensionError(
                f"expected {self.d_prime // 2} thetas for d_prime={self.d_prime}, got {len(thetas)}"
            )
        if not all(math.isfinite(t) and t > 0 for t in thetas):
            raise InvalidBaseError("thetas must be finite and strictly positive")
        if self.base is not None and not (math.isfinite(self.base) and self.base > 0):
            raise InvalidBaseError(f"base must be positive, got {self.base!r}")
        object.__setattr__(self, "thetas", thetas)

    @property
    def n_components(self) -> int:
        return self.d_prime // 2

    def array(self) -> np.ndarray:
        return np.asarray(self.thetas, dtype=np.float64)

    def theta(self, j: int) -> float:
        """Return theta_j for a 1-based index."""
        return self.thetas[j - 1]

    @classmethod
    def from_thetas(cls, thetas: Iterable[float]) -> "FrequencySpec":
        thetas = tuple(thetas)
        return cls(d_prime=2 * len(thetas), thetas=thetas)

    @classmethod
    def from_periods(cls, periods: Iterable[float]) -> "FrequencySpec":
        return cls.from_thetas(2.0 * math.pi / float(n) for n in periods)


def make_frequencies(base: float, d_prime: int) -> FrequencySpec:
    """Standard RoPE spectrum ``theta_j = base ** (-2 (j-1) / d_prime)``."""
    _check_d_prime(d_prime)
    if not (math.isfinite(base) and base > 0):
        raise InvalidBaseError(f"base must be positive, got {base!r}")
    base = float(base)
    thetas = [1.0] + [base ** (-2.0 * (j - 1) / d_prime) for j in range(2, d_prime // 2 + 1)]
    return FrequencySpec(d_prime=int(d_prime), thetas=tuple(thetas), base=base)


def _rotate_pairs(x: np.ndarray, angles: np.ndarray) -> np.ndarray:
    even = x[0::2]
    odd = x[1::2]
    c = np.cos(angles)
    s = np.sin(angles)
    out = np.empty_like(x)
    out[0::2] = c * even - s * odd
    out[1::2] = s * even + c * odd
    return out


def apply_rope(x: Sequence[float], p: int, spec: FrequencySpec) -> np.ndarray:
    """Rotate each feature pair of ``x`` by ``p * theta_j``.

    Angles are evaluated directly for every call, so the error does not grow
    with the number of positions visited.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != spec.d_prime:
        raise DimensionMismatchError(f"expected vector of length {spec.d_prime}, got shape {x.shape}")
    return _rotate_pairs(x, p * spec.array())


def rope_dot(x: Sequence[float], p: int, y: Sequence[float], q: int, spec: FrequencySpec) -> float:
    return float(np.dot(apply_rope(x, p, spec), apply_rope(y, q, spec)))


def positional_signature(p: int, spec: FrequencySpec) -> np.ndarray:
    """Embedding of the all-``(1, 0)`` query: pairs ``(cos p*theta_j, sin p*theta_j)``."""
    angles = p * spec.array()
    out = np.empty(spec.d_prime)
    out[0::2] = np.cos(angles)
    out[1::2] = np.sin(angles)
    return out


@dataclass(frozen=True)
class PositionVector:
    coords: tuple

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        if not 1 <= len(coords) <= 3:
            raise DimensionMismatchError(f"positions have 1 to 3 axes, got {len(coords)}")
        if any(c < 0 for c in coords):
            raise ValueError(f"positions must be non-negative, got {coords}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class AxisRope:
    axis_id: str
    spec: FrequencySpec
    train_len: int

    def __post_init__(self):
        if self.axis_id not in AXIS_IDS:
            raise UnknownAxisError(f"axis must be one of {AXIS_IDS}, got {self.axis_id!r}")
        if int(self.train_len) != self.train_len or self.train_len < 2:
            raise ValueError(f"train_len must be an integer >= 2, got {self.train_len!r}")


@dataclass(frozen=True)
class ModelRopeConfig:
    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        ids = [a.axis_id for a in axes]
        if not axes:
            raise ValueError("a model needs at least one axis")
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate axis ids: {ids}")
        object.__setattr__(self, "axes", axes)

    @property
    def axis_ids(self) -> tuple:
        return tuple(a.axis_id for a in self.axes)

    @property
    def total_dim(self) -> int:
        return sum(a.spec.d_prime for a in self.axes)

    def axis(self, axis_id: str) -> AxisRope:
        for a in self.axes:
            if a.axis_id == axis_id:
                return a
        raise UnknownAxisError(f"no axis {axis_id!r} in config (have {self.axis_ids})")

    def with_spec(self, axis_id: str, spec: FrequencySpec) -> "ModelRopeConfig":
        self.axis(axis_id)
        return ModelRopeConfig(
            tuple(AxisRope(a.axis_id, spec, a.train_len) if a.axis_id == axis_id else a for a in self.axes)
        )


def apply_rope_multi(x: Sequence[float], p, config: ModelRopeConfig) -> np.ndarray:
    """Encode each axis on its own contiguous slice of ``x``, in axis order."""
    if not isinstance(p, PositionVector):
        p = PositionVector(tuple(p))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != config.total_dim:
        raise DimensionMismatchError(f"expected vector of length {config.total_dim}, got shape {x.shape}")
    if len(p.coords) != len(config.axes):
        raise DimensionMismatchError(f"{len(config.axes)} axes but {len(p.coords)} coordinates")
    parts = []
    start = 0
    for axis, coord in zip(config.axes, p.coords):
        stop = start + axis.spec.d_prime
        parts.append(apply_rope(x[start:stop], coord, axis.spec))
        start = stop
    return np.concatenate(parts)
