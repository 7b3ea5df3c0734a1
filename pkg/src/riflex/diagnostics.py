"""Per-component periods, repeat counts and motion-rate envelopes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List

from .strategies import SpecLike, as_spec, _check_k

TWO_PI = 2.0 * math.pi


def period(theta: float) -> float:
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    return TWO_PI / theta


def repeat_count(theta: float, train_len: float) -> float:
    """Cycles component ``theta`` completes over ``train_len`` positions."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    if not train_len >= 1:
        raise ValueError(f"train_len must be >= 1, got {train_len!r}")
    return train_len * theta / TWO_PI


def adjacent_delta(theta: float, p: int) -> float:
    """Signed change of ``cos(p*theta)`` between positions ``p`` and ``p + 1``."""
    return math.cos((p + 1) * theta) - math.cos(p * theta)


def delta_envelope(theta: float) -> float:
    # max_p |cos((p+1)t) - cos(pt)| = 2 sin(t/2), saturating at 2 once t >= pi
    return 2.0 * math.sin(min(theta, math.pi) / 2.0)


@dataclass(frozen=True)
class DiagnosticsRow:
    j: int
    theta: float
    period: float
    repeat_count: float
    max_adjacent_delta: float

    def to_dict(self) -> dict:
        return asdict(self)


DIAGNOSTICS_COLUMNS = ("j", "theta", "period", "repeat_count", "max_adjacent_delta")


def diagnostics_table(spec: SpecLike, train_len: float) -> List[DiagnosticsRow]:
    spec = as_spec(spec)
    return [
        DiagnosticsRow(
            j=j,
            theta=t,
            period=period(t),
            repeat_count=repeat_count(t, train_len),
            max_adjacent_delta=delta_envelope(t),
        )
        for j, t in enumerate(spec.thetas, start=1)
    ]


@dataclass(frozen=True)
class IntrinsicResult:
    k: int
    observed_first_repetition: int
    matched_period: float
    gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def identify_intrinsic(spec: SpecLike, observed_n: int) -> IntrinsicResult:
    """Component whose period is closest to the first repeated frame ``observed_n``.

    Ties go to the smaller index (the higher frequency). Gaps that agree to
    within a few ulps of ``observed_n`` count as ties, since ``2*pi/theta``
    rarely reproduces an integer period exactly.
    """
    spec = as_spec(spec)
    if not observed_n >= 1:
        raise ValueError(f"observed_n must be >= 1, got {observed_n!r}")
    tol = 8 * math.ulp(float(observed_n))
    best_j, best_gap = 0, math.inf
    for j, t in enumerate(spec.thetas, start=1):
        gap = abs(period(t) - observed_n)
        if gap < best_gap - tol:
            best_j, best_gap = j, gap
    return IntrinsicResult(
        k=best_j,
        observed_first_repetition=int(observed_n),
        matched_period=period(spec.theta(best_j)),
        gap=best_gap,
    )


@dataclass(frozen=True)
class NonRepetitionCheck:
    satisfied: bool
    margin: float
    k: int
    theta_k: float
    bound: float

    def __bool__(self) -> bool:
        return self.satisfied

    def to_dict(self) -> dict:
        return asdict(self)


def check_non_repetition(spec: SpecLike, train_len: float, scale: float, k: int) -> NonRepetitionCheck:
    """True iff ``theta_k <= 2*pi / (L*s)``; equality counts as satisfied."""
    spec = as_spec(spec)
    _check_k(spec, k)
    bound = TWO_PI / (train_len * scale)
    theta_k = spec.theta(k)
    return NonRepetitionCheck(
        satisfied=theta_k <= bound, margin=bound - theta_k, k=k, theta_k=theta_k, bound=bound
    )


def motion_proxy(spec: SpecLike) -> float:
    """Mean over components of the adjacent-position delta envelope."""
    spec = as_spec(spec)
    return math.fsum(delta_envelope(t) for t in spec.thetas) / spec.n_components

