"""Encoding-level aliasing: when do two positions get (nearly) the same signature?

This is a proxy for content repetition in a generator, measured only on the
positional encodings themselves. No model is involved.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .diagnostics import check_non_repetition, motion_proxy, NonRepetitionCheck
from .errors import IndexRangeError, NoRepetitionFoundError
from .rope import ModelRopeConfig
from .strategies import SpecLike, StrategyCall, as_spec

DEFAULT_ALIAS_THRESHOLD = 0.999
_ROW_BLOCK = 256


@dataclass(frozen=True)
class AliasScanParams:
    alias_threshold: float = DEFAULT_ALIAS_THRESHOLD
    min_separation: int = 1
    component_subset: Optional[frozenset] = None

    def __post_init__(self):
        if not 0 < self.alias_threshold <= 1:
            raise ValueError(f"alias_threshold must lie in (0, 1], got {self.alias_threshold!r}")
        if int(self.min_separation) != self.min_separation or self.min_separation < 1:
            raise ValueError(f"min_separation must be a positive integer, got {self.min_separation!r}")
        if self.component_subset is not None:
            object.__setattr__(self, "component_subset", frozenset(int(j) for j in self.component_subset))

    @classmethod
    def for_train_len(cls, train_len: int, **kw) -> "AliasScanParams":
        """Defaults tied to a training length: ``min_separation = ceil(L/4)``."""
        kw.setdefault("min_separation", math.ceil(train_len / 4))
        return cls(**kw)


@dataclass(frozen=True)
class Alias:
    p: int
    p_prime: int
    similarity: float

    def to_dict(self) -> dict:
        return {"p": self.p, "p_prime": self.p_prime, "similarity": self.similarity}


def _resolve_subset(n_components: int, subset) -> np.ndarray:
    if subset is None:
        return np.arange(n_components)
    idx = sorted(set(int(j) for j in subset))
    if not idx:
        raise IndexRangeError("component subset is empty")
    if idx[0] < 1 or idx[-1] > n_components:
        raise IndexRangeError(f"component indices must lie in [1, {n_components}], got {idx}")
    return np.asarray(idx) - 1


def signature_matrix(spec: SpecLike, positions: int, subset: Optional[Iterable[int]] = None, threads: int = 1) -> np.ndarray:
    """Cosine similarity of positional signatures for positions ``0 .. P-1``.

    Each entry is accumulated over components in a fixed order, so the
    result is identical for any ``threads`` value and exactly symmetric.
    """
    spec = as_spec(spec)
    if positions < 1:
        raise ValueError(f"need at least one position, got {positions}")
    thetas = spec.array()[_resolve_subset(spec.n_components, subset)]
    p = np.arange(positions, dtype=np.float64)
    angles = p[:, None] * thetas[None, :]
    cos, sin = np.cos(angles), np.sin(angles)
    sq = np.zeros(positions)
    for j in range(thetas.size):
        sq += cos[:, j] * cos[:, j] + sin[:, j] * sin[:, j]
    norms = np.sqrt(sq)
    out = np.empty((positions, positions))

    def fill(start: int) -> None:
        stop = min(start + _ROW_BLOCK, positions)
        acc = np.zeros((stop - start, positions))
        for j in range(thetas.size):
            acc += cos[start:stop, j, None] * cos[None, :, j] + sin[start:stop, j, None] * sin[None, :, j]
        out[start:stop] = acc / (norms[start:stop, None] * norms[None, :])

    starts = range(0, positions, _ROW_BLOCK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    return out


def scan_first_alias(matrix: np.ndarray, params: AliasScanParams) -> Optional[Alias]:
    """Smallest ``p`` with some ``p' <= p - min_separation`` at or above threshold.

    The partner returned is the most similar one (earliest on ties).
    """
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    sep = params.min_separation
    if n <= sep:
        return None
    rows = np.arange(n)[:, None]
    cols = np.arange(n)[None, :]
    eligible = cols <= rows - sep
    hits = (matrix >= params.alias_threshold) & eligible
    hit_rows = np.flatnonzero(hits.any(axis=1))
    if hit_rows.size == 0:
        return None
    p = int(hit_rows[0])
    candidates = matrix[p, : p - sep + 1]
    p_prime = int(np.argmax(candidates))
    return Alias(p=p, p_prime=p_prime, similarity=float(candidates[p_prime]))


def propose_observed_n(spec: SpecLike, probe_len: int, params: Optional[AliasScanParams] = None, threads: int = 1) -> int:
    """Estimate the first repeated position from the full-spectrum signatures."""
    if probe_len < 4:
        raise ValueError(f"probe length must be >= 4, got {probe_len}")
    params = params or AliasScanParams.for_train_len(probe_len)
    alias = scan_first_alias(signature_matrix(spec, probe_len, params.component_subset, threads), params)
    if alias is None:
        raise NoRepetitionFoundError(f"no aliased pair within {probe_len} positions")
    return alias.p


@dataclass
class SimilarityReport:
    strategy_name: str
    axis: str
    positions: int
    thetas: tuple
    modified_indices: tuple
    alias_threshold: float
    min_separation: int
    first_alias: Optional[Alias]
    motion_proxy: float
    baseline_motion_proxy: float
    intrinsic_k: Optional[int] = None
    intrinsic_alias: Optional[Alias] = None
    non_repetition: Optional[NonRepetitionCheck] = None
    subset_alias: Optional[Alias] = None
    component_subset: Optional[tuple] = None
    matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self, include_matrix: bool = False) -> dict:
        d = {
            "strategy_name": self.strategy_name,
            "axis": self.axis,
            "positions": self.positions,
            "thetas": list(self.thetas),
            "modified_indices": list(self.modified_indices),
            "alias_threshold": self.alias_threshold,
            "min_separation": self.min_separation,
            "first_alias": self.first_alias.to_dict() if self.first_alias else None,
            "motion_proxy": self.motion_proxy,
            "baseline_motion_proxy": self.baseline_motion_proxy,
            "intrinsic_k": self.intrinsic_k,
            "intrinsic_alias": self.intrinsic_alias.to_dict() if self.intrinsic_alias else None,
            "non_repetition": self.non_repetition.to_dict() if self.non_repetition else None,
            "component_subset": list(self.component_subset) if self.component_subset else None,
            "subset_alias": self.subset_alias.to_dict() if self.subset_alias else None,
        }
        if include_matrix and self.matrix is not None:
            d["matrix"] = self.matrix.tolist()
        return d


def strategy_report(
    config: ModelRopeConfig,
    axis: str,
    call: StrategyCall,
    positions: Optional[int] = None,
    params: Optional[AliasScanParams] = None,
    intrinsic_k: Optional[int] = None,
    threads: int = 1,
) -> SimilarityReport:
    """Apply ``call`` to one axis and measure aliasing and motion on the result.

    The full spectrum is always scanned; the intrinsic component (when given)
    and an explicit component subset (when set in ``params``) get their own
    scans because slow components can saturate the full-spectrum similarity.
    """
    ax = config.axis(axis)
    params = params or AliasScanParams.for_train_len(ax.train_len)
    positions = positions or call.params.target_len
    result = call.run(ax.spec)
    matrix = signature_matrix(result, positions, threads=threads)
    report = SimilarityReport(
        strategy_name=result.strategy_name,
        axis=axis,
        positions=positions,
        thetas=result.thetas_new,
        modified_indices=tuple(sorted(result.modified_indices)),
        alias_threshold=params.alias_threshold,
        min_separation=params.min_separation,
        first_alias=scan_first_alias(matrix, params),
        motion_proxy=motion_proxy(result),
        baseline_motion_proxy=motion_proxy(ax.spec),
        matrix=matrix,
    )
    if intrinsic_k is not None:
        sub = signature_matrix(result, positions, subset=[intrinsic_k], threads=threads)
        report.intrinsic_k = intrinsic_k
        report.intrinsic_alias = scan_first_alias(sub, params)
        report.non_repetition = check_non_repetition(result, ax.train_len, call.params.scale, intrinsic_k)
    if params.component_subset:
        sub = signature_matrix(result, positions, subset=params.component_subset, threads=threads)
        report.component_subset = tuple(sorted(params.component_subset))
        report.subset_alias = scan_first_alias(sub, params)
    return report


def compare_reports(a: SimilarityReport, b: SimilarityReport) -> dict:
    """Side-by-side summary of two reports on the same axis."""

    def alias_p(x):
        return x.p if x is not None else None

    return {
        "strategies": [a.strategy_name, b.strategy_name],
        "first_alias_p": [alias_p(a.first_alias), alias_p(b.first_alias)],
        "intrinsic_alias_p": [alias_p(a.intrinsic_alias), alias_p(b.intrinsic_alias)],
        "motion_proxy": [a.motion_proxy, b.motion_proxy],
        "motion_proxy_delta": b.motion_proxy - a.motion_proxy,
        "changed_components": sorted(
            j for j, (x, y) in enumerate(zip(a.thetas, b.thetas), start=1) if x != y
        ),
    }
