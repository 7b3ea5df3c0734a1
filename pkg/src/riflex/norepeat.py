"""NoRepeat score: does a generated video loop back to its opening frames?

Distances are raw L2 over all pixels and channels by default, so the
threshold of 100 depends on resolution and intensity scale (8-bit values
assumed). ``normalize="per-pixel-rms"`` divides by sqrt(H*W*C) instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import FrameDataError

DEFAULT_THRESHOLD = 100.0
NORMALIZE_MODES = ("none", "per-pixel-rms")


@dataclass(frozen=True)
class FrameSequence:
    """Decoded frames as one ``(T, H, W, C)`` float64 array."""

    frames: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[..., None]
        if arr.ndim != 4:
            raise FrameDataError(f"frames must be (T, H, W[, C]), got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise FrameDataError(f"need at least 2 frames, got {arr.shape[0]}")
        if not np.isfinite(arr).all():
            raise FrameDataError("pixel values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @classmethod
    def from_frames(cls, frames: Sequence[np.ndarray]) -> "FrameSequence":
        shapes = {np.shape(f) for f in frames}
        if len(shapes) > 1:
            raise FrameDataError(f"frames differ in shape: {sorted(shapes)}")
        return cls(np.stack([np.asarray(f, dtype=np.float64) for f in frames]))

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_size(self) -> int:
        return int(np.prod(self.frames.shape[1:]))


@dataclass(frozen=True)
class NoRepeatConfig:
    expected_period: int
    threshold: float = DEFAULT_THRESHOLD
    search_window: Optional[int] = None
    normalize: str = "none"

    def __post_init__(self):
        if int(self.expected_period) != self.expected_period or self.expected_period < 1:
            raise ValueError(f"expected_period must be a positive integer, got {self.expected_period!r}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold!r}")
        if self.search_window is None:
            object.__setattr__(self, "search_window", math.ceil(0.1 * self.expected_period))
        if self.search_window < 0:
            raise ValueError(f"search_window must be >= 0, got {self.search_window!r}")
        if self.normalize not in NORMALIZE_MODES:
            raise ValueError(f"normalize must be one of {NORMALIZE_MODES}, got {self.normalize!r}")


@dataclass(frozen=True)
class NoRepeatReport:
    anchor_index: int
    mean_distance: float
    is_nonrepetitive: bool
    per_frame_distances: tuple
    threshold: float

    def to_dict(self) -> dict:
        return {
            "anchor_index": self.anchor_index,
            "mean_distance": self.mean_distance,
            "is_nonrepetitive": self.is_nonrepetitive,
            "threshold": self.threshold,
            "per_frame_distances": list(self.per_frame_distances),
        }


def frame_l2(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise FrameDataError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def _distance(seq: FrameSequence, cfg: NoRepeatConfig, i: int, j: int) -> float:
    d = frame_l2(seq.frames[i], seq.frames[j])
    if cfg.normalize == "per-pixel-rms":
        d /= math.sqrt(seq.frame_size)
    return d


def anchor_window(n_frames: int, cfg: NoRepeatConfig) -> range:
    lo = max(cfg.expected_period - cfg.search_window, 1)
    hi = min(cfg.expected_period + cfg.search_window, n_frames - 1)
    return range(lo, hi + 1)


def find_anchor(seq: FrameSequence, cfg: NoRepeatConfig) -> int:
    """Frame near the expected period that is closest to the first frame."""
    window = anchor_window(len(seq), cfg)
    if len(window) == 0:
        raise FrameDataError(
            f"search window around {cfg.expected_period} (+/-{cfg.search_window}) "
            f"is empty for {len(seq)} frames"
        )
    dists = [frame_l2(seq.frames[t], seq.frames[0]) for t in window]
    return window[int(np.argmin(dists))]


def norepeat_score(seq: FrameSequence, cfg: NoRepeatConfig) -> NoRepeatReport:
    anchor = find_anchor(seq, cfg)
    dists = [_distance(seq, cfg, anchor + i, i) for i in range(len(seq) - anchor)]
    mean = math.fsum(dists) / len(dists)
    return NoRepeatReport(
        anchor_index=anchor,
        mean_distance=mean,
        is_nonrepetitive=mean > cfg.threshold,
        per_frame_distances=tuple(dists),
        threshold=cfg.threshold,
    )


def aggregate(reports: List[NoRepeatReport]) -> float:
    """Fraction of videos classified non-repetitive."""
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    return sum(r.is_nonrepetitive for r in reports) / len(reports)
