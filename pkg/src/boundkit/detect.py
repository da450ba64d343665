"""Turn score curves into boundary lists."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .datamodel import BoundaryList, DataError, ScoreCurve

# Detected times are kept this far inside (0, duration).
EDGE_EPS = 1e-6


@dataclass(frozen=True)
class DetectConfig:
    threshold: float = 0.5
    smooth_sd: float = 0.0
    refine: bool = True

    def __post_init__(self):
        if not (0 < self.threshold < 1):
            raise DataError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.smooth_sd < 0:
            raise DataError(f"smooth_sd must be >= 0, got {self.smooth_sd}")


def gaussian_kernel(sd: float, stride: float) -> np.ndarray:
    radius = math.ceil(3 * sd / stride)
    k = np.arange(-radius, radius + 1) * stride
    w = np.exp(-0.5 * (k / sd) ** 2)
    return w / w.sum()


def smooth(curve: ScoreCurve, sd: float) -> ScoreCurve:
    """Gaussian smoothing with reflected ends; ``sd`` is in seconds."""
    if sd < 0:
        raise DataError(f"smoothing sd must be >= 0, got {sd}")
    if sd == 0:
        return curve
    kernel = gaussian_kernel(sd, curve.stride)
    out = correlate1d(np.asarray(curve.scores), kernel, mode="reflect")
    out = np.clip(out, 0.0, 1.0)
    return ScoreCurve(curve.video, curve.stride, tuple(out.tolist()), curve.offset)


def runs_above(scores, threshold: float) -> list[tuple[int, int]]:
    """Maximal ``[start, stop)`` index runs with ``score >= threshold``."""
    runs = []
    start = None
    for i, s in enumerate(scores):
        if s >= threshold:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(scores)))
    return runs


def detect_boundaries(curve: ScoreCurve, config: DetectConfig = DetectConfig()) -> BoundaryList:
    """One boundary per above-threshold run.

    With ``refine`` the boundary sits at the score-weighted centroid of the
    run's timestamps; otherwise at the run's highest score (earliest on ties).
    Each boundary carries the run's peak score as its confidence.
    """
    if config.smooth_sd > 0:
        curve = smooth(curve, config.smooth_sd)
    scores = curve.scores
    duration = curve.video.duration
    times, confs = [], []
    for start, stop in runs_above(scores, config.threshold):
        seg = scores[start:stop]
        peak = max(seg)
        if config.refine:
            t = sum((curve.offset + i * curve.stride) * s for i, s in zip(range(start, stop), seg)) / sum(seg)
        else:
            t = curve.offset + (start + seg.index(peak)) * curve.stride
        t = min(max(t, EDGE_EPS), duration - EDGE_EPS)
        if times and t <= times[-1]:
            # only reachable when adjacent runs collapse onto the clamped edge
            if peak > confs[-1]:
                confs[-1] = peak
            continue
        times.append(t)
        confs.append(peak)
    return BoundaryList(curve.video, tuple(times), tuple(confs))


def flatness(curve: ScoreCurve) -> float:
    """Peak prominence ``max - mean``; 0 for a constant curve."""
    s = np.asarray(curve.scores)
    return float(s.max() - s.mean())
