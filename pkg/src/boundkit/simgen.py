"""Deterministic synthetic corpora: boundaries, jittered raters and score curves.

Randomness comes from numpy's Philox4x64-10 counter-based generator.  Each
video ``i`` draws from its own stream keyed by ``(seed, i)``, so videos can be
generated in any order (or in parallel) and the corpus is still identical.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .datamodel import AnnotationSet, BoundaryList, DataError, ScoreCurve, VideoMeta, quantize

log = logging.getLogger(__name__)

# Mixture components, in order: uniform(2,4), uniform(4,8), uniform(8,10), point-mass(10).
DURATION_COMPONENTS = ((2.0, 4.0), (4.0, 8.0), (8.0, 10.0), (10.0, 10.0))
MIN_DURATION = 2.0
DEDUP_EPS = 1e-6


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_videos: int = 100
    duration_law: tuple[float, float, float, float] = (0.1, 0.2, 0.2, 0.5)
    boundary_rate: float = 0.6
    min_gap: float = 0.5
    margin: float = 0.3
    n_raters: int = 3
    rater_jitter_sd: float = 0.1
    bump_width: float = 0.15
    noise_sd: float = 0.05
    stride: float = 0.25
    id_prefix: str = "v"

    def __post_init__(self):
        law = tuple(float(w) for w in self.duration_law)
        object.__setattr__(self, "duration_law", law)
        if len(law) != 4 or any(w < 0 for w in law) or abs(sum(law) - 1.0) > 1e-9:
            raise DataError(f"duration_law must be 4 nonnegative weights summing to 1, got {law}")
        if not (0 <= self.seed < 2**64):
            raise DataError("seed must be an unsigned 64-bit integer")
        if self.n_videos <= 0 or self.n_raters <= 0:
            raise DataError("n_videos and n_raters must be positive")
        if self.boundary_rate < 0 or self.min_gap < 0 or self.rater_jitter_sd < 0:
            raise DataError("boundary_rate, min_gap and rater_jitter_sd must be >= 0")
        if self.margin < 0 or 2 * self.margin >= MIN_DURATION:
            raise DataError(f"margin must satisfy 0 <= 2*margin < {MIN_DURATION}")
        if self.bump_width <= 0 or self.stride <= 0:
            raise DataError("bump_width and stride must be > 0")
        if not (0 <= self.noise_sd <= 1):
            raise DataError("noise_sd must lie in [0, 1]")


@dataclass
class SimCorpus:
    curves: list[ScoreCurve]
    annotations: list[AnnotationSet]
    # Videos whose target boundary count could not be placed under min_gap.
    truncated: int = 0
    truncated_ids: list[str] = field(default_factory=list)


def video_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _capacity(span: float, min_gap: float) -> int | None:
    if min_gap <= 0:
        return None
    return int(math.floor(span / min_gap + 1e-9)) + 1


def clamp_quantized(t: float, lo: float, hi: float) -> float:
    """Clamp into ``[lo, hi]`` and round to 6 decimals without leaving the interval."""
    q = quantize(min(max(t, lo), hi))
    if q > hi:
        q = quantize(q - 1e-6)
    elif q < lo:
        q = quantize(q + 1e-6)
    return q


def place_boundaries(rng: np.random.Generator, duration: float, rate: float, margin: float,
                     min_gap: float) -> tuple[list[float], bool]:
    """Renewal-style placement of canonical boundaries.

    Draws a Poisson target count, then uniform candidates in the margin-limited
    span, accepting those at least ``min_gap`` from every accepted time.
    Returns ``(sorted times, truncated)``.
    """
    lo, hi = margin, duration - margin
    target = int(rng.poisson(rate * duration)) if rate > 0 else 0
    truncated = False
    cap = _capacity(hi - lo, min_gap)
    if cap is not None and target > cap:
        target, truncated = cap, True
    accepted: list[float] = []
    attempts = 0
    max_attempts = 200 * (target + 1)
    while len(accepted) < target and attempts < max_attempts:
        attempts += 1
        t = clamp_quantized(rng.uniform(lo, hi), lo, hi)
        if all(abs(t - a) >= min_gap for a in accepted) and t not in accepted:
            accepted.append(t)
    if len(accepted) < target:
        truncated = True
    return sorted(accepted), truncated


def jitter_rater(rng: np.random.Generator, canonical: list[float], sd: float, lo: float, hi: float) -> list[float]:
    times = [clamp_quantized(t + rng.normal(0.0, sd), lo, hi) for t in canonical] if sd > 0 else list(canonical)
    out: list[float] = []
    for t in sorted(times):
        if out and t - out[-1] < DEDUP_EPS:
            continue
        out.append(t)
    return out


def score_curve(rng: np.random.Generator, video: VideoMeta, boundaries: list[float], stride: float,
                bump_width: float, noise_sd: float) -> ScoreCurve:
    offset = stride / 2
    n = int(math.floor((video.duration - offset) / stride + 1e-9)) + 1
    t = offset + stride * np.arange(n)
    s = np.zeros(n)
    for b in boundaries:
        s += np.exp(-0.5 * ((t - b) / bump_width) ** 2)
    if noise_sd > 0:
        s += rng.normal(0.0, noise_sd, size=n)
    s = np.clip(s, 0.0, 1.0)
    return ScoreCurve(video, stride, tuple(quantize(x) for x in s), offset)


def generate_video(config: SimConfig, index: int) -> tuple[ScoreCurve, AnnotationSet, bool]:
    rng = video_rng(config.seed, index)
    comp = int(rng.choice(4, p=np.asarray(config.duration_law)))
    a, b = DURATION_COMPONENTS[comp]
    duration = quantize(a if a == b else rng.uniform(a, b))
    video = VideoMeta(f"{config.id_prefix}{index:06d}", duration)
    lo, hi = config.margin, duration - config.margin
    canonical, truncated = place_boundaries(rng, duration, config.boundary_rate, config.margin, config.min_gap)
    raters = [canonical]
    for _ in range(1, config.n_raters):
        raters.append(jitter_rater(rng, canonical, config.rater_jitter_sd, lo, hi))
    ann = AnnotationSet(video, tuple(BoundaryList(video, tuple(r)) for r in raters))
    curve = score_curve(rng, video, canonical, config.stride, config.bump_width, config.noise_sd)
    return curve, ann, truncated


def generate_corpus(config: SimConfig) -> SimCorpus:
    corpus = SimCorpus([], [])
    for i in range(config.n_videos):
        curve, ann, truncated = generate_video(config, i)
        corpus.curves.append(curve)
        corpus.annotations.append(ann)
        if truncated:
            corpus.truncated += 1
            corpus.truncated_ids.append(curve.video.id)
    if corpus.truncated:
        log.warning("%d of %d videos truncated: boundary target exceeded min_gap capacity",
                    corpus.truncated, config.n_videos)
    return corpus


def generate(config: SimConfig) -> tuple[list[ScoreCurve], list[AnnotationSet]]:
    corpus = generate_corpus(config)
    return corpus.curves, corpus.annotations
