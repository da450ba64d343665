"""Weighted-sum fusion of score curves from several models."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datamodel import DataError, ScoreCurve, TIME_EPS

WEIGHT_SUM_TOL = 1e-6


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple[tuple[str, float], ...]

    def __post_init__(self):
        members = tuple((str(src), float(w)) for src, w in self.members)
        if not members:
            raise DataError("ensemble needs at least one member")
        if any(w < 0 for _, w in members):
            raise DataError("ensemble weights must be nonnegative")
        total = sum(w for _, w in members)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise DataError(f"ensemble weights sum to {total!r}, expected 1")
        object.__setattr__(self, "members", members)

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.members]

    @property
    def sources(self) -> list[str]:
        return [src for src, _ in self.members]


def load_ensemble_spec(path) -> EnsembleSpec:
    """Parse ``WEIGHT PATH`` lines; relative paths resolve against the spec file.

    Blank lines and ``#`` comments are ignored.
    """
    base = Path(path).parent
    members = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        weight, _, src = line.partition(" ")
        try:
            w = float(weight)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: bad weight {weight!r}") from None
        src = src.strip()
        if not src:
            raise DataError(f"{path}: line {lineno}: missing member path")
        members.append((str(base / src), w))
    return EnsembleSpec(tuple(members))


def resample(curve: ScoreCurve, stride: float, offset: float, length: int) -> ScoreCurve:
    """Linear interpolation onto a new grid, holding end values beyond the source."""
    end = offset + (length - 1) * stride
    if offset < 0 or end > curve.video.duration + TIME_EPS:
        raise DataError(f"video {curve.video.id!r}: target grid outside [0, duration]")
    if stride == curve.stride and offset == curve.offset and length == len(curve):
        return curve
    src_t = curve.offset + curve.stride * np.arange(len(curve))
    dst_t = offset + stride * np.arange(length)
    out = np.clip(np.interp(dst_t, src_t, np.asarray(curve.scores)), 0.0, 1.0)
    return ScoreCurve(curve.video, stride, tuple(out.tolist()), offset)


def fuse(curves: Sequence[ScoreCurve], spec: EnsembleSpec) -> ScoreCurve:
    """Weighted sum of ``curves`` (one per spec member) on the first curve's grid."""
    if len(curves) != len(spec.members):
        raise DataError(f"got {len(curves)} curves for {len(spec.members)} ensemble members")
    first = curves[0]
    for c in curves[1:]:
        if c.video != first.video:
            raise DataError(f"cannot fuse curves of videos {first.video.id!r} and {c.video.id!r}")
    acc = np.zeros(len(first))
    for c, w in zip(curves, spec.weights):
        acc += w * np.asarray(resample(c, first.stride, first.offset, len(first)).scores)
    # weights sum to 1 only within tolerance, so clip the rounding excess
    acc = np.clip(acc, 0.0, 1.0)
    return ScoreCurve(first.video, first.stride, tuple(acc.tolist()), first.offset)
