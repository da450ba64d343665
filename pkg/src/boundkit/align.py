"""Group taxonomy and segmentation alignment.

Alignment moves and drops predicted boundaries so that

* none lies within ``margin`` seconds of either end of the video, and
* consecutive boundaries are at least ``gap`` seconds apart.

The static strategy uses ``gap = gap_factor * duration`` for every video.  The
dynamic strategy picks the gap per video from its duration/density group and
its prediction count, relaxing it for crowded videos so fewer boundaries get
discarded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .datamodel import (
    BoundaryList,
    CountBucket,
    DataError,
    DensityBucket,
    DurationBucket,
    GroupKey,
)

# Videos at least this long count as "about 10 seconds".
ABOUT_10_MIN = 9.9
DENSITY_LOW_MAX = 0.55
DENSITY_MID_MAX = 1.0
# Tolerance for feasibility tests; keeps feasible lists bit-identical.
FEAS_EPS = 1e-9


@dataclass(frozen=True)
class AlignConfig:
    margin: float = 0.3
    gap_factor: float = 0.10
    dense_gap_floor_factor: float = 0.05
    per_group_gap: Mapping[GroupKey, float] = field(default_factory=dict)
    dense_trigger: int = 10

    def __post_init__(self):
        if self.margin < 0:
            raise DataError(f"margin must be >= 0, got {self.margin}")
        if not (0 <= self.dense_gap_floor_factor <= self.gap_factor <= 1):
            raise DataError("need 0 <= dense_gap_floor_factor <= gap_factor <= 1")
        for key, g in self.per_group_gap.items():
            if not (0 <= g <= 1):
                raise DataError(f"gap factor for {key} must lie in [0, 1], got {g}")

    def __hash__(self):
        return hash((self.margin, self.gap_factor, self.dense_gap_floor_factor,
                     tuple(sorted((k.label, v) for k, v in self.per_group_gap.items())), self.dense_trigger))


def classify_group(duration: float, boundary_count: int) -> GroupKey:
    if duration <= 0:
        raise DataError(f"duration must be > 0, got {duration}")
    if duration >= ABOUT_10_MIN:
        return GroupKey(DurationBucket.ABOUT_10, count_bucket=CountBucket.from_count(boundary_count))
    if duration < 4:
        dur = DurationBucket.D0_4
    elif duration < 8:
        dur = DurationBucket.D4_8
    else:
        dur = DurationBucket.D8_10
    return GroupKey(dur, density_bucket=density_bucket(boundary_count / duration))


def density_bucket(per_sec: float) -> DensityBucket:
    if per_sec <= 0:
        return DensityBucket.NONE
    if per_sec <= DENSITY_LOW_MAX:
        return DensityBucket.PER_SEC_0_055
    if per_sec <= DENSITY_MID_MAX:
        return DensityBucket.PER_SEC_055_1
    return DensityBucket.PER_SEC_GT_1


def _bounds(duration: float, margin: float) -> tuple[float, float]:
    m = min(margin, duration / 2)
    return m, duration - m


def capacity(duration: float, margin: float, gap: float) -> int | None:
    """Most boundaries that fit in the margin-limited span at spacing ``gap``."""
    if gap <= 0:
        return None
    lo, hi = _bounds(duration, margin)
    return int(math.floor((hi - lo) / gap + FEAS_EPS)) + 1


def _drop_to(times: list[float], scores: list[float], keep: int) -> tuple[list[float], list[float]]:
    # lowest score goes first; among equal scores the latest time goes first
    order = sorted(range(len(times)), key=lambda i: (scores[i], -i))
    dropped = set(order[: len(times) - keep])
    idx = [i for i in range(len(times)) if i not in dropped]
    return [times[i] for i in idx], [scores[i] for i in idx]


def align_with_gap(pred: BoundaryList, gap: float, margin: float) -> BoundaryList:
    """Clamp, capacity-drop and chain-push ``pred`` to spacing ``gap``.

    Pass order: clamp into ``[margin, duration - margin]``, drop the
    lowest-scored boundaries if more than fit, push forward so every gap is at
    least ``gap``, then push back from the right end if the chain overran it.
    """
    if gap < 0:
        raise DataError(f"gap must be >= 0, got {gap}")
    duration = pred.video.duration
    lo, hi = _bounds(duration, margin)
    times = [min(max(t, lo), hi) for t in pred.times]
    scores = pred.score_list()

    if gap == 0:
        # clamping may have stacked boundaries on an edge; keep the stronger one
        out_t, out_s = [], []
        for t, s in zip(times, scores):
            if out_t and t <= out_t[-1]:
                out_s[-1] = max(out_s[-1], s)
                continue
            out_t.append(t)
            out_s.append(s)
        return _rebuild(pred, out_t, out_s)

    cap = capacity(duration, margin, gap)
    if len(times) > cap:
        times, scores = _drop_to(times, scores, cap)

    for i in range(1, len(times)):
        if times[i] < times[i - 1] + gap - FEAS_EPS:
            times[i] = times[i - 1] + gap
    if times and times[-1] > hi:
        times[-1] = hi
        for i in range(len(times) - 2, -1, -1):
            if times[i] > times[i + 1] - gap + FEAS_EPS:
                times[i] = times[i + 1] - gap
        # capacity guarantees the first boundary is back inside up to rounding
        if times[0] < lo:
            times[0] = lo
    return _rebuild(pred, times, scores)


def _rebuild(pred: BoundaryList, times: list[float], scores: list[float]) -> BoundaryList:
    return BoundaryList(pred.video, tuple(times), tuple(scores) if pred.scores is not None else None)


def static_gap(duration: float, config: AlignConfig) -> float:
    return config.gap_factor * duration


def align_static(pred: BoundaryList, config: AlignConfig = AlignConfig()) -> BoundaryList:
    return align_with_gap(pred, static_gap(pred.video.duration, config), config.margin)


def effective_gap(duration: float, count: int, config: AlignConfig) -> float:
    """Spacing the dynamic strategy uses for a video with ``count`` predictions."""
    key = classify_group(duration, count)
    if key in config.per_group_gap:
        return config.per_group_gap[key] * duration
    default = config.gap_factor * duration
    if count > config.dense_trigger:
        lo, hi = _bounds(duration, config.margin)
        fit = (hi - lo) / (count - 1)
        return max(config.dense_gap_floor_factor * duration, min(default, fit))
    return default


def dynamic_count(duration: float, count: int, config: AlignConfig) -> int:
    """Number of boundaries the dynamic strategy keeps out of ``count``.

    Dropping boundaries changes the count and therefore possibly the gap, so
    the count is iterated to a fixed point (it only ever decreases).
    """
    while True:
        cap = capacity(duration, config.margin, effective_gap(duration, count, config))
        if cap is None or cap >= count:
            return count
        count = cap


def align_dynamic(pred: BoundaryList, config: AlignConfig = AlignConfig()) -> BoundaryList:
    """Align with a gap chosen from the video's group and prediction count.

    The surviving count is settled first, the lowest-scored extras are
    dropped, and the survivors are aligned once at the gap for that count.
    Re-aligning the result therefore changes nothing.
    """
    duration = pred.video.duration
    keep = dynamic_count(duration, len(pred), config)
    if keep < len(pred):
        times, scores = _drop_to(list(pred.times), pred.score_list(), keep)
        pred = _rebuild(pred, times, scores)
    return align_with_gap(pred, effective_gap(duration, keep, config), config.margin)


def load_group_table(path) -> dict[GroupKey, dict[str, float]]:
    """Read a per-group table.

    One group per line: ``LABEL key=value [key=value ...]`` where LABEL is a
    group label such as ``ABOUT_10/C10_PLUS`` or ``D4_8/PER_SEC_0_055``.  The
    short form ``LABEL = value`` sets ``gap_factor``.  ``#`` starts a comment.
    """
    table: dict[GroupKey, dict[str, float]] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = " ".join(raw.split("#", 1)[0].split())
        if not line:
            continue
        label, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            entry: dict[str, float] = {}
            if rest.startswith("="):
                entry["gap_factor"] = float(rest[1:])
            else:
                for tok in rest.split():
                    k, v = tok.split("=", 1)
                    if k not in ("gap_factor", "threshold"):
                        raise ValueError(f"unknown key {k!r}")
                    entry[k] = float(v)
            key = GroupKey.from_label(label)
        except (ValueError, DataError) as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
        table[key] = entry
    return table


def gap_overrides(table: Mapping[GroupKey, Mapping[str, float]]) -> dict[GroupKey, float]:
    return {k: v["gap_factor"] for k, v in table.items() if "gap_factor" in v}
