"""Relative-distance F1 evaluation and per-group statistics.

A predicted boundary is a true positive when it can be paired one-to-one with
a ground-truth boundary at most ``rel_dis * duration`` seconds away.  With
several raters a video scores the best F1 over raters.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .align import classify_group, density_bucket
from .datamodel import (
    AnnotationSet,
    BoundaryList,
    DataError,
    DensityBucket,
    GroupKey,
    group_sort_key,
)

# Absolute slack on the distance test so decimal round-off (2.6 - 2.1) still matches.
MATCH_EPS = 1e-9
EQUAL_TOL = 1e-9


class Aggregation(enum.Enum):
    PER_VIDEO_MEAN = "PER_VIDEO_MEAN"
    MICRO = "MICRO"


@dataclass(frozen=True)
class EvalConfig:
    rel_dis: float = 0.05
    aggregation: Aggregation = Aggregation.PER_VIDEO_MEAN

    def __post_init__(self):
        if not (0 < self.rel_dis < 0.5):
            raise DataError(f"rel_dis must lie in (0, 0.5), got {self.rel_dis}")
        object.__setattr__(self, "aggregation", Aggregation(self.aggregation))


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple[tuple[float, float], ...] = ()

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_from_counts(self.tp, self.fp, self.fn)


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    """F1 with the empty conventions: nothing predicted and nothing to find is 1."""
    n_pred, n_gt = tp + fp, tp + fn
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if tp == 0:
        return 0.0
    p, r = tp / n_pred, tp / n_gt
    return 2 * p * r / (p + r)


def match_times(pred: Sequence[float], gt: Sequence[float], tol: float) -> MatchResult:
    """Maximum one-to-one matching of sorted time lists under ``|p - g| <= tol``.

    Both lists sorted makes the compatibility graph an interval graph in which
    a single sweep that pairs the earliest compatible (p, g) is optimal.
    """
    if tol < 0:
        raise DataError(f"tolerance must be >= 0, got {tol}")
    pairs = []
    i = j = 0
    while i < len(pred) and j < len(gt):
        p, g = pred[i], gt[j]
        if abs(p - g) <= tol + MATCH_EPS:
            pairs.append((p, g))
            i += 1
            j += 1
        elif p < g:
            i += 1
        else:
            j += 1
    tp = len(pairs)
    return MatchResult(tp, len(pred) - tp, len(gt) - tp, tuple(pairs))


def match(pred: BoundaryList, gt: BoundaryList, tol: float) -> MatchResult:
    return match_times(pred.times, gt.times, tol)


def _check_same(pred: BoundaryList, ann: AnnotationSet):
    if pred.video != ann.video:
        raise DataError(f"prediction for {pred.video.id!r} evaluated against {ann.video.id!r}")


def best_rater_match(pred: BoundaryList, ann: AnnotationSet, config: EvalConfig = EvalConfig()) -> MatchResult:
    """Match against every rater and keep the best F1 (first rater on ties)."""
    _check_same(pred, ann)
    tol = config.rel_dis * ann.video.duration
    best = None
    for rater in ann.raters:
        m = match(pred, rater, tol)
        if best is None or m.f1 > best.f1:
            best = m
    return best


def f1_video(pred: BoundaryList, ann: AnnotationSet, config: EvalConfig = EvalConfig()) -> float:
    return best_rater_match(pred, ann, config).f1


def _preds_for(preds: Mapping[str, BoundaryList], annotations: Iterable[AnnotationSet]):
    for ann in annotations:
        if ann.video.id not in preds:
            raise DataError(f"missing prediction for annotated video {ann.video.id!r}")
        yield preds[ann.video.id], ann


def f1_corpus(preds: Mapping[str, BoundaryList], annotations: Sequence[AnnotationSet],
              config: EvalConfig = EvalConfig()) -> float:
    """Corpus F1 under ``config.aggregation``; an empty corpus scores 0."""
    if not annotations:
        return 0.0
    if config.aggregation is Aggregation.PER_VIDEO_MEAN:
        scores = [f1_video(p, a, config) for p, a in _preds_for(preds, annotations)]
        return sum(scores) / len(scores)
    tp = fp = fn = 0
    for p, a in _preds_for(preds, annotations):
        m = best_rater_match(p, a, config)
        tp, fp, fn = tp + m.tp, fp + m.fp, fn + m.fn
    return f1_from_counts(tp, fp, fn)


def per_group_f1(preds: Mapping[str, BoundaryList], annotations: Sequence[AnnotationSet],
                 config: EvalConfig = EvalConfig(),
                 groups: Mapping[str, GroupKey] | None = None) -> dict[GroupKey, tuple[int, float]]:
    """``{group: (n_videos, f1)}``; videos are grouped by prediction count unless ``groups`` is given."""
    if groups is None:
        groups = {vid: classify_group(p.video.duration, len(p)) for vid, p in preds.items()}
    by_group: dict[GroupKey, list[AnnotationSet]] = defaultdict(list)
    for ann in annotations:
        by_group[groups[ann.video.id]].append(ann)
    return {k: (len(v), f1_corpus(preds, v, config)) for k, v in sorted(by_group.items(), key=lambda kv: group_sort_key(kv[0]))}


DENSITY_COLUMNS = ("no split", "0-0.55/s", "0.55-1/s", ">1/s")


def video_split_count(item: AnnotationSet | BoundaryList) -> float:
    """Boundary count of a prediction, or the mean count over raters."""
    if isinstance(item, AnnotationSet):
        return sum(len(r) for r in item.raters) / len(item.raters)
    return float(len(item))


def density_table(items: Sequence[AnnotationSet | BoundaryList]) -> list[float]:
    """Percent of videos per splits-per-second bucket, in ``DENSITY_COLUMNS`` order."""
    if not items:
        raise DataError("density table needs a non-empty corpus")
    counts = dict.fromkeys(DensityBucket, 0)
    for item in items:
        counts[density_bucket(video_split_count(item) / item.video.duration)] += 1
    return [100.0 * counts[b] / len(items) for b in DensityBucket]


@dataclass
class ChangeStats:
    n: int = 0
    improved: int = 0
    lowered: int = 0
    unchanged: int = 0

    def add(self, before: float, after: float):
        self.n += 1
        if after > before + EQUAL_TOL:
            self.improved += 1
        elif after < before - EQUAL_TOL:
            self.lowered += 1
        else:
            self.unchanged += 1

    def percent(self) -> dict[str, float]:
        if not self.n:
            return {"improved": 0.0, "lowered": 0.0, "unchanged": 0.0}
        return {k: 100.0 * getattr(self, k) / self.n for k in ("improved", "lowered", "unchanged")}


@dataclass
class StrategyComparison:
    overall: ChangeStats = field(default_factory=ChangeStats)
    groups: dict[GroupKey, ChangeStats] = field(default_factory=dict)


def compare_strategies(preds_a: Mapping[str, BoundaryList], preds_b: Mapping[str, BoundaryList],
                       annotations: Sequence[AnnotationSet], config: EvalConfig = EvalConfig(),
                       groups: Mapping[str, GroupKey] | None = None) -> StrategyComparison:
    """Share of videos whose F1 rises, falls or stays put going from ``a`` to ``b``.

    Groups come from the prediction counts in ``preds_a`` unless given.
    """
    if set(preds_a) != set(preds_b):
        raise DataError("strategies cover different videos")
    out = StrategyComparison()
    per_group: dict[GroupKey, ChangeStats] = defaultdict(ChangeStats)
    for ann in annotations:
        vid = ann.video.id
        if vid not in preds_a:
            raise DataError(f"missing prediction for annotated video {vid!r}")
        a, b = preds_a[vid], preds_b[vid]
        key = groups[vid] if groups is not None else classify_group(a.video.duration, len(a))
        fa, fb = f1_video(a, ann, config), f1_video(b, ann, config)
        out.overall.add(fa, fb)
        per_group[key].add(fa, fb)
    out.groups = dict(sorted(per_group.items(), key=lambda kv: group_sort_key(kv[0])))
    return out
