"""End-to-end orchestration: predict, pseudo-label, easy/hard split, tuning, reports."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from . import align as al
from .datamodel import (
    AnnotationSet,
    BoundaryList,
    BoundkitError,
    DataError,
    GroupKey,
    ScoreCurve,
    all_group_keys,
    group_sort_key,
    load_corpus,
    load_predictions,
    video_index,
)
from .detect import DetectConfig, detect_boundaries, flatness
from .evaluation import (
    Aggregation,
    DENSITY_COLUMNS,
    EvalConfig,
    compare_strategies,
    density_table,
    f1_corpus,
    per_group_f1,
)
from .fuse import EnsembleSpec, fuse, load_ensemble_spec

log = logging.getLogger(__name__)

ALIGN_MODES = ("none", "static", "dynamic")
PSEUDO = "pseudo"


@dataclass(frozen=True)
class PipelineConfig:
    detect: DetectConfig = field(default_factory=DetectConfig)
    align: al.AlignConfig = field(default_factory=al.AlignConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    align_mode: str = "dynamic"
    hard_threshold: float = 0.2
    grid_thresholds: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7)
    grid_gap_factors: tuple[float, ...] = (0.05, 0.075, 0.1)

    def __post_init__(self):
        if self.align_mode not in ALIGN_MODES:
            raise DataError(f"align_mode must be one of {ALIGN_MODES}, got {self.align_mode!r}")


class StageError(BoundkitError):
    """A pipeline stage failed; the message is prefixed with the stage name."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


def align_boundaries(pred: BoundaryList, config: PipelineConfig, mode: str | None = None) -> BoundaryList:
    mode = config.align_mode if mode is None else mode
    if mode == "static":
        return al.align_static(pred, config.align)
    if mode == "dynamic":
        return al.align_dynamic(pred, config.align)
    if mode == "none":
        return pred
    raise DataError(f"unknown align mode {mode!r}")


def predict(curves: Iterable[ScoreCurve], config: PipelineConfig, mode: str | None = None) -> dict[str, BoundaryList]:
    return {c.video.id: align_boundaries(detect_boundaries(c, config.detect), config, mode) for c in curves}


def pseudo_label(curves: Sequence[ScoreCurve], config: PipelineConfig = PipelineConfig()) -> list[AnnotationSet]:
    """Label unlabeled curves with the detector plus dynamic alignment.

    Every curve yields one single-rater annotation (possibly empty) tagged
    with provenance ``"pseudo"``.
    """
    out = []
    for c in curves:
        b = al.align_dynamic(detect_boundaries(c, config.detect), config.align)
        out.append(AnnotationSet(c.video, (BoundaryList(c.video, b.times),), PSEUDO))
    return out


def select_provenance(annotations: Iterable[AnnotationSet], include: Iterable[str]) -> list[AnnotationSet]:
    keep = set(include)
    return [a for a in annotations if a.provenance in keep]


def split_easy_hard(curves: Iterable[ScoreCurve], hard_threshold: float) -> tuple[list[str], list[str]]:
    """Flat curves (``flatness < hard_threshold``) are hard, the rest easy."""
    easy, hard = [], []
    for c in curves:
        (hard if flatness(c) < hard_threshold else easy).append(c.video.id)
    return easy, hard


# ---------------------------------------------------------------------------
# Per-group tuning


@dataclass(frozen=True)
class TuneEntry:
    threshold: float
    gap_factor: float
    n_videos: int
    f1_before: float
    f1_after: float

    @property
    def delta(self) -> float:
        return self.f1_after - self.f1_before


def baseline_groups(curves: Iterable[ScoreCurve], config: PipelineConfig) -> dict[str, GroupKey]:
    """Group each video by its duration and raw detection count at the base threshold."""
    return {c.video.id: al.classify_group(c.video.duration, len(detect_boundaries(c, config.detect)))
            for c in curves}


def predict_with(curve: ScoreCurve, threshold: float, gap_factor: float, config: PipelineConfig) -> BoundaryList:
    """Detect at ``threshold`` then align at spacing ``gap_factor * duration``."""
    pred = detect_boundaries(curve, replace(config.detect, threshold=threshold))
    return al.align_with_gap(pred, gap_factor * curve.video.duration, config.align.margin)


def tune_per_group(curves: Sequence[ScoreCurve], annotations: Sequence[AnnotationSet],
                   config: PipelineConfig = PipelineConfig()) -> dict[GroupKey, TuneEntry]:
    """Grid-search a (threshold, gap factor) pair per populated group.

    Each group keeps the grid point with the highest group F1; ties go to the
    smaller threshold, then the larger gap factor.  Unpopulated groups are
    left out (with a warning).
    """
    thresholds = sorted(set(config.grid_thresholds))
    gaps = sorted(set(config.grid_gap_factors), reverse=True)
    if not thresholds or not gaps:
        raise DataError("tuning grid must be non-empty")
    groups = baseline_groups(curves, config)
    anns = {a.video.id: a for a in annotations}
    missing = [c.video.id for c in curves if c.video.id not in anns]
    if missing:
        raise DataError(f"no ground truth for videos {missing[:5]}")
    members: dict[GroupKey, list[ScoreCurve]] = {}
    for c in curves:
        members.setdefault(groups[c.video.id], []).append(c)
    empty = [k.label for k in all_group_keys() if k not in members]
    if empty:
        log.warning("no validation videos in %d groups, left untuned: %s", len(empty), ", ".join(empty))

    base = predict(curves, config)
    out: dict[GroupKey, TuneEntry] = {}
    for key in sorted(members, key=group_sort_key):
        group_curves = members[key]
        group_anns = [anns[c.video.id] for c in group_curves]
        before = f1_corpus(base, group_anns, config.eval)
        best = None
        for thr in thresholds:
            for gap in gaps:
                preds = {c.video.id: predict_with(c, thr, gap, config) for c in group_curves}
                score = f1_corpus(preds, group_anns, config.eval)
                if best is None or score > best[0]:
                    best = (score, thr, gap)
        score, thr, gap = best
        out[key] = TuneEntry(thr, gap, len(group_curves), before, score)
    return out


def apply_tuned(curves: Iterable[ScoreCurve], table: Mapping[GroupKey, TuneEntry],
                config: PipelineConfig) -> dict[str, BoundaryList]:
    """Predict with each video's group settings; untuned groups use the base pipeline."""
    curves = list(curves)
    groups = baseline_groups(curves, config)
    out = {}
    for c in curves:
        entry = table.get(groups[c.video.id])
        if entry is None:
            out[c.video.id] = align_boundaries(detect_boundaries(c, config.detect), config)
        else:
            out[c.video.id] = predict_with(c, entry.threshold, entry.gap_factor, config)
    return out


def format_tune_table(table: Mapping[GroupKey, TuneEntry]) -> str:
    lines = ["# group threshold gap_factor (n_videos f1_before -> f1_after)"]
    for key, e in table.items():
        lines.append(f"{key.label} threshold={e.threshold:.6f} gap_factor={e.gap_factor:.6f}"
                     f"  # n={e.n_videos} f1 {e.f1_before:.6f} -> {e.f1_after:.6f} ({e.delta:+.6f})")
    return "\n".join(lines) + "\n"


def table_from_file(path) -> dict[GroupKey, TuneEntry]:
    """Read a group table written by :func:`format_tune_table` (or by hand)."""
    out = {}
    for key, entry in al.load_group_table(path).items():
        if "threshold" not in entry or "gap_factor" not in entry:
            raise DataError(f"{path}: group {key.label} needs both threshold and gap_factor")
        out[key] = TuneEntry(entry["threshold"], entry["gap_factor"], 0, float("nan"), float("nan"))
    return out


# ---------------------------------------------------------------------------
# Reports


@dataclass
class Report:
    config: PipelineConfig
    n_videos: int
    f1: dict[str, float]
    groups: dict[GroupKey, tuple[int, float]]
    density: dict[str, list[float]]
    comparisons: dict[str, object]
    strata: dict[str, tuple[int, float]]

    def records(self) -> list[dict]:
        recs: list[dict] = [{"kind": "summary", "n_videos": self.n_videos, "align_mode": self.config.align_mode,
                             "aggregation": self.config.eval.aggregation.value, **self.f1}]
        for key, (n, f1) in self.groups.items():
            recs.append({"kind": "group_f1", "group": key.label, "n_videos": n, "f1": f1})
        for name, row in self.density.items():
            recs.append({"kind": "density", "source": name, **dict(zip(DENSITY_COLUMNS, row))})
        for name, comp in self.comparisons.items():
            recs.append({"kind": "comparison", "name": name, "group": "overall", "n_videos": comp.overall.n,
                         **comp.overall.percent()})
            for key, st in comp.groups.items():
                recs.append({"kind": "comparison", "name": name, "group": key.label, "n_videos": st.n,
                             **st.percent()})
        for name, (n, f1) in self.strata.items():
            recs.append({"kind": "stratum", "name": name, "n_videos": n, "f1": f1})
        return recs

    def text(self) -> str:
        lines = [f"videos: {self.n_videos}  align: {self.config.align_mode}  "
                 f"aggregation: {self.config.eval.aggregation.value}  rel_dis: {self.config.eval.rel_dis:g}"]
        for name, value in self.f1.items():
            lines.append(f"{name:<16} {value:.6f}")
        lines.append("")
        lines.append(f"{'group':<24} {'videos':>7} {'f1':>9}")
        for key, (n, f1) in self.groups.items():
            lines.append(f"{key.label:<24} {n:>7d} {f1:>9.6f}")
        lines.append("")
        lines.append(f"{'density':<14}" + "".join(f"{c:>11}" for c in DENSITY_COLUMNS))
        for name, row in self.density.items():
            lines.append(f"{name:<14}" + "".join(f"{v:>10.2f}%" for v in row))
        for name, comp in self.comparisons.items():
            lines.append("")
            lines.append(f"{name}: {'videos':>7} {'improved':>9} {'lowered':>9} {'unchanged':>10}")
            rows = [("overall", comp.overall)] + [(k.label, st) for k, st in comp.groups.items()]
            for label, st in rows:
                p = st.percent()
                lines.append(f"  {label:<22} {st.n:>7d} {p['improved']:>8.2f}% {p['lowered']:>8.2f}% "
                             f"{p['unchanged']:>9.2f}%")
        if self.strata:
            lines.append("")
            for name, (n, f1) in self.strata.items():
                lines.append(f"{name:<16} {n:>7d} {f1:>9.6f}")
        return "\n".join(lines) + "\n"


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except BoundkitError as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc) from exc
    except OSError as exc:
        raise StageError(name, exc) from exc


def load_fused_curves(spec: EnsembleSpec) -> list[ScoreCurve]:
    """Fuse member score files video by video, in the first member's order."""
    members = []
    for src in spec.sources:
        curves, _ = load_corpus(src)
        members.append({c.video.id: c for c in curves})
    first_ids = list(members[0])
    out = []
    for vid in first_ids:
        try:
            out.append(fuse([m[vid] for m in members], spec))
        except KeyError:
            raise DataError(f"video {vid!r} missing from some ensemble member") from None
    return out


def build_report(curves: Sequence[ScoreCurve], annotations: Sequence[AnnotationSet],
                 config: PipelineConfig, preds: Mapping[str, BoundaryList] | None = None) -> Report:
    """Evaluate the configured pipeline (or given predictions) against ``annotations``."""
    if preds is None:
        preds = predict(curves, config)
    raw = predict(curves, config, "none")
    static = predict(curves, config, "static")
    dynamic = predict(curves, config, "dynamic")
    ids = {a.video.id for a in annotations}
    f1 = {
        "f1": f1_corpus(preds, annotations, config.eval),
        "f1_micro": f1_corpus(preds, annotations, replace(config.eval, aggregation=Aggregation.MICRO)),
        "f1_unaligned": f1_corpus(raw, annotations, config.eval),
        "f1_static": f1_corpus(static, annotations, config.eval),
        "f1_dynamic": f1_corpus(dynamic, annotations, config.eval),
    }
    groups = per_group_f1(preds, annotations, config.eval,
                          groups={vid: al.classify_group(b.video.duration, len(b)) for vid, b in raw.items()})
    density = {
        "ground truth": density_table(annotations),
        "prediction": density_table([preds[a.video.id] for a in annotations]),
    }
    comparisons = {
        "unaligned->static": compare_strategies(raw, static, annotations, config.eval),
        "static->dynamic": compare_strategies(static, dynamic, annotations, config.eval),
    }
    easy, hard = split_easy_hard([c for c in curves if c.video.id in ids], config.hard_threshold)
    strata = {}
    for name, sel in (("easy", set(easy)), ("hard", set(hard))):
        sub = [a for a in annotations if a.video.id in sel]
        strata[name] = (len(sub), f1_corpus(preds, sub, config.eval))
    return Report(config, len(annotations), f1, groups, density, comparisons, strata)


def eval_report(preds: Mapping[str, BoundaryList], annotations: Sequence[AnnotationSet],
                config: PipelineConfig) -> Report:
    """Score fixed predictions: corpus F1, per-group F1 and density tables."""
    f1 = {
        "f1": f1_corpus(preds, annotations, config.eval),
        "f1_micro": f1_corpus(preds, annotations, replace(config.eval, aggregation=Aggregation.MICRO)),
    }
    density = {
        "ground truth": density_table(annotations),
        "prediction": density_table([preds[a.video.id] for a in annotations]),
    }
    return Report(config, len(annotations), f1, per_group_f1(preds, annotations, config.eval), density, {}, {})


def run_pipeline(config: PipelineConfig, corpus_path, fuse_spec_path=None, predictions_path=None,
                 tuned_table_path=None) -> Report:
    """Load -> (fuse) -> detect -> align -> evaluate.

    Scores come from the corpus file, or from the ensemble members when a
    fusion spec is given; ground truth always comes from the corpus.  A tuned
    group table predicts each video with its group's threshold and gap.  Errors
    are re-raised as :class:`StageError` tagged with the failing stage.
    """
    curves, annotations = _stage("load", load_corpus, corpus_path)
    if not annotations:
        raise StageError("load", DataError(f"{corpus_path}: no annotation records"))
    if fuse_spec_path is not None:
        spec = _stage("fuse", load_ensemble_spec, fuse_spec_path)
        curves = _stage("fuse", load_fused_curves, spec)
    by_id = {c.video.id: c for c in curves}
    missing = [a.video.id for a in annotations if a.video.id not in by_id]
    if missing:
        raise StageError("load", DataError(f"no score curve for annotated videos {missing[:5]}"))
    curves = [by_id[a.video.id] for a in annotations]
    preds = None
    if predictions_path is not None:
        preds = _stage("load", load_predictions, predictions_path, video_index(curves, annotations))
        preds = {vid: align_boundaries(b, config) for vid, b in preds.items()}
    elif tuned_table_path is not None:
        table = _stage("load", table_from_file, tuned_table_path)
        preds = _stage("detect", apply_tuned, curves, table, config)
    return _stage("evaluate", build_report, curves, annotations, config, preds)

