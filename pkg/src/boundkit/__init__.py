"""Post-processing and evaluation of event-boundary score curves."""
from .align import AlignConfig, align_dynamic, align_static, classify_group
from .datamodel import (
    AnnotationSet,
    BoundaryList,
    BoundkitError,
    DataError,
    GroupKey,
    ScoreCurve,
    VideoMeta,
    all_group_keys,
    load_corpus,
    save_corpus,
)
from .detect import DetectConfig, detect_boundaries, flatness, smooth
from .evaluation import EvalConfig, MatchResult, compare_strategies, density_table, f1_corpus, f1_video, match
from .fuse import EnsembleSpec, fuse, resample
from .losses import FocalBatch, ToyModel, bce, focal_grad, focal_loss, train_toy
from .pipeline import PipelineConfig, pseudo_label, run_pipeline, split_easy_hard, tune_per_group
from .simgen import SimConfig, generate

__all__ = [
    "AlignConfig",
    "align_dynamic",
    "align_static",
    "classify_group",
    "AnnotationSet",
    "BoundaryList",
    "BoundkitError",
    "DataError",
    "GroupKey",
    "ScoreCurve",
    "VideoMeta",
    "all_group_keys",
    "load_corpus",
    "save_corpus",
    "DetectConfig",
    "detect_boundaries",
    "flatness",
    "smooth",
    "EvalConfig",
    "MatchResult",
    "compare_strategies",
    "density_table",
    "f1_corpus",
    "f1_video",
    "match",
    "EnsembleSpec",
    "fuse",
    "resample",
    "FocalBatch",
    "ToyModel",
    "bce",
    "focal_grad",
    "focal_loss",
    "train_toy",
    "PipelineConfig",
    "pseudo_label",
    "run_pipeline",
    "split_easy_hard",
    "tune_per_group",
    "SimConfig",
    "generate",
]

__version__ = "0.1.0"
