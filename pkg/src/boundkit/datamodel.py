"""Core domain types and the ``bk1`` line-record corpus format.

Every file starts with a JSON header line ``{"format": "bk1", "flavor": ...}``
followed by one JSON record per line.  Flavors:

* ``scores``       -- ``{"id", "duration", "stride", "offset", "scores": [...]}``
* ``annotations``  -- ``{"id", "duration", "raters": [[t, ...], ...]}``
  (optional ``"provenance"``, default ``"human"``)
* ``predictions``  -- ``{"id", "boundaries": [t, ...]}`` (optional ``"scores"``)
* ``corpus``       -- any mix of scores and annotation records

All reals are written as decimal text with exactly 6 fractional digits.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

FORMAT_VERSION = "bk1"
FLAVORS = ("scores", "annotations", "predictions", "corpus", "report")
DECIMALS = 6
# Slack for float comparisons on derived quantities (grid end, time spans).
TIME_EPS = 1e-9


class BoundkitError(Exception):
    """Base class for all package errors."""


class DataError(BoundkitError, ValueError):
    """Malformed or invariant-violating data."""


def fmt_real(x: float) -> str:
    s = f"{x:.{DECIMALS}f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def quantize(x: float) -> float:
    """Round ``x`` to the serialized precision (``float(fmt_real(x))``)."""
    return float(fmt_real(x))


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class VideoMeta:
    id: str
    duration: float

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise DataError("video id must be a non-empty string")
        d = float(self.duration)
        if not math.isfinite(d) or d <= 0:
            raise DataError(f"video {self.id!r}: field 'duration' must be > 0, got {self.duration!r}")
        object.__setattr__(self, "duration", d)


@dataclass(frozen=True)
class ScoreCurve:
    """Per-position boundary probabilities sampled at a fixed stride.

    ``offset`` is the timestamp of score index 0; it defaults to ``stride / 2``
    so that scores sit at segment centers.
    """

    video: VideoMeta
    stride: float
    scores: tuple[float, ...]
    offset: float | None = None

    def __post_init__(self):
        vid = self.video.id
        stride = float(self.stride)
        if not math.isfinite(stride) or stride <= 0:
            raise DataError(f"video {vid!r}: field 'stride' must be > 0, got {self.stride!r}")
        offset = stride / 2 if self.offset is None else float(self.offset)
        if not math.isfinite(offset) or offset < 0:
            raise DataError(f"video {vid!r}: field 'offset' must be >= 0, got {self.offset!r}")
        scores = tuple(float(s) for s in self.scores)
        if not scores:
            raise DataError(f"video {vid!r}: field 'scores' must be non-empty")
        for i, s in enumerate(scores):
            if not (0.0 <= s <= 1.0):
                raise DataError(f"video {vid!r}: field 'scores'[{i}] = {s!r} outside [0, 1]")
        last = offset + (len(scores) - 1) * stride
        if last > self.video.duration + TIME_EPS:
            raise DataError(
                f"video {vid!r}: field 'scores' grid ends at {last:.6f}s beyond duration "
                f"{self.video.duration:.6f}s"
            )
        object.__setattr__(self, "stride", stride)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def times(self) -> list[float]:
        return [self.offset + i * self.stride for i in range(len(self.scores))]


@dataclass(frozen=True)
class BoundaryList:
    """Sorted boundary timestamps for one video.

    ``scores`` optionally carries a detection confidence per boundary; it is
    used by alignment to decide which boundaries to drop first and is ``None``
    for ground truth.
    """

    video: VideoMeta
    times: tuple[float, ...] = ()
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        vid = self.video.id
        times = tuple(float(t) for t in self.times)
        prev = None
        for i, t in enumerate(times):
            if not (0.0 < t < self.video.duration):
                raise DataError(
                    f"video {vid!r}: field 'times'[{i}] = {t!r} outside (0, {self.video.duration!r})"
                )
            if prev is not None and t <= prev:
                raise DataError(f"video {vid!r}: field 'times' not strictly increasing at index {i}")
            prev = t
        object.__setattr__(self, "times", times)
        if self.scores is not None:
            scores = tuple(float(s) for s in self.scores)
            if len(scores) != len(times):
                raise DataError(f"video {vid!r}: field 'scores' length differs from 'times'")
            object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return len(self.times)

    def score_list(self) -> list[float]:
        return list(self.scores) if self.scores is not None else [1.0] * len(self.times)


@dataclass(frozen=True)
class AnnotationSet:
    video: VideoMeta
    raters: tuple[BoundaryList, ...]
    provenance: str = "human"

    def __post_init__(self):
        raters = tuple(self.raters)
        if not raters:
            raise DataError(f"video {self.video.id!r}: field 'raters' must be non-empty")
        for r in raters:
            if r.video != self.video:
                raise DataError(f"video {self.video.id!r}: field 'raters' references {r.video.id!r}")
        object.__setattr__(self, "raters", raters)

    @classmethod
    def from_times(cls, video: VideoMeta, raters: Iterable[Sequence[float]], provenance: str = "human"):
        return cls(video, tuple(BoundaryList(video, tuple(r)) for r in raters), provenance)


# ---------------------------------------------------------------------------
# Group taxonomy: 3 duration buckets x 4 density buckets + 11 count buckets.


class DurationBucket(enum.Enum):
    D0_4 = "D0_4"
    D4_8 = "D4_8"
    D8_10 = "D8_10"
    ABOUT_10 = "ABOUT_10"


class DensityBucket(enum.Enum):
    NONE = "NONE"
    PER_SEC_0_055 = "PER_SEC_0_055"
    PER_SEC_055_1 = "PER_SEC_055_1"
    PER_SEC_GT_1 = "PER_SEC_GT_1"


class CountBucket(enum.Enum):
    C0 = "C0"
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"
    C6 = "C6"
    C7 = "C7"
    C8 = "C8"
    C9 = "C9"
    C10_PLUS = "C10_PLUS"

    @classmethod
    def from_count(cls, n: int) -> "CountBucket":
        return cls.C10_PLUS if n >= 10 else cls(f"C{n}")


@dataclass(frozen=True, order=False)
class GroupKey:
    duration_bucket: DurationBucket
    density_bucket: DensityBucket | None = None
    count_bucket: CountBucket | None = None

    def __post_init__(self):
        if self.duration_bucket is DurationBucket.ABOUT_10:
            if self.count_bucket is None or self.density_bucket is not None:
                raise DataError("ABOUT_10 groups take a count bucket and no density bucket")
        elif self.density_bucket is None or self.count_bucket is not None:
            raise DataError(f"{self.duration_bucket.value} groups take a density bucket and no count bucket")

    @property
    def label(self) -> str:
        sub = self.count_bucket if self.count_bucket is not None else self.density_bucket
        return f"{self.duration_bucket.value}/{sub.value}"

    @classmethod
    def from_label(cls, label: str) -> "GroupKey":
        try:
            dur, sub = label.strip().split("/")
            dbucket = DurationBucket(dur)
            if dbucket is DurationBucket.ABOUT_10:
                return cls(dbucket, count_bucket=CountBucket(sub))
            return cls(dbucket, density_bucket=DensityBucket(sub))
        except (ValueError, DataError) as exc:
            raise DataError(f"unknown group label {label!r}") from exc

    def __str__(self) -> str:
        return self.label


def all_group_keys() -> list[GroupKey]:
    """Every valid group key, in canonical order."""
    keys = []
    for dur in DurationBucket:
        if dur is DurationBucket.ABOUT_10:
            keys.extend(GroupKey(dur, count_bucket=c) for c in CountBucket)
        else:
            keys.extend(GroupKey(dur, density_bucket=d) for d in DensityBucket)
    return keys


def group_sort_key(key: GroupKey) -> int:
    return _GROUP_ORDER[key]


_GROUP_ORDER = {k: i for i, k in enumerate(all_group_keys())}


# ---------------------------------------------------------------------------
# Serialization


def _dump(record: dict) -> str:
    """Render a record as one JSON line with fixed-precision reals."""
    parts = []
    for key, value in record.items():
        parts.append(f"{json.dumps(key)}: {_dump_value(value)}")
    return "{" + ", ".join(parts) + "}"


def _dump_value(value) -> str:
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return json.dumps(value)
    if isinstance(value, float):
        return fmt_real(value)
    if isinstance(value, dict):
        return _dump(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_dump_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def header_line(flavor: str) -> str:
    return json.dumps({"format": FORMAT_VERSION, "flavor": flavor})


def write_records(path, flavor: str, records: Iterable[dict]) -> None:
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}")
    lines = [header_line(flavor)] + [_dump(r) for r in records]
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise BoundkitError(f"cannot write {path}: {exc}") from exc


def read_records(path, flavors: Sequence[str] | None = None) -> tuple[str, list[tuple[int, dict]]]:
    """Return ``(flavor, [(line_no, record), ...])`` for a bk1 file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}: line 1: missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line 1: parse error: {exc.msg}") from exc
    if not isinstance(header, dict) or header.get("format") != FORMAT_VERSION:
        raise DataError(f"{path}: line 1: expected header with format {FORMAT_VERSION!r}")
    flavor = header.get("flavor")
    if flavor not in FLAVORS or (flavors is not None and flavor not in flavors):
        raise DataError(f"{path}: line 1: unexpected flavor {flavor!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: line {lineno}: parse error: {exc.msg}") from exc
        if not isinstance(rec, dict):
            raise DataError(f"{path}: line {lineno}: record is not an object")
        records.append((lineno, rec))
    return flavor, records


def curve_record(c: ScoreCurve) -> dict:
    return {
        "id": c.video.id,
        "duration": c.video.duration,
        "stride": c.stride,
        "offset": c.offset,
        "scores": list(c.scores),
    }


def annotation_record(a: AnnotationSet) -> dict:
    rec = {"id": a.video.id, "duration": a.video.duration, "raters": [list(r.times) for r in a.raters]}
    if a.provenance != "human":
        rec["provenance"] = a.provenance
    return rec


def prediction_record(b: BoundaryList) -> dict:
    rec = {"id": b.video.id, "boundaries": list(b.times)}
    if b.scores is not None:
        rec["scores"] = list(b.scores)
    return rec


def _field(rec: dict, name: str, where: str):
    if name not in rec:
        raise DataError(f"{where}: missing field {name!r}")
    return rec[name]


def _parse_curve(rec: dict, where: str) -> ScoreCurve:
    video = VideoMeta(_field(rec, "id", where), _field(rec, "duration", where))
    return ScoreCurve(video, _field(rec, "stride", where), tuple(_field(rec, "scores", where)), rec.get("offset"))


def _parse_annotation(rec: dict, where: str) -> AnnotationSet:
    video = VideoMeta(_field(rec, "id", where), _field(rec, "duration", where))
    raters = _field(rec, "raters", where)
    return AnnotationSet.from_times(video, raters, rec.get("provenance", "human"))


def _wrap(where: str, fn, rec):
    try:
        return fn(rec, where)
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: video {rec.get('id')!r}: {exc}") from None


def load_corpus(path) -> tuple[list[ScoreCurve], list[AnnotationSet]]:
    """Load score curves and annotation sets from a bk1 file.

    Accepts the ``corpus``, ``scores`` and ``annotations`` flavors.  Records
    keep file order; ids must be unique per record kind.  Raises
    :class:`DataError` on the first parse error or invariant violation, so a
    partially valid corpus is never returned.
    """
    flavor, records = read_records(path, ("corpus", "scores", "annotations"))
    curves: list[ScoreCurve] = []
    annotations: list[AnnotationSet] = []
    seen_c: set[str] = set()
    seen_a: set[str] = set()
    for lineno, rec in records:
        where = f"{path}: line {lineno}"
        is_curve = "scores" in rec and "raters" not in rec
        if (flavor == "scores" and not is_curve) or (flavor == "annotations" and is_curve):
            raise DataError(f"{where}: record does not match flavor {flavor!r}")
        if is_curve:
            c = _wrap(where, _parse_curve, rec)
            if c.video.id in seen_c:
                raise DataError(f"{where}: video {c.video.id!r}: duplicate id")
            seen_c.add(c.video.id)
            curves.append(c)
        else:
            a = _wrap(where, _parse_annotation, rec)
            if a.video.id in seen_a:
                raise DataError(f"{where}: video {a.video.id!r}: duplicate id")
            seen_a.add(a.video.id)
            annotations.append(a)
    return curves, annotations


def save_corpus(curves: Sequence[ScoreCurve], annotations: Sequence[AnnotationSet], path) -> None:
    """Write curves then annotations to a single ``corpus``-flavor file."""
    records = [curve_record(c) for c in curves] + [annotation_record(a) for a in annotations]
    write_records(path, "corpus", records)


def save_scores(curves: Sequence[ScoreCurve], path) -> None:
    write_records(path, "scores", [curve_record(c) for c in curves])


def save_annotations(annotations: Sequence[AnnotationSet], path) -> None:
    write_records(path, "annotations", [annotation_record(a) for a in annotations])


def save_predictions(preds: Iterable[BoundaryList], path) -> None:
    write_records(path, "predictions", [prediction_record(b) for b in preds])


def load_predictions(path, videos: dict[str, VideoMeta]) -> dict[str, BoundaryList]:
    """Load prediction records; durations come from ``videos`` (id -> meta)."""
    _, records = read_records(path, ("predictions",))
    out: dict[str, BoundaryList] = {}
    for lineno, rec in records:
        where = f"{path}: line {lineno}"
        vid = _field(rec, "id", where)
        if vid not in videos:
            raise DataError(f"{where}: video {vid!r}: not present in corpus")
        if vid in out:
            raise DataError(f"{where}: video {vid!r}: duplicate id")
        scores = rec.get("scores")
        try:
            out[vid] = BoundaryList(
                videos[vid], tuple(_field(rec, "boundaries", where)), None if scores is None else tuple(scores)
            )
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
    return out


def video_index(curves: Iterable[ScoreCurve] = (), annotations: Iterable[AnnotationSet] = ()) -> dict[str, VideoMeta]:
    """Map id -> VideoMeta; conflicting durations for one id are an error."""
    out: dict[str, VideoMeta] = {}
    for v in [c.video for c in curves] + [a.video for a in annotations]:
        prev = out.setdefault(v.id, v)
        if prev != v:
            raise DataError(f"video {v.id!r}: conflicting durations {prev.duration} and {v.duration}")
    return out
