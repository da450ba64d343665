"""Command-line entry point: ``boundkit <command> [options]``.

Every command accepts ``--config FILE`` with ``key = value`` lines whose keys
are the long option names with dashes or underscores (``threshold = 0.45``,
``align-mode = static``).  Command-line flags override the file.  The resolved
configuration is printed to stderr on every run.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import align as al
from .datamodel import (
    BoundkitError,
    DataError,
    all_group_keys,
    load_corpus,
    load_predictions,
    save_annotations,
    save_corpus,
    save_predictions,
    save_scores,
    video_index,
    write_records,
)
from .detect import DetectConfig, detect_boundaries
from .evaluation import Aggregation, DENSITY_COLUMNS, EvalConfig, density_table
from .fuse import load_ensemble_spec
from .pipeline import (
    ALIGN_MODES,
    PipelineConfig,
    StageError,
    align_boundaries,
    eval_report,
    format_tune_table,
    load_fused_curves,
    pseudo_label,
    run_pipeline,
    select_provenance,
    split_easy_hard,
    tune_per_group,
)
from .simgen import SimConfig, generate_corpus

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# option groups --------------------------------------------------------------

def _add_detect(p):
    g = p.add_argument_group("detection")
    g.add_argument("--threshold", type=float, default=0.5)
    g.add_argument("--smooth-sd", type=float, default=0.0, help="Gaussian smoothing sd in seconds (0 = off)")
    g.add_argument("--refine", type=_bool, default=True, help="centroid refinement (true/false)")


def _add_align(p, mode_default="dynamic"):
    g = p.add_argument_group("alignment")
    g.add_argument("--align-mode", choices=ALIGN_MODES, default=mode_default)
    g.add_argument("--margin", type=float, default=0.3)
    g.add_argument("--gap-factor", type=float, default=0.10)
    g.add_argument("--dense-gap-floor-factor", type=float, default=0.05)
    g.add_argument("--dense-trigger", type=int, default=10)
    g.add_argument("--group-table", help="per-group gap_factor overrides (LABEL gap_factor=X lines)")


def _add_eval(p):
    g = p.add_argument_group("evaluation")
    g.add_argument("--rel-dis", type=float, default=0.05)
    g.add_argument("--aggregation", choices=[a.value for a in Aggregation], default="PER_VIDEO_MEAN")
    g.add_argument("--provenance", default="human,pseudo",
                   help="comma-separated annotation provenances to evaluate against")


def _add_tuning(p):
    g = p.add_argument_group("grid search")
    g.add_argument("--hard-threshold", type=float, default=0.2)
    g.add_argument("--grid-thresholds", type=_floats, default=(0.3, 0.4, 0.5, 0.6, 0.7))
    g.add_argument("--grid-gap-factors", type=_floats, default=(0.05, 0.075, 0.1))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boundkit", description="Event-boundary post-processing and evaluation toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="key = value defaults file")
        return p

    p = cmd("simulate", "generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-videos", type=int, default=100)
    p.add_argument("--duration-law", type=_floats, default=(0.1, 0.2, 0.2, 0.5),
                   help="weights for uniform(2,4),uniform(4,8),uniform(8,10),point(10)")
    p.add_argument("--boundary-rate", type=float, default=0.6)
    p.add_argument("--min-gap", type=float, default=0.5)
    p.add_argument("--margin", type=float, default=0.3)
    p.add_argument("--n-raters", type=int, default=3)
    p.add_argument("--rater-jitter-sd", type=float, default=0.1)
    p.add_argument("--bump-width", type=float, default=0.15)
    p.add_argument("--noise-sd", type=float, default=0.05)
    p.add_argument("--stride", type=float, default=0.25)
    p.add_argument("--id-prefix", default="v")

    p = cmd("detect", "score curves -> boundary predictions")
    p.add_argument("--corpus", required=True, help="corpus or scores file")
    p.add_argument("--out", required=True)
    _add_detect(p)

    p = cmd("align", "align boundary predictions")
    p.add_argument("--corpus", required=True, help="file supplying video durations")
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    _add_align(p)

    p = cmd("fuse", "weighted-sum fusion of member score files")
    p.add_argument("--spec", required=True, help="ensemble spec: WEIGHT PATH lines")
    p.add_argument("--out", required=True)

    p = cmd("eval", "score predictions against annotations")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", help="machine-readable report file")
    _add_eval(p)

    p = cmd("groups", "group census and split-density table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pred", help="group by prediction counts instead of annotations")
    p.add_argument("--out", help="write the table here as well as stdout")

    p = cmd("split", "easy/hard split by curve flatness")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="lines of 'ID<TAB>easy|hard'")
    p.add_argument("--hard-threshold", type=float, default=0.2)

    p = cmd("pseudo-label", "label unlabeled score curves")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="annotations file (provenance pseudo)")
    _add_detect(p)
    _add_align(p)

    p = cmd("tune", "per-group threshold and gap grid search")
    p.add_argument("--corpus", required=True, help="validation corpus with annotations")
    p.add_argument("--out", required=True, help="group table")
    _add_detect(p)
    _add_align(p)
    _add_eval(p)
    _add_tuning(p)

    p = cmd("report", "run the full pipeline and report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--fuse-spec", help="fuse these member score files instead of corpus scores")
    p.add_argument("--pred", help="evaluate these predictions (aligned per --align-mode)")
    p.add_argument("--tuned", help="group table from 'tune': per-group threshold and gap for prediction")
    p.add_argument("--out", help="machine-readable report file")
    p.add_argument("--text-out", help="plain-text report file")
    _add_detect(p)
    _add_align(p)
    _add_eval(p)
    _add_tuning(p)
    return parser


# config file -------------------------------------------------------------------

def read_config_file(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = _subparser(parser, args.command)
        known = {a.dest: a for a in sub._actions}
        every = {a.dest for s in _subparser_all(parser) for a in s._actions}
        defaults = {}
        for key, value in read_config_file(args.config).items():
            if key not in every:
                raise UsageError(f"{args.config}: unknown key {key!r}")
            if key not in known or key in ("config", "help"):
                continue
            action = known[key]
            try:
                conv = action.type(value) if action.type else value
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{args.config}: bad value for {key!r}: {exc}") from None
            if action.choices is not None and conv not in action.choices:
                raise UsageError(f"{args.config}: {key!r} must be one of {list(action.choices)}")
            defaults[key] = conv
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _subparser_all(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return list(action.choices.values())
    return []


def print_resolved(args):
    items = sorted((k, v) for k, v in vars(args).items() if k not in ("verbose",))
    print("# resolved config", file=sys.stderr)
    for k, v in items:
        if isinstance(v, tuple):
            v = ",".join(f"{x:g}" for x in v)
        print(f"{k} = {v}", file=sys.stderr)


def pipeline_config(args) -> PipelineConfig:
    per_group = {}
    if getattr(args, "group_table", None):
        per_group = al.gap_overrides(al.load_group_table(args.group_table))
    kw = {}
    if hasattr(args, "threshold"):
        kw["detect"] = DetectConfig(args.threshold, args.smooth_sd, args.refine)
    if hasattr(args, "align_mode"):
        kw["align"] = al.AlignConfig(args.margin, args.gap_factor, args.dense_gap_floor_factor, per_group,
                                     args.dense_trigger)
        kw["align_mode"] = args.align_mode
    if hasattr(args, "rel_dis"):
        kw["eval"] = EvalConfig(args.rel_dis, Aggregation(args.aggregation))
    if hasattr(args, "grid_thresholds"):
        kw["hard_threshold"] = args.hard_threshold
        kw["grid_thresholds"] = args.grid_thresholds
        kw["grid_gap_factors"] = args.grid_gap_factors
    return PipelineConfig(**kw)


def _annotations(args, annotations):
    return select_provenance(annotations, [p.strip() for p in args.provenance.split(",") if p.strip()])


# commands --------------------------------------------------------------------

def cmd_simulate(args):
    config = SimConfig(args.seed, args.n_videos, args.duration_law, args.boundary_rate, args.min_gap, args.margin,
                       args.n_raters, args.rater_jitter_sd, args.bump_width, args.noise_sd, args.stride,
                       args.id_prefix)
    corpus = generate_corpus(config)
    save_corpus(corpus.curves, corpus.annotations, args.out)
    print(f"wrote {len(corpus.curves)} videos to {args.out} ({corpus.truncated} truncated)")


def cmd_detect(args):
    config = pipeline_config(args)
    curves, _ = load_corpus(args.corpus)
    save_predictions([detect_boundaries(c, config.detect) for c in curves], args.out)
    print(f"wrote predictions for {len(curves)} videos to {args.out}")


def cmd_align(args):
    config = pipeline_config(args)
    curves, anns = load_corpus(args.corpus)
    preds = load_predictions(args.pred, video_index(curves, anns))
    out = [align_boundaries(b, config) for b in preds.values()]
    save_predictions(out, args.out)
    before = sum(len(b) for b in preds.values())
    after = sum(len(b) for b in out)
    print(f"aligned {len(out)} videos ({args.align_mode}): {before} -> {after} boundaries")


def cmd_fuse(args):
    spec = load_ensemble_spec(args.spec)
    curves = load_fused_curves(spec)
    save_scores(curves, args.out)
    print(f"fused {len(spec.members)} members over {len(curves)} videos into {args.out}")


def cmd_eval(args):
    config = pipeline_config(args)
    curves, anns = load_corpus(args.corpus)
    anns = _annotations(args, anns)
    preds = load_predictions(args.pred, video_index(curves, anns))
    report = eval_report(preds, anns, config)
    sys.stdout.write(report.text())
    if args.out:
        write_records(args.out, "report", report.records())


def cmd_groups(args):
    curves, anns = load_corpus(args.corpus)
    if args.pred:
        items = list(load_predictions(args.pred, video_index(curves, anns)).values())
        counts = [len(b) for b in items]
    else:
        items = anns
        counts = [round(sum(len(r) for r in a.raters) / len(a.raters)) for a in anns]
    if not items:
        raise DataError("no videos to group")
    census = dict.fromkeys(all_group_keys(), 0)
    for item, n in zip(items, counts):
        census[al.classify_group(item.video.duration, n)] += 1
    lines = [f"{'group':<24} {'videos':>7} {'percent':>8}"]
    for key, n in census.items():
        lines.append(f"{key.label:<24} {n:>7d} {100.0 * n / len(items):>7.2f}%")
    lines.append("")
    lines.append("".join(f"{c:>11}" for c in DENSITY_COLUMNS))
    lines.append("".join(f"{v:>10.2f}%" for v in density_table(items)))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")


def cmd_split(args):
    curves, _ = load_corpus(args.corpus)
    easy, hard = split_easy_hard(curves, args.hard_threshold)
    hard_set = set(hard)
    text = "".join(f"{c.video.id}\t{'hard' if c.video.id in hard_set else 'easy'}\n" for c in curves)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"easy {len(easy)}  hard {len(hard)}")


def cmd_pseudo_label(args):
    config = pipeline_config(args)
    curves, _ = load_corpus(args.corpus)
    anns = pseudo_label(curves, config)
    save_annotations(anns, args.out)
    print(f"pseudo-labelled {len(anns)} videos, {sum(len(a.raters[0]) for a in anns)} boundaries")


def cmd_tune(args):
    config = pipeline_config(args)
    curves, anns = load_corpus(args.corpus)
    anns = _annotations(args, anns)
    ids = {a.video.id for a in anns}
    table = tune_per_group([c for c in curves if c.video.id in ids], anns, config)
    text = format_tune_table(table)
    Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_report(args):
    config = pipeline_config(args)
    if args.pred and args.tuned:
        raise UsageError("--pred and --tuned are mutually exclusive")
    report = run_pipeline(config, args.corpus, args.fuse_spec, args.pred, args.tuned)
    text = report.text()
    sys.stdout.write(text)
    if args.out:
        write_records(args.out, "report", report.records())
    if args.text_out:
        Path(args.text_out).write_text(text, encoding="utf-8")


COMMANDS = {
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "align": cmd_align,
    "fuse": cmd_fuse,
    "eval": cmd_eval,
    "groups": cmd_groups,
    "split": cmd_split,
    "pseudo-label": cmd_pseudo_label,
    "tune": cmd_tune,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"boundkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"boundkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    print_resolved(args)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"boundkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StageError, BoundkitError, OSError) as exc:
        print(f"boundkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
