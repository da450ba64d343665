from boundkit.datamodel import AnnotationSet, BoundaryList, ScoreCurve, VideoMeta


def brute_force_max_matching(pred, gt, tol):
    """Largest one-to-one pairing with |p - g| <= tol, by exhaustive search."""
    best = 0

    def search(i, used, count):
        nonlocal best
        if count + (len(pred) - i) <= best:
            return
        if i == len(pred):
            best = max(best, count)
            return
        search(i + 1, used, count)
        for j, g in enumerate(gt):
            if j not in used and abs(pred[i] - g) <= tol:
                search(i + 1, used | {j}, count + 1)

    search(0, frozenset(), 0)
    return best


def random_times(rng, n, lo, hi, min_sep=1e-3):
    out = []
    while len(out) < n:
        t = round(float(rng.uniform(lo, hi)), 6)
        if all(abs(t - x) >= min_sep for x in out):
            out.append(t)
    return sorted(out)


def video(duration=10.0, vid="v"):
    return VideoMeta(vid, duration)


def blist(times, duration=10.0, vid="v", scores=None):
    return BoundaryList(VideoMeta(vid, duration), tuple(times), None if scores is None else tuple(scores))


def ann(raters, duration=10.0, vid="v"):
    return AnnotationSet.from_times(VideoMeta(vid, duration), raters)


def curve(scores, stride=1.0, offset=None, duration=None, vid="v"):
    if duration is None:
        off = stride / 2 if offset is None else offset
        duration = off + (len(scores) - 1) * stride + stride / 2
    return ScoreCurve(VideoMeta(vid, duration), stride, tuple(scores), offset)


def run_all_commands(workdir):
    """Run every CLI command once inside ``workdir``; return {name: output path}."""
    from boundkit.cli import main

    w = str(workdir)
    outs = {}

    def run(name, argv, out):
        code = main(argv)
        assert code == 0, f"{name} exited {code}"
        outs[name] = out

    corpus = f"{w}/corpus.bk1"
    run("simulate", ["simulate", "--out", corpus, "--seed", "7", "--n-videos", "30"], corpus)
    run("detect", ["detect", "--corpus", corpus, "--out", f"{w}/raw.bk1"], f"{w}/raw.bk1")
    run("align", ["align", "--corpus", corpus, "--pred", f"{w}/raw.bk1", "--out", f"{w}/aligned.bk1"],
        f"{w}/aligned.bk1")
    run("simulate-b", ["simulate", "--out", f"{w}/other.bk1", "--seed", "7", "--n-videos", "30",
                       "--noise-sd", "0.2"], f"{w}/other.bk1")
    with open(f"{w}/ens.txt", "w") as fh:
        fh.write("0.6 corpus.bk1\n0.4 other.bk1\n")
    run("fuse", ["fuse", "--spec", f"{w}/ens.txt", "--out", f"{w}/fused.bk1"], f"{w}/fused.bk1")
    run("eval", ["eval", "--corpus", corpus, "--pred", f"{w}/aligned.bk1", "--out", f"{w}/eval.bk1"],
        f"{w}/eval.bk1")
    run("groups", ["groups", "--corpus", corpus, "--out", f"{w}/groups.txt"], f"{w}/groups.txt")
    run("split", ["split", "--corpus", corpus, "--out", f"{w}/split.tsv"], f"{w}/split.tsv")
    run("pseudo-label", ["pseudo-label", "--corpus", f"{w}/fused.bk1", "--out", f"{w}/pseudo.bk1"],
        f"{w}/pseudo.bk1")
    run("tune", ["tune", "--corpus", corpus, "--out", f"{w}/tuned.txt", "--grid-thresholds", "0.4,0.5",
                 "--grid-gap-factors", "0.05,0.1"], f"{w}/tuned.txt")
    run("report", ["report", "--corpus", corpus, "--fuse-spec", f"{w}/ens.txt", "--group-table",
                   f"{w}/tuned.txt", "--out", f"{w}/report.bk1", "--text-out", f"{w}/report.txt"],
        f"{w}/report.bk1")
    outs["report-text"] = f"{w}/report.txt"
    run("report-tuned", ["report", "--corpus", corpus, "--tuned", f"{w}/tuned.txt", "--out", f"{w}/tuned-report.bk1"],
        f"{w}/tuned-report.bk1")
    return outs
