import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundkit.datamodel import DataError
from boundkit.evaluation import (
    Aggregation,
    EvalConfig,
    compare_strategies,
    density_table,
    f1_corpus,
    f1_from_counts,
    f1_video,
    match,
    match_times,
    per_group_f1,
)
from boundkit.fixtures import table

from .helpers import ann, blist, brute_force_max_matching, random_times

MICRO = EvalConfig(aggregation=Aggregation.MICRO)


def test_match_within_tolerance():
    m = match(blist([2.0]), blist([2.4]), 0.05 * 10)
    assert (m.tp, m.fp, m.fn) == (1, 0, 0)


def test_match_outside_tolerance():
    m = match(blist([2.0]), blist([2.6]), 0.5)
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)


def test_match_identical_lists():
    t = [1.0, 2.5, 7.0]
    for tol in (0.0, 0.1, 5.0):
        m = match(blist(t), blist(t), tol)
        assert (m.tp, m.fp, m.fn) == (3, 0, 0)


def test_greedy_first_come_would_lose():
    # p=1.0 could grab g=1.4, leaving p=1.5 unmatched; maximum is 2
    m = match_times([1.0, 1.5], [0.6, 1.4], 0.45)
    assert m.tp == 2 == brute_force_max_matching([1.0, 1.5], [0.6, 1.4], 0.45)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0, 10), max_size=6, unique=True),
       st.lists(st.floats(0, 10), max_size=6, unique=True),
       st.floats(0, 3))
def test_match_is_maximum(pred, gt, tol):
    pred, gt = sorted(pred), sorted(gt)
    m = match_times(pred, gt, tol)
    assert m.tp == brute_force_max_matching(pred, gt, tol + 1e-9)
    assert m.tp + m.fp == len(pred) and m.tp + m.fn == len(gt)
    assert all(abs(p - g) <= tol + 1e-9 for p, g in m.pairs)
    assert len({p for p, _ in m.pairs}) == len({g for _, g in m.pairs}) == m.tp


def test_f1_video_best_rater():
    a = ann([[2.0], [7.0]])
    assert f1_video(blist([2.1]), a) == 1.0


def test_f1_conventions():
    assert f1_video(blist([]), ann([[]])) == 1.0
    assert f1_video(blist([]), ann([[3.0]])) == 0.0
    assert f1_video(blist([3.0]), ann([[]])) == 0.0
    assert f1_from_counts(0, 0, 0) == 1.0


def test_f1_partial_recall():
    cfg = EvalConfig(rel_dis=0.45)
    assert f1_video(blist([1, 2, 3]), ann([[1, 2, 3, 4, 5]]), cfg) == pytest.approx(0.75)


def test_f1_video_mismatch():
    with pytest.raises(DataError):
        f1_video(blist([1.0], vid="a"), ann([[1.0]], vid="b"))


def test_f1_corpus_modes():
    a1 = ann([[2.0]], vid="a")
    a2 = ann([[5.0]], vid="b")
    perfect = {"a": blist([2.0], vid="a"), "b": blist([5.0], vid="b")}
    assert f1_corpus(perfect, [a1, a2]) == 1.0
    assert f1_corpus(perfect, [a1, a2], MICRO) == 1.0
    half = {"a": blist([2.0], vid="a"), "b": blist([1.0], vid="b")}
    assert f1_corpus(half, [a1, a2]) == pytest.approx(0.5)
    # counts (1,0,0) and (0,1,1): P = R = 1/2
    assert f1_corpus(half, [a1, a2], MICRO) == pytest.approx(0.5)
    with pytest.raises(DataError, match="missing"):
        f1_corpus({"a": perfect["a"]}, [a1, a2])


def test_micro_uses_best_rater_counts():
    a = ann([[1.0, 2.0, 3.0], [1.0]], vid="a")
    preds = {"a": blist([1.0], vid="a")}
    # rater 1 gives F1 = 1 -> counts (1, 0, 0)
    assert f1_corpus(preds, [a], MICRO) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 9.99), max_size=8, unique=True),
       st.lists(st.floats(0.01, 9.99), max_size=8, unique=True))
def test_f1_symmetric_single_rater(x, y):
    x, y = sorted(x), sorted(y)
    assert f1_video(blist(x), ann([y])) == f1_video(blist(y), ann([x]))


def test_f1_scale_invariant():
    rng = np.random.default_rng(3)
    for _ in range(300):
        d = float(rng.uniform(2, 10))
        p = random_times(rng, int(rng.integers(0, 6)), 0.01, d - 0.01)
        g = random_times(rng, int(rng.integers(0, 6)), 0.01, d - 0.01)
        k = float(rng.choice([0.5, 2.0, 4.0]))  # exact in binary
        base = f1_video(blist(p, duration=d), ann([g], duration=d))
        scaled = f1_video(blist([t * k for t in p], duration=d * k), ann([[t * k for t in g]], duration=d * k))
        assert base == scaled


def _videos_with_counts(counts_per_bucket, duration=10.0):
    """Annotation sets whose split densities fall in the four buckets in turn."""
    per_bucket_times = ([], [1.0, 4.0, 7.0], [float(t) for t in range(1, 9)], [0.5 + 0.75 * i for i in range(12)])
    out = []
    for bucket, n in enumerate(counts_per_bucket):
        for i in range(n):
            out.append(ann([per_bucket_times[bucket]], duration=duration, vid=f"b{bucket}_{i}"))
    return out


@pytest.mark.parametrize("row,n_videos", [("ground truth", 1410), ("prediction", 1709)])
def test_density_table_reproduces_published_rows(row, n_videos):
    published = table("split_density_percent")["rows"][row]
    counts = [round(p * n_videos / 100) for p in published]
    assert sum(counts) == n_videos
    got = density_table(_videos_with_counts(counts))
    assert [round(v, 2) for v in got] == published
    assert sum(got) == pytest.approx(100.0)
    assert round(sum(published), 2) == {"ground truth": 99.99, "prediction": 100.0}[row]


def test_density_single_empty_video():
    assert density_table([ann([[]])]) == [100.0, 0.0, 0.0, 0.0]
    with pytest.raises(DataError):
        density_table([])


def test_density_sums_to_100_random():
    rng = np.random.default_rng(1)
    items = [blist(random_times(rng, int(rng.integers(0, 15)), 0.3, 9.7), vid=f"v{i}") for i in range(500)]
    assert abs(sum(round(v, 2) for v in density_table(items)) - 100) <= 0.05


def test_compare_identical_is_all_unchanged():
    anns = [ann([[2.0]], vid="a"), ann([[5.0]], vid="b")]
    preds = {"a": blist([2.0], vid="a"), "b": blist([1.0], vid="b")}
    comp = compare_strategies(preds, preds, anns)
    assert comp.overall.percent() == {"improved": 0.0, "lowered": 0.0, "unchanged": 100.0}
    assert all(st.unchanged == st.n for st in comp.groups.values())


def test_compare_margin_fix_toy_corpus():
    from boundkit.align import align_static

    # two videos have a prediction inside the 0.3 s margin that only matches
    # once clamped; the other two are already fine
    gt = {"a": [0.65, 5.0], "b": [3.0, 9.35], "c": [2.0], "d": [4.0, 8.0]}
    raw = {"a": [0.05, 5.0], "b": [3.0, 9.95], "c": [2.0], "d": [4.0, 8.0]}
    anns = [ann([t], duration=10.0, vid=k) for k, t in gt.items()]
    preds = {k: blist(t, duration=10.0, vid=k) for k, t in raw.items()}
    # tolerance is 0.5 s: 0.05 vs 0.65 is a miss, 0.3 vs 0.65 a hit
    aligned = {k: align_static(b) for k, b in preds.items()}
    comp = compare_strategies(preds, aligned, anns)
    assert comp.overall.percent() == {"improved": 50.0, "lowered": 0.0, "unchanged": 50.0}


def test_compare_coverage_mismatch():
    with pytest.raises(DataError):
        compare_strategies({"a": blist([1.0], vid="a")}, {}, [ann([[1.0]], vid="a")])


def test_per_group_f1_groups_by_prediction_count():
    anns = [ann([[2.0]], vid="a"), ann([[1.0, 2.0, 3.0]], vid="b")]
    preds = {"a": blist([2.0], vid="a"), "b": blist([1.0], vid="b")}
    res = {k.label: v for k, v in per_group_f1(preds, anns).items()}
    assert res == {"ABOUT_10/C1": (2, pytest.approx(0.75))}
