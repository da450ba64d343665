import numpy as np
import pytest

from boundkit.datamodel import DataError, save_corpus
from boundkit.simgen import SimConfig, generate, generate_corpus, generate_video


def test_same_seed_is_byte_identical(tmp_path):
    cfg = SimConfig(seed=3, n_videos=25)
    a, b = tmp_path / "a.bk1", tmp_path / "b.bk1"
    save_corpus(*generate(cfg), a)
    save_corpus(*generate(cfg), b)
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_output():
    assert generate(SimConfig(seed=1, n_videos=5)) != generate(SimConfig(seed=2, n_videos=5))


def test_per_video_streams_are_order_independent():
    cfg = SimConfig(seed=9, n_videos=10)
    curves, anns = generate(cfg)
    c7, a7, _ = generate_video(cfg, 7)
    assert curves[7] == c7 and anns[7] == a7


def test_zero_rate_gives_empty_lists():
    curves, anns = generate(SimConfig(seed=4, n_videos=20, boundary_rate=0.0))
    assert all(len(r) == 0 for a in anns for r in a.raters)
    # pure clipped noise: no bump, so nothing close to 1
    assert max(max(c.scores) for c in curves) < 0.5


def test_margins_and_gaps_exhaustive():
    cfg = SimConfig(seed=7, n_videos=100, duration_law=(0, 0, 0, 1), boundary_rate=0.5, min_gap=1.0)
    _, anns = generate(cfg)
    for a in anns:
        t = a.raters[0].times
        assert all(0.3 <= x <= 9.7 for x in t)
        assert all(b - a_ >= 1.0 for a_, b in zip(t, t[1:]))
        for r in a.raters[1:]:
            assert all(0.3 <= x <= 9.7 for x in r.times)


def test_rate_matches_when_capacity_not_binding():
    cfg = SimConfig(seed=21, n_videos=1200, boundary_rate=0.6, min_gap=0.2)
    corpus = generate_corpus(cfg)
    n = sum(len(a.raters[0]) for a in corpus.annotations)
    secs = sum(a.video.duration for a in corpus.annotations)
    assert corpus.truncated == 0
    assert abs(n / secs - 0.6) <= 0.15 * 0.6


def test_infeasible_rate_is_truncated_and_counted(caplog):
    cfg = SimConfig(seed=1, n_videos=20, duration_law=(1, 0, 0, 0), boundary_rate=5.0, min_gap=1.0)
    corpus = generate_corpus(cfg)
    assert corpus.truncated > 0
    assert "truncated" in caplog.text
    for a in corpus.annotations:
        t = a.raters[0].times
        assert all(b - a_ >= 1.0 for a_, b in zip(t, t[1:]))


def test_curves_peak_at_boundaries_without_noise():
    curves, anns = generate(SimConfig(seed=2, n_videos=10, noise_sd=0.0, stride=0.05, min_gap=1.0))
    for c, a in zip(curves, anns):
        times = np.asarray(c.times)
        for b in a.raters[0].times:
            k = int(np.argmin(abs(times - b)))
            assert c.scores[k] > 0.9


@pytest.mark.parametrize("kw", [
    dict(duration_law=(0.5, 0.5, 0.5, 0.0)),
    dict(margin=1.0),
    dict(n_videos=0),
    dict(noise_sd=2.0),
])
def test_config_validation(kw):
    with pytest.raises(DataError):
        SimConfig(**kw)
