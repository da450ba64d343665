import numpy as np
import pytest

from boundkit.datamodel import DataError, ScoreCurve, VideoMeta, save_scores
from boundkit.fuse import EnsembleSpec, fuse, load_ensemble_spec, resample
from boundkit.pipeline import load_fused_curves

from .helpers import curve


def test_resample_identity_grid():
    c = curve([0.1, 0.5, 0.3], stride=0.5)
    assert resample(c, c.stride, c.offset, len(c)).scores == c.scores


def test_resample_midpoint():
    c = ScoreCurve(VideoMeta("v", 2.0), 1.0, (0.0, 1.0), 0.5)
    assert resample(c, 1.0, 1.0, 1).scores == (pytest.approx(0.5),)


def test_resample_holds_last_value():
    c = ScoreCurve(VideoMeta("v", 4.0), 1.0, (0.2, 0.7), 0.5)
    out = resample(c, 0.5, 0.0, 8)
    assert out.scores[-1] == 0.7 and out.scores[0] == 0.2


def test_resample_rejects_grid_outside_video():
    c = curve([0.1, 0.2])
    with pytest.raises(DataError):
        resample(c, 1.0, 0.0, 10)


def test_fuse_identical_curves():
    c = curve([0.1, 0.9, 0.4])
    assert np.allclose(fuse([c, c], EnsembleSpec((("a", 0.5), ("b", 0.5)))).scores, c.scores, atol=1e-15)


def test_fuse_constants():
    a, b = curve([0.2] * 4), curve([0.6] * 4)
    out = fuse([a, b], EnsembleSpec((("a", 0.25), ("b", 0.75))))
    assert np.allclose(out.scores, 0.5, atol=1e-12)


def test_published_weights_accepted():
    members = [(f"c{i}", 0.0385) for i in range(20)] + [(f"m{i}", 0.0575) for i in range(4)]
    spec = EnsembleSpec(tuple(members))
    assert abs(sum(spec.weights) - 1.0) <= 1e-9


def test_spec_validation():
    with pytest.raises(DataError):
        EnsembleSpec(())
    with pytest.raises(DataError):
        EnsembleSpec((("a", 0.5), ("b", 0.4)))
    with pytest.raises(DataError):
        EnsembleSpec((("a", 1.5), ("b", -0.5)))


def test_fuse_rejects_mixed_videos():
    a = curve([0.1, 0.2], vid="a")
    b = curve([0.1, 0.2], vid="b")
    with pytest.raises(DataError):
        fuse([a, b], EnsembleSpec((("a", 0.5), ("b", 0.5))))


def test_fuse_resamples_onto_first_grid():
    v = VideoMeta("v", 4.0)
    fine = ScoreCurve(v, 0.5, tuple(np.linspace(0, 1, 8)), 0.25)
    coarse = ScoreCurve(v, 1.0, (0.0, 0.0, 0.0, 0.0), 0.5)
    out = fuse([coarse, fine], EnsembleSpec((("c", 0.5), ("f", 0.5))))
    assert len(out) == 4 and out.stride == 1.0
    expected = 0.5 * np.interp([0.5, 1.5, 2.5, 3.5], 0.25 + 0.5 * np.arange(8), np.linspace(0, 1, 8))
    assert np.allclose(out.scores, expected)


def test_fuse_properties_random():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 20))
        a, b = curve(rng.uniform(0, 1, n).tolist()), curve(rng.uniform(0, 1, n).tolist())
        w = float(rng.uniform(0, 1))
        ab = fuse([a, b], EnsembleSpec((("a", w), ("b", 1 - w))))
        ba = fuse([b, a], EnsembleSpec((("b", 1 - w), ("a", w))))
        assert np.allclose(ab.scores, ba.scores, atol=1e-12)
        lo = np.minimum(a.scores, b.scores)
        hi = np.maximum(a.scores, b.scores)
        assert np.all(np.asarray(ab.scores) >= lo - 1e-12) and np.all(np.asarray(ab.scores) <= hi + 1e-12)
        assert fuse([a], EnsembleSpec((("a", 1.0),))).scores == a.scores


def test_spec_file_and_member_loading(tmp_path):
    v = VideoMeta("x", 3.0)
    save_scores([ScoreCurve(v, 1.0, (0.2, 0.4, 0.6))], tmp_path / "m1.bk1")
    save_scores([ScoreCurve(v, 1.0, (0.6, 0.4, 0.2))], tmp_path / "m2.bk1")
    (tmp_path / "ens.txt").write_text("# weight path\n0.25 m1.bk1\n0.75 m2.bk1\n")
    spec = load_ensemble_spec(tmp_path / "ens.txt")
    assert spec.weights == [0.25, 0.75]
    (out,) = load_fused_curves(spec)
    assert np.allclose(out.scores, [0.5, 0.4, 0.3])
    (tmp_path / "bad.txt").write_text("x m1.bk1\n")
    with pytest.raises(DataError, match="line 1"):
        load_ensemble_spec(tmp_path / "bad.txt")
