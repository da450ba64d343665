"""Boundary-count weighted BCE ("focal" loss) with a logistic toy trainer.

Each sample ``i`` contributes ``n[i] / 10 * BCE[i]`` where ``n[i]`` is the
number of boundaries annotated in that sample.  There is no ``(1 - p)**gamma``
modulating factor; the name refers only to the count weighting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datamodel import BoundaryList, BoundkitError, DataError, ScoreCurve

PROB_EPS = 1e-12
COUNT_SCALE = 10.0
DIVERGENCE_LOSS = 1e6


class TrainingDiverged(BoundkitError):
    pass


def bce(prob: float, label: int) -> float:
    p = min(max(prob, PROB_EPS), 1 - PROB_EPS)
    return -(label * math.log(p) + (1 - label) * math.log(1 - p))


@dataclass(frozen=True)
class FocalBatch:
    per_sample_bce: tuple[float, ...]
    boundary_counts: tuple[int, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.per_sample_bce)
        n = tuple(int(x) for x in self.boundary_counts)
        if len(b) != len(n):
            raise DataError("per_sample_bce and boundary_counts differ in length")
        if any(x < 0 for x in b) or any(x < 0 for x in n):
            raise DataError("bce values and boundary counts must be >= 0")
        object.__setattr__(self, "per_sample_bce", b)
        object.__setattr__(self, "boundary_counts", n)


def sample_weights(counts, weight_floor: float = 0.0) -> np.ndarray:
    """``n / 10`` per sample.

    A zero count gives zero weight, which removes boundary-free samples from
    training altogether; ``weight_floor`` > 0 keeps them in with that weight.
    """
    w = np.asarray(counts, dtype=float) / COUNT_SCALE
    if weight_floor > 0:
        w = np.maximum(w, weight_floor)
    return w


def focal_loss(batch: FocalBatch, weight_floor: float = 0.0) -> float:
    w = sample_weights(batch.boundary_counts, weight_floor)
    return float(np.dot(w, np.asarray(batch.per_sample_bce, dtype=float)))


@dataclass(frozen=True, eq=False)
class ToyModel:
    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if not np.all(np.isfinite(w)) or not math.isfinite(self.bias):
            raise DataError("toy model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    def predict(self, features) -> np.ndarray:
        z = np.asarray(features, dtype=float) @ self.weights + self.bias
        return _sigmoid(z)

    @property
    def params(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    @classmethod
    def from_params(cls, params) -> "ToyModel":
        params = np.asarray(params, dtype=float)
        return cls(params[:-1], float(params[-1]))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def toy_loss(model: ToyModel, features, labels, counts, weight_floor: float = 0.0) -> float:
    probs = model.predict(features)
    per_sample = [bce(p, y) for p, y in zip(probs, labels)]
    return focal_loss(FocalBatch(tuple(per_sample), tuple(counts)), weight_floor)


def focal_grad(model: ToyModel, features, labels, counts, weight_floor: float = 0.0) -> np.ndarray:
    """Gradient of the weighted loss w.r.t. ``(weights..., bias)``.

    For a logistic head d BCE / dz = p - y, so the gradient is
    ``sum_i w_i (p_i - y_i) [x_i, 1]``.
    """
    x = np.asarray(features, dtype=float)
    resid = sample_weights(counts, weight_floor) * (model.predict(x) - np.asarray(labels, dtype=float))
    return np.append(resid @ x, resid.sum())


def train_toy(features, labels, counts, lr: float, epochs: int, seed: int = 0,
              weight_floor: float = 0.0, history: list | None = None) -> ToyModel:
    """Full-batch gradient descent from a seeded small random initialization.

    Appends the loss before every step (and after the last) to ``history`` if
    given.  Raises :class:`TrainingDiverged` once the loss exceeds 1e6 or the
    parameters stop being finite.
    """
    if lr < 0:
        raise DataError(f"learning rate must be >= 0, got {lr}")
    x = np.asarray(features, dtype=float)
    rng = np.random.default_rng(seed)
    params = rng.normal(0.0, 0.01, size=x.shape[1] + 1)
    model = ToyModel.from_params(params)
    for epoch in range(epochs + 1):
        loss = toy_loss(model, x, labels, counts, weight_floor)
        if history is not None:
            history.append(loss)
        if not math.isfinite(loss) or loss > DIVERGENCE_LOSS:
            raise TrainingDiverged(f"loss {loss:.3g} at epoch {epoch} (lr={lr}); lower the learning rate")
        if epoch == epochs or lr == 0:
            continue
        params = params - lr * focal_grad(model, x, labels, counts, weight_floor)
        if not np.all(np.isfinite(params)):
            raise TrainingDiverged(f"non-finite parameters after epoch {epoch} (lr={lr}); lower the learning rate")
        model = ToyModel.from_params(params)
    return model


def curve_windows(curve: ScoreCurve, boundaries: BoundaryList, width: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Per-position windows of scores (edge-padded) and 0/1 boundary labels.

    A position is labelled 1 when a boundary falls inside its segment
    ``[t - stride/2, t + stride/2)``.
    """
    s = np.asarray(curve.scores)
    half = width // 2
    padded = np.pad(s, half, mode="edge")
    feats = np.stack([padded[i:i + width] for i in range(len(s))])
    labels = np.zeros(len(s), dtype=int)
    for b in boundaries.times:
        k = int(math.floor((b - curve.offset) / curve.stride + 0.5))
        if 0 <= k < len(s):
            labels[k] = 1
    return feats, labels


def corpus_samples(curves: Sequence[ScoreCurve], annotations: Sequence[BoundaryList], width: int = 5):
    """Stack windows over a corpus; every position inherits its video's boundary count."""
    xs, ys, ns = [], [], []
    for curve, gt in zip(curves, annotations):
        x, y = curve_windows(curve, gt, width)
        xs.append(x)
        ys.append(y)
        ns.append(np.full(len(y), len(gt)))
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ns)
