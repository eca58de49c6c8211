"""
Linear ranking functions f(x) = w.x + b trained with the soft-margin SVM
objective

    0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))

by deterministic stochastic subgradient descent, and their mapping to
[0, 1] intensities.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hiered import LEVELS
from hiered.alignment import UNLABELED
from hiered.errors import NumericalError, ValidationError

SCOPES = ("pooled",) + LEVELS


@dataclass(eq=False)
class RankingDataset:
    X: np.ndarray
    y: np.ndarray
    levels: list[str] = field(default_factory=list)
    keys: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64)
        if len(self.X) != len(self.y):
            raise ValidationError(f"{len(self.X)} samples but {len(self.y)} labels")
        if not set(np.unique(self.y)) <= {-1.0, 1.0}:
            raise ValidationError("labels must be +1 or -1")
        if not ((self.y > 0).any() and (self.y < 0).any()):
            raise ValidationError("dataset needs at least one sample of each label")

    @property
    def positives(self) -> np.ndarray:
        return self.X[self.y > 0]

    @property
    def negatives(self) -> np.ndarray:
        return self.X[self.y < 0]


@dataclass(eq=False)
class Ranker:
    emotion: str
    level_scope: str
    w: np.ndarray
    b: float
    norm_min: float
    norm_max: float
    C: float
    seed: int
    mean: np.ndarray
    std: np.ndarray
    history: list[float] = field(default_factory=list, compare=False, repr=False)

    @property
    def feature_dim(self) -> int:
        return len(self.w)

    def score(self, X) -> np.ndarray:
        """Raw ranking score f(x) for a vector or a row matrix."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.feature_dim:
            raise ValidationError(
                f"feature dimension {X.shape[-1]} does not match ranker dimension {self.feature_dim}")
        return ((X - self.mean) / self.std) @ self.w + self.b

    def to_dict(self) -> dict:
        return {
            "emotion": self.emotion,
            "level_scope": self.level_scope,
            "w": [float(v) for v in self.w],
            "b": float(self.b),
            "norm_min": float(self.norm_min),
            "norm_max": float(self.norm_max),
            "C": float(self.C),
            "seed": int(self.seed),
            "feature_dim": self.feature_dim,
            "standardization": {"mean": [float(v) for v in self.mean],
                                "std": [float(v) for v in self.std]},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ranker":
        try:
            w = np.array(d["w"], dtype=np.float64)
            r = cls(d["emotion"], d["level_scope"], w, float(d["b"]),
                    float(d["norm_min"]), float(d["norm_max"]), float(d["C"]), int(d["seed"]),
                    np.array(d["standardization"]["mean"], dtype=np.float64),
                    np.array(d["standardization"]["std"], dtype=np.float64))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"malformed ranker: {e}") from None
        if d.get("feature_dim", len(w)) != len(w) or len(r.mean) != len(w) or len(r.std) != len(w):
            raise ValidationError("ranker vectors disagree with feature_dim")
        if r.norm_min > r.norm_max:
            raise ValidationError("ranker has norm_min > norm_max")
        return r


def save_ranker(r: Ranker, path) -> None:
    # repr floats round-trip bit-exactly
    Path(path).write_text(json.dumps(r.to_dict(), indent=1, sort_keys=True) + "\n")


def load_ranker(path) -> Ranker:
    return Ranker.from_dict(json.loads(Path(path).read_text()))


def build_dataset(corpus, target_emotion: str, level_scope: str = "pooled") -> RankingDataset:
    """Label every segment of every labelled utterance for one emotion.

    ``corpus`` is a sequence of :class:`~hiered.features.UtteranceFeatures`.
    Segments of utterances labelled ``target_emotion`` are positives, all
    other labelled utterances give negatives; unlabelled utterances are skipped.
    """
    if level_scope not in SCOPES:
        raise ValidationError(f"level_scope must be one of {SCOPES}, got {level_scope!r}")
    levels = LEVELS if level_scope == "pooled" else (level_scope,)
    X, y, lv, keys = [], [], [], []
    for uf in corpus:
        if uf.emotion == UNLABELED:
            continue
        label = 1.0 if uf.emotion == target_emotion else -1.0
        for level in levels:
            for i, row in enumerate(uf.level(level)):
                X.append(row)
                y.append(label)
                lv.append(level)
                keys.append(f"{uf.id}/{level}/{i}")
    n_pos = sum(1 for v in y if v > 0)
    if n_pos == 0 or n_pos == len(y):
        raise ValidationError(
            f"corpus is single-class for {target_emotion!r}: {n_pos} positive, {len(y) - n_pos} negative")
    return RankingDataset(np.array(X), np.array(y), lv, keys)


def svm_objective(w, b, X, y, C) -> float:
    margins = y * (X @ w + b)
    return 0.5 * float(np.dot(w, w)) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def standardization(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return mean, std


def train_ranker(ds: RankingDataset, C: float = 1.0, epochs: int = 200, seed: int = 0,
                 emotion: str = "", level_scope: str = "pooled",
                 standardize: bool = True) -> Ranker:
    """Fit (w, b) by stochastic subgradient descent with step 1/(t+1).

    Each step uses the single-sample estimate ``w + n*C*dhinge_i`` of the
    full objective's subgradient, visiting samples in a seeded permutation
    per epoch; ``t`` counts steps across epochs. The candidate of an epoch
    is the average of that epoch's iterates, and the best candidate so far
    is kept, so ``history`` (objective per epoch) is non-increasing.
    With zero epochs the ranker is w = 0, b = 0.
    """
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    if epochs < 0:
        raise ValidationError("epochs must be non-negative")
    if not np.all(np.isfinite(ds.X)):
        raise NumericalError("non-finite feature values in ranking dataset")

    if standardize:
        mean, std = standardization(ds.X)
    else:
        mean, std = np.zeros(ds.X.shape[1]), np.ones(ds.X.shape[1])
    X = (ds.X - mean) / std
    y = ds.y
    n, d = X.shape
    scale = n * C

    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    best_w, best_b, best_obj = w.copy(), b, np.inf
    history = []
    t = 0
    for epoch in range(epochs):
        w_avg = np.zeros(d)
        b_avg = 0.0
        for k, i in enumerate(rng.permutation(n), start=1):
            eta = 1.0 / (t + 1)
            violated = y[i] * (X[i] @ w + b) < 1.0
            w *= 1.0 - eta
            if violated:
                w += eta * scale * y[i] * X[i]
                b += eta * scale * y[i]
            t += 1
            w_avg += (w - w_avg) / k
            b_avg += (b - b_avg) / k
        obj = svm_objective(w_avg, b_avg, X, y, C)
        if not np.isfinite(obj):
            raise NumericalError(f"ranking objective became non-finite at epoch {epoch}")
        if obj < best_obj:
            best_obj, best_w, best_b = obj, w_avg, b_avg
        history.append(best_obj)

    scores = X @ best_w + best_b
    return Ranker(emotion, level_scope, best_w, float(best_b),
                  float(scores.min()), float(scores.max()), float(C), int(seed),
                  mean, std, history)


def intensity(r: Ranker, x) -> np.ndarray | float:
    """Min-max normalised score clamped to [0, 1]; 0.5 for degenerate bounds."""
    s = r.score(x)
    if r.norm_max == r.norm_min:
        out = np.full(np.shape(s), 0.5)
    else:
        out = np.clip((s - r.norm_min) / (r.norm_max - r.norm_min), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def objective(r: Ranker, ds: RankingDataset) -> float:
    """SVM objective of ``r`` in its own (standardized) training space."""
    return svm_objective(r.w, r.b, (ds.X - r.mean) / r.std, ds.y, r.C)
