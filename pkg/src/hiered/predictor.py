"""
Small sequential variance adaptor with a hand-written backward pass.

    tokens -> embedding (+ word-start vector) -> conv3/ReLU -> conv3/ReLU -> h
    h -> linear -> logistic                            = ED slots (3E per phoneme)
    [h | ED slots] -> linear                           = prosody (5 per phoneme)

During training the prosody head sees the ground-truth ED slots (teacher
forcing); at inference it sees the predicted ones. Prosody targets are
standardized per corpus: log-duration, f0 mean/std (Hz), log-RMS energy
mean/std.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hiered.errors import NumericalError, ValidationError
from hiered.features import FEATURE_NAMES
from hiered.hed import HierarchicalED

EMBED_DIM = 32
KERNEL = 3
PROSODY_NAMES = ("duration", "f0_mean", "f0_std", "energy_mean", "energy_std")
N_PROSODY = len(PROSODY_NAMES)
INIT_RANGE = 0.1
DECAYED = ("pro_w",)
PARAM_ORDER = ("embed", "boundary", "conv1_w", "conv1_b", "conv2_w", "conv2_b",
               "ed_w", "ed_b", "pro_w", "pro_b")


@dataclass(eq=False)
class PredictorModel:
    vocab: dict[str, int]
    emotions: tuple[str, ...]
    params: dict[str, np.ndarray]
    prosody_mean: np.ndarray
    prosody_std: np.ndarray
    seed: int = 0

    @property
    def n_emotions(self) -> int:
        return len(self.emotions)

    @property
    def ed_dim(self) -> int:
        return 3 * len(self.emotions)

    def encode(self, symbols) -> np.ndarray:
        try:
            return np.array([self.vocab[s] for s in symbols], dtype=int)
        except KeyError as e:
            raise ValidationError(f"unknown token {e.args[0]!r}") from None

    def copy(self) -> "PredictorModel":
        return PredictorModel(dict(self.vocab), self.emotions,
                              {k: v.copy() for k, v in self.params.items()},
                              self.prosody_mean.copy(), self.prosody_std.copy(), self.seed)

    def to_dict(self) -> dict:
        return {
            "architecture": {"embed_dim": EMBED_DIM, "kernel": KERNEL, "n_prosody": N_PROSODY,
                             "prosody": list(PROSODY_NAMES)},
            "vocab": self.vocab,
            "emotions": list(self.emotions),
            "seed": self.seed,
            "standardization": {"mean": self.prosody_mean.tolist(), "std": self.prosody_std.tolist()},
            "params": {k: self.params[k].tolist() for k in PARAM_ORDER},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PredictorModel":
        try:
            arch = d["architecture"]
            if arch["embed_dim"] != EMBED_DIM or arch["kernel"] != KERNEL or arch["n_prosody"] != N_PROSODY:
                raise ValidationError(f"unsupported architecture {arch}")
            params = {k: np.array(d["params"][k], dtype=np.float64) for k in PARAM_ORDER}
            m = cls({str(k): int(v) for k, v in d["vocab"].items()}, tuple(d["emotions"]), params,
                    np.array(d["standardization"]["mean"], dtype=np.float64),
                    np.array(d["standardization"]["std"], dtype=np.float64), int(d["seed"]))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"malformed model file: {e}") from None
        expected = _shapes(len(m.vocab), m.ed_dim)
        for k, shape in expected.items():
            if m.params[k].shape != shape:
                raise ValidationError(f"parameter {k} has shape {m.params[k].shape}, expected {shape}")
        return m


def save_model(m: PredictorModel, path) -> None:
    Path(path).write_text(json.dumps(m.to_dict(), sort_keys=True) + "\n")


def load_model(path) -> PredictorModel:
    return PredictorModel.from_dict(json.loads(Path(path).read_text()))


def _shapes(n_vocab: int, ed_dim: int) -> dict[str, tuple]:
    D = EMBED_DIM
    return {
        "embed": (n_vocab, D), "boundary": (D,),
        "conv1_w": (KERNEL, D, D), "conv1_b": (D,),
        "conv2_w": (KERNEL, D, D), "conv2_b": (D,),
        "ed_w": (D, ed_dim), "ed_b": (ed_dim,),
        "pro_w": (D + ed_dim, N_PROSODY), "pro_b": (N_PROSODY,),
    }


def init_model(vocab, emotions, seed: int = 0, prosody_mean=None, prosody_std=None,
               zero: bool = False) -> PredictorModel:
    """Uniform(-0.1, 0.1) initialisation from a seeded generator (or all zeros)."""
    if not isinstance(vocab, dict):
        vocab = {s: i for i, s in enumerate(sorted(set(vocab)))}
    emotions = tuple(emotions)
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in _shapes(len(vocab), 3 * len(emotions)).items():
        params[name] = np.zeros(shape) if zero else rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape)
    mean = np.zeros(N_PROSODY) if prosody_mean is None else np.asarray(prosody_mean, dtype=np.float64)
    std = np.ones(N_PROSODY) if prosody_std is None else np.asarray(prosody_std, dtype=np.float64)
    return PredictorModel(dict(vocab), emotions, params, mean, std, seed)


@dataclass(eq=False)
class TrainingExample:
    id: str
    tokens: np.ndarray      # (n,) int ids
    word_ids: np.ndarray    # (n,) word index per phoneme
    ed: np.ndarray          # (n, 3E) broadcast target ED
    prosody: np.ndarray     # (n, 5) standardized target prosody

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=int)
        self.word_ids = np.asarray(self.word_ids, dtype=int)
        self.ed = np.asarray(self.ed, dtype=np.float64)
        self.prosody = np.asarray(self.prosody, dtype=np.float64)
        n = len(self.tokens)
        if len(self.word_ids) != n or self.ed.shape[0] != n or self.prosody.shape != (n, N_PROSODY):
            raise ValidationError(f"{self.id}: example sequences disagree on phoneme count {n}")


def word_starts(word_ids) -> np.ndarray:
    word_ids = np.asarray(word_ids)
    flags = np.ones(len(word_ids))
    flags[1:] = (word_ids[1:] != word_ids[:-1]).astype(float)
    return flags


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _conv(x, w, b):
    n = x.shape[0]
    xp = np.vstack([np.zeros((1, x.shape[1])), x, np.zeros((1, x.shape[1]))])
    y = b + sum(xp[k:k + n] @ w[k] for k in range(KERNEL))
    return y, xp


def _conv_backward(dy, xp, w):
    n = dy.shape[0]
    dw = np.stack([xp[k:k + n].T @ dy for k in range(KERNEL)])
    dxp = np.zeros_like(xp)
    for k in range(KERNEL):
        dxp[k:k + n] += dy @ w[k].T
    return dxp[1:n + 1], dw, dy.sum(axis=0)


@dataclass
class _Cache:
    tokens: np.ndarray
    starts: np.ndarray
    xp1: np.ndarray
    z1: np.ndarray
    xp2: np.ndarray
    z2: np.ndarray
    h: np.ndarray
    ed: np.ndarray
    cond: np.ndarray
    prosody: np.ndarray
    teacher: bool = field(default=False)


def _check_tokens(m: PredictorModel, tokens) -> np.ndarray:
    tokens = np.asarray(tokens)
    if tokens.dtype.kind in "US":
        return m.encode(tokens.tolist())
    tokens = tokens.astype(int)
    if tokens.size and (tokens.min() < 0 or tokens.max() >= len(m.vocab)):
        raise ValidationError(f"unknown token id outside [0, {len(m.vocab)})")
    return tokens


def trunk(m: PredictorModel, tokens, word_ids) -> np.ndarray:
    return _forward(m, tokens, word_ids).h


def _forward(m: PredictorModel, tokens, word_ids, ed_teacher=None) -> _Cache:
    p = m.params
    tokens = _check_tokens(m, tokens)
    starts = word_starts(word_ids)
    if len(starts) != len(tokens):
        raise ValidationError("word_ids and tokens differ in length")
    x = p["embed"][tokens] + starts[:, None] * p["boundary"]
    z1, xp1 = _conv(x, p["conv1_w"], p["conv1_b"])
    a1 = np.maximum(z1, 0.0)
    z2, xp2 = _conv(a1, p["conv2_w"], p["conv2_b"])
    h = np.maximum(z2, 0.0)
    ed = _sigmoid(h @ p["ed_w"] + p["ed_b"])
    teacher = ed_teacher is not None
    if teacher:
        cond = np.asarray(ed_teacher, dtype=np.float64)
        if cond.shape != ed.shape:
            raise ValidationError(f"teacher ED shape {cond.shape} != {ed.shape}")
    else:
        cond = ed
    prosody = np.hstack([h, cond]) @ p["pro_w"] + p["pro_b"]
    return _Cache(tokens, starts, xp1, z1, xp2, z2, h, ed, cond, prosody, teacher)


def forward(m: PredictorModel, tokens, word_ids=None, ed_teacher=None):
    """Per-phoneme (ED slots, standardized prosody).

    ``word_ids`` defaults to one word per phoneme. Pass ``ed_teacher`` to
    feed ground-truth ED slots to the prosody head.
    """
    if word_ids is None:
        word_ids = np.arange(len(tokens))
    c = _forward(m, tokens, word_ids, ed_teacher)
    return c.ed, c.prosody


def prosody_from_conditioning(m: PredictorModel, h: np.ndarray, cond: np.ndarray) -> np.ndarray:
    """Run only the prosody head on trunk output ``h`` and ED rows ``cond``."""
    return np.hstack([h, cond]) @ m.params["pro_w"] + m.params["pro_b"]


def loss(pred, target, ed_weight: float = 1.0, prosody_weight: float = 1.0) -> float:
    """``ed_weight * MSE(ED) + prosody_weight * MSE(prosody)``; pred/target are (ed, prosody) pairs."""
    (pe, pp), (te, tp) = pred, target
    pe, pp, te, tp = (np.asarray(a, dtype=np.float64) for a in (pe, pp, te, tp))
    if pe.shape != te.shape or pp.shape != tp.shape:
        raise ValidationError(f"shape mismatch: ED {pe.shape} vs {te.shape}, prosody {pp.shape} vs {tp.shape}")
    return ed_weight * float(np.mean((pe - te) ** 2)) + prosody_weight * float(np.mean((pp - tp) ** 2))


def backward(m: PredictorModel, ex: TrainingExample, teacher_forcing: bool = True,
             ed_weight: float = 1.0, prosody_weight: float = 1.0):
    """Loss and analytic gradients for every parameter of ``m``."""
    p = m.params
    c = _forward(m, ex.tokens, ex.word_ids, ex.ed if teacher_forcing else None)
    value = loss((c.ed, c.prosody), (ex.ed, ex.prosody), ed_weight, prosody_weight)

    n, D = c.h.shape
    g = {}
    d_pro = prosody_weight * 2.0 * (c.prosody - ex.prosody) / c.prosody.size
    g["pro_b"] = d_pro.sum(axis=0)
    g["pro_w"] = np.hstack([c.h, c.cond]).T @ d_pro
    d_in = d_pro @ p["pro_w"].T
    dh = d_in[:, :D].copy()
    d_ed = ed_weight * 2.0 * (c.ed - ex.ed) / c.ed.size
    if not c.teacher:
        d_ed = d_ed + d_in[:, D:]
    d_logit = d_ed * c.ed * (1.0 - c.ed)
    g["ed_b"] = d_logit.sum(axis=0)
    g["ed_w"] = c.h.T @ d_logit
    dh += d_logit @ p["ed_w"].T

    dz2 = dh * (c.z2 > 0)
    da1, g["conv2_w"], g["conv2_b"] = _conv_backward(dz2, c.xp2, p["conv2_w"])
    dz1 = da1 * (c.z1 > 0)
    dx, g["conv1_w"], g["conv1_b"] = _conv_backward(dz1, c.xp1, p["conv1_w"])
    g["boundary"] = c.starts @ dx
    g["embed"] = np.zeros_like(p["embed"])
    np.add.at(g["embed"], c.tokens, dx)
    return value, g


def example_loss(m: PredictorModel, ex: TrainingExample, teacher_forcing: bool = True) -> float:
    c = _forward(m, ex.tokens, ex.word_ids, ex.ed if teacher_forcing else None)
    return loss((c.ed, c.prosody), (ex.ed, ex.prosody))


def corpus_loss(m: PredictorModel, examples, teacher_forcing: bool = True) -> float:
    return float(np.mean([example_loss(m, ex, teacher_forcing) for ex in examples]))


def train(examples, epochs: int, lr: float = 0.05, seed: int = 0, momentum: float = 0.9,
          model: PredictorModel | None = None, vocab=None, emotions=None,
          prosody_mean=None, prosody_std=None, weight_decay: float = 0.0):
    """Per-example gradient descent with momentum over a seeded order.

    ``weight_decay`` adds ``weight_decay * W`` to the prosody-head weight
    gradient only; it is not part of the reported loss.
    Returns ``(model, losses)`` where ``losses[e]`` is the mean teacher-forced
    loss over the examples visited in epoch ``e``.
    """
    examples = list(examples)
    if not examples:
        raise ValidationError("training corpus is empty")
    if model is None:
        if vocab is None or emotions is None:
            raise ValidationError("need either a model or vocab and emotions")
        model = init_model(vocab, emotions, seed, prosody_mean, prosody_std)
    else:
        model = model.copy()
    rng = np.random.default_rng(seed)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    losses = []
    # divergence is reported through the loss check, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            total = 0.0
            for i in rng.permutation(len(examples)):
                value, grads = backward(model, examples[i])
                if not np.isfinite(value):
                    raise NumericalError(f"training diverged at epoch {epoch}: loss {value}")
                total += value
                for k, gk in grads.items():
                    if weight_decay and k in DECAYED:
                        gk = gk + weight_decay * model.params[k]
                    velocity[k] *= momentum
                    velocity[k] -= lr * gk
                    model.params[k] += velocity[k]
            losses.append(total / len(examples))
    return model, losses


def pool_hed(m: PredictorModel, slots: np.ndarray, word_ids, uid: str = "") -> HierarchicalED:
    """Phoneme ED from phoneme slots, word/utterance ED by averaging their slots."""
    E = m.n_emotions
    word_ids = np.asarray(word_ids, dtype=int)
    n_words = int(word_ids.max()) + 1 if word_ids.size else 0
    words = np.vstack([slots[word_ids == w, E:2 * E].mean(axis=0) for w in range(n_words)])
    utt = slots[:, 2 * E:].mean(axis=0)
    return HierarchicalED(uid, m.emotions, np.clip(utt, 0, 1), np.clip(words, 0, 1),
                          np.clip(slots[:, :E], 0, 1))


def predict_hed(m: PredictorModel, tokens, word_ids, uid: str = "") -> HierarchicalED:
    ed, _ = forward(m, tokens, word_ids)
    return pool_hed(m, ed, word_ids, uid)


def destandardize(m: PredictorModel, prosody: np.ndarray) -> np.ndarray:
    """Standardized head output -> physical units.

    Columns: duration (s), f0 mean (Hz), f0 std (Hz), energy mean as linear
    RMS amplitude, energy std (log-RMS units).
    """
    raw = prosody * m.prosody_std + m.prosody_mean
    out = raw.copy()
    out[:, 0] = np.exp(raw[:, 0])
    out[:, 3] = np.exp(raw[:, 3])
    return out


def prosody_targets(features: np.ndarray) -> np.ndarray:
    """Unstandardized 5-column targets from 12-dim phoneme feature rows."""
    idx = [FEATURE_NAMES.index(k) for k in ("duration", "f0_mean", "f0_std", "energy_mean", "energy_std")]
    raw = np.asarray(features, dtype=np.float64)[:, idx].copy()
    raw[:, 0] = np.log(raw[:, 0])
    return raw
