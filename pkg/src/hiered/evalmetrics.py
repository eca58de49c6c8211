"""Prosody change ratios under intensity sweeps, and ranking quality."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from hiered.control import sweep
from hiered.errors import NumericalError, ValidationError
from hiered.predictor import PROSODY_NAMES, PredictorModel, predict_hed
from hiered.ranking import Ranker, RankingDataset

RATIO_EPS = 1e-9
REPORT_LEVELS = ("utterance", "word+phoneme", "word", "phoneme")


def change_ratio(p_low: float, p_high: float) -> float:
    """Relative change ``(p_high - p_low) / p_low``."""
    if abs(p_low) <= RATIO_EPS:
        raise NumericalError(f"change ratio undefined for p_low={p_low!r}")
    return (p_high - p_low) / p_low


def pairwise_accuracy(r: Ranker, ds: RankingDataset) -> float:
    """Fraction of (positive, negative) pairs ranked correctly; ties count half."""
    return pairwise_accuracy_scores(r.score(ds.positives), r.score(ds.negatives))


def pairwise_accuracy_scores(pos, neg) -> float:
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("pairwise accuracy needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


@dataclass(frozen=True)
class TargetSpec:
    """Which segments each sweep addresses.

    ``n_words`` / ``n_phonemes`` segments are drawn per utterance (all of
    them when the utterance has fewer); the draw depends only on ``seed``
    and the utterance id, never on corpus order.
    """
    levels: tuple[str, ...] = REPORT_LEVELS
    n_words: int = 5
    n_phonemes: int = 20
    seed: int = 0

    def __post_init__(self):
        bad = set(self.levels) - set(REPORT_LEVELS)
        if bad:
            raise ValidationError(f"unknown report levels {sorted(bad)}")
        if self.n_words < 1 or self.n_phonemes < 1:
            raise ValidationError("target counts must be positive")

    def choose(self, uid: str, n_words: int, n_phonemes: int):
        rng = np.random.default_rng([self.seed, zlib.crc32(uid.encode())])
        words = np.sort(rng.choice(n_words, min(self.n_words, n_words), replace=False))
        phones = np.sort(rng.choice(n_phonemes, min(self.n_phonemes, n_phonemes), replace=False))
        return words.tolist(), phones.tolist()

    def targets(self, level, emotion, words, phones):
        if level == "utterance":
            return [("utterance", 0, emotion)]
        t = []
        if level in ("word", "word+phoneme"):
            t += [("word", i, emotion) for i in words]
        if level in ("phoneme", "word+phoneme"):
            t += [("phoneme", i, emotion) for i in phones]
        return t


def aggregate(prosody: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Duration summed, every other dimension averaged, over the masked phonemes."""
    sel = prosody[mask]
    out = sel.mean(axis=0)
    out[0] = sel[:, 0].sum()
    return out


def control_report(m: PredictorModel, utterances, spec: TargetSpec = TargetSpec(),
                   lo: float = 0.0, hi: float = 1.0) -> dict:
    """Mean change ratio per (emotion, level, prosody dimension) over the corpus.

    ``utterances`` are alignments; tokens come from their phoneme symbols.
    Utterances whose low-intensity value is ~0 are skipped for that cell
    and tallied under ``skipped``.
    """
    utterances = sorted(utterances, key=lambda u: u.id)
    if not utterances:
        raise ValidationError("control report needs at least one utterance")
    sums = {e: {lv: np.zeros(len(PROSODY_NAMES)) for lv in spec.levels} for e in m.emotions}
    counts = {e: {lv: np.zeros(len(PROSODY_NAMES), dtype=int) for lv in spec.levels} for e in m.emotions}
    for u in utterances:
        tokens = m.encode([p.symbol for p in u.phonemes])
        word_of = np.asarray(u.word_index_per_phoneme())
        base = predict_hed(m, tokens, word_of, u.id)
        words, phones = spec.choose(u.id, len(u.words), len(tokens))
        masks = {
            "utterance": np.ones(len(tokens), dtype=bool),
            "word": np.isin(word_of, words),
            "phoneme": np.isin(np.arange(len(tokens)), phones),
        }
        masks["word+phoneme"] = masks["word"] | masks["phoneme"]
        for emotion in m.emotions:
            for level in spec.levels:
                targets = spec.targets(level, emotion, words, phones)
                p_lo, p_hi = sweep(m, tokens, word_of, base, targets, lo, hi)
                a_lo, a_hi = aggregate(p_lo, masks[level]), aggregate(p_hi, masks[level])
                for d in range(len(PROSODY_NAMES)):
                    try:
                        r = change_ratio(a_lo[d], a_hi[d])
                    except NumericalError:
                        continue
                    sums[emotion][level][d] += r
                    counts[emotion][level][d] += 1
    if all(c.sum() == 0 for per in counts.values() for c in per.values()):
        raise NumericalError("every utterance had an undefined change ratio")
    ratios = {
        e: {lv: {name: (float(sums[e][lv][d] / counts[e][lv][d]) if counts[e][lv][d] else None)
                 for d, name in enumerate(PROSODY_NAMES)}
            for lv in spec.levels}
        for e in m.emotions
    }
    return {
        "lo": lo, "hi": hi,
        "n_utterances": len(utterances),
        "ratios": ratios,
        "counts": {e: {lv: {name: int(counts[e][lv][d]) for d, name in enumerate(PROSODY_NAMES)}
                       for lv in spec.levels} for e in m.emotions},
        "skipped": {e: {lv: {name: len(utterances) - int(counts[e][lv][d])
                             for d, name in enumerate(PROSODY_NAMES)}
                        for lv in spec.levels} for e in m.emotions},
    }
