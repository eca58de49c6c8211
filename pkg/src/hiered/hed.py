"""
Hierarchical emotion distributions: intensities per emotion at utterance,
word and phoneme level, kept sparse per level and broadcast to one
conditioning row per phoneme on demand.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hiered.alignment import UtteranceAlign
from hiered.errors import ValidationError
from hiered.ranking import Ranker, intensity


def _round9(a) -> list:
    return np.vectorize(lambda v: float(f"{v:.9g}"), otypes=[float])(np.asarray(a)).tolist()


@dataclass(eq=False)
class HierarchicalED:
    id: str
    emotions: tuple[str, ...]
    utterance: np.ndarray   # (E,)
    words: np.ndarray       # (n_words, E)
    phonemes: np.ndarray    # (n_phonemes, E)

    def __post_init__(self):
        self.emotions = tuple(self.emotions)
        E = len(self.emotions)
        self.utterance = np.asarray(self.utterance, dtype=np.float64).reshape(E)
        self.words = np.asarray(self.words, dtype=np.float64).reshape(-1, E)
        self.phonemes = np.asarray(self.phonemes, dtype=np.float64).reshape(-1, E)
        for name in ("utterance", "words", "phonemes"):
            v = getattr(self, name)
            if not np.all((v >= 0.0) & (v <= 1.0)):
                raise ValidationError(f"{self.id}: {name} intensities must lie in [0, 1]")

    @property
    def n_emotions(self) -> int:
        return len(self.emotions)

    def level(self, level: str) -> np.ndarray:
        """Level matrix with one row per segment (utterance has a single row)."""
        if level == "utterance":
            return self.utterance[None, :]
        if level == "word":
            return self.words
        if level == "phoneme":
            return self.phonemes
        raise ValidationError(f"unknown level {level!r}")

    def copy(self) -> "HierarchicalED":
        return HierarchicalED(self.id, self.emotions, self.utterance.copy(),
                              self.words.copy(), self.phonemes.copy())

    def to_dict(self) -> dict:
        return {"id": self.id, "emotions": list(self.emotions),
                "utterance": _round9(self.utterance),
                "words": _round9(self.words), "phonemes": _round9(self.phonemes)}

    @classmethod
    def from_dict(cls, d: dict) -> "HierarchicalED":
        try:
            E = len(d["emotions"])
            return cls(d["id"], d["emotions"], d["utterance"],
                       np.array(d["words"], dtype=np.float64).reshape(-1, E),
                       np.array(d["phonemes"], dtype=np.float64).reshape(-1, E))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed HED document: {e}") from None


def save_hed(hed: HierarchicalED, path) -> None:
    Path(path).write_text(json.dumps(hed.to_dict(), sort_keys=True) + "\n")


def load_hed(path) -> HierarchicalED:
    return HierarchicalED.from_dict(json.loads(Path(path).read_text()))


def order_rankers(rankers) -> list[Ranker]:
    """Rankers sorted alphabetically by emotion, checked for consistency."""
    if isinstance(rankers, dict):
        rankers = list(rankers.values())
    rankers = sorted(rankers, key=lambda r: r.emotion)
    if not rankers:
        raise ValidationError("need at least one ranker")
    emotions = [r.emotion for r in rankers]
    if len(set(emotions)) != len(emotions):
        raise ValidationError(f"duplicate emotions among rankers: {emotions}")
    dims = {r.feature_dim for r in rankers}
    if len(dims) != 1:
        raise ValidationError(f"rankers disagree on feature dimension: {sorted(dims)}")
    return rankers


def extract_hed(u: UtteranceAlign, feats, rankers) -> HierarchicalED:
    """Score every segment of ``u`` with every ranker.

    ``feats`` is the utterance's :class:`~hiered.features.UtteranceFeatures`.
    """
    rankers = order_rankers(rankers)
    n_words, n_phon = len(u.words), len(u.phonemes)
    if feats is None or feats.word.shape[0] != n_words or feats.phoneme.shape[0] != n_phon \
            or feats.utterance.shape[0] != 1:
        raise ValidationError(f"{u.id}: features missing or inconsistent with alignment")
    cols = {lvl: np.column_stack([intensity(r, feats.level(lvl)) for r in rankers])
            for lvl in ("utterance", "word", "phoneme")}
    return HierarchicalED(u.id, tuple(r.emotion for r in rankers),
                          cols["utterance"][0], cols["word"], cols["phoneme"])


def conditioning(hed: HierarchicalED, u: UtteranceAlign) -> np.ndarray:
    """One ``[phoneme | parent word | utterance]`` row of size 3E per phoneme."""
    word_of = u.word_index_per_phoneme()
    if hed.phonemes.shape[0] != len(word_of) or hed.words.shape[0] != len(u.words):
        raise ValidationError(
            f"{u.id}: HED has {hed.words.shape[0]} words / {hed.phonemes.shape[0]} phonemes, "
            f"alignment has {len(u.words)} / {len(word_of)}")
    return broadcast(hed, word_of)


def broadcast(hed: HierarchicalED, word_of) -> np.ndarray:
    word_of = np.asarray(word_of, dtype=int)
    n = len(word_of)
    return np.hstack([hed.phonemes, hed.words[word_of], np.tile(hed.utterance, (n, 1))])
