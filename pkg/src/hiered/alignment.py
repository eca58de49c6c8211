"""Utterance -> word -> phoneme time hierarchy, ingested from JSON files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from hiered import CORPUS_LABELS, LEVELS
from hiered.errors import ValidationError

UNLABELED = "unlabeled"
# alignment tools emit millisecond times; tolerate rounding at shared boundaries
TIME_EPS = 1e-6


class AlignmentError(ValidationError):
    pass


@dataclass(frozen=True)
class PhonemeSeg:
    symbol: str
    start: float
    end: float


@dataclass(frozen=True)
class WordSeg:
    text: str
    start: float
    end: float
    phonemes: tuple[PhonemeSeg, ...]


@dataclass(frozen=True)
class UtteranceAlign:
    id: str
    emotion_label: str
    words: tuple[WordSeg, ...]
    audio_path: str = ""
    source: str = field(default="", compare=False)

    @property
    def phonemes(self) -> list[PhonemeSeg]:
        return [p for w in self.words for p in w.phonemes]

    def word_index_per_phoneme(self) -> list[int]:
        return [i for i, w in enumerate(self.words) for _ in w.phonemes]

    @property
    def start(self) -> float:
        return self.words[0].start

    @property
    def end(self) -> float:
        return max(w.end for w in self.words)

    def resolved_audio(self) -> Path:
        p = Path(self.audio_path)
        if not p.is_absolute() and self.source:
            p = Path(self.source).parent / p
        return p


def _check_ordered(segs, what, container):
    for prev, cur in zip(segs, segs[1:]):
        if cur.start < prev.end - TIME_EPS:
            name = getattr(cur, "symbol", None) or getattr(cur, "text", "?")
            raise AlignmentError(
                f"{what} {name!r} [{cur.start}, {cur.end}] overlaps or precedes "
                f"previous [{prev.start}, {prev.end}] in {container}")


def _span(obj, where):
    try:
        start = float(obj["start"])
        end = float(obj["end"])
    except KeyError as e:
        raise AlignmentError(f"{where}: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError):
        raise AlignmentError(f"{where}: start/end must be numbers") from None
    if not (end > start >= 0):
        raise AlignmentError(f"{where}: need end > start >= 0, got [{start}, {end}]")
    return start, end


def _field(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise AlignmentError(f"{where}: missing field {key!r}")
    return obj[key]


def from_dict(doc: dict, source: str = "") -> UtteranceAlign:
    uid = str(_field(doc, "id", source or "utterance"))
    emotion = _field(doc, "emotion", uid)
    if emotion not in CORPUS_LABELS and emotion != UNLABELED:
        raise AlignmentError(f"{uid}: unknown emotion label {emotion!r}")
    audio = str(_field(doc, "audio", uid))
    raw_words = _field(doc, "words", uid)
    if not isinstance(raw_words, list) or not raw_words:
        raise AlignmentError(f"{uid}: 'words' must be a non-empty list")

    words = []
    for wi, w in enumerate(raw_words):
        text = str(_field(w, "text", f"{uid} word {wi}"))
        where = f"{uid} word {wi} {text!r}"
        ws, we = _span(w, where)
        raw_ph = _field(w, "phonemes", where)
        if not isinstance(raw_ph, list) or not raw_ph:
            raise AlignmentError(f"{where}: 'phonemes' must be a non-empty list")
        phones = []
        for pi, p in enumerate(raw_ph):
            sym = str(_field(p, "symbol", f"{where} phoneme {pi}"))
            ps, pe = _span(p, f"{where} phoneme {pi} {sym!r}")
            if ps < ws - TIME_EPS or pe > we + TIME_EPS:
                raise AlignmentError(
                    f"{where}: phoneme {sym!r} [{ps}, {pe}] lies outside word span [{ws}, {we}]")
            phones.append(PhonemeSeg(sym, ps, pe))
        _check_ordered(phones, "phoneme", where)
        words.append(WordSeg(text, ws, we, tuple(phones)))
    _check_ordered(words, "word", uid)
    return UtteranceAlign(uid, emotion, tuple(words), audio, source)


def parse_alignment(path) -> UtteranceAlign:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise AlignmentError(f"{path}: invalid JSON: {e}") from None
    return from_dict(doc, str(path))


def to_dict(u: UtteranceAlign) -> dict:
    return {
        "id": u.id,
        "emotion": u.emotion_label,
        "audio": u.audio_path,
        "words": [
            {"text": w.text, "start": w.start, "end": w.end,
             "phonemes": [{"symbol": p.symbol, "start": p.start, "end": p.end}
                          for p in w.phonemes]}
            for w in u.words
        ],
    }


def check_duration(u: UtteranceAlign, duration: float) -> None:
    """Words must end inside the audio they annotate."""
    if u.end > duration + TIME_EPS:
        raise AlignmentError(f"{u.id}: alignment ends at {u.end} s but audio lasts {duration} s")


def segments_of(u: UtteranceAlign, level: str) -> list[tuple[str, float, float]]:
    """Ordered ``(segment id, start, end)`` spans at one granularity level.

    The utterance span is the union hull of the words, so leading and
    trailing silence is excluded.
    """
    if level == "phoneme":
        return [(f"{u.id}/phoneme/{i}", p.start, p.end) for i, p in enumerate(u.phonemes)]
    if level == "word":
        return [(f"{u.id}/word/{i}", w.start, w.end) for i, w in enumerate(u.words)]
    if level == "utterance":
        return [(f"{u.id}/utterance/0", min(w.start for w in u.words), u.end)]
    raise ValidationError(f"level must be one of {LEVELS}, got {level!r}")


def load_corpus(directory) -> list[UtteranceAlign]:
    """Parse every ``*.json`` alignment in ``directory``, ordered by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    utts = [parse_alignment(p) for p in sorted(directory.glob("*.json"))]
    seen = set()
    for u in utts:
        if u.id in seen:
            raise AlignmentError(f"duplicate utterance id {u.id!r} in {directory}")
        seen.add(u.id)
    return sorted(utts, key=lambda u: u.id)
