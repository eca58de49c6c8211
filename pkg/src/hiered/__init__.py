"""Hierarchical emotion distribution extraction, prediction and control."""

from hiered.errors import HedError, NumericalError, ValidationError

EMOTIONS = ("Angry", "Happy", "Sad", "Surprise")
CORPUS_LABELS = ("Neutral", "Sad", "Angry", "Happy", "Surprise")
LEVELS = ("phoneme", "word", "utterance")

__all__ = [
    "CORPUS_LABELS",
    "EMOTIONS",
    "LEVELS",
    "HedError",
    "NumericalError",
    "ValidationError",
]
__version__ = "0.1.0"
