"""User edits of a hierarchical ED and intensity sweeps through the prosody head."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hiered import LEVELS
from hiered.errors import ValidationError
from hiered.hed import HierarchicalED, broadcast
from hiered.predictor import PredictorModel, destandardize, prosody_from_conditioning, trunk


@dataclass(frozen=True)
class EditCommand:
    level: str
    index: int
    emotion: str
    set: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValidationError(f"edit level must be one of {LEVELS}, got {self.level!r}")
        if (self.set is None) == (self.scale is None):
            raise ValidationError("edit needs exactly one of 'set' or 'scale'")
        if self.set is not None and not 0.0 <= self.set <= 1.0:
            raise ValidationError(f"set value {self.set} outside [0, 1]")
        if self.scale is not None and not self.scale >= 0.0:
            raise ValidationError(f"scale factor {self.scale} must be >= 0")

    def to_dict(self) -> dict:
        d = {"level": self.level, "index": self.index, "emotion": self.emotion}
        d.update({"set": self.set} if self.set is not None else {"scale": self.scale})
        return d


ControlSchedule = list  # ordered EditCommands; later edits win


def parse_edits(doc) -> list[EditCommand]:
    if not isinstance(doc, list):
        raise ValidationError("edits document must be a JSON list")
    out = []
    for i, e in enumerate(doc):
        if not isinstance(e, dict):
            raise ValidationError(f"edit {i}: expected an object")
        unknown = set(e) - {"level", "index", "emotion", "set", "scale"}
        if unknown:
            raise ValidationError(f"edit {i}: unknown keys {sorted(unknown)}")
        try:
            out.append(EditCommand(e["level"], int(e.get("index", 0)), e["emotion"],
                                   None if e.get("set") is None else float(e["set"]),
                                   None if e.get("scale") is None else float(e["scale"])))
        except KeyError as k:
            raise ValidationError(f"edit {i}: missing field {k.args[0]!r}") from None
    return out


def load_edits(path) -> list[EditCommand]:
    return parse_edits(json.loads(Path(path).read_text()))


def _slot(hed: HierarchicalED, cmd: EditCommand):
    if cmd.emotion not in hed.emotions:
        raise ValidationError(f"unknown emotion {cmd.emotion!r}; known: {list(hed.emotions)}")
    col = hed.emotions.index(cmd.emotion)
    if cmd.level == "utterance":
        return hed.utterance, (col,)
    mat = hed.words if cmd.level == "word" else hed.phonemes
    if not 0 <= cmd.index < mat.shape[0]:
        raise ValidationError(f"{cmd.level} index {cmd.index} out of range [0, {mat.shape[0]})")
    return mat, (cmd.index, col)


def apply(hed: HierarchicalED, schedule) -> HierarchicalED:
    """Apply edits in order to a copy of ``hed``; scaled values clamp to [0, 1]."""
    out = hed.copy()
    for cmd in schedule:
        arr, idx = _slot(out, cmd)
        if cmd.set is not None:
            arr[idx] = cmd.set
        else:
            arr[idx] = min(1.0, arr[idx] * cmd.scale)
    return out


def sweep(m: PredictorModel, tokens, word_ids, base: HierarchicalED, targets,
          lo: float = 0.0, hi: float = 1.0):
    """Prosody (physical units) with the targeted slots set to ``lo`` and to ``hi``.

    ``targets`` is a sequence of ``(level, index, emotion)``. Both runs share
    the trunk output; only the conditioning rows differ.
    """
    for v in (lo, hi):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"sweep bound {v} outside [0, 1]")
    h = trunk(m, tokens, word_ids)
    out = []
    for value in (lo, hi):
        edited = apply(base, [EditCommand(lv, idx, emo, set=value) for lv, idx, emo in targets])
        cond = broadcast(edited, word_ids)
        out.append(destandardize(m, prosody_from_conditioning(m, h, cond)))
    return out[0], out[1]


def render(m: PredictorModel, tokens, word_ids, hed: HierarchicalED) -> np.ndarray:
    """Physical per-phoneme prosody for a (possibly edited) ED."""
    h = trunk(m, tokens, word_ids)
    return destandardize(m, prosody_from_conditioning(m, h, broadcast(hed, word_ids)))
