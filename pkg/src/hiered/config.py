"""Pipeline configuration: nested dataclasses loaded from strict JSON."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from hiered import EMOTIONS
from hiered.errors import ValidationError
from hiered.features import FeatureConfig
from hiered.ranking import SCOPES


@dataclass(frozen=True)
class RankingConfig:
    C: float = 1.0
    epochs: int = 200
    scope: str = "pooled"


@dataclass(frozen=True)
class PredictorConfig:
    lr: float = 0.01
    epochs: int = 100
    momentum: float = 0.9
    weight_decay: float = 0.01


@dataclass(frozen=True)
class ControlConfig:
    n_words: int = 5
    n_phonemes: int = 20
    lo: float = 0.0
    hi: float = 1.0


@dataclass(frozen=True)
class PipelineConfig:
    features: FeatureConfig = field(default_factory=FeatureConfig)
    emotions: tuple[str, ...] = EMOTIONS
    ranking: RankingConfig = field(default_factory=RankingConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    seed: int = 0

    def validate(self) -> "PipelineConfig":
        f = self.features
        if not (f.frame_ms >= f.hop_ms > 0):
            raise ValidationError("features: need frame_ms >= hop_ms > 0")
        if not (0 < f.f0_min < f.f0_max):
            raise ValidationError("features: need 0 < f0_min < f0_max")
        if not 0 <= f.voicing_threshold < 1:
            raise ValidationError("features: voicing_threshold must lie in [0, 1)")
        if not self.emotions or len(set(self.emotions)) != len(self.emotions):
            raise ValidationError("emotions must be a non-empty list without duplicates")
        if self.ranking.C <= 0 or self.ranking.epochs < 0:
            raise ValidationError("ranking: need C > 0 and epochs >= 0")
        if self.ranking.scope not in SCOPES:
            raise ValidationError(f"ranking: scope must be one of {SCOPES}")
        p = self.predictor
        if p.lr <= 0 or p.epochs < 0 or not 0 <= p.momentum < 1 or p.weight_decay < 0:
            raise ValidationError("predictor: need lr > 0, epochs >= 0, momentum in [0, 1), weight_decay >= 0")
        c = self.control
        if not (0 <= c.lo <= 1 and 0 <= c.hi <= 1) or c.n_words < 1 or c.n_phonemes < 1:
            raise ValidationError("control: bounds must lie in [0, 1] and counts be positive")
        return self


def _build(cls, doc, path):
    if not isinstance(doc, dict):
        raise ValidationError(f"config {path or 'root'}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(doc) - set(fields)
    if unknown:
        raise ValidationError(f"config {path or 'root'}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in doc.items():
        default = getattr(cls(), name)
        where = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        elif isinstance(default, tuple):
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ValidationError(f"config {where}: expected a list of strings")
            kwargs[name] = tuple(value)
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ValidationError(f"config {where}: expected a string, got {value!r}")
            kwargs[name] = value
        elif isinstance(default, bool) or not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValidationError(f"config {where}: expected a number, got {value!r}")
        elif isinstance(default, int) and not isinstance(value, int):
            raise ValidationError(f"config {where}: expected an integer, got {value!r}")
        else:
            kwargs[name] = type(default)(value)
    return cls(**kwargs)


def from_dict(doc: dict) -> PipelineConfig:
    return _build(PipelineConfig, doc, "").validate()


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig().validate()
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"config {path}: invalid JSON: {e}") from None
    return from_dict(doc)


def override(cfg: PipelineConfig, **changes) -> PipelineConfig:
    """Apply dotted-path overrides such as ``{"ranking.C": 2.0}``; ``None`` values are ignored."""
    for dotted, value in changes.items():
        if value is None:
            continue
        head, _, tail = dotted.partition(".")
        if tail:
            cfg = dataclasses.replace(cfg, **{head: dataclasses.replace(getattr(cfg, head), **{tail: value})})
        else:
            cfg = dataclasses.replace(cfg, **{head: value})
    return cfg.validate()


def to_dict(cfg: PipelineConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["emotions"] = list(cfg.emotions)
    return d
