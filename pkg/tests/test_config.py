import json

import pytest

from hiered.config import PipelineConfig, from_dict, load_config, override, to_dict
from hiered.errors import ValidationError


def test_defaults_valid():
    cfg = load_config()
    assert cfg.emotions == ("Angry", "Happy", "Sad", "Surprise")
    assert cfg.ranking.scope == "pooled"


def test_round_trip(tmp_path):
    cfg = override(PipelineConfig(), **{"ranking.C": 2.5, "seed": 4})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(to_dict(cfg)))
    assert load_config(p) == cfg


@pytest.mark.parametrize("doc, match", [
    ({"bogus": 1}, "unknown keys"),
    ({"ranking": {"CC": 1}}, "ranking"),
    ({"ranking": {"C": -1}}, "C > 0"),
    ({"ranking": {"scope": "sentence"}}, "scope"),
    ({"predictor": {"epochs": 1.5}}, "integer"),
    ({"predictor": {"lr": "fast"}}, "number"),
    ({"emotions": ["Sad", "Sad"]}, "duplicates"),
    ({"features": {"frame_ms": 5, "hop_ms": 10}}, "frame_ms"),
    ({"control": {"hi": 2}}, "bounds"),
])
def test_rejections(doc, match):
    with pytest.raises(ValidationError, match=match):
        from_dict(doc)


def test_partial_config_keeps_defaults():
    cfg = from_dict({"predictor": {"epochs": 7}})
    assert cfg.predictor.epochs == 7
    assert cfg.predictor.lr == PipelineConfig().predictor.lr


def test_override_ignores_none_and_validates():
    cfg = PipelineConfig()
    assert override(cfg, **{"ranking.C": None}) == cfg
    with pytest.raises(ValidationError):
        override(cfg, **{"predictor.lr": 0.0})


def test_invalid_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{nope")
    with pytest.raises(ValidationError, match="invalid JSON"):
        load_config(p)
