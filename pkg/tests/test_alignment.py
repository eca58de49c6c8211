import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_utt
from hiered.alignment import (AlignmentError, check_duration, from_dict, load_corpus,
                              parse_alignment, segments_of, to_dict)

HI = {"id": "hi", "emotion": "Happy", "audio": "hi.wav", "words": [
    {"text": "hi", "start": 0.0, "end": 0.4, "phonemes": [
        {"symbol": "HH", "start": 0.0, "end": 0.2},
        {"symbol": "AY", "start": 0.2, "end": 0.4}]}]}


def _doc(**phones):
    doc = json.loads(json.dumps(HI))
    for i, (a, b) in phones.items():
        doc["words"][0]["phonemes"][int(i[1:])].update(start=a, end=b)
    return doc


def test_minimal_instance(tmp_path):
    p = tmp_path / "hi.json"
    p.write_text(json.dumps(HI))
    u = parse_alignment(p)
    assert [ph.symbol for ph in u.phonemes] == ["HH", "AY"]
    assert u.resolved_audio() == tmp_path / "hi.wav"


def test_overlap_names_phoneme():
    with pytest.raises(AlignmentError, match="'AY'"):
        from_dict(_doc(p0=(0.0, 0.25)))


def test_containment():
    with pytest.raises(AlignmentError, match="outside word span"):
        from_dict(_doc(p1=(0.5, 0.6)))


def test_unknown_label_and_missing_field():
    with pytest.raises(AlignmentError, match="unknown emotion"):
        from_dict(dict(HI, emotion="Bored"))
    doc = json.loads(json.dumps(HI))
    del doc["words"][0]["phonemes"][1]["symbol"]
    with pytest.raises(AlignmentError, match="phoneme 1"):
        from_dict(doc)


def test_unlabeled_allowed():
    assert from_dict(dict(HI, emotion="unlabeled")).emotion_label == "unlabeled"


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(AlignmentError):
        parse_alignment(p)


def test_segments_by_level():
    u = make_utt(words=(("ab", (("A", 0.1, 0.2), ("B", 0.2, 0.3))), ("c", (("C", 0.35, 0.5),))))
    assert [s[0] for s in segments_of(u, "word")] == ["u/word/0", "u/word/1"]
    assert segments_of(u, "utterance") == [("u/utterance/0", 0.1, 0.5)]
    assert len(segments_of(u, "phoneme")) == 3
    assert u.word_index_per_phoneme() == [0, 0, 1]


def test_check_duration():
    u = from_dict(HI)
    check_duration(u, 0.4)
    with pytest.raises(AlignmentError):
        check_duration(u, 0.3)


def test_load_corpus_sorted_and_unique(tmp_path):
    for name, uid in [("b.json", "zz"), ("a.json", "aa")]:
        (tmp_path / name).write_text(json.dumps(dict(HI, id=uid)))
    assert [u.id for u in load_corpus(tmp_path)] == ["aa", "zz"]
    (tmp_path / "c.json").write_text(json.dumps(dict(HI, id="aa")))
    with pytest.raises(AlignmentError, match="duplicate"):
        load_corpus(tmp_path)
    with pytest.raises(OSError):
        load_corpus(tmp_path / "nope")


@st.composite
def hierarchies(draw):
    t = draw(st.floats(0, 1))
    words = []
    for wi in range(draw(st.integers(1, 4))):
        t += draw(st.floats(0, 0.2))
        phones = []
        for pi in range(draw(st.integers(1, 4))):
            d = draw(st.floats(0.01, 0.3))
            phones.append((f"P{pi}", round(t, 3), round(t + d, 3)))
            t = round(t + d, 3)
        words.append((f"w{wi}", tuple(phones)))
    return make_utt(words=tuple(words))


@settings(max_examples=100, deadline=None)
@given(hierarchies())
def test_nesting_property(u):
    ph, wd, ut = (segments_of(u, lv) for lv in ("phoneme", "word", "utterance"))
    assert len(ph) >= len(wd) >= 1 and len(ut) == 1
    for _, a, b in ph:
        assert sum(1 for _, c, d in wd if c <= a and b <= d) == 1
    for _, a, b in wd:
        assert ut[0][1] <= a and b <= ut[0][2]
    assert from_dict(to_dict(u)) == u
