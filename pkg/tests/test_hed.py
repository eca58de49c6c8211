import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_utt
from hiered import pipeline
from hiered.errors import ValidationError
from hiered.features import UtteranceFeatures
from hiered.hed import HierarchicalED, conditioning, extract_hed, load_hed, order_rankers, save_hed
from hiered.ranking import Ranker

EMOS = ("Angry", "Happy", "Sad", "Surprise")
TWO_WORDS = (("ab", (("A", 0.0, 0.1), ("B", 0.1, 0.2))), ("c", (("C", 0.2, 0.3),)))


def ranker(emotion, w, norm=(0.0, 1.0), dim=3):
    return Ranker(emotion, "pooled", np.full(dim, float(w)), 0.0, norm[0], norm[1], 1.0, 0,
                  np.zeros(dim), np.ones(dim))


def feats_for(u, rng, dim=3):
    n_w, n_p = len(u.words), len(u.phonemes)
    return UtteranceFeatures(u.id, u.emotion_label, rng.normal(size=(n_p, dim)),
                             rng.normal(size=(n_w, dim)), rng.normal(size=(1, dim)))


def test_single_segment_shapes(rng):
    u = make_utt(words=(("a", (("A", 0.0, 0.1),)),))
    hed = extract_hed(u, feats_for(u, rng), [ranker(e, 1.0) for e in EMOS])
    assert hed.utterance.shape == (4,) and hed.words.shape == (1, 4) and hed.phonemes.shape == (1, 4)
    for lv in ("utterance", "word", "phoneme"):
        assert np.all((hed.level(lv) >= 0) & (hed.level(lv) <= 1))


def test_degenerate_rankers_give_half(rng):
    u = make_utt(words=TWO_WORDS)
    hed = extract_hed(u, feats_for(u, rng), [ranker(e, 0.0, (0.0, 0.0)) for e in EMOS])
    assert hed.phonemes.shape == (3, 4)
    for lv in ("utterance", "word", "phoneme"):
        assert np.all(hed.level(lv) == 0.5)


def test_rankers_sorted_alphabetically(rng):
    u = make_utt(words=TWO_WORDS)
    hed = extract_hed(u, feats_for(u, rng), [ranker(e, 1.0) for e in reversed(EMOS)])
    assert hed.emotions == EMOS


def test_ranker_consistency_checks():
    with pytest.raises(ValidationError, match="duplicate"):
        order_rankers([ranker("Sad", 1), ranker("Sad", 2)])
    with pytest.raises(ValidationError, match="dimension"):
        order_rankers([ranker("Sad", 1), ranker("Angry", 1, dim=4)])


def test_missing_features(rng):
    u = make_utt(words=TWO_WORDS)
    with pytest.raises(ValidationError):
        extract_hed(u, None, [ranker("Sad", 1)])


def test_conditioning_layout(rng):
    u = make_utt(words=TWO_WORDS)
    hed = HierarchicalED("u", EMOS, rng.uniform(size=4), rng.uniform(size=(2, 4)), rng.uniform(size=(3, 4)))
    c = conditioning(hed, u)
    assert c.shape == (3, 12)
    np.testing.assert_array_equal(c[0, 4:8], c[1, 4:8])
    np.testing.assert_array_equal(c[2, 4:8], hed.words[1])
    np.testing.assert_array_equal(c[:, 8:], np.tile(hed.utterance, (3, 1)))
    np.testing.assert_array_equal(c[:, :4], hed.phonemes)


def test_single_word_slices_not_forced_equal():
    u = make_utt(words=(("a", (("A", 0.0, 0.1),)),))
    hed = HierarchicalED("u", EMOS, [0.1] * 4, [[0.9] * 4], [[0.5] * 4])
    c = conditioning(hed, u)
    assert not np.array_equal(c[0, 4:8], c[0, 8:])


def test_conditioning_shape_mismatch():
    u = make_utt(words=TWO_WORDS)
    hed = HierarchicalED("u", EMOS, [0.1] * 4, [[0.9] * 4], [[0.5] * 4])
    with pytest.raises(ValidationError):
        conditioning(hed, u)


def test_range_invariant():
    with pytest.raises(ValidationError):
        HierarchicalED("u", EMOS, [1.2, 0, 0, 0], np.zeros((1, 4)), np.zeros((1, 4)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_round_trip_nine_digits(tmp_path_factory, n_words, n_phon, seed):
    r = np.random.default_rng(seed)
    hed = HierarchicalED("x", EMOS, r.uniform(size=4), r.uniform(size=(n_words, 4)),
                         r.uniform(size=(n_phon, 4)))
    path = tmp_path_factory.mktemp("hed") / "x.json"
    save_hed(hed, path)
    back = load_hed(path)
    for lv in ("utterance", "word", "phoneme"):
        np.testing.assert_allclose(back.level(lv), hed.level(lv), rtol=5e-9, atol=0)
    save_hed(back, path.with_name("y.json"))
    assert path.read_bytes() == path.with_name("y.json").read_bytes()


def test_permutation_purity(small_pipeline):
    utts, feats, rankers = small_pipeline["utts"], small_pipeline["feats"], small_pipeline["rankers"]
    order = np.random.default_rng(0).permutation(len(utts))
    shuffled = pipeline.extract_heds([utts[i] for i in order], [feats[i] for i in order], rankers)
    by_id = {h.id: h for h in small_pipeline["heds"]}
    for h in shuffled:
        assert h.to_dict() == by_id[h.id].to_dict()
