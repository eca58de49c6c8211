import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import gaussian_instance, grid_svm, one_d_instance
from hiered.errors import NumericalError, ValidationError
from hiered.evalmetrics import pairwise_accuracy
from hiered.features import UtteranceFeatures
from hiered.ranking import (Ranker, RankingDataset, build_dataset, intensity, load_ranker,
                            objective, save_ranker, train_ranker)


def uf(uid, emotion, n_phon=3, n_words=2, dim=4, fill=0.0):
    z = lambda n: np.full((n, dim), fill)
    return UtteranceFeatures(uid, emotion, z(n_phon), z(n_words), z(1))


def fixed(norm_min, norm_max, w=(1.0,), b=0.0):
    d = len(w)
    return Ranker("Happy", "pooled", np.array(w), b, norm_min, norm_max, 1.0, 0,
                  np.zeros(d), np.ones(d))


def test_utterance_scope_labels():
    corpus = [uf("h1", "Happy"), uf("h2", "Happy"), uf("s1", "Sad"), uf("s2", "Sad")]
    ds = build_dataset(corpus, "Happy", "utterance")
    assert len(ds.positives) == 2 and len(ds.negatives) == 2


def test_pooled_counts_every_level():
    ds = build_dataset([uf("a", "Happy"), uf("b", "Sad")], "Happy", "pooled")
    assert len(ds.y) == 12
    assert ds.keys[:3] == ["a/phoneme/0", "a/phoneme/1", "a/phoneme/2"]


def test_single_class_and_unlabeled():
    corpus = [uf("a", "Happy"), uf("b", "Sad"), uf("c", "unlabeled")]
    with pytest.raises(ValidationError, match="single-class"):
        build_dataset(corpus, "Angry")
    assert len(build_dataset(corpus, "Happy").y) == 12
    with pytest.raises(ValidationError):
        build_dataset(corpus, "Happy", "sentence")


def test_one_d_matches_grid_oracle():
    ds = one_d_instance()
    r = train_ranker(ds, C=1.0, epochs=200, standardize=False)
    grid_obj, grid_w, _ = grid_svm(ds.X, ds.y)
    assert objective(r, ds) <= 1.05 * grid_obj
    assert np.sign(r.w[0]) == np.sign(grid_w[0]) == 1
    assert r.score(ds.positives).min() > r.score(ds.negatives).max()


def test_history_non_increasing():
    r = train_ranker(gaussian_instance(d=5, n=30), epochs=40)
    assert len(r.history) == 40
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))


def test_zero_epochs():
    r = train_ranker(one_d_instance(), epochs=0)
    np.testing.assert_array_equal(r.score(np.array([[5.0], [-3.0]])), 0.0)


def test_contradictory_pair():
    ds = RankingDataset(np.array([[1.0, 2.0], [1.0, 2.0]]), np.array([1, -1]))
    r = train_ranker(ds, epochs=20)
    assert np.isfinite(objective(r, ds))
    assert pairwise_accuracy(r, ds) <= 0.5


def test_non_finite_features():
    ds = RankingDataset(np.array([[np.nan], [1.0]]), np.array([1, -1]))
    with pytest.raises(NumericalError):
        train_ranker(ds)


def test_bad_c():
    with pytest.raises(ValidationError):
        train_ranker(one_d_instance(), C=0)


def test_gaussian_accuracy():
    ds = gaussian_instance()
    assert pairwise_accuracy(train_ranker(ds, seed=42), ds) >= 0.95


def test_two_d_order_matches_oracle():
    X = np.array([[2.0, 0.5], [3.0, 1.5], [2.5, -0.5], [0.0, 0.2], [0.5, -1.0], [-1.0, 0.4]])
    y = np.array([1, 1, 1, -1, -1, -1])
    ds = RankingDataset(X, y)
    _, w, b = grid_svm(X, y, step=0.05)
    r = train_ranker(ds, epochs=300)
    np.testing.assert_array_equal(np.argsort(r.score(X)), np.argsort(X @ w + b))


@pytest.mark.parametrize("score, bounds, expected", [
    (4.0, (2.0, 6.0), 0.5),
    (10.0, (2.0, 6.0), 1.0),
    (-10.0, (2.0, 6.0), 0.0),
    (3.0, (3.0, 3.0), 0.5),
])
def test_intensity_rule(score, bounds, expected):
    assert intensity(fixed(*bounds), np.array([score])) == expected


def test_intensity_dimension_mismatch():
    with pytest.raises(ValidationError):
        intensity(fixed(0, 1), np.zeros(3))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=20), st.floats(-10, 10), st.floats(0, 10))
def test_intensity_monotone(scores, lo, width):
    r = fixed(lo, lo + width)
    s = np.sort(np.array(scores))
    v = intensity(r, s[:, None])
    assert np.all(np.diff(v) >= 0)
    assert np.all((v >= 0) & (v <= 1))


def test_serialization_round_trip_and_determinism(tmp_path):
    ds = gaussian_instance(d=4, n=20)
    a = train_ranker(ds, epochs=10, seed=3, emotion="Sad")
    b = train_ranker(ds, epochs=10, seed=3, emotion="Sad")
    save_ranker(a, tmp_path / "a.json")
    save_ranker(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    back = load_ranker(tmp_path / "a.json")
    assert back.to_dict() == a.to_dict()
    np.testing.assert_array_equal(back.w, a.w)
    doc = json.loads((tmp_path / "a.json").read_text())
    assert set(doc) == {"emotion", "level_scope", "w", "b", "norm_min", "norm_max", "C", "seed",
                        "feature_dim", "standardization"}


def test_malformed_ranker_file(tmp_path):
    p = tmp_path / "r.json"
    p.write_text(json.dumps({"emotion": "Sad"}))
    with pytest.raises(ValidationError):
        load_ranker(p)
