"""End-to-end glue: audio + alignments -> features -> rankers -> HED -> predictor."""
from __future__ import annotations

import numpy as np

from hiered import predictor
from hiered.alignment import UNLABELED, check_duration
from hiered.audio_io import read_wav
from hiered.features import FeatureConfig, extract_tracks, utterance_features
from hiered.hed import conditioning, extract_hed
from hiered.predictor import TrainingExample, prosody_targets
from hiered.ranking import build_dataset, train_ranker


def corpus_features(utterances, cfg: FeatureConfig = FeatureConfig(), clips=None):
    """Features of every utterance, in input order.

    ``clips`` optionally maps utterance id -> AudioClip to skip reading WAVs.
    """
    out = []
    for u in utterances:
        clip = clips[u.id] if clips is not None else read_wav(u.resolved_audio())
        check_duration(u, clip.duration)
        out.append(utterance_features(u, extract_tracks(clip, cfg)))
    return out


def train_rankers(feats, emotions, C=1.0, epochs=200, scope="pooled", seed=0):
    return {e: train_ranker(build_dataset(feats, e, scope), C=C, epochs=epochs, seed=seed,
                            emotion=e, level_scope=scope)
            for e in sorted(emotions)}


def extract_heds(utterances, feats, rankers):
    by_id = {f.id: f for f in feats}
    return [extract_hed(u, by_id.get(u.id), rankers) for u in utterances]


def build_vocab(utterances) -> dict[str, int]:
    symbols = sorted({p.symbol for u in utterances for p in u.phonemes})
    return {s: i for i, s in enumerate(symbols)}


def training_examples(utterances, feats, heds, vocab):
    """Examples with standardized prosody targets plus the (mean, std) used."""
    by_id = {f.id: f for f in feats}
    raw = [prosody_targets(by_id[u.id].phoneme) for u in utterances]
    stacked = np.vstack(raw)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    examples = []
    for u, hed, r in zip(utterances, heds, raw):
        examples.append(TrainingExample(
            u.id,
            [vocab[p.symbol] for p in u.phonemes],
            u.word_index_per_phoneme(),
            conditioning(hed, u),
            (r - mean) / std,
        ))
    return examples, mean, std


def fit_predictor(utterances, feats, heds, epochs, lr, seed, momentum=0.9, weight_decay=0.0):
    vocab = build_vocab(utterances)
    examples, mean, std = training_examples(utterances, feats, heds, vocab)
    emotions = heds[0].emotions
    model = predictor.init_model(vocab, emotions, seed, mean, std)
    return predictor.train(examples, epochs, lr, seed, momentum, model=model,
                         weight_decay=weight_decay)


def labelled(utterances):
    return [u for u in utterances if u.emotion_label != UNLABELED]
