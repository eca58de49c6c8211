import struct

import numpy as np
import pytest

from hiered import pipeline
from hiered.alignment import from_dict
from hiered.syncorpus import CorpusSpec, synthesize


def make_utt(uid="u", emotion="Neutral", words=(("a", (("AA", 0.0, 0.2), ("B", 0.2, 0.4))),)):
    """Alignment from ``(text, ((symbol, start, end), ...))`` word tuples."""
    doc = {"id": uid, "emotion": emotion, "audio": f"{uid}.wav", "words": []}
    for text, phones in words:
        doc["words"].append({
            "text": text, "start": phones[0][1], "end": phones[-1][2],
            "phonemes": [{"symbol": s, "start": a, "end": b} for s, a, b in phones],
        })
    return from_dict(doc)


def wav_bytes(fmt_tag, channels, rate, bits, payload, *, extra_chunks=b"", data_size=None,
              fmt_first=True):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_tag, channels, rate, rate * block, block, bits)
    fmt_chunk = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    size = len(payload) if data_size is None else data_size
    data_chunk = b"data" + struct.pack("<I", size) + payload
    body = (fmt_chunk + extra_chunks + data_chunk) if fmt_first else (data_chunk + extra_chunks + fmt_chunk)
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


@pytest.fixture(scope="session")
def small_corpus():
    """10 short utterances (2 per label) as (alignments, clips by id)."""
    spec = CorpusSpec(n_per_emotion=2, words_per_utterance=2, phonemes_per_word=2, seed=3)
    pairs = list(synthesize(spec))
    return [u for u, _ in pairs], {u.id: c for u, c in pairs}


@pytest.fixture(scope="session")
def small_pipeline(small_corpus):
    utts, clips = small_corpus
    feats = pipeline.corpus_features(utts, clips=clips)
    rankers = pipeline.train_rankers(feats, ["Angry", "Happy", "Sad", "Surprise"], epochs=20)
    heds = pipeline.extract_heds(utts, feats, rankers)
    model, losses = pipeline.fit_predictor(utts, feats, heds, epochs=10, lr=0.01, seed=0)
    return {"utts": utts, "feats": feats, "rankers": rankers, "heds": heds,
            "model": model, "losses": losses}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
