"""
Deterministic synthetic emotional corpora built from harmonic tones.

Each phoneme is a three-harmonic tone with a linear F0 glide and a linear
log-amplitude ramp, so that its F0 mean/std, energy mean/std and duration are
all set directly by the generator. Symbols carry fixed intrinsic pitch and
length factors (the "linguistic" part); utterance emotions multiply the
matching prosodic quantity (the "emotional" part).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hiered.alignment import PhonemeSeg, UtteranceAlign, WordSeg, to_dict
from hiered.audio_io import AudioClip, write_wav
from hiered.errors import ValidationError

INVENTORY = ("AA", "AE", "AH", "AO", "EH", "ER", "IH", "IY",
             "OW", "UW", "L", "M", "N", "R", "W", "Y")
EFFECT_KEYS = ("duration", "f0_mean", "f0_std", "energy_mean", "energy_std")
HARMONICS = (1.0, 0.5, 0.25)


def default_effects() -> dict[str, dict[str, float]]:
    return {
        "Angry": {"energy_std": 1.5},
        "Happy": {"f0_mean": 1.3},
        "Sad": {"duration": 1.4, "energy_mean": 0.7},
        "Surprise": {"f0_std": 1.6},
    }


@dataclass(frozen=True)
class CorpusSpec:
    emotions: tuple[str, ...] = ("Neutral", "Angry", "Happy", "Sad", "Surprise")
    n_per_emotion: int = 20
    words_per_utterance: int = 4
    phonemes_per_word: int = 3
    lexicon_size: int = 40
    f0: float = 180.0
    amplitude: float = 0.3
    phoneme_duration: float = 0.12
    f0_glide_hz: float = 30.0        # half-depth of the in-phoneme F0 glide
    energy_ramp: float = 0.3         # half-depth of the in-phoneme log-amplitude ramp
    noise: float = 0.05
    word_spread: float = 0.0         # per-word effect exponent drawn from 1 +- word_spread
    edge_silence: float = 0.05
    sample_rate: int = 16000
    effects: dict = field(default_factory=default_effects)
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.word_spread <= 1:
            raise ValidationError("word_spread must lie in [0, 1]")
        for name in ("n_per_emotion", "words_per_utterance", "phonemes_per_word", "lexicon_size"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        for emo, eff in self.effects.items():
            for k, v in eff.items():
                if k not in EFFECT_KEYS:
                    raise ValidationError(f"unknown effect {k!r} for {emo}")
                if not v > 0:
                    raise ValidationError(f"multiplier for {emo}/{k} must be > 0")

    def multipliers(self, emotion: str, strength: float = 1.0) -> dict[str, float]:
        """Planted multipliers, each raised to ``strength`` (1 = nominal)."""
        out = dict.fromkeys(EFFECT_KEYS, 1.0)
        out.update({k: v ** strength for k, v in self.effects.get(emotion, {}).items()})
        return out


def symbol_factors() -> dict[str, tuple[float, float]]:
    """Fixed intrinsic (pitch, duration) factors per symbol, each averaging 1."""
    rng = np.random.default_rng(20240)
    n = len(INVENTORY)
    pitch = rng.permutation(np.linspace(0.9, 1.1, n))
    length = rng.permutation(np.linspace(0.85, 1.15, n))
    return {s: (float(p), float(d)) for s, p, d in zip(INVENTORY, pitch, length)}


def _tone(n, f0, glide_hz, amp, ramp, sr, phase, rng):
    u = np.linspace(-1.0, 1.0, n)
    sf = rng.choice([-1.0, 1.0])
    se = rng.choice([-1.0, 1.0])
    inst = f0 + sf * glide_hz * u
    ph = phase + 2 * np.pi * np.cumsum(inst) / sr
    env = amp * np.exp(se * ramp * u)
    wave = sum(a * np.sin((k + 1) * ph) for k, a in enumerate(HARMONICS)) / sum(HARMONICS)
    return env * wave, ph[-1]


def synthesize(spec: CorpusSpec):
    """Yield ``(UtteranceAlign, AudioClip)`` for every utterance, in generation order."""
    rng = np.random.default_rng(spec.seed)
    factors = symbol_factors()
    lexicon = [tuple(rng.choice(INVENTORY, spec.phonemes_per_word)) for _ in range(spec.lexicon_size)]
    sr = spec.sample_rate

    def jitter():
        return 1.0 + rng.uniform(-spec.noise, spec.noise)

    for emotion in spec.emotions:
        for k in range(spec.n_per_emotion):
            uid = f"{emotion.lower()}_{k:03d}"
            pieces = [np.zeros(int(round(spec.edge_silence * sr)))]
            cursor = len(pieces[0])
            phase = 0.0
            words = []
            for wi in rng.integers(0, spec.lexicon_size, spec.words_per_utterance):
                w_start = cursor
                mult = spec.multipliers(emotion, 1.0 + rng.uniform(-spec.word_spread, spec.word_spread))
                phones = []
                for sym in lexicon[wi]:
                    pf, df = factors[sym]
                    n = int(round(spec.phoneme_duration * df * mult["duration"] * jitter() * sr))
                    wave, phase = _tone(
                        n,
                        f0=spec.f0 * pf * mult["f0_mean"] * jitter(),
                        glide_hz=spec.f0_glide_hz * mult["f0_std"] * jitter(),
                        amp=spec.amplitude * mult["energy_mean"] * jitter(),
                        ramp=spec.energy_ramp * mult["energy_std"] * jitter(),
                        sr=sr, phase=phase, rng=rng)
                    pieces.append(wave)
                    phones.append(PhonemeSeg(str(sym), cursor / sr, (cursor + n) / sr))
                    cursor += n
                text = "w" + "".join(s.lower() for s in lexicon[wi])
                words.append(WordSeg(text, w_start / sr, cursor / sr, tuple(phones)))
            pieces.append(np.zeros(int(round(spec.edge_silence * sr))))
            clip = AudioClip(np.clip(np.concatenate(pieces), -1.0, 1.0), sr)
            yield UtteranceAlign(uid, emotion, tuple(words), f"{uid}.wav"), clip


def generate(spec: CorpusSpec, out_dir) -> list[UtteranceAlign]:
    """Write ``<id>.wav`` and ``<id>.json`` per utterance into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    utts = []
    for u, clip in synthesize(spec):
        write_wav(out_dir / f"{u.id}.wav", clip)
        (out_dir / f"{u.id}.json").write_text(json.dumps(to_dict(u), indent=1) + "\n")
        utts.append(UtteranceAlign(u.id, u.emotion_label, u.words, u.audio_path,
                                   str(out_dir / f"{u.id}.json")))
    return utts
