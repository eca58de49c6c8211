"""
Frame-level F0 / log-energy tracks and the 12-dim per-segment feature vector.

F0 comes from the peak of the normalized autocorrelation inside the lag band
of [f0_min, f0_max]; a frame is voiced when that peak exceeds the voicing
threshold. Segment vectors are plain functionals over the frames whose
centres fall inside the segment.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hiered import LEVELS
from hiered.alignment import UtteranceAlign, segments_of
from hiered.audio_io import AudioClip, frame, frame_matrix
from hiered.errors import ValidationError

FEATURE_NAMES = (
    "f0_mean", "f0_std", "f0_min", "f0_max", "f0_range", "f0_slope",
    "energy_mean", "energy_std", "energy_min", "energy_max",
    "duration", "voiced_ratio",
)
FEATURE_DIM = len(FEATURE_NAMES)
RMS_FLOOR = 1e-6
# candidate peaks within this fraction of the best one prefer the shortest lag,
# which suppresses sub-octave picks on periodic signals
OCTAVE_TOLERANCE = 0.9


@dataclass(frozen=True)
class FeatureConfig:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    f0_min: float = 60.0
    f0_max: float = 400.0
    voicing_threshold: float = 0.3


@dataclass(frozen=True, eq=False)
class ProsodyTracks:
    f0: np.ndarray          # Hz, NaN where unvoiced
    log_energy: np.ndarray
    frame_length: int
    hop_length: int
    sample_rate: int

    @property
    def voiced(self) -> np.ndarray:
        return ~np.isnan(self.f0)

    @property
    def n_frames(self) -> int:
        return len(self.log_energy)

    def centers(self) -> np.ndarray:
        """Frame centre times in seconds."""
        return (np.arange(self.n_frames) * self.hop_length + self.frame_length / 2.0) / self.sample_rate


@dataclass(frozen=True, eq=False)
class SegmentFeatures:
    vector: np.ndarray

    def __getitem__(self, name: str) -> float:
        return float(self.vector[FEATURE_NAMES.index(name)])


def normalized_autocorrelation(frames: np.ndarray) -> np.ndarray:
    """r[i, tau] = sum x[n]x[n+tau] / sqrt(sum x[:L-tau]^2 * sum x[tau:]^2)."""
    n, L = frames.shape
    nfft = 1 << int(np.ceil(np.log2(2 * L)))
    spec = np.fft.rfft(frames, nfft, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, :L]
    sq = frames ** 2
    csum = np.concatenate([np.zeros((n, 1)), np.cumsum(sq, axis=1)], axis=1)
    lags = np.arange(L)
    head = csum[:, L - lags]                 # energy of x[0:L-tau]
    tail = csum[:, L:L + 1] - csum[:, lags]  # energy of x[tau:L]
    denom = np.sqrt(head * tail)
    out = np.zeros_like(acf)
    ok = denom > 1e-12 * max(float(csum[:, -1].max(initial=0.0)), 1e-300)
    out[ok] = acf[ok] / denom[ok]
    return out


def _pick_lag(r: np.ndarray, lo: int, hi: int, threshold: float):
    inner = np.arange(max(lo, 1), min(hi, len(r) - 2) + 1)
    if inner.size == 0:
        return None
    is_peak = (r[inner] >= r[inner - 1]) & (r[inner] > r[inner + 1])
    peaks = inner[is_peak]
    if peaks.size == 0:
        return None
    best = r[peaks].max()
    if best <= threshold:
        return None
    tau = int(peaks[r[peaks] >= OCTAVE_TOLERANCE * best][0])
    # parabolic refinement around the integer peak
    a, b, c = r[tau - 1], r[tau], r[tau + 1]
    den = a - 2 * b + c
    shift = 0.5 * (a - c) / den if den < 0 else 0.0
    return tau + float(np.clip(shift, -0.5, 0.5))


def extract_tracks(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> ProsodyTracks:
    nyquist = clip.sample_rate / 2.0
    if not (0 < cfg.f0_min < cfg.f0_max < nyquist):
        raise ValidationError(
            f"F0 band [{cfg.f0_min}, {cfg.f0_max}] must lie within (0, {nyquist})")
    grid = frame(clip, cfg.frame_ms, cfg.hop_ms)
    frames = frame_matrix(clip, grid)
    rms = np.sqrt(np.mean(frames ** 2, axis=1)) if grid.n_frames else np.zeros(0)
    log_energy = np.log(np.maximum(rms, RMS_FLOOR))

    f0 = np.full(grid.n_frames, np.nan)
    if grid.n_frames:
        centred = frames - frames.mean(axis=1, keepdims=True)
        r = normalized_autocorrelation(centred)
        lo = max(int(np.floor(clip.sample_rate / cfg.f0_max)), 1)
        hi = min(int(np.ceil(clip.sample_rate / cfg.f0_min)), grid.frame_length - 2)
        for i in range(grid.n_frames):
            tau = _pick_lag(r[i], lo, hi, cfg.voicing_threshold)
            if tau is None:
                continue
            hz = clip.sample_rate / tau
            if cfg.f0_min <= hz <= cfg.f0_max:
                f0[i] = hz
    return ProsodyTracks(f0, log_energy, grid.frame_length, grid.hop_length, clip.sample_rate)


def _frames_in_span(tracks: ProsodyTracks, start: float, end: float) -> np.ndarray:
    # compare in sample units rounded to 1e-3 sample so shifted spans select the same frames
    centers = np.arange(tracks.n_frames) * tracks.hop_length + tracks.frame_length / 2.0
    s = np.round(start * tracks.sample_rate, 3)
    e = np.round(end * tracks.sample_rate, 3)
    return np.flatnonzero((centers >= s) & (centers < e))


def segment_features(tracks: ProsodyTracks, span: tuple[float, float],
                     name: str = "segment") -> SegmentFeatures:
    """Reduce the frames of ``span`` (seconds, half-open) to the 12-dim vector.

    F0 statistics use voiced frames only and are zero when there are none.
    Standard deviations are population standard deviations.
    """
    start, end = span
    if not end > start:
        raise ValidationError(f"{name}: empty span [{start}, {end}]")
    idx = _frames_in_span(tracks, start, end)
    if idx.size == 0:
        raise ValidationError(f"{name}: span [{start}, {end}] covers no frame centre")
    energy = tracks.log_energy[idx]
    f0 = tracks.f0[idx]
    voiced = ~np.isnan(f0)
    vec = np.zeros(FEATURE_DIM)
    if voiced.any():
        fv = f0[voiced]
        tv = tracks.centers()[idx][voiced]
        slope = 0.0
        if fv.size > 1:
            dt = tv - tv.mean()
            slope = float(np.dot(dt, fv - fv.mean()) / np.dot(dt, dt))
        vec[0:6] = [fv.mean(), fv.std(), fv.min(), fv.max(), fv.max() - fv.min(), slope]
    vec[6:10] = [energy.mean(), energy.std(), energy.min(), energy.max()]
    vec[10] = end - start
    vec[11] = voiced.mean()
    return SegmentFeatures(vec)


@dataclass(eq=False)
class UtteranceFeatures:
    """Feature matrices of one utterance at each granularity level."""
    id: str
    emotion: str
    phoneme: np.ndarray
    word: np.ndarray
    utterance: np.ndarray

    def level(self, level: str) -> np.ndarray:
        if level not in LEVELS:
            raise ValidationError(f"unknown level {level!r}")
        return getattr(self, level)

    @property
    def dim(self) -> int:
        return self.utterance.shape[1]

    def items(self):
        for level in LEVELS:
            for i, row in enumerate(self.level(level)):
                yield f"{self.id}/{level}/{i}", row


def utterance_features(u: UtteranceAlign, tracks: ProsodyTracks) -> UtteranceFeatures:
    mats = {}
    for level in LEVELS:
        rows = [segment_features(tracks, (s, e), key).vector for key, s, e in segments_of(u, level)]
        mats[level] = np.vstack(rows)
    return UtteranceFeatures(u.id, u.emotion_label, **mats)


def from_table(u: UtteranceAlign, table: dict[str, np.ndarray]) -> UtteranceFeatures:
    """Assemble an utterance's matrices from a key -> vector map (e.g. a CSV)."""
    mats = {}
    for level in LEVELS:
        rows = []
        for key, _, _ in segments_of(u, level):
            if key not in table:
                raise ValidationError(f"missing features for segment {key}")
            rows.append(table[key])
        mats[level] = np.vstack(rows)
    return UtteranceFeatures(u.id, u.emotion_label, **mats)


def write_feature_csv(path, rows) -> None:
    """Write ``(key, vector)`` pairs with 9 significant digits."""
    rows = list(rows)
    dim = len(rows[0][1]) if rows else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key"] + [f"dim_{i}" for i in range(dim)])
        for key, vec in rows:
            if len(vec) != dim:
                raise ValidationError(f"{key}: dimension {len(vec)} != {dim}")
            w.writerow([key] + [f"{float(v):.9g}" for v in vec])


def load_feature_csv(path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return table
        if not header or header[0] != "key":
            raise ValidationError(f"{path}: line 1: header must start with 'key'")
        width = len(header)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise ValidationError(f"{path}: line {line}: expected {width} columns, got {len(row)}")
            key = row[0]
            if key in table:
                raise ValidationError(f"{path}: line {line}: duplicate key {key!r}")
            try:
                table[key] = np.array([float(v) for v in row[1:]])
            except ValueError:
                raise ValidationError(f"{path}: line {line}: non-numeric value") from None
    return table
