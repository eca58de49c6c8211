"""
Minimal RIFF/WAVE reader and writer plus framing arithmetic.

Only uncompressed PCM16 and IEEE float32 are read. Everything is folded to
a single channel; PCM16 is scaled by 1/32768 so that every representable
value round-trips exactly.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hiered.errors import ValidationError, WavFormatError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

PCM16_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError(f"samples must be 1-D, got shape {samples.shape}")
        if int(self.sample_rate) <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and (not np.all(np.isfinite(samples)) or np.max(np.abs(samples)) > 1.0):
            raise ValidationError("samples must be finite and lie in [-1, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class FrameGrid:
    frame_length: int
    hop_length: int
    n_frames: int

    def starts(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.hop_length

    def centers(self) -> np.ndarray:
        """Frame centres in samples (may be half-integers)."""
        return self.starts() + self.frame_length / 2.0


def n_frames_for(n_samples: int, frame_length: int, hop_length: int) -> int:
    if n_samples < frame_length:
        return 0
    return (n_samples - frame_length) // hop_length + 1


def frame(clip: AudioClip, frame_ms: float = 25.0, hop_ms: float = 10.0) -> FrameGrid:
    if not (frame_ms >= hop_ms > 0):
        raise ValidationError(f"need frame_ms >= hop_ms > 0, got {frame_ms}, {hop_ms}")
    frame_length = int(round(frame_ms * clip.sample_rate / 1000.0))
    hop_length = int(round(hop_ms * clip.sample_rate / 1000.0))
    if hop_length < 1:
        raise ValidationError(f"hop of {hop_ms} ms is shorter than one sample")
    return FrameGrid(frame_length, hop_length, n_frames_for(len(clip), frame_length, hop_length))


def frame_matrix(clip: AudioClip, grid: FrameGrid) -> np.ndarray:
    """(n_frames, frame_length) matrix of samples; row i is frame i."""
    if grid.n_frames == 0:
        return np.zeros((0, grid.frame_length))
    idx = grid.starts()[:, None] + np.arange(grid.frame_length)[None, :]
    return clip.samples[idx]


def _read_fmt(body: bytes, offset: int):
    if len(body) < 16:
        raise WavFormatError("fmt chunk shorter than 16 bytes", offset)
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 26:
            raise WavFormatError("WAVE_FORMAT_EXTENSIBLE fmt chunk too short", offset)
        # first two bytes of the SubFormat GUID carry the real format code
        tag = struct.unpack("<H", body[24:26])[0]
    return tag, channels, rate, block_align, bits


def read_wav(path) -> AudioClip:
    """Read a PCM16 or float32 WAV file and return it as a mono clip.

    Chunks may appear in any order; unknown chunks are skipped. Errors
    raise :class:`WavFormatError` carrying the byte offset of the problem.
    """
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise WavFormatError("file shorter than RIFF header", 0)
    riff, _size, wave = struct.unpack("<4sI4s", data[:12])
    if riff != b"RIFF":
        raise WavFormatError(f"expected 'RIFF', found {riff!r}", 0)
    if wave != b"WAVE":
        raise WavFormatError(f"expected 'WAVE', found {wave!r}", 8)

    fmt = None
    pcm = None
    pcm_offset = None
    pos = 12
    while pos + 8 <= len(data):
        cid, csize = struct.unpack("<4sI", data[pos:pos + 8])
        body_start = pos + 8
        if cid == b"fmt ":
            if body_start + csize > len(data):
                raise WavFormatError("truncated fmt chunk", pos)
            fmt = _read_fmt(data[body_start:body_start + csize], pos)
        elif cid == b"data":
            pcm = (body_start, csize)
            pcm_offset = pos
        pos = body_start + csize + (csize & 1)

    if fmt is None:
        raise WavFormatError("missing fmt chunk", len(data))
    if pcm is None:
        raise WavFormatError("missing data chunk", len(data))
    tag, channels, rate, block_align, bits = fmt
    if tag == WAVE_FORMAT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise WavFormatError(f"unsupported format code 0x{tag:04X} with {bits} bits", 20)
    if channels not in (1, 2):
        raise WavFormatError(f"unsupported channel count {channels}", 22)
    if rate <= 0:
        raise WavFormatError("sample rate must be positive", 24)
    frame_bytes = dtype.itemsize * channels
    if block_align != frame_bytes:
        raise WavFormatError(f"block align {block_align} != {frame_bytes}", 32)

    start, declared = pcm
    available = len(data) - start
    if declared > available:
        if declared - available > frame_bytes:
            raise WavFormatError(
                f"data chunk declares {declared} bytes but only {available} present", pcm_offset)
        declared = available
    n = declared // frame_bytes
    raw = np.frombuffer(data, dtype=dtype, count=n * channels, offset=start)
    raw = raw.reshape(n, channels).astype(np.float64)
    if tag == WAVE_FORMAT_PCM:
        raw /= PCM16_SCALE
    else:
        raw = np.clip(raw, -1.0, 1.0)
    return AudioClip(raw.mean(axis=1), rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write ``clip`` as mono PCM16."""
    q = np.clip(np.round(clip.samples * PCM16_SCALE), -32768, 32767).astype("<i2")
    body = q.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(body), b"WAVE",
        b"fmt ", 16, WAVE_FORMAT_PCM, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16,
        b"data", len(body),
    )
    Path(path).write_bytes(header + body)
