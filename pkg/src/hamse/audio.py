"""
Audio input and chroma features.

``chroma_from_audio`` analyses a recording; ``chroma_from_score`` renders
the same 12 x F representation directly from the symbolic score, so the two
can be compared frame by frame without a synthesiser.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .score import Score

__all__ = [
    "WavError",
    "AudioClip",
    "Chromagram",
    "read_wav",
    "write_wav",
    "chroma_from_audio",
    "chroma_from_score",
    "event_velocity",
    "render_audio",
    "DYNAMIC_VELOCITY",
]

DEFAULT_VELOCITY = 80
DYNAMIC_VELOCITY = {
    "pppp": 8, "ppp": 16, "pp": 33, "p": 49, "mp": 64,
    "mf": 80, "f": 96, "ff": 112, "fff": 127, "ffff": 127,
}

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

_BLOCK_FRAMES = 512


class WavError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be mono")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True, eq=False)
class Chromagram:
    """12 x F pitch-class energies, one column every ``hop_s`` seconds.

    Column ``f`` describes time ``f * hop_s``. ``tempo_bpm`` is set for
    score renderings so frames can be mapped back to beats.
    """

    frames: np.ndarray
    hop_s: float
    origin: str
    tempo_bpm: Optional[float] = None

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] != 12 or frames.shape[1] < 1:
            raise ValueError(f"chromagram must be 12 x F with F >= 1, got {frames.shape}")
        if np.any(frames < 0):
            raise ValueError("chroma energies must be non-negative")
        if self.origin not in ("audio", "symbolic"):
            raise ValueError(f"unknown origin {self.origin!r}")
        if not self.hop_s > 0:
            raise ValueError("hop must be positive")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames * self.hop_s


def read_wav(data: bytes) -> AudioClip:
    """Decode RIFF/WAVE bytes (PCM 16-bit or float 32-bit, mono or stereo).

    Stereo is averaged to mono; 16-bit samples are divided by 32768.
    """
    data = bytes(data)
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavError("not a little-endian RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        tag = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if tag == b"fmt ":
            if len(body) < 16:
                raise WavError("truncated fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _WAVE_FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise WavError("truncated extensible fmt chunk")
                (sub,) = struct.unpack("<H", body[24:26])
                fmt = (sub,) + fmt[1:]
        elif tag == b"data":
            if len(body) < size:
                raise WavError(f"data chunk claims {size} bytes, only {len(body)} present")
            payload = body
            break
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise WavError("missing fmt chunk")
    if payload is None:
        raise WavError("missing data chunk")
    tag, channels, rate, _, block, bits = fmt
    if channels not in (1, 2):
        raise WavError(f"unsupported channel count {channels}")
    if tag == _WAVE_FORMAT_PCM and bits == 16:
        samples = np.frombuffer(payload[:len(payload) // 2 * 2], dtype="<i2").astype(np.float64) / 32768.0
    elif tag == _WAVE_FORMAT_FLOAT and bits == 32:
        samples = np.frombuffer(payload[:len(payload) // 4 * 4], dtype="<f4").astype(np.float64)
    else:
        raise WavError(f"unsupported format: tag {tag}, {bits} bits")
    if channels == 2:
        samples = samples[:len(samples) // 2 * 2].reshape(-1, 2).mean(axis=1)
    return AudioClip(samples, rate)


def write_wav(clip: AudioClip, float32: bool = False) -> bytes:
    """Encode a mono clip as 16-bit PCM (default) or 32-bit float WAV."""
    x = np.clip(clip.samples, -1.0, 1.0)
    if float32:
        payload = x.astype("<f4").tobytes()
        tag, bits = _WAVE_FORMAT_FLOAT, 32
    else:
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = _WAVE_FORMAT_PCM, 16
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, clip.sample_rate, clip.sample_rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def _normalize_columns(frames):
    peak = frames.max(axis=0)
    out = np.zeros_like(frames)
    nz = peak > 0
    out[:, nz] = frames[:, nz] / peak[nz]
    return out


def chroma_from_audio(clip: AudioClip, frame_len: int = 2048, hop: int = 512,
                      fmin: float = 55.0, fmax: float = 8000.0) -> Chromagram:
    """Short-time chroma of a recording.

    The signal is zero-padded by ``frame_len // 2`` on both sides so column
    ``f`` is centred on sample ``f * hop``. Each frame is Hann-windowed; the
    power of every FFT bin between ``fmin`` and ``fmax`` is added to the
    pitch class of its nearest equal-tempered pitch. Columns are scaled to a
    maximum of 1 (silent columns stay zero).
    """
    n = len(clip.samples)
    if n < frame_len:
        raise ValueError(f"clip has {n} samples, shorter than one frame ({frame_len})")
    sr = clip.sample_rate
    half = frame_len // 2
    padded = np.concatenate([np.zeros(half), clip.samples, np.zeros(half)])
    n_frames = 1 + n // hop
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(frame_len) / frame_len)
    freqs = np.arange(frame_len // 2 + 1) * sr / frame_len
    band = (freqs >= fmin) & (freqs <= fmax)
    pcs = np.round(12 * np.log2(freqs[band] / 440.0) + 69).astype(int) % 12
    mapping = np.zeros((12, band.sum()))
    mapping[pcs, np.arange(band.sum())] = 1.0

    chroma = np.empty((12, n_frames))
    offsets = np.arange(frame_len)[None, :]
    for start in range(0, n_frames, _BLOCK_FRAMES):
        stop = min(n_frames, start + _BLOCK_FRAMES)
        idx = offsets + hop * np.arange(start, stop)[:, None]
        power = np.abs(np.fft.rfft(padded[idx] * window, axis=1)) ** 2
        chroma[:, start:stop] = mapping @ power[:, band].T
    return Chromagram(_normalize_columns(chroma), hop / sr, "audio")


def event_velocity(event) -> int:
    dyn = event.dynamic
    if dyn is None:
        return DEFAULT_VELOCITY
    if dyn.midi_velocity is not None:
        return dyn.midi_velocity
    return DYNAMIC_VELOCITY.get(dyn.literal, DEFAULT_VELOCITY)


def _frame_index(seconds, hop_s):
    # tolerate representation error so 1.0 s / 0.1 s lands on frame 10
    return math.ceil(seconds / hop_s - 1e-9)


def chroma_from_score(score: Score, tempo_bpm: float, hop_s: float) -> Chromagram:
    """Chromagram rendered from notes instead of audio.

    Frame ``f`` (time ``f * hop_s``) receives ``velocity / 127`` in the pitch
    class of every note sounding at that time and half that weight a fifth
    above, standing in for the strongest overtone.
    """
    if not tempo_bpm > 0:
        raise ValueError("tempo must be positive")
    notes = [e for p in score.parts for e in p.events if not e.is_rest]
    if not score.n_events:
        raise ValueError("cannot render an empty score")
    spb = 60.0 / tempo_bpm
    n_frames = max(1, _frame_index(float(score.end_beats) * spb, hop_s))
    frames = np.zeros((12, n_frames))
    for e in notes:
        lo = _frame_index(float(e.onset) * spb, hop_s)
        hi = min(n_frames, _frame_index(float(e.offset) * spb, hop_s))
        if hi <= lo:
            continue
        w = event_velocity(e) / 127.0
        pc = e.midi_pitch % 12
        frames[pc, lo:hi] += w
        frames[(pc + 7) % 12, lo:hi] += w / 2
    return Chromagram(_normalize_columns(frames), hop_s, "symbolic", tempo_bpm)


def render_audio(score: Score, tempo_bpm: float, sample_rate: int = 22050,
                 stretch: float = 1.0, gain: float = 0.2) -> AudioClip:
    """Additive sine rendering of a score (fundamental plus third harmonic).

    Used to produce deterministic test recordings; ``stretch`` scales every
    time value.
    """
    spb = 60.0 / tempo_bpm * stretch
    total = int(math.ceil(float(score.end_beats) * spb * sample_rate)) + 1
    out = np.zeros(total)
    ramp = max(1, int(0.005 * sample_rate))
    for p in score.parts:
        for e in p.events:
            if e.is_rest:
                continue
            lo = int(round(float(e.onset) * spb * sample_rate))
            hi = int(round(float(e.offset) * spb * sample_rate))
            if hi <= lo:
                continue
            t = np.arange(hi - lo) / sample_rate
            f0 = 440.0 * 2 ** ((e.midi_pitch - 69) / 12)
            tone = np.sin(2 * np.pi * f0 * t)
            if 3 * f0 < sample_rate / 2:
                tone += 0.5 * np.sin(2 * np.pi * 3 * f0 * t)
            env = np.ones(hi - lo)
            r = min(ramp, (hi - lo) // 2)
            if r:
                env[:r] = np.linspace(0, 1, r)
                env[-r:] = np.linspace(1, 0, r)
            out[lo:hi] += gain * event_velocity(e) / 127.0 * tone * env
    return AudioClip(np.clip(out, -1.0, 1.0), sample_rate)
