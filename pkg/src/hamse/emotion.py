"""
Russell-circumplex quadrant tagging from loudness, tempo, mode and
dissonance. A fixed monotone heuristic; ``method`` records which one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio import AudioClip
from .harmony import KeyEstimate

__all__ = ["EmotionTag", "quadrant_of", "mean_rms", "classify_emotion", "METHOD"]

METHOD = "heuristic-v1"

RMS_CENTER = 0.1
RMS_SCALE = 0.1
TEMPO_CENTER = 100.0
TEMPO_SCALE = 60.0


@dataclass(frozen=True)
class EmotionTag:
    quadrant: str
    valence: float
    arousal: float
    method: str = METHOD

    def __post_init__(self):
        if self.quadrant != quadrant_of(self.valence, self.arousal):
            raise ValueError(f"{self.quadrant} inconsistent with valence {self.valence}, arousal {self.arousal}")


def quadrant_of(valence: float, arousal: float) -> str:
    if arousal >= 0:
        return "Q1" if valence >= 0 else "Q2"
    return "Q4" if valence >= 0 else "Q3"


def _clamp(x):
    return max(-1.0, min(1.0, x))


def mean_rms(clip: AudioClip, window_s: float = 1.0) -> float:
    """Mean of per-window RMS over consecutive windows (a shorter tail window counts too)."""
    x = clip.samples
    if not len(x):
        raise ValueError("empty clip")
    w = max(1, int(round(window_s * clip.sample_rate)))
    values = [float(np.sqrt(np.mean(x[i:i + w] ** 2))) for i in range(0, len(x), w)]
    return float(np.mean(values))


def classify_emotion(clip: AudioClip, key: Optional[KeyEstimate], score_tempo_bpm: float,
                     dissonance_rate: float = 0.0) -> EmotionTag:
    """Quadrant of a recording from its loudness, the score tempo and harmony.

    arousal = clamp(((rms - 0.1) / 0.1 + (tempo - 100) / 60) / 2)
    valence = clamp(+-0.5 (major/minor) + 0.25 * (1 - d) - 0.25 * d)
    where ``d`` is the fraction of dissonant chord slices.
    """
    if key is None:
        raise ValueError("emotion tagging needs a key estimate")
    if not 0.0 <= dissonance_rate <= 1.0:
        raise ValueError("dissonance rate must lie in [0, 1]")
    rms_z = (mean_rms(clip) - RMS_CENTER) / RMS_SCALE
    tempo_z = (score_tempo_bpm - TEMPO_CENTER) / TEMPO_SCALE
    arousal = _clamp((rms_z + tempo_z) / 2)
    base = 0.5 if key.mode == "major" else -0.5
    valence = _clamp(base + 0.25 * (1 - dissonance_rate) - 0.25 * dissonance_rate)
    return EmotionTag(quadrant_of(valence, arousal), valence, arousal)
