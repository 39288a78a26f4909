"""
Vertical harmony: chord slices, chord labels and progressions, vertical
dissonances, and profile-correlation key estimation.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .patterns import ngram_occurrences
from .score import Position, Score, position_from_abs

__all__ = [
    "HarmonyError",
    "ChordSlice",
    "ChordProgression",
    "DissonanceReport",
    "KeyEstimate",
    "DISSONANT_CLASSES",
    "MAJOR_PROFILE",
    "MINOR_PROFILE",
    "PC_NAMES",
    "chordify",
    "label_chord",
    "mine_progressions",
    "find_dissonances",
    "dissonance_rate",
    "pitch_class_histogram",
    "key_correlations",
    "estimate_key",
]

PC_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

# Krumhansl-Kessler probe-tone ratings, tonic first
MAJOR_PROFILE = (6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88)
MINOR_PROFILE = (6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17)

DISSONANT_CLASSES = frozenset({1, 2, 6, 10, 11})

# order matters only for reporting; exact set equality decides a match
_TEMPLATES = (
    ("maj", frozenset({0, 4, 7})),
    ("min", frozenset({0, 3, 7})),
    ("dim", frozenset({0, 3, 6})),
    ("aug", frozenset({0, 4, 8})),
    ("dom7", frozenset({0, 4, 7, 10})),
    ("maj7", frozenset({0, 4, 7, 11})),
    ("min7", frozenset({0, 3, 7, 10})),
)

REST_LABEL = "rest"


class HarmonyError(ValueError):
    pass


@dataclass(frozen=True)
class ChordSlice:
    onset: Position
    duration_beats: Fraction
    pitches: tuple[int, ...]
    label: str

    @property
    def pitch_classes(self) -> tuple[int, ...]:
        return tuple(sorted({p % 12 for p in self.pitches}))

    @property
    def is_rest(self) -> bool:
        return not self.pitches

    @property
    def offset_beats(self) -> Fraction:
        return self.onset.abs_beats + self.duration_beats


@dataclass(frozen=True)
class ChordProgression:
    labels: tuple[str, ...]
    occurrences: tuple[Position, ...]
    ends: tuple[Fraction, ...] = ()

    @property
    def count(self) -> int:
        return len(self.occurrences)

    @property
    def text(self) -> str:
        return "-".join(self.labels)


@dataclass(frozen=True)
class DissonanceReport:
    interval_class: int
    count: int
    example_sites: tuple[Position, ...]


@dataclass(frozen=True)
class KeyEstimate:
    tonic_pc: int
    mode: str
    correlation: float
    runner_up: tuple[int, str, float]

    @property
    def label(self) -> str:
        return f"{PC_NAMES[self.tonic_pc]} {self.mode}"


def label_chord(pitch_classes, bass_pc: Optional[int] = None) -> str:
    """Name a pitch-class set as ``<root><quality>`` or ``pcset{...}``.

    A set matches a quality when it equals the quality's template transposed
    to some root. Only the symmetric augmented triad matches several roots;
    the bass pitch class wins when it is one of them, else the lowest root.
    """
    pcs = frozenset(p % 12 for p in pitch_classes)
    if not pcs:
        raise HarmonyError("cannot label an empty pitch-class set")
    for quality, template in _TEMPLATES:
        roots = [r for r in range(12) if frozenset((t + r) % 12 for t in template) == pcs]
        if roots:
            root = bass_pc % 12 if bass_pc is not None and bass_pc % 12 in roots else roots[0]
            return f"{PC_NAMES[root]}{quality}"
    return "pcset{" + ",".join(str(p) for p in sorted(pcs)) + "}"


def chordify(score: Score) -> list[ChordSlice]:
    """Cut the score into vertical slices at every note onset and offset.

    Gaps where no part sounds become rest slices labelled ``"rest"``.
    Positions are expressed against the first part's sections.
    """
    notes = [e for p in score.parts for e in p.events if not e.is_rest]
    if not notes and not score.n_events:
        raise HarmonyError("chordify needs a score with events")
    if not notes:
        return []
    bounds = sorted({e.onset for e in notes} | {e.offset for e in notes})
    starts = defaultdict(list)
    for e in notes:
        starts[e.onset].append(e)
    slices = []
    sounding = []
    sections = score.sections
    for lo, hi in zip(bounds, bounds[1:]):
        sounding = [e for e in sounding if e.offset > lo] + starts.get(lo, [])
        pitches = tuple(sorted({e.midi_pitch for e in sounding}))
        if pitches:
            label = label_chord(pitches, bass_pc=pitches[0] % 12)
        else:
            label = REST_LABEL
        slices.append(ChordSlice(position_from_abs(lo, sections), hi - lo, pitches, label))
    return slices


def mine_progressions(slices: Sequence[ChordSlice], n_min: int = 2, n_max: int = 8,
                      min_count: int = 2) -> list[ChordProgression]:
    """Recurring label n-grams after dropping rests and merging repeats."""
    collapsed = []
    for s in slices:
        if s.is_rest:
            continue
        if collapsed and collapsed[-1][0] == s.label:
            collapsed[-1][2] = s.offset_beats
            continue
        collapsed.append([s.label, s.onset, s.offset_beats])
    labels = [c[0] for c in collapsed]
    found = ngram_occurrences([labels], n_min, n_max, min_count)
    result = []
    for key, sites in found.items():
        starts = [i for _, i in sorted(sites)]
        result.append(ChordProgression(key, tuple(collapsed[i][1] for i in starts),
                                       tuple(collapsed[i + len(key) - 1][2] for i in starts)))
    result.sort(key=lambda p: (-p.count, -len(p.labels), p.labels))
    return result


def find_dissonances(slices: Sequence[ChordSlice]) -> list[DissonanceReport]:
    """Count dissonant pitch pairs per interval class over all slices."""
    counts = defaultdict(int)
    sites = defaultdict(list)
    for s in slices:
        ps = s.pitches
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                ic = abs(ps[j] - ps[i]) % 12
                if ic in DISSONANT_CLASSES:
                    counts[ic] += 1
                    if not sites[ic] or sites[ic][-1] != s.onset:
                        sites[ic].append(s.onset)
    reports = [DissonanceReport(ic, counts[ic], tuple(sites[ic])) for ic in counts]
    reports.sort(key=lambda r: (-r.count, r.interval_class))
    return reports


def dissonance_rate(slices: Sequence[ChordSlice]) -> float:
    """Fraction of sounding slices holding at least one dissonant pair."""
    sounding = [s for s in slices if not s.is_rest]
    if not sounding:
        return 0.0
    bad = 0
    for s in sounding:
        ps = s.pitches
        if any(abs(b - a) % 12 in DISSONANT_CLASSES for i, a in enumerate(ps) for b in ps[i + 1:]):
            bad += 1
    return bad / len(sounding)


def pitch_class_histogram(score: Score) -> list[Fraction]:
    """Total sounding duration per pitch class (exact)."""
    hist = [Fraction(0)] * 12
    for p in score.parts:
        for e in p.events:
            if not e.is_rest:
                hist[e.midi_pitch % 12] += e.duration_beats
    return hist


def _pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if denom == 0.0:
        return 0.0
    return float(np.dot(dx, dy)) / denom


def key_correlations(histogram) -> list[tuple[int, str, float]]:
    """Correlation of a histogram with all 24 keys, best first.

    The histogram is rotated so the candidate tonic sits at index 0, which
    keeps each value bit-identical under transposition.
    """
    hist = [float(h) for h in histogram]
    scores = []
    for tonic in range(12):
        rotated = hist[tonic:] + hist[:tonic]
        scores.append((tonic, "major", _pearson(rotated, MAJOR_PROFILE)))
        scores.append((tonic, "minor", _pearson(rotated, MINOR_PROFILE)))
    scores.sort(key=lambda s: (-s[2], s[0], s[1] != "major"))
    return scores


def estimate_key(score: Score) -> KeyEstimate:
    """Best-correlating major/minor key of the duration-weighted pitch classes."""
    hist = pitch_class_histogram(score)
    if not any(hist):
        raise HarmonyError("key estimation needs at least one note")
    best, second = key_correlations(hist)[:2]
    return KeyEstimate(best[0], best[1], best[2], second)
