"""
Dynamic time warping between a recording's chromagram and a score
rendering, and the resulting beat <-> seconds map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .audio import Chromagram
from .score import Score, abs_beats_of

__all__ = [
    "AlignmentError",
    "TimeInterval",
    "AlignmentMap",
    "cosine_cost",
    "cosine_similarity_matrix",
    "dtw_path",
    "dtw",
    "map_beats_to_seconds",
    "anchors_csv",
]


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class TimeInterval:
    start_s: float
    end_s: float
    recording_ref: str = ""

    def __post_init__(self):
        if not 0 <= self.start_s <= self.end_s:
            raise AlignmentError(f"invalid interval [{self.start_s}, {self.end_s}]")


def cosine_similarity_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity of the columns of ``a`` (12 x N) and ``b`` (12 x M).

    A zero column has similarity 1 with another zero column and 0 with any
    other column; columns with identical unit vectors score exactly 1. The accumulation order is fixed so that
    ``cosine_similarity_matrix(b, a)`` is exactly the transpose.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.sqrt((a * a).sum(axis=0))
    nb = np.sqrt((b * b).sum(axis=0))
    an = np.divide(a, na, out=np.zeros_like(a), where=na > 0)
    bn = np.divide(b, nb, out=np.zeros_like(b), where=nb > 0)
    sim = np.zeros((a.shape[1], b.shape[1]))
    for k in range(a.shape[0]):
        sim += an[k][:, None] * bn[k][None, :]
    np.clip(sim, -1.0, 1.0, out=sim)
    # identical directions are exactly similar, whatever the rounding above
    same = {}
    for j in range(bn.shape[1]):
        same.setdefault(bn[:, j].tobytes(), []).append(j)
    for i in range(an.shape[1]):
        js = same.get(an[:, i].tobytes())
        if js and na[i] > 0:
            sim[i, js] = 1.0
    za, zb = na == 0, nb == 0
    if za.any() or zb.any():
        sim[za[:, None] & zb[None, :]] = 1.0
    return sim


def cosine_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``1 - cosine similarity`` between columns, with the zero-column convention."""
    return 1.0 - cosine_similarity_matrix(a, b)


def dtw_path(cost: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Optimal monotone path through ``cost`` with steps (1,0), (0,1), (1,1).

    Returns the path from (0, 0) to (N-1, M-1) and the sum of the cells on
    it. On ties the diagonal predecessor is preferred, then (i-1, j).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise AlignmentError("DTW needs a non-empty cost matrix")
    n, m = cost.shape
    acc = np.empty((n, m))
    acc[0] = np.cumsum(cost[0])
    for i in range(1, n):
        row = cost[i]
        best = np.empty(m)
        best[0] = acc[i - 1, 0]
        best[1:] = np.minimum(acc[i - 1, 1:], acc[i - 1, :-1])
        # acc[i, j] = min(row[j] + best[j], row[j] + acc[i, j-1]) is a running
        # minimum once the prefix sums of the row are factored out
        prefix = np.cumsum(row)
        acc[i] = prefix + np.minimum.accumulate(row + best - prefix)
        acc[i, 0] = row[0] + best[0]
    i, j = n - 1, m - 1
    path = [(i, j)]
    while i or j:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            d, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
            if d <= up and d <= left:
                i, j = i - 1, j - 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    total = math.fsum(cost[p] for p in path)
    return path, total


@dataclass(frozen=True, eq=False)
class AlignmentMap:
    """Warping path between audio frames and score-rendering frames.

    ``path`` holds ``(audio_frame, symbolic_frame)`` pairs. Anchors convert
    the path to ``(abs_beats, seconds)`` pairs that increase strictly in
    both coordinates.

    ``symbolic_breaks`` lists the score frames whose column differs from the
    one before. When given, only path points on those frames become anchors:
    inside a stretch of unchanging score chroma every warp costs the same,
    so the path carries no timing information there and linear
    interpolation between the surrounding changes is used instead.
    """

    path: tuple[tuple[int, int], ...]
    total_cost: float
    audio_hop_s: float
    symbolic_hop_s: float
    tempo_bpm: float
    recording_ref: str = ""
    symbolic_breaks: Optional[tuple[int, ...]] = None
    _anchor_frames: tuple = field(init=False, repr=False)

    def __post_init__(self):
        path = tuple((int(a), int(s)) for a, s in self.path)
        object.__setattr__(self, "path", path)
        if not path or path[0] != (0, 0):
            raise AlignmentError("path must start at (0, 0)")
        for (a0, s0), (a1, s1) in zip(path, path[1:]):
            if (a1 - a0, s1 - s0) not in ((1, 0), (0, 1), (1, 1)):
                raise AlignmentError(f"invalid step {(a0, s0)} -> {(a1, s1)}")
        object.__setattr__(self, "_anchor_frames", self._compute_anchor_frames())

    @property
    def shape(self) -> tuple[int, int]:
        a, s = self.path[-1]
        return a + 1, s + 1

    def _compute_anchor_frames(self):
        breaks = None if self.symbolic_breaks is None else frozenset(self.symbolic_breaks)
        kept = [self.path[0]]
        for a, s in self.path[1:]:
            if breaks is not None and s not in breaks:
                continue
            if a > kept[-1][0] and s > kept[-1][1]:
                kept.append((a, s))
        end = self.path[-1]
        if kept[-1] != end:
            if end[0] > kept[-1][0] and end[1] > kept[-1][1]:
                kept.append(end)
            elif len(kept) > 1:
                kept[-1] = end
        return tuple(kept)

    @property
    def anchors(self) -> list[tuple[float, float]]:
        """``(abs_beats, time_s)`` pairs, strictly increasing in both."""
        bps = self.tempo_bpm / 60.0
        return [(s * self.symbolic_hop_s * bps, a * self.audio_hop_s)
                for a, s in self._anchor_frames]

    def beats_to_seconds(self, beats) -> float:
        """Recording time of a score offset, interpolated between anchors and
        clamped to the first and last anchor."""
        frame = float(beats) * 60.0 / self.tempo_bpm / self.symbolic_hop_s
        sym = [s for _, s in self._anchor_frames]
        aud = [a for a, _ in self._anchor_frames]
        return float(np.interp(frame, sym, aud)) * self.audio_hop_s

    @property
    def duration_s(self) -> float:
        return self.path[-1][0] * self.audio_hop_s


def dtw(audio: Chromagram, symbolic: Chromagram, recording_ref: str = "") -> AlignmentMap:
    """Align a recording chromagram to a score rendering.

    The frame distance is cosine distance (zero columns: 0 to each other,
    1 to anything else) and the three steps are unweighted. Anchors are
    placed where the score rendering changes.
    """
    if audio.n_frames < 1 or symbolic.n_frames < 1:
        raise AlignmentError("empty chromagram")
    tempo = symbolic.tempo_bpm if symbolic.tempo_bpm else 60.0
    path, total = dtw_path(cosine_cost(audio.frames, symbolic.frames))
    frames = symbolic.frames
    changed = np.any(frames[:, 1:] != frames[:, :-1], axis=0)
    breaks = (0,) + tuple(int(f) + 1 for f in np.flatnonzero(changed))
    return AlignmentMap(tuple(path), total, audio.hop_s, symbolic.hop_s, tempo, recording_ref, breaks)


def map_beats_to_seconds(align: AlignmentMap, score: Score,
                         query: Sequence) -> TimeInterval:
    """Recording interval matching ``(start_bar, start_beat, end_bar, end_beat)``."""
    start_bar, start_beat, end_bar, end_beat = query
    sections = score.sections
    try:
        lo = abs_beats_of(start_bar, Fraction(start_beat), sections)
        hi = abs_beats_of(end_bar, Fraction(end_beat), sections)
    except ValueError as exc:
        raise AlignmentError(f"query outside score: {exc}") from None
    if lo < 0 or hi < lo or hi > score.end_beats:
        raise AlignmentError(f"query [{lo}, {hi}] beats outside score span [0, {score.end_beats}]")
    start = align.beats_to_seconds(lo)
    end = align.beats_to_seconds(hi)
    return TimeInterval(start, max(start, end), align.recording_ref)


def anchors_csv(align: AlignmentMap) -> str:
    lines = ["abs_beats,time_s"]
    lines += [f"{b:.6f},{t:.6f}" for b, t in align.anchors]
    return "\n".join(lines) + "\n"
