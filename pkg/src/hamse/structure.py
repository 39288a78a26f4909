"""
Structural segmentation of a chromagram with a checkerboard novelty curve.

Pipeline: cosine self-similarity matrix, correlation along the diagonal
with a Gaussian-tapered checkerboard kernel, peak picking, then single-linkage
clustering of per-segment mean chroma to assign letter labels.
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .align import cosine_similarity_matrix
from .audio import Chromagram

__all__ = [
    "Segment",
    "self_similarity",
    "checkerboard_kernel",
    "novelty_curve",
    "pick_boundaries",
    "label_segments",
    "segment",
    "segments_csv",
    "KERNEL_HALF",
    "PEAK_MIN_DISTANCE",
    "CLUSTER_THRESHOLD",
]

KERNEL_HALF = 8
PEAK_MIN_DISTANCE = 8
PEAK_THRESHOLD_STD = 0.5
CLUSTER_THRESHOLD = 0.15


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    label: str


def self_similarity(chroma: Chromagram) -> np.ndarray:
    """F x F cosine similarity between the chromagram's columns."""
    if chroma.n_frames < 2:
        raise ValueError("self-similarity needs at least two frames")
    return cosine_similarity_matrix(chroma.frames, chroma.frames)


def checkerboard_kernel(half: int) -> np.ndarray:
    """2*half square kernel: +1 on the diagonal quadrants, -1 off them,
    tapered by a Gaussian (sigma = half / 2) and scaled to unit L1 norm."""
    u = np.arange(-half, half) + 0.5
    sign = np.sign(u)
    taper = np.exp(-(u / (0.5 * half)) ** 2 / 2)
    kernel = np.outer(sign * taper, sign * taper)
    return kernel / np.abs(kernel).sum()


def novelty_curve(S: np.ndarray, kernel_half: int = KERNEL_HALF) -> np.ndarray:
    """Checkerboard novelty along the diagonal of ``S``.

    Value ``n`` compares frames ``n-half .. n-1`` with ``n .. n+half-1``. Frames
    too close to either edge for the full kernel are left at zero. Negative
    values are rectified to zero.
    """
    S = np.asarray(S, dtype=np.float64)
    F = S.shape[0]
    if S.shape != (F, F):
        raise ValueError("similarity matrix must be square")
    if F <= 2 * kernel_half:
        raise ValueError(f"need more than {2 * kernel_half} frames, got {F}")
    K = checkerboard_kernel(kernel_half)
    nov = np.zeros(F)
    for n in range(kernel_half, F - kernel_half + 1):
        block = S[n - kernel_half:n + kernel_half, n - kernel_half:n + kernel_half]
        nov[n] = float((K * block).sum())
    return np.maximum(nov, 0.0)


def pick_boundaries(novelty: Sequence[float], hop_s: float,
                    duration_s: Optional[float] = None,
                    min_distance: int = PEAK_MIN_DISTANCE,
                    threshold_std: float = PEAK_THRESHOLD_STD) -> list[float]:
    """Segment edges in seconds, ``0`` and the end time included.

    Interior boundaries are local maxima strictly above
    ``mean + threshold_std * std``; peaks closer than ``min_distance`` frames
    to a larger kept peak are dropped.
    """
    nov = np.asarray(novelty, dtype=np.float64)
    end = duration_s if duration_s is not None else len(nov) * hop_s
    if len(nov) < 3:
        return [0.0, end]
    thresh = nov.mean() + threshold_std * nov.std()
    candidates = [i for i in range(1, len(nov) - 1)
                  if nov[i] > nov[i - 1] and nov[i] >= nov[i + 1] and nov[i] > thresh]
    kept = []
    for i in sorted(candidates, key=lambda i: (-nov[i], i)):
        if all(abs(i - k) >= min_distance for k in kept):
            kept.append(i)
    times = [i * hop_s for i in sorted(kept) if 0 < i * hop_s < end]
    return [0.0] + times + [end]


def _label_names():
    letters = string.ascii_uppercase
    k = 0
    while True:
        q, r = divmod(k, 26)
        yield letters[r] + (str(q) if q else "")
        k += 1


def label_segments(chroma: Chromagram, boundaries: Sequence[float],
                   threshold: float = CLUSTER_THRESHOLD) -> list[Segment]:
    """Letter-label the segments between consecutive ``boundaries``.

    Segments whose mean chroma vectors are linked by a chain of cosine
    distances at most ``threshold`` share a label; labels are handed out in
    order of first appearance.
    """
    edges = list(boundaries)
    if len(edges) < 2 or any(b < a for a, b in zip(edges, edges[1:])):
        raise ValueError("boundaries must be sorted with at least a start and an end")
    times = np.arange(chroma.n_frames) * chroma.hop_s
    means = []
    for lo, hi in zip(edges, edges[1:]):
        mask = (times >= lo) & (times < hi)
        means.append(chroma.frames[:, mask].mean(axis=1) if mask.any() else np.zeros(12))
    means = np.array(means).T
    dist = 1.0 - cosine_similarity_matrix(means, means)
    n = len(edges) - 1
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] <= threshold:
                parent[find(j)] = find(i)
    names = {}
    gen = _label_names()
    segments = []
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        root = find(k)
        if root not in names:
            names[root] = next(gen)
        segments.append(Segment(float(lo), float(hi), names[root]))
    return segments


def segment(chroma: Chromagram, duration_s: Optional[float] = None,
            kernel_half: int = KERNEL_HALF, min_distance: int = PEAK_MIN_DISTANCE,
            threshold: float = CLUSTER_THRESHOLD) -> tuple[list[Segment], np.ndarray, np.ndarray]:
    """Run the full segmentation; returns ``(segments, ssm, novelty)``."""
    S = self_similarity(chroma)
    nov = novelty_curve(S, kernel_half)
    edges = pick_boundaries(nov, chroma.hop_s, duration_s, min_distance)
    return label_segments(chroma, edges, threshold), S, nov


def segments_csv(segments: Sequence[Segment]) -> str:
    lines = ["start_s,end_s,label"]
    lines += [f"{s.start_s:.6f},{s.end_s:.6f},{s.label}" for s in segments]
    return "\n".join(lines) + "\n"
