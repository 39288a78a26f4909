"""
Report figures. Rendered with the Agg canvas directly (no pyplot state),
so figures can be drawn from worker threads.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .align import AlignmentMap
from .audio import Chromagram
from .harmony import PC_NAMES
from .structure import Segment

__all__ = ["plot_chromagram", "plot_alignment", "plot_structure", "plot_key_profile"]

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}

# fixed metadata keeps PNG bytes stable across runs
_PNG_META = {"Software": None}


def _figure(width=6.4, height=3.2):
    import matplotlib as mpl
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(width, height), dpi=100)
        FigureCanvasAgg(fig)
    return fig


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", metadata=_PNG_META)
    return path


def plot_chromagram(chroma: Chromagram, path, title: str = "") -> Path:
    fig = _figure()
    ax = fig.add_subplot()
    extent = (0, chroma.n_frames * chroma.hop_s, -0.5, 11.5)
    ax.imshow(chroma.frames, origin="lower", aspect="auto", extent=extent, cmap="magma",
              interpolation="nearest", vmin=0, vmax=1)
    ax.set_yticks(range(12), PC_NAMES)
    ax.set_xlabel("time (s)")
    ax.set_title(title or f"{chroma.origin} chroma")
    fig.tight_layout()
    return _save(fig, path)


def plot_alignment(align: AlignmentMap, cost: np.ndarray, path, title: str = "") -> Path:
    """Cost matrix with the warping path on top."""
    fig = _figure(4.8, 4.2)
    ax = fig.add_subplot()
    ax.imshow(cost, origin="lower", aspect="auto", cmap="Greys_r", interpolation="nearest")
    p = np.asarray(align.path)
    ax.plot(p[:, 1], p[:, 0], color="tab:red", lw=1)
    ax.set_xlabel("score frame")
    ax.set_ylabel("audio frame")
    ax.set_title(title or f"alignment, cost {align.total_cost:.3f}")
    fig.tight_layout()
    return _save(fig, path)


def plot_structure(S: np.ndarray, novelty: Sequence[float], segments: Sequence[Segment], hop_s: float,
                   path, title: str = "") -> Path:
    """Self-similarity matrix over the novelty curve, boundaries marked."""
    fig = _figure(5.0, 6.0)
    top = fig.add_axes((0.12, 0.35, 0.83, 0.58))
    bottom = fig.add_axes((0.12, 0.08, 0.83, 0.2))
    span = len(novelty) * hop_s
    top.imshow(S, origin="lower", cmap="viridis", extent=(0, span, 0, span), interpolation="nearest")
    top.set_title(title or "self-similarity")
    t = np.arange(len(novelty)) * hop_s
    bottom.plot(t, novelty, color="k", lw=0.8)
    for seg in segments[1:]:
        bottom.axvline(seg.start_s, color="tab:red", lw=0.8)
    for seg in segments:
        bottom.text((seg.start_s + seg.end_s) / 2, 1.02, seg.label, ha="center", va="bottom",
                    transform=bottom.get_xaxis_transform())
    bottom.set_xlim(0, span)
    bottom.set_xlabel("time (s)")
    bottom.set_ylabel("novelty")
    return _save(fig, path)


def plot_key_profile(histogram: Sequence, correlations: Sequence[tuple], path, title: str = "") -> Path:
    """Pitch-class histogram and the best few key correlations."""
    fig = _figure(6.4, 3.0)
    left = fig.add_subplot(1, 2, 1)
    h = np.asarray([float(x) for x in histogram])
    left.bar(range(12), h, color="0.4")
    left.set_xticks(range(12), PC_NAMES, rotation=90)
    left.set_ylabel("beats")
    right = fig.add_subplot(1, 2, 2)
    top = list(correlations)[:6]
    names = [f"{PC_NAMES[t]} {m}" for t, m, _ in top]
    right.barh(range(len(top))[::-1], [c for _, _, c in top], color="tab:blue")
    right.set_yticks(range(len(top))[::-1], names)
    right.set_xlabel("correlation")
    fig.suptitle(title or "key profile")
    fig.tight_layout()
    return _save(fig, path)
