import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamse.align import (AlignmentError, AlignmentMap, anchors_csv, cosine_cost, cosine_similarity_matrix, dtw,
                         dtw_path, map_beats_to_seconds)
from hamse.audio import Chromagram, chroma_from_score

from helpers import melody, random_score
from oracles import brute_force_dtw, exact_dtw, monotone_paths


def random_chroma(rng, frames, zero_p=0.1):
    x = rng.random((12, frames))
    x[:, rng.random(frames) < zero_p] = 0.0
    return Chromagram(x, 0.1, "audio")


def stretched(chroma, factor):
    return Chromagram(np.repeat(chroma.frames, factor, axis=1), chroma.hop_s, "audio")


class TestCost:
    def test_zero_column_convention(self):
        a = np.zeros((12, 2))
        a[0, 1] = 1.0
        c = cosine_cost(a, a)
        assert c.tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_identical_columns_exactly_one(self):
        rng = np.random.default_rng(3)
        a = rng.random((12, 30))
        S = cosine_similarity_matrix(a, a)
        assert np.all(np.diag(S) == 1.0)
        assert np.allclose(S, S.T)

    def test_cell_by_cell(self):
        rng = np.random.default_rng(4)
        a, b = rng.random((12, 3)), rng.random((12, 3))
        S = cosine_similarity_matrix(a, b)
        for i in range(3):
            for j in range(3):
                expect = a[:, i] @ b[:, j] / np.linalg.norm(a[:, i]) / np.linalg.norm(b[:, j])
                assert S[i, j] == pytest.approx(expect, abs=1e-12)


class TestDtwPath:
    def test_anti_diagonal_example(self):
        path, cost = dtw_path(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert path == [(0, 0), (1, 1)]
        assert cost == 0.0

    def test_all_ones(self):
        path, cost = dtw_path(np.ones((3, 3)))
        assert cost == 3.0
        assert path == [(0, 0), (1, 1), (2, 2)]

    def test_single_cell_and_row(self):
        assert dtw_path(np.array([[0.25]])) == ([(0, 0)], 0.25)
        path, cost = dtw_path(np.array([[1.0, 2.0, 3.0]]))
        assert path == [(0, 0), (0, 1), (0, 2)] and cost == 6.0

    def test_empty(self):
        with pytest.raises(AlignmentError):
            dtw_path(np.zeros((0, 3)))

    def test_enumeration_small(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            cost = rng.random((rng.integers(1, 6), rng.integers(1, 6)))
            assert dtw_path(cost)[1] == brute_force_dtw(cost)

    def test_exact_oracle_agrees_with_enumeration(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            cost = rng.random((rng.integers(1, 6), rng.integers(1, 6)))
            assert exact_dtw(cost) == brute_force_dtw(cost)

    def test_path_count(self):
        # Delannoy numbers
        assert len(list(monotone_paths(3, 3))) == 13
        assert len(list(monotone_paths(2, 2))) == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_dtw_global_minimum(n, m, seed):
    rng = np.random.default_rng(seed)
    a, b = random_chroma(rng, n), random_chroma(rng, m)
    align = dtw(a, b)
    assert align.total_cost == exact_dtw(cosine_cost(a.frames, b.frames))
    assert align.path[0] == (0, 0) and align.path[-1] == (n - 1, m - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_dtw_symmetric_cost(n, m, seed):
    rng = np.random.default_rng(seed)
    a, b = random_chroma(rng, n), random_chroma(rng, m)
    assert dtw(a, b).total_cost == pytest.approx(dtw(b, a).total_cost, abs=1e-12)


class TestAlignmentMap:
    def test_invalid_paths(self):
        with pytest.raises(AlignmentError):
            AlignmentMap(((1, 0),), 0.0, 0.1, 0.1, 60.0)
        with pytest.raises(AlignmentError):
            AlignmentMap(((0, 0), (2, 1)), 0.0, 0.1, 0.1, 60.0)

    def test_anchors_strictly_increasing(self):
        rng = np.random.default_rng(11)
        align = dtw(random_chroma(rng, 40), random_chroma(rng, 25))
        anchors = align.anchors
        assert all(b1 > b0 and t1 > t0 for (b0, t0), (b1, t1) in zip(anchors, anchors[1:]))

    def test_anchors_csv(self):
        align = AlignmentMap(((0, 0), (1, 1), (2, 1), (3, 2)), 0.0, 0.5, 0.5, 60.0)
        text = anchors_csv(align)
        assert text.splitlines() == ["abs_beats,time_s", "0.000000,0.000000", "0.500000,0.500000",
                                     "1.000000,1.500000"]


class TestMapBeats:
    def test_identity_bar_one(self):
        score = melody([60, 62, 64, 65, 67, 69, 71, 72], tempo=60)
        chroma = chroma_from_score(score, 60.0, 0.1)
        align = dtw(chroma, chroma)
        iv = map_beats_to_seconds(align, score, (1, 0, 2, 0))
        assert iv.start_s == pytest.approx(0.0, abs=0.1)
        assert iv.end_s == pytest.approx(4.0, abs=0.1)

    def test_stretch_two(self):
        score = melody([60, 62, 64, 65, 67, 69, 71, 72, 74, 72, 71, 69], tempo=60)
        sym = chroma_from_score(score, 60.0, 0.1)
        audio = stretched(Chromagram(sym.frames, 0.1, "audio"), 2)
        align = dtw(audio, sym)
        for bar in (1, 2, 3):
            iv = map_beats_to_seconds(align, score, (bar, 0, bar + 1, 0))
            assert iv.start_s == pytest.approx(8.0 * (bar - 1), abs=0.2)
            assert iv.end_s == pytest.approx(8.0 * bar, abs=0.2)

    def test_stretch_with_pitch_held_across_bar_line(self):
        # F4 sounds on both sides of the bar line, so the score chroma does not change there
        score = melody([60, 62, 64, 65, 65, 67, 69, 71], tempo=60)
        sym = chroma_from_score(score, 60.0, 0.1)
        audio = Chromagram(chroma_from_score(score, 30.0, 0.1).frames, 0.1, "audio")
        iv = map_beats_to_seconds(dtw(audio, sym), score, (2, 0, 2, 2))
        assert iv.start_s == pytest.approx(8.0, abs=0.2)
        assert iv.end_s == pytest.approx(12.0, abs=0.2)

    def test_anchors_only_at_breaks(self):
        align = AlignmentMap(((0, 0), (1, 1), (2, 2), (3, 2), (4, 3)), 0.0, 0.5, 0.5, 60.0,
                             symbolic_breaks=(0, 3))
        assert align.anchors == [(0.0, 0.0), (1.5, 2.0)]

    def test_end_query_clamps_to_last_anchor(self):
        score = melody([60, 62, 64, 65], tempo=60)
        chroma = chroma_from_score(score, 60.0, 0.1)
        align = dtw(chroma, chroma)
        iv = map_beats_to_seconds(align, score, (1, 0, 2, 0))
        assert iv.end_s == align.anchors[-1][1]

    def test_out_of_range(self):
        score = melody([60, 62], tempo=60)
        chroma = chroma_from_score(score, 60.0, 0.1)
        align = dtw(chroma, chroma)
        with pytest.raises(AlignmentError):
            map_beats_to_seconds(align, score, (1, 0, 3, 1))
        with pytest.raises(AlignmentError):
            map_beats_to_seconds(align, score, (1, 2, 1, 1))

    def test_monotone(self):
        rng = random.Random(5)
        score = random_score(rng, max_events=30, max_parts=1, max_voices=1)
        sym = chroma_from_score(score, 90.0, 0.05)
        nrng = np.random.default_rng(5)
        align = dtw(random_chroma(nrng, sym.n_frames + 7), sym)
        end = float(score.end_beats)
        starts = [align.beats_to_seconds(b) for b in np.linspace(0, end, 50)]
        assert all(b >= a for a, b in zip(starts, starts[1:]))
