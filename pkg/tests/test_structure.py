import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamse.audio import Chromagram
from hamse.structure import (Segment, checkerboard_kernel, label_segments, novelty_curve, pick_boundaries, segment,
                             segments_csv, self_similarity)


def blocks(*sizes, pcs=None):
    """Chromagram of constant blocks, block k sounding pitch class pcs[k]."""
    pcs = pcs or list(range(len(sizes)))
    cols = []
    for size, pc in zip(sizes, pcs):
        col = np.zeros(12)
        col[pc] = 1.0
        cols += [col] * size
    return Chromagram(np.array(cols).T, 0.5, "audio")


class TestSelfSimilarity:
    def test_identical_columns(self):
        S = self_similarity(Chromagram(np.ones((12, 5)), 0.1, "audio"))
        assert np.all(S == 1.0)

    def test_orthogonal_blocks(self):
        S = self_similarity(blocks(3, 2))
        expect = np.zeros((5, 5))
        expect[:3, :3] = 1
        expect[3:, 3:] = 1
        assert np.array_equal(S, expect)

    def test_too_few_frames(self):
        with pytest.raises(ValueError):
            self_similarity(Chromagram(np.ones((12, 1)), 0.1, "audio"))


class TestNovelty:
    def test_kernel_shape(self):
        K = checkerboard_kernel(4)
        assert K.shape == (8, 8)
        assert np.abs(K).sum() == pytest.approx(1.0)
        assert np.allclose(K, K.T)
        assert K[0, 0] > 0 and K[0, 7] < 0

    def test_all_ones_no_novelty(self):
        assert not novelty_curve(np.ones((30, 30)), 4).any()

    def test_two_blocks_peak_at_edge(self):
        nov = novelty_curve(self_similarity(blocks(20, 20)), 4)
        peak = int(np.argmax(nov))
        assert abs(peak - 20) <= 1
        assert np.sum(nov == nov.max()) == 1

    def test_precondition(self):
        with pytest.raises(ValueError):
            novelty_curve(np.ones((8, 8)), 4)
        with pytest.raises(ValueError):
            novelty_curve(np.ones((10, 9)), 4)

    def test_non_negative(self):
        rng = np.random.default_rng(0)
        S = self_similarity(Chromagram(rng.random((12, 40)), 0.1, "audio"))
        assert (novelty_curve(S, 4) >= 0).all()


class TestPickBoundaries:
    def test_flat(self):
        assert pick_boundaries(np.zeros(50), 0.5) == [0.0, 25.0]

    def test_single_peak(self):
        nov = np.zeros(40)
        nov[20] = 1.0
        assert pick_boundaries(nov, 0.5) == [0.0, 10.0, 20.0]

    def test_close_peaks_keep_larger(self):
        nov = np.zeros(40)
        nov[20], nov[23] = 1.0, 0.8
        assert pick_boundaries(nov, 0.5) == [0.0, 10.0, 20.0]
        nov[20], nov[23] = 0.8, 1.0
        assert pick_boundaries(nov, 0.5) == [0.0, 11.5, 20.0]

    def test_duration_overrides_end(self):
        assert pick_boundaries(np.zeros(10), 0.5, duration_s=7.25)[-1] == 7.25


class TestLabels:
    def test_aba(self):
        chroma = blocks(20, 20, 20, pcs=[0, 7, 0])
        segs = label_segments(chroma, [0.0, 10.0, 20.0, 30.0])
        assert [s.label for s in segs] == ["A", "B", "A"]

    def test_one_segment(self):
        assert label_segments(blocks(10), [0.0, 5.0]) == [Segment(0.0, 5.0, "A")]

    def test_all_distinct(self):
        segs = label_segments(blocks(4, 4, 4, 4), [0.0, 2.0, 4.0, 6.0, 8.0])
        assert [s.label for s in segs] == ["A", "B", "C", "D"]

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            label_segments(blocks(10), [0.0, 3.0, 2.0, 5.0])


class TestSegment:
    def test_two_texture(self):
        segs, S, nov = segment(blocks(20, 20), kernel_half=4)
        assert len(segs) == 2
        assert abs(segs[1].start_s / 0.5 - 20) <= 1
        assert [s.label for s in segs] == ["A", "B"]

    def test_aba_form(self):
        segs, _, _ = segment(blocks(20, 20, 20, pcs=[0, 7, 0]), kernel_half=4)
        assert [s.label for s in segs] == ["A", "B", "A"]

    def test_csv(self):
        text = segments_csv([Segment(0.0, 1.5, "A"), Segment(1.5, 3.0, "B")])
        assert text == "start_s,end_s,label\n0.000000,1.500000,A\n1.500000,3.000000,B\n"


@settings(max_examples=30, deadline=None)
@given(st.integers(18, 80), st.integers(0, 2**32 - 1))
def test_segments_tile_and_repeat(frames, seed):
    rng = np.random.default_rng(seed)
    chroma = Chromagram(rng.random((12, frames)), 0.25, "audio")
    segs, _, _ = segment(chroma)
    assert segs[0].start_s == 0.0 and segs[-1].end_s == chroma.duration_s
    assert all(a.end_s == b.start_s for a, b in zip(segs, segs[1:]))
    assert all(s.end_s > s.start_s for s in segs)
    assert segment(chroma)[0] == segs
