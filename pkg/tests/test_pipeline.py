import numpy as np
import pytest
from hypothesis import given, strategies as st

from sttd.pipeline import (
    FrameSequence, SequenceTooShort, default_threads, detect, group_frames, group_starts,
    reconstruct, segment,
)
from sttd.solver import Decomposition, SolverParams

FAST = SolverParams(H=0.2, eps=1.0)


def test_group_starts():
    assert group_starts(9, 3) == [0, 3, 6]
    assert group_starts(10, 3) == [0, 3, 6, 7]
    assert group_starts(3, 3) == [0]
    assert len(group_starts(120, 3)) == 40
    with pytest.raises(SequenceTooShort):
        group_starts(2, 3)


@given(st.integers(2, 12), st.integers(0, 60))
def test_groups_cover_every_frame(L, extra):
    n = L + extra
    starts = group_starts(n, L)
    covered = set()
    for s in starts:
        assert 0 <= s <= n - L
        covered.update(range(s, s + L))
    assert covered == set(range(n))
    assert starts == sorted(starts)


def test_group_frames_stacks_along_third_axis():
    frames = [np.full((4, 5), k / 10) for k in range(5)]
    g = group_frames(FrameSequence(frames), 3)
    assert [t.shape for t in g] == [(4, 5, 3), (4, 5, 3)]
    assert g[1][0, 0].tolist() == [0.2, 0.3, 0.4]


def test_reconstruct_prefers_earlier_group():
    def dec(v):
        a = np.full((2, 2, 3), float(v))
        return Decomposition(a, a + 10, a + 20, 1, 0.0, True)

    fb, ft, fn = reconstruct([dec(1), dec(2)], [0, 1], 4)
    assert [b[0, 0] for b in fb] == [1, 1, 1, 2]
    assert ft[3][0, 0] == 12 and fn[0][0, 0] == 21


def test_segment_threshold_and_components():
    ft = np.zeros((16, 16))
    ft[4, 4] = 2.0
    ft[4, 5] = 1.8
    ft[10, 12] = 1.9
    ft[0, 0] = 0.5
    seg = segment(ft, k=3.0, vmin=0.85)
    assert seg.threshold >= 0.85
    assert seg.mask.sum() == 3
    assert [(c.row, c.col, c.pixels) for c in seg.components] == [(4.0, 4.5, 2), (10.0, 12.0, 1)]
    assert seg.components[0].peak == 2.0


def test_segment_zero_and_strict():
    assert not segment(np.zeros((5, 5))).mask.any()
    assert not segment(np.random.default_rng(0).uniform(size=(8, 8)), k=1e9, vmin=1.0).mask.any()


@given(st.integers(0, 10 ** 6), st.floats(0, 5), st.floats(0, 1))
def test_mask_pixels_exceed_threshold(seed, k, vmin):
    ft = np.random.default_rng(seed).standard_normal((12, 12))
    seg = segment(ft, k, vmin)
    norm = np.maximum(ft, 0) / max(ft.max(), 1e-300) if ft.max() > 0 else np.zeros_like(ft)
    assert np.all(norm[seg.mask] > seg.threshold)
    assert not np.any(norm[~seg.mask] > seg.threshold)


def test_frame_sequence_validation():
    with pytest.raises(ValueError):
        FrameSequence([])
    with pytest.raises(ValueError):
        FrameSequence([np.zeros((3, 3)), np.zeros((3, 4))])
    with pytest.raises(ValueError):
        FrameSequence([np.full((3, 3), 1.5)])


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv("STTD_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.delenv("STTD_THREADS")
    assert default_threads() >= 1


def moving_point_frames(n=7):
    rng = np.random.default_rng(4)
    frames = []
    for k in range(n):
        f = 0.3 + 0.02 * rng.standard_normal((32, 32))
        f[10 + k, 8 + 2 * k] += 0.5
        frames.append(np.clip(f, 0, 1))
    return frames


def test_detect_finds_moving_point():
    res = detect(moving_point_frames(), FAST, threads=1)
    assert len(res.target) == 7 and len(res.groups) == 3
    assert [g.start for g in res.groups] == [0, 3, 4]
    for k, seg in enumerate(res.segmentations):
        assert any(abs(c.row - (10 + k)) <= 1 and abs(c.col - (8 + 2 * k)) <= 1
                   for c in seg.components)


def test_detect_independent_of_threads():
    frames = moving_point_frames()
    a = detect(frames, FAST, threads=1)
    b = detect(frames, FAST, threads=3)
    for x, y in zip(a.target + a.background, b.target + b.background):
        assert np.array_equal(x, y)


def test_detect_too_short():
    with pytest.raises(SequenceTooShort):
        detect([np.zeros((4, 4))] * 2)
