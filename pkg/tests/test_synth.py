import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sttd.metrics import WindowGeometry, local_stats
from sttd.synth import (
    Infeasible, SceneSpec, TargetSpec, add_noise, blob, format_scene_spec, generate,
    make_background, parse_scene_spec, read_truth_csv, truth_csv,
)


def test_blob_peak_and_support():
    b = blob(20, 20, 10, 7, 3, 3, 0.8)
    assert b[10, 7] == pytest.approx(0.8)
    assert np.count_nonzero(b) == 9
    assert b[9, 7] == pytest.approx(0.8 * np.exp(-0.5))  # sigma = 1 for a 3x3 box


def test_blob_clipped_at_edge():
    b = blob(10, 10, 0, 0, 5, 5, 1.0)
    assert np.count_nonzero(b) == 9 and b[0, 0] == 1.0
    assert not blob(10, 10, -20, -20, 3, 3, 1.0).any()


@pytest.mark.parametrize("kind,params", [
    ("flat", {"level": 0.3}),
    ("gradient", {"low": 0.1, "high": 0.6, "angle": 30}),
    ("cloud", {"level": 0.4, "contrast": 0.3, "drift": (0.5, -0.25)}),
])
def test_backgrounds_in_range(kind, params):
    bg = make_background(SceneSpec(24, 32, 4, kind, params))
    assert bg.shape == (4, 24, 32)
    assert bg.min() >= 0 and bg.max() <= 1


def test_static_cloud_repeats_and_drift_moves():
    still = make_background(SceneSpec(32, 32, 3, "cloud", {}))
    assert np.array_equal(still[0], still[2])
    moving = make_background(SceneSpec(32, 32, 3, "cloud", {"drift": (1.0, 0.0)}))
    assert not np.array_equal(moving[0], moving[1])
    # content moves one row down per frame
    np.testing.assert_allclose(moving[1][1:], moving[0][:-1], atol=1e-12)


def test_gradient_endpoints():
    bg = make_background(SceneSpec(8, 11, 1, "gradient", {"low": 0.1, "high": 0.5}))[0]
    np.testing.assert_allclose(bg[:, 0], 0.1)
    np.testing.assert_allclose(bg[:, -1], 0.5)


def test_noise_statistics():
    clean = [np.full((400, 300), 0.5)]
    noisy = add_noise(clean, 15 / 255, seed=7)[0]
    assert abs(np.std(noisy - clean[0]) - 15 / 255) <= 0.02 * 15 / 255
    assert np.array_equal(noisy, add_noise(clean, 15 / 255, seed=7)[0])
    assert not np.array_equal(noisy, add_noise(clean, 15 / 255, seed=8)[0])


def test_add_noise_zero_and_negative():
    f = [np.full((3, 3), 0.2)]
    assert np.array_equal(add_noise(f, 0.0, 1)[0], f[0])
    with pytest.raises(ValueError):
        add_noise(f, -1.0, 1)


def cloud_scene(scr, sigma, seed=0, frames=4):
    return SceneSpec(64, 64, frames, "cloud", {"level": 0.25, "contrast": 0.12},
                     (TargetSpec(start=(30.3, 22.6), velocity=(0.4, -0.2), scr=scr),),
                     sigma, seed)


@pytest.mark.parametrize("scr,sigma", [(3.0, 15 / 255), (4.0, 15 / 255), (3.0, 25 / 255)])
def test_requested_scr_is_met(scr, sigma):
    spec = cloud_scene(scr, sigma)
    frames, truth = generate(spec)
    for f, t in zip(frames, truth):
        st_ = local_stats(f, t.row, t.col, WindowGeometry(40, t.a, t.b))
        measured = abs(st_.mu_t - st_.mu_b) / st_.sigma_b
        assert measured == pytest.approx(scr, rel=0.05)


def test_truth_follows_trajectory():
    frames, truth = generate(cloud_scene(3.0, 15 / 255))
    assert [t.frame for t in truth] == [0, 1, 2, 3]
    assert truth[2].row == pytest.approx(31.1) and truth[2].col == pytest.approx(22.2)


def test_explicit_trajectory_and_amplitude():
    spec = SceneSpec(16, 16, 2, "flat", {"level": 0.1},
                     (TargetSpec(trajectory=((4, 4), (8, 9)), amplitude=0.5),))
    frames, truth = generate(spec)
    assert frames[0][4, 4] == pytest.approx(0.6) and frames[1][8, 9] == pytest.approx(0.6)
    assert (truth[1].row, truth[1].col) == (8.0, 9.0)


def test_infeasible_scr():
    spec = SceneSpec(32, 32, 1, "cloud", {"level": 0.9, "contrast": 0.6},
                     (TargetSpec(start=(16, 16), scr=50.0),), 25 / 255)
    with pytest.raises(Infeasible):
        generate(spec)


@pytest.mark.parametrize("kw", [
    {"height": 0}, {"noise_sigma": -0.1}, {"background": "stars"},
    {"targets": (TargetSpec(start=(1, 1)),)},
    {"targets": (TargetSpec(start=(1, 1), scr=3, amplitude=0.2),)},
    {"targets": (TargetSpec(start=(1, 1), velocity=(-1, 0), amplitude=0.2),), "frames": 3},
])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        SceneSpec(**{"height": 8, "width": 8, "frames": 1, **kw})


def test_generate_is_deterministic():
    a, _ = generate(cloud_scene(3.0, 25 / 255, seed=5))
    b, _ = generate(cloud_scene(3.0, 25 / 255, seed=5))
    c, _ = generate(cloud_scene(3.0, 25 / 255, seed=6))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], c[0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0, 0.2), st.floats(0.05, 0.9))
def test_frames_stay_in_unit_range(seed, sigma, amp):
    spec = SceneSpec(16, 16, 2, "cloud", {"contrast": 0.8},
                     (TargetSpec(start=(8, 8), amplitude=amp),), sigma, seed)
    frames, _ = generate(spec)
    assert all(f.min() >= 0 and f.max() <= 1 for f in frames)


def test_scene_text_roundtrip():
    text = """
    # two targets
    height = 48
    width = 40
    frames = 5
    background = cloud
    background.level = 0.3
    background.drift = 0.5, 0
    noise_sigma_8bit = 15
    seed = 11
    target.1.start = 10, 12
    target.1.velocity = 0.5, -0.5
    target.1.scr = 3
    target.2.start = 30, 30
    target.2.size = 5, 3
    target.2.amplitude = 0.4
    """
    spec = parse_scene_spec(text)
    assert (spec.height, spec.width, spec.frames, spec.seed) == (48, 40, 5, 11)
    assert spec.noise_sigma == pytest.approx(15 / 255)
    assert spec.background_params == {"level": 0.3, "drift": (0.5, 0.0)}
    assert spec.targets[1] == TargetSpec(start=(30.0, 30.0), a=5, b=3, amplitude=0.4)
    assert parse_scene_spec(format_scene_spec(spec)) == spec


def test_scene_text_rejects_unknown_keys():
    with pytest.raises(ValueError):
        parse_scene_spec("colour = red\n")


def test_truth_csv_roundtrip(tmp_path):
    _, truth = generate(cloud_scene(3.0, 15 / 255, frames=3))
    p = tmp_path / "truth.csv"
    p.write_text(truth_csv(truth))
    back = read_truth_csv(p)
    assert [(t.frame, t.a, t.b) for t in back] == [(t.frame, t.a, t.b) for t in truth]
    assert all(abs(x.row - y.row) < 1e-6 for x, y in zip(back, truth))
