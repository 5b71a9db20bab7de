import numpy as np
import pytest

from darkfringe.forward_model import (ComplexField, GridSpec, IntensityImage,
                                      PsfModel, SimConfig, simulate_measurement_2d)
from darkfringe.fringe_detect import (DetectConfig, FringeMaps, preprocess,
                                      preprocess_stages, recognize_fringes)

from conftest import truth_presence_maps


def test_detect_config_validation():
    with pytest.raises(ValueError):
        DetectConfig(highpass_sigma=0.0)
    with pytest.raises(ValueError):
        DetectConfig(edge_threshold_frac=1.5)
    with pytest.raises(ValueError):
        DetectConfig(band_halfwidth=0)
    with pytest.raises(ValueError):
        DetectConfig(fringe_ratio_alpha=1.0)


def test_fringe_maps_shape_consistency():
    with pytest.raises(ValueError):
        FringeMaps(row_map=np.zeros((4, 3), bool), col_map=np.zeros((2, 4), bool),
                   measurement_index=1)


def test_constant_image_gives_zero_edges_and_no_fringes():
    grid = GridSpec(4, 4, 32, crop_rows=0)
    img = IntensityImage(np.full((grid.height, grid.width), 7.0), 32)
    cfg = DetectConfig(highpass_sigma=8.0)
    edges = preprocess(img, cfg)
    assert edges.values.max() == 0.0
    maps = recognize_fringes(img, grid, cfg)
    assert not maps.row_map.any()
    assert not maps.col_map.any()


def test_single_pi_step_edge_support_localized():
    # one vertical boundary with a half-turn step; away from the image frame
    # (whose own roll-off is a step to darkness) the edge map must
    # concentrate in the boundary band
    obj = ComplexField(np.array([[1.0 + 0j, -1.0 + 0j]]))
    pattern = ComplexField(np.ones((1, 2), dtype=complex))
    cfg = SimConfig(pixels_per_unit=64, crop_rows=0)
    img = simulate_measurement_2d(obj, pattern, PsfModel("gaussian", 8.0), cfg, seed=0)
    stages = preprocess_stages(img, DetectConfig(highpass_sigma=16.0))
    interior = stages.edge_mask[16:-16, 24:-24]
    cols = 24 + np.nonzero(interior.any(axis=0))[0]
    assert cols.size > 0
    assert cols.min() >= 64 - 24 and cols.max() <= 64 + 24


def test_stages_are_retrievable():
    grid = GridSpec(2, 2, 32, crop_rows=0)
    rng = np.random.default_rng(0)
    img = IntensityImage(rng.random((grid.height, grid.width)), 32)
    stages = preprocess_stages(img, DetectConfig(highpass_sigma=8.0))
    for arr in (stages.inverted, stages.highpass, stages.gradient, stages.edge_mask):
        assert arr.shape == img.values.shape


def test_grid_mismatch_rejected(sim16):
    img = IntensityImage(np.ones((10, 10)), 32)
    with pytest.raises(ValueError):
        recognize_fringes(img, sim16.grid, sim16.detect_cfg)


def test_zero_flank_marks_present_and_flags():
    grid = GridSpec(1, 2, 32, crop_rows=0)
    img = IntensityImage(np.zeros((grid.height, grid.width)), 32)
    maps = recognize_fringes(img, grid, DetectConfig(highpass_sigma=8.0))
    assert maps.row_map[0, 0]
    assert maps.diagnostics["zero_flank_row"][0, 0]


def test_noiseless_detection_exact(sim16):
    for seed in (1, 2, 3):
        obj = sim16.random_object(seed=seed)
        maps = sim16.detect(sim16.measure(obj, seed=seed + 50))
        for got, want in zip(maps, truth_presence_maps(obj, sim16.patterns)):
            assert np.array_equal(got.row_map, want.row_map)
            assert np.array_equal(got.col_map, want.col_map)


def _f1_at_noise(noise_sigma, n_objects, seed0=400):
    from conftest import SimSetup
    setup = SimSetup(noise=noise_sigma)
    tp = fp = fn = 0
    for k in range(n_objects):
        obj = setup.random_object(seed=seed0 + k)
        maps = setup.detect(setup.measure(obj, seed=seed0 + 1000 + k))
        for got, want in zip(maps, truth_presence_maps(obj, setup.patterns)):
            for d, t in ((got.row_map, want.row_map), (got.col_map, want.col_map)):
                tp += int((d & t).sum())
                fp += int((d & ~t).sum())
                fn += int((~d & t).sum())
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return 2 * precision * recall / (precision + recall)


def test_f1_at_camera_noise_level():
    # 1% of peak, the ~40 dB regime
    assert _f1_at_noise(0.01, n_objects=10) >= 0.95


def test_f1_degrades_monotonically():
    scores = [_f1_at_noise(s, n_objects=5) for s in (0.0, 0.01, 0.05, 0.1)]
    assert all(a >= b for a, b in zip(scores, scores[1:]))
    assert scores[0] == 1.0


def test_detection_survives_crop(sim16):
    # boundaries whose bands touch the cropped rows are still decided
    obj = sim16.random_object(seed=77)
    images = sim16.measure(obj, seed=77)
    assert images[0].values.shape[0] == sim16.grid.height
    maps = sim16.detect(images)
    want = truth_presence_maps(obj, sim16.patterns)
    assert np.array_equal(maps[0].row_map[0], want[0].row_map[0])
    assert np.array_equal(maps[0].row_map[-1], want[0].row_map[-1])
