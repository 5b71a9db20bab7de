import numpy as np
import pytest

import darkfringe.fileio as fio
from darkfringe.boundary_logic import EdgeRatios, InvalidBoundaryMaps
from darkfringe.forward_model import ComplexField, IntensityImage
from darkfringe.fringe_detect import FringeMaps
from darkfringe.path_search import BlockingStats, plan_paths
from darkfringe.patterns import ReferenceLibrary


def test_pgm16_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = IntensityImage(rng.random((20, 30)) * 1234.5, pixels_per_unit=10)
    path = tmp_path / "img.pgm"
    fio.write_pgm16(path, img)
    back = fio.read_pgm16(path, pixels_per_unit=10)
    assert back.values.shape == (20, 30)
    # 16-bit quantization bounds the round-trip error
    assert np.abs(back.values - img.values).max() <= 1234.5 / 65535
    header = path.read_bytes()[:40]
    assert header.startswith(b"P5\n# scale=")


def test_pgm8_round_trip(tmp_path):
    grid = np.arange(256, dtype=int).reshape(16, 16)
    path = tmp_path / "pat.pgm"
    fio.write_pgm8(path, grid)
    assert np.array_equal(fio.read_pgm8(path), grid)
    with pytest.raises(ValueError):
        fio.write_pgm8(tmp_path / "bad.pgm", np.array([[300]]))


def test_sweep_csv_header(tmp_path):
    path = tmp_path / "sweep.csv"
    fio.write_sweep_csv(path, [(0.1, 2.0, 0.97)])
    lines = path.read_text().splitlines()
    assert lines[0] == "delta_phi,radius,relative_intensity"
    assert len(lines) == 2


def test_fringe_maps_csv_round_trip(tmp_path):
    maps = FringeMaps(row_map=np.array([[1, 0], [0, 1], [1, 1]], dtype=bool),
                      col_map=np.zeros((2, 3), dtype=bool), measurement_index=2)
    path = tmp_path / "rows.csv"
    fio.write_fringe_maps_csv(path, maps, "row")
    kind, j, grid = fio.read_fringe_maps_csv(path)
    assert (kind, j) == ("row", 2)
    assert np.array_equal(grid, maps.row_map)
    assert path.read_text().splitlines()[0] == "kind=row,j=2"


def test_invalid_maps_round_trip(tmp_path):
    inv = InvalidBoundaryMaps(matrix_a=np.array([[True, False], [False, True]]),
                              matrix_b=np.array([[False, True, False]]))
    fio.write_invalid_maps(tmp_path / "a.csv", tmp_path / "b.csv", inv)
    back = fio.read_invalid_maps(tmp_path / "a.csv", tmp_path / "b.csv")
    assert np.array_equal(back.matrix_a, inv.matrix_a)
    assert np.array_equal(back.matrix_b, inv.matrix_b)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "1,0"


def test_edge_ratios_round_trip(tmp_path):
    h = np.array([[1j, complex(np.nan, np.nan)]])
    v = np.array([], dtype=complex).reshape(0, 3)
    ratios = EdgeRatios(horizontal=h, vertical=v)
    path = tmp_path / "ratios.csv"
    fio.write_edge_ratios_csv(path, ratios)
    lines = path.read_text().splitlines()
    assert lines[0] == "kind,row,col,ratio_real,ratio_imag,valid"
    back = fio.read_edge_ratios_csv(path, 1, 3)
    assert back.horizontal[0, 0] == 1j
    assert np.isnan(back.horizontal[0, 1])


def test_path_plan_round_trip(tmp_path):
    inv = InvalidBoundaryMaps(np.zeros((3, 2), bool), np.zeros((2, 3), bool))
    plan = plan_paths(inv, (0, 0))
    path = tmp_path / "plan.csv"
    fio.write_path_plan_csv(path, plan)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,moves"
    back = fio.read_path_plan_csv(path, origin=(0, 0))
    assert back.paths == plan.paths


def test_path_plan_unreachable_marker(tmp_path):
    plan = plan_paths(InvalidBoundaryMaps(np.ones((1, 1), bool),
                                          np.zeros((0, 2), bool)), (0, 0))
    assert plan.paths[0][1] is None
    path = tmp_path / "plan.csv"
    fio.write_path_plan_csv(path, plan)
    assert "X" in path.read_text()
    back = fio.read_path_plan_csv(path, origin=(0, 0))
    assert back.paths[0][1] is None


def test_blocking_stats_csv(tmp_path):
    stats = [BlockingStats(sigma=0.1, trials=500,
                           single_pass_block_rate=0.01, retry_block_rate=0.001)]
    path = tmp_path / "blocking.csv"
    fio.write_blocking_stats_csv(path, stats)
    lines = path.read_text().splitlines()
    assert lines[0] == "sigma,trials,single_pass_rate,retry_rate"
    assert lines[1] == "0.1,500,0.01,0.001"


def test_reference_library_round_trip(tmp_path):
    lib = ReferenceLibrary({1: -1j, 2: 1j, 3: -1 + 0j, 4: 1 + 0j})
    path = tmp_path / "lib.csv"
    fio.write_reference_library_csv(path, lib)
    assert path.read_text().splitlines()[0] == "j,ratio_real,ratio_imag"
    back = fio.read_reference_library_csv(path)
    assert back.ratios == lib.ratios


def test_metrics_csv(tmp_path):
    path = tmp_path / "metrics.csv"
    fio.write_metrics_csv(path, 0.0, 0.01, 0.0)
    lines = path.read_text().splitlines()
    assert lines[0] == "phase_rmse,complex_l2,unknown_frac"


def test_complex_field_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    field = ComplexField(rng.normal(size=(4, 5)) + 1j * rng.normal(size=(4, 5)))
    path = tmp_path / "field.cf32"
    fio.write_complex_field(path, field)
    with open(path, "rb") as fh:
        assert fh.readline() == b"CF32 4 5\n"
    back = fio.read_complex_field(path)
    assert back.shape == (4, 5)
    assert np.allclose(back.values, field.values, atol=1e-6)


def test_complex_field_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE 1 1\n\x00\x00\x00\x00\x00\x00\x00\x00")
    with pytest.raises(ValueError):
        fio.read_complex_field(path)


def test_pgm_rejects_wrong_magic(tmp_path):
    path = tmp_path / "junk.pgm"
    path.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        fio.read_pgm8(path)
