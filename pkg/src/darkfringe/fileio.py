"""On-disk formats for every artifact the pipeline produces.

Images travel as binary PGM (P5): 16-bit big-endian for intensity frames,
with the linear scale recorded in a comment line so values can be restored;
8-bit for patterns and diagnostic stages. Everything tabular is plain CSV
with a fixed header. Complex fields use a one-line ASCII header followed by
row-major interleaved (real, imag) little-endian float32.
"""

from __future__ import annotations

import csv

import numpy as np

from .boundary_logic import EdgeRatios, InvalidBoundaryMaps
from .forward_model import ComplexField, IntensityImage
from .fringe_detect import FringeMaps
from .path_search import BlockingStats, PathPlan
from .patterns import ReferenceLibrary


# ---------------------------------------------------------------------------
# PGM


def write_pgm16(path, img: IntensityImage) -> None:
    """16-bit P5 with values linearly scaled to [0, 65535].

    The scale factor (stored / original) goes into a '# scale=<float>'
    comment, so read_pgm16 can undo it.
    """
    vals = img.values
    peak = float(vals.max())
    scale = 65535.0 / peak if peak > 0 else 1.0
    data = np.round(vals * scale).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        fh.write(f"# scale={scale!r}\n".encode())
        fh.write(f"{data.shape[1]} {data.shape[0]}\n65535\n".encode())
        fh.write(data.tobytes())


def _read_pgm_header(fh) -> tuple[int, int, int, dict]:
    magic = fh.readline().strip()
    if magic != b"P5":
        raise ValueError(f"not a binary PGM file (magic {magic!r})")
    meta = {}
    fields = []
    while len(fields) < 3:
        line = fh.readline()
        if not line:
            raise ValueError("truncated PGM header")
        if line.startswith(b"#"):
            text = line[1:].strip().decode()
            if "=" in text:
                key, _, value = text.partition("=")
                meta[key.strip()] = value.strip()
            continue
        fields.extend(line.split())
    width, height, maxval = (int(v) for v in fields[:3])
    return width, height, maxval, meta


def read_pgm16(path, pixels_per_unit: int = 1) -> IntensityImage:
    with open(path, "rb") as fh:
        width, height, maxval, meta = _read_pgm_header(fh)
        if maxval != 65535:
            raise ValueError(f"expected 16-bit PGM, maxval={maxval}")
        raw = np.frombuffer(fh.read(width * height * 2), dtype=">u2")
    scale = float(meta.get("scale", 1.0))
    vals = raw.reshape(height, width).astype(float) / scale
    return IntensityImage(vals, pixels_per_unit=pixels_per_unit)


def write_pgm8(path, values: np.ndarray) -> None:
    """8-bit P5 from an integer grid already in [0, 255]."""
    data = np.asarray(values)
    if data.min() < 0 or data.max() > 255:
        raise ValueError("8-bit PGM expects values in [0, 255]")
    data = data.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode())
        fh.write(data.tobytes())


def read_pgm8(path) -> np.ndarray:
    with open(path, "rb") as fh:
        width, height, maxval, _ = _read_pgm_header(fh)
        if maxval != 255:
            raise ValueError(f"expected 8-bit PGM, maxval={maxval}")
        raw = np.frombuffer(fh.read(width * height), dtype=np.uint8)
    return raw.reshape(height, width).copy()


# ---------------------------------------------------------------------------
# CSV tables


def _write_rows(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_sweep_csv(path, rows) -> None:
    _write_rows(path, ["delta_phi", "radius", "relative_intensity"],
                [(repr(a), repr(b), repr(c)) for a, b, c in rows])


def write_fringe_maps_csv(path, maps: FringeMaps, kind: str) -> None:
    """One 0/1 grid per file; `kind` selects the row or col map."""
    if kind not in ("row", "col"):
        raise ValueError("kind must be 'row' or 'col'")
    grid = maps.row_map if kind == "row" else maps.col_map
    with open(path, "w", newline="") as fh:
        fh.write(f"kind={kind},j={maps.measurement_index}\n")
        writer = csv.writer(fh)
        writer.writerows(grid.astype(int).tolist())


def read_fringe_maps_csv(path) -> tuple[str, int, np.ndarray]:
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        parts = dict(item.split("=") for item in header.split(","))
        grid = np.array([[int(v) for v in row] for row in csv.reader(fh)], dtype=bool)
    return parts["kind"], int(parts["j"]), grid


def write_bool_grid_csv(path, grid: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(np.asarray(grid, dtype=int).tolist())


def read_bool_grid_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[int(v) for v in row] for row in csv.reader(fh)], dtype=bool)


def write_invalid_maps(path_a, path_b, invalid: InvalidBoundaryMaps) -> None:
    write_bool_grid_csv(path_a, invalid.matrix_a)
    write_bool_grid_csv(path_b, invalid.matrix_b)


def read_invalid_maps(path_a, path_b) -> InvalidBoundaryMaps:
    return InvalidBoundaryMaps(matrix_a=read_bool_grid_csv(path_a),
                               matrix_b=read_bool_grid_csv(path_b))


def write_edge_ratios_csv(path, ratios: EdgeRatios) -> None:
    rows = []
    for kind, grid in (("h", ratios.horizontal), ("v", ratios.vertical)):
        for (r, c), val in np.ndenumerate(grid):
            valid = not np.isnan(val)
            rows.append((kind, r, c,
                         repr(float(val.real)) if valid else "nan",
                         repr(float(val.imag)) if valid else "nan",
                         int(valid)))
    _write_rows(path, ["kind", "row", "col", "ratio_real", "ratio_imag", "valid"], rows)


def read_edge_ratios_csv(path, s1: int, s2: int) -> EdgeRatios:
    horizontal = np.full((s1, s2 - 1), complex(np.nan, np.nan))
    vertical = np.full((s1 - 1, s2), complex(np.nan, np.nan))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            target = horizontal if row["kind"] == "h" else vertical
            if int(row["valid"]):
                target[int(row["row"]), int(row["col"])] = complex(
                    float(row["ratio_real"]), float(row["ratio_imag"]))
    return EdgeRatios(horizontal=horizontal, vertical=vertical)


def write_path_plan_csv(path, plan: PathPlan) -> None:
    s1, s2 = plan.shape
    rows = [(r, c, plan.paths[r][c] if plan.paths[r][c] is not None else "X")
            for r in range(s1) for c in range(s2)]
    _write_rows(path, ["row", "col", "moves"], rows)


def read_path_plan_csv(path, origin: tuple[int, int]) -> PathPlan:
    entries = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            entries[(int(row["row"]), int(row["col"]))] = row["moves"]
    s1 = 1 + max(r for r, _ in entries)
    s2 = 1 + max(c for _, c in entries)
    paths: list[list[str | None]] = [[None] * s2 for _ in range(s1)]
    for (r, c), moves in entries.items():
        paths[r][c] = None if moves == "X" else ("" if moves == "" else moves)
    prov = [[None if paths[r][c] is None else "file" for c in range(s2)]
            for r in range(s1)]
    return PathPlan(origin=origin, paths=paths, provenance=prov)


def write_blocking_stats_csv(path, stats: list[BlockingStats]) -> None:
    _write_rows(path, ["sigma", "trials", "single_pass_rate", "retry_rate"],
                [(repr(s.sigma), s.trials, repr(s.single_pass_block_rate),
                  repr(s.retry_block_rate)) for s in stats])


def write_reference_library_csv(path, lib: ReferenceLibrary) -> None:
    _write_rows(path, ["j", "ratio_real", "ratio_imag"],
                [(j, repr(lib[j].real), repr(lib[j].imag))
                 for j in sorted(lib.ratios)])


def read_reference_library_csv(path) -> ReferenceLibrary:
    ratios = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ratios[int(row["j"])] = complex(float(row["ratio_real"]),
                                            float(row["ratio_imag"]))
    return ReferenceLibrary(ratios)


def write_metrics_csv(path, phase_rmse: float, complex_l2: float,
                      unknown_frac: float) -> None:
    _write_rows(path, ["phase_rmse", "complex_l2", "unknown_frac"],
                [(repr(phase_rmse), repr(complex_l2), repr(unknown_frac))])


# ---------------------------------------------------------------------------
# Complex field (CF32)


def write_complex_field(path, field: ComplexField) -> None:
    """ASCII 'CF32 <rows> <cols>' header, then interleaved float32 LE pairs."""
    vals = field.values
    with open(path, "wb") as fh:
        fh.write(f"CF32 {vals.shape[0]} {vals.shape[1]}\n".encode())
        interleaved = np.empty((vals.shape[0], vals.shape[1], 2), dtype="<f4")
        interleaved[..., 0] = vals.real
        interleaved[..., 1] = vals.imag
        fh.write(interleaved.tobytes())


def read_complex_field(path) -> ComplexField:
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != b"CF32":
            raise ValueError("not a CF32 complex field file")
        rows, cols = int(header[1]), int(header[2])
        raw = np.frombuffer(fh.read(rows * cols * 8), dtype="<f4")
    pairs = raw.reshape(rows, cols, 2)
    return ComplexField(pairs[..., 0].astype(float) + 1j * pairs[..., 1].astype(float))
