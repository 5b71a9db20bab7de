"""Fuse the per-measurement fringe maps into per-edge ratios and invalid flags.

Every boundary's fringe must vanish in exactly one of the m measurements; a
presence count different from m - 1 cannot be trusted and the edge is marked
invalid. Valid edges carry the object's adjacent phase ratio looked up from
the disappearance index.

Naming convention, fixed here once: ``matrix_a`` flags horizontal-neighbor
boundaries (shape s1 x (s2-1), same as the row maps) and ``matrix_b`` flags
vertical-neighbor boundaries (shape (s1-1) x s2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fringe_detect import FringeMaps
from .patterns import ReferenceLibrary


@dataclass
class InvalidBoundaryMaps:
    """Boolean flags for misjudged boundaries."""

    matrix_a: np.ndarray   # horizontal-neighbor boundaries, s1 x (s2-1)
    matrix_b: np.ndarray   # vertical-neighbor boundaries, (s1-1) x s2

    def __post_init__(self):
        self.matrix_a = np.asarray(self.matrix_a, dtype=bool)
        self.matrix_b = np.asarray(self.matrix_b, dtype=bool)
        if self.matrix_a.ndim != 2 or self.matrix_b.ndim != 2:
            raise ValueError("invalid-boundary matrices must be 2D")
        if (self.matrix_b.shape[0] + 1 != self.matrix_a.shape[0]
                or self.matrix_a.shape[1] + 1 != self.matrix_b.shape[1]):
            raise ValueError(
                f"inconsistent matrix shapes {self.matrix_a.shape} / {self.matrix_b.shape}")

    @property
    def s1(self) -> int:
        return self.matrix_a.shape[0]

    @property
    def s2(self) -> int:
        return self.matrix_b.shape[1]


@dataclass
class EdgeRatios:
    """Per-edge unit-modulus ratios; NaN entries are UNKNOWN (invalid edges).

    Orientation convention, used everywhere downstream: a horizontal ratio rho
    means phase(right unit) - phase(left unit) = arg(rho); a vertical ratio
    means phase(lower unit) - phase(upper unit) = arg(rho).
    """

    horizontal: np.ndarray   # s1 x (s2-1), complex
    vertical: np.ndarray     # (s1-1) x s2, complex

    def __post_init__(self):
        self.horizontal = np.asarray(self.horizontal, dtype=complex)
        self.vertical = np.asarray(self.vertical, dtype=complex)


def _stack(maps: list[FringeMaps]):
    shapes = {(m.row_map.shape, m.col_map.shape) for m in maps}
    if len(shapes) != 1:
        raise ValueError(f"fringe maps disagree on grid shape: {sorted(shapes)}")
    rows = np.stack([m.row_map for m in maps])
    cols = np.stack([m.col_map for m in maps])
    return rows, cols


def mark_invalid_and_ratios(maps: list[FringeMaps],
                            lib: ReferenceLibrary) -> tuple[InvalidBoundaryMaps, EdgeRatios]:
    """Apply the m - 1 consistency rule to every edge.

    maps must be ordered by measurement (index j = 1..m). An edge whose
    presence count equals m - 1 gets the ratio lib[j0] for its unique absent
    measurement j0; an edge that never disappears, or disappears more than
    once, is flagged invalid with an UNKNOWN (NaN) ratio.
    """
    if len(maps) < 2:
        raise ValueError("need at least 2 measurements")
    if len(maps) != len(lib):
        raise ValueError(f"{len(maps)} maps but reference library of size {len(lib)}")
    rows, cols = _stack(maps)
    m = len(maps)
    lut = np.array([lib[j] for j in range(1, m + 1)])

    def resolve(stack):
        count = stack.sum(axis=0)
        invalid = count != m - 1
        # unique absent index where valid; argmin picks it since exactly one is False
        absent = np.argmin(stack, axis=0)
        ratios = lut[absent]
        ratios[invalid] = complex(np.nan, np.nan)
        return invalid, ratios

    inv_a, ratio_h = resolve(rows)
    inv_b, ratio_v = resolve(cols)
    return (InvalidBoundaryMaps(matrix_a=inv_a, matrix_b=inv_b),
            EdgeRatios(horizontal=ratio_h, vertical=ratio_v))


def inject_misjudgment(truth_maps: list[FringeMaps], sigma: float,
                       seed: int) -> list[FringeMaps]:
    """Corrupt each edge with probability sigma by flipping one measurement's bit.

    A flipped bit breaks the m - 1 presence count, so the edge comes out
    invalid from :func:`mark_invalid_and_ratios`, which reproduces at boundary
    level the misjudgments that fine interference grids and ring artifacts
    cause in real images. Deterministic for a given seed.
    """
    if not 0 <= sigma < 1:
        raise ValueError("sigma must be in [0, 1)")
    rows, cols = _stack(truth_maps)
    m = rows.shape[0]
    rng = np.random.default_rng(seed)

    def corrupt(stack):
        shape = stack.shape[1:]
        hit = rng.random(size=shape) < sigma
        which = rng.integers(0, m, size=shape)
        out = stack.copy()
        if shape[0] and shape[1]:
            ii, jj = np.nonzero(hit)
            out[which[ii, jj], ii, jj] ^= True
        return out

    new_rows = corrupt(rows)
    new_cols = corrupt(cols)
    return [FringeMaps(row_map=new_rows[k], col_map=new_cols[k],
                       measurement_index=truth_maps[k].measurement_index)
            for k in range(m)]
