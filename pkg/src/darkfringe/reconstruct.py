"""Assemble the complex image from planned paths and edge ratios.

A unit's phase is the origin phase plus the argument of the product of edge
ratios along its path (conjugated when an edge is traversed against its
stored orientation). Accumulating the product instead of summing arguments
keeps quantized ratios exact: products of {1, i, -1, -i} never leave that set.
Amplitudes come from a median over eroded unit interiors pooled across all
measurements, and scoring removes the global phase offset that intensity
measurements can never determine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary_logic import EdgeRatios, InvalidBoundaryMaps
from .forward_model import ComplexField, GridSpec, IntensityImage
from .path_search import MOVES, PathPlan, plan_with_retry


@dataclass
class Reconstruction:
    """Recovered phase / amplitude grids; NaN phase marks UNKNOWN units."""

    phase: np.ndarray
    amplitude: np.ndarray
    complex_image: ComplexField
    provenance: np.ndarray   # index of the origin that fixed each unit, -1 unknown


@dataclass(frozen=True)
class ScoreMetrics:
    phase_rmse: float
    complex_l2: float
    unknown_frac: float


def _wrap(angles: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi]; exact for inputs that are float multiples of pi/2."""
    a = np.asarray(angles, dtype=float)
    return a - 2.0 * np.pi * np.round(a / (2.0 * np.pi))


def accumulate_phase(plan: PathPlan, ratios: EdgeRatios, origin_phase: float = 0.0) -> np.ndarray:
    """Phase grid from multiplicative ratio accumulation along planned paths.

    Stored orientations: horizontal ratio = right over left, vertical ratio =
    lower over upper; moves against them use the conjugate. A path that
    crosses an UNKNOWN (NaN) ratio is a plan/ratio inconsistency and raises.
    Unreachable units get NaN. Results are reduced mod 2*pi into [0, 2*pi).
    """
    s1, s2 = plan.shape
    phase = np.full((s1, s2), np.nan)
    for r in range(s1):
        for c in range(s2):
            path = plan.paths[r][c]
            if path is None:
                continue
            rr, cc = plan.origin
            product = 1 + 0j
            for mv in path:
                if mv == "R":
                    rho = ratios.horizontal[rr, cc]
                elif mv == "L":
                    rho = np.conj(ratios.horizontal[rr, cc - 1])
                elif mv == "D":
                    rho = ratios.vertical[rr, cc]
                else:
                    rho = np.conj(ratios.vertical[rr - 1, cc])
                if np.isnan(rho):
                    raise ValueError(
                        f"path for unit {(r, c)} crosses an edge with unknown ratio "
                        f"at {(rr, cc)} move {mv}")
                product *= rho
                dr, dc = MOVES[mv]
                rr, cc = rr + dr, cc + dc
            phase[r, c] = np.mod(origin_phase + np.angle(product), 2.0 * np.pi)
    return phase


def _interior_block(grid: GridSpec, i: int, j: int, erode: int):
    """Pixel block of unit (i, j) eroded on each side, in cropped-image coords."""
    ppu = grid.pixels_per_unit
    top = max(i * ppu + erode, grid.crop_rows)
    bottom = min((i + 1) * ppu - erode, grid.crop_rows + grid.height)
    left = j * ppu + erode
    right = (j + 1) * ppu - erode
    return (slice(top - grid.crop_rows, bottom - grid.crop_rows),
            slice(left, right))


def estimate_amplitude(images: list[IntensityImage], grid: GridSpec,
                       erode: int = 3) -> np.ndarray:
    """Per-unit amplitude from the median interior intensity.

    Interiors are eroded by `erode` pixels per side (band halfwidth + 1 keeps
    the fringe bands out), pixel values are pooled over all measurements
    (patterns are unit-modulus, so every frame sees the same amplitudes), and
    the square root of the pooled median is normalized to a maximum of 1.
    """
    if not images:
        raise ValueError("need at least one image")
    for img in images:
        if img.values.shape != (grid.height, grid.width):
            raise ValueError(
                f"image shape {img.values.shape} does not match grid "
                f"{(grid.height, grid.width)}")
    amp = np.zeros((grid.s1, grid.s2))
    for i in range(grid.s1):
        for j in range(grid.s2):
            block = _interior_block(grid, i, j, erode)
            pool = np.concatenate([img.values[block].ravel() for img in images])
            if pool.size == 0:
                raise ValueError(f"unit {(i, j)} has no surviving interior pixels")
            amp[i, j] = np.sqrt(np.median(pool))
    peak = amp.max()
    if peak > 0:
        amp /= peak
    return amp


def retrieve_phase(invalid: InvalidBoundaryMaps, ratios: EdgeRatios,
                   origins: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Multi-origin phase recovery with per-unit circular-mean fusion.

    Each origin gets its own plan (with transpose retry) and phase grid; the
    grids are aligned to the first origin's at a shared reference unit (or by
    the circular mean of their differences when the reference is not common)
    and fused per unit by the circular mean. Returns (phase, provenance) where
    provenance holds the index of the first origin that reached each unit.
    """
    if not origins:
        raise ValueError("need at least one origin")
    s1, s2 = invalid.s1, invalid.s2
    aligned = []
    contributors = []
    base = None
    for k, origin in enumerate(origins):
        plan = plan_with_retry(invalid, [origin])
        ph = accumulate_phase(plan, ratios, origin_phase=0.0)
        known = ~np.isnan(ph)
        if k == 0:
            offset = 0.0
            base = ph
        elif known[origins[0]] and not np.isnan(base[origins[0]]):
            offset = base[origins[0]] - ph[origins[0]]
        else:
            overlap = known & ~np.isnan(base)
            if not overlap.any():
                continue   # no way to relate this origin's constant; skip it
            offset = np.angle(np.sum(np.exp(1j * (base[overlap] - ph[overlap]))))
        aligned.append(np.where(known, ph + offset, np.nan))
        contributors.append(k)
    stack = np.stack(aligned)
    provenance = np.full((s1, s2), -1, dtype=int)
    phase = np.full((s1, s2), np.nan)
    for r in range(s1):
        for c in range(s2):
            vals = stack[:, r, c]
            known_k = np.nonzero(~np.isnan(vals))[0]
            if known_k.size == 0:
                continue
            provenance[r, c] = contributors[known_k[0]]
            # circular mean anchored at the first contributor: exact when all
            # contributors agree mod 2*pi, the plain circular mean otherwise
            anchor = vals[known_k[0]]
            mean = anchor + np.mean(_wrap(vals[known_k] - anchor))
            phase[r, c] = np.mod(mean, 2.0 * np.pi)
    return phase, provenance


def compose(phase: np.ndarray, amplitude: np.ndarray,
            provenance: np.ndarray | None = None) -> Reconstruction:
    """Pack phase and amplitude grids into a Reconstruction.

    UNKNOWN units (NaN phase) are zeroed in the complex image; the NaN in the
    phase grid stays authoritative.
    """
    if phase.shape != amplitude.shape:
        raise ValueError("phase and amplitude shapes differ")
    values = amplitude * np.exp(1j * np.where(np.isnan(phase), 0.0, phase))
    values[np.isnan(phase)] = 0.0
    if provenance is None:
        provenance = np.where(np.isnan(phase), -1, 0).astype(int)
    return Reconstruction(phase=phase, amplitude=amplitude,
                          complex_image=ComplexField(values), provenance=provenance)


def compose_and_score(phase: np.ndarray, amplitude: np.ndarray,
                      truth: ComplexField) -> ScoreMetrics:
    """Score a reconstruction against ground truth, up to a global phase.

    phase_rmse: circular RMSE of the phase over known units after removing
    the mean-square-optimal global offset (circular mean, then a linear
    refinement; exact recoveries score exactly 0.0). complex_l2: relative L2
    error of amplitude * exp(i phase) after its own optimal global phase.
    unknown_frac: fraction of NaN-phase units.
    """
    if phase.shape != truth.shape or amplitude.shape != truth.shape:
        raise ValueError("shape mismatch with ground truth")
    known = ~np.isnan(phase)
    unknown_frac = 1.0 - known.mean()
    if not known.any():
        return ScoreMetrics(phase_rmse=np.nan, complex_l2=np.nan,
                            unknown_frac=unknown_frac)
    d = _wrap(phase[known] - np.angle(truth.values[known]))
    alpha = np.angle(np.sum(np.exp(1j * d)))
    alpha = alpha + np.mean(_wrap(d - alpha))
    resid = _wrap(d - alpha)
    phase_rmse = float(np.sqrt(np.mean(resid**2)))

    rec = amplitude[known] * np.exp(1j * phase[known])
    tru = truth.values[known]
    inner = np.vdot(tru, rec)
    beta = np.angle(inner) if inner != 0 else 0.0
    denom = np.linalg.norm(tru)
    complex_l2 = float(np.linalg.norm(rec * np.exp(-1j * beta) - tru) / denom) \
        if denom > 0 else np.nan
    return ScoreMetrics(phase_rmse=phase_rmse, complex_l2=complex_l2,
                        unknown_frac=float(unknown_frac))
