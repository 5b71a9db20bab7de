"""Dark-fringe recognition on measured intensity images.

The preprocessing chain follows the camera-side recipe: invert the image so
fringes become bright ridges, remove the slow background with a high-pass
Gaussian filter, and compute a thresholded gradient-magnitude edge map. The
actual per-boundary decision is a band-contrast test: the mean intensity in a
narrow band on the boundary line is compared against the mean over the two
flanking unit interiors, on the raw image AND on the high-pass stage. Two weak
detectors in conjunction keep ringing and background tilt from producing
false positives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .forward_model import GridSpec, IntensityImage


@dataclass(frozen=True)
class DetectConfig:
    highpass_sigma: float = 8.0          # pixels; pixels_per_unit / 4 is a good default
    edge_threshold_frac: float = 0.2
    band_halfwidth: int = 2              # pixels on each side of the boundary line
    # band mean must fall below alpha * flank mean; 0.7 separates the
    # shallowest quantized fringe (band ratio ~0.6 when flank interiors are
    # themselves depressed by their own fringes at radius ~unit/4) from the
    # no-fringe case (ratio >= ~1)
    fringe_ratio_alpha: float = 0.7

    def __post_init__(self):
        if self.highpass_sigma <= 0:
            raise ValueError("highpass_sigma must be positive")
        if not 0 < self.edge_threshold_frac < 1:
            raise ValueError("edge_threshold_frac must be in (0, 1)")
        if self.band_halfwidth < 1:
            raise ValueError("band_halfwidth must be a positive integer")
        if not 0 < self.fringe_ratio_alpha < 1:
            raise ValueError("fringe_ratio_alpha must be in (0, 1)")


def default_detect_config(pixels_per_unit: int) -> DetectConfig:
    return DetectConfig(highpass_sigma=max(1.0, pixels_per_unit / 4))


@dataclass
class PreprocessStages:
    """Intermediate images of the preprocessing chain, for diagnostics."""

    inverted: np.ndarray
    highpass: np.ndarray
    gradient: np.ndarray
    edge_mask: np.ndarray


@dataclass
class FringeMaps:
    """Boolean presence maps for one measurement.

    row_map[i, j] covers the boundary between horizontally adjacent units
    (i, j) and (i, j+1); col_map[i, j] the boundary between vertically
    adjacent units (i, j) and (i+1, j).
    """

    row_map: np.ndarray
    col_map: np.ndarray
    measurement_index: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.row_map = np.asarray(self.row_map, dtype=bool)
        self.col_map = np.asarray(self.col_map, dtype=bool)
        if self.row_map.ndim != 2 or self.col_map.ndim != 2:
            raise ValueError("presence maps must be 2D")
        if (self.col_map.shape[0] + 1 != self.row_map.shape[0]
                or self.row_map.shape[1] + 1 != self.col_map.shape[1]):
            raise ValueError(
                f"inconsistent map shapes {self.row_map.shape} / {self.col_map.shape}; "
                "expected s1 x (s2-1) and (s1-1) x s2")

    @property
    def s1(self) -> int:
        return self.row_map.shape[0]

    @property
    def s2(self) -> int:
        return self.col_map.shape[1]


def preprocess_stages(img: IntensityImage, cfg: DetectConfig) -> PreprocessStages:
    """Run the inversion / high-pass / edge-detection chain and keep every stage."""
    vals = img.values
    inverted = vals.max() - vals
    highpass = inverted - gaussian_filter(inverted, cfg.highpass_sigma, mode="nearest")
    gy, gx = np.gradient(highpass)
    gradient = np.hypot(gx, gy)
    gmax = gradient.max()
    if gmax > 0:
        edge_mask = gradient >= cfg.edge_threshold_frac * gmax
    else:
        edge_mask = np.zeros_like(gradient, dtype=bool)
    return PreprocessStages(inverted=inverted, highpass=highpass,
                            gradient=gradient, edge_mask=edge_mask)


def preprocess(img: IntensityImage, cfg: DetectConfig) -> IntensityImage:
    """Thresholded edge map of the image (final preprocessing stage)."""
    stages = preprocess_stages(img, cfg)
    return IntensityImage(stages.edge_mask.astype(float), img.pixels_per_unit)


def _along_span(unit_index: int, ppu: int, margin: int, lo: int, hi: int) -> slice:
    """Index span along the boundary line inside unit `unit_index`.

    Eroded by `margin` at both ends to stay clear of crossing fringes, then
    clipped to the surviving image range [lo, hi) and shifted so lo maps to 0.
    """
    a = unit_index * ppu + margin
    b = (unit_index + 1) * ppu - margin
    a, b = max(a, lo), min(b, hi)
    return slice(a - lo, max(b - lo, a - lo))


def _across_band(line: int, halfwidth: int, lo: int, hi: int) -> slice:
    a, b = max(line - halfwidth, lo), min(line + halfwidth, hi)
    return slice(a - lo, max(b - lo, a - lo))


def _flank_band(unit_index: int, ppu: int, lo: int, hi: int) -> slice:
    center = unit_index * ppu + ppu // 2
    halfwidth = max(1, ppu // 8)
    return _across_band(center, halfwidth, lo, hi)


def _band_test(raw: np.ndarray, hp: np.ndarray, band_rc, flank_a, flank_b,
               alpha: float) -> tuple[bool, bool]:
    """(present, zero_flank) decision for one boundary.

    band_rc / flank_* are (row_slice, col_slice) pairs on the cropped image.
    """
    band_vals = raw[band_rc]
    flank_vals = np.concatenate([raw[flank_a].ravel(), raw[flank_b].ravel()])
    if band_vals.size == 0 or flank_vals.size == 0:
        return True, True
    flank_mean = flank_vals.mean()
    if flank_mean <= 0:
        return True, True
    dark = band_vals.mean() < alpha * flank_mean
    hp_band = hp[band_rc].mean()
    hp_flank = np.concatenate([hp[flank_a].ravel(), hp[flank_b].ravel()]).mean()
    return bool(dark and hp_band > hp_flank), False


def recognize_fringes(img: IntensityImage, grid: GridSpec,
                      cfg: DetectConfig | None = None,
                      measurement_index: int = 0) -> FringeMaps:
    """Decide fringe presence for every adjacent-unit boundary of one image.

    Boundaries whose bands fall inside cropped rows are evaluated on the
    surviving pixels. A flank that averages to zero cannot be trusted, so the
    boundary is conservatively marked present and flagged in diagnostics.
    """
    if cfg is None:
        cfg = default_detect_config(grid.pixels_per_unit)
    ppu = grid.pixels_per_unit
    if img.values.shape != (grid.height, grid.width):
        raise ValueError(
            f"image shape {img.values.shape} does not match grid "
            f"{(grid.height, grid.width)}")
    if 2 * cfg.band_halfwidth >= ppu:
        raise ValueError("band_halfwidth must be below pixels_per_unit / 2")
    stages = preprocess_stages(img, cfg)
    raw, hp = img.values, stages.highpass
    crop = grid.crop_rows
    row_lo, row_hi = crop, crop + grid.height   # surviving rows, original coords
    margin = min(cfg.band_halfwidth + 1, (ppu - 1) // 2)
    alpha = cfg.fringe_ratio_alpha

    row_map = np.zeros((grid.s1, grid.s2 - 1), dtype=bool)
    zf_row = np.zeros_like(row_map)
    for i in range(grid.s1):
        rows = _along_span(i, ppu, margin, row_lo, row_hi)
        for jb in range(grid.s2 - 1):
            x = (jb + 1) * ppu
            band = (rows, _across_band(x, cfg.band_halfwidth, 0, grid.width))
            fla = (rows, _flank_band(jb, ppu, 0, grid.width))
            flb = (rows, _flank_band(jb + 1, ppu, 0, grid.width))
            row_map[i, jb], zf_row[i, jb] = _band_test(raw, hp, band, fla, flb, alpha)

    col_map = np.zeros((grid.s1 - 1, grid.s2), dtype=bool)
    zf_col = np.zeros_like(col_map)
    for ib in range(grid.s1 - 1):
        y = (ib + 1) * ppu
        band_rows = _across_band(y, cfg.band_halfwidth, row_lo, row_hi)
        fla_rows = _flank_band(ib, ppu, row_lo, row_hi)
        flb_rows = _flank_band(ib + 1, ppu, row_lo, row_hi)
        for j in range(grid.s2):
            cols = _along_span(j, ppu, margin, 0, grid.width)
            band = (band_rows, cols)
            col_map[ib, j], zf_col[ib, j] = _band_test(
                raw, hp, band, (fla_rows, cols), (flb_rows, cols), alpha)

    diagnostics = {}
    if zf_row.any() or zf_col.any():
        diagnostics["zero_flank_row"] = zf_row
        diagnostics["zero_flank_col"] = zf_col
    return FringeMaps(row_map=row_map, col_map=col_map,
                      measurement_index=measurement_index, diagnostics=diagnostics)
