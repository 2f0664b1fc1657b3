"""Grid heat-map scoring: matched-filter response of dark blobs per 8x8 cell.

A blob passes the gate when its pixel area lies within [0.5x, 2x] of the
template ellipse area and its mean intensity is within the darkness band.
Gated blobs receive a response in [0,1] from area, shape (second-moment
ellipse fit) and darkness agreement with the template; every heat-map cell
the blob touches is set to that response, all other cells stay at 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError
from .blobs import BlobStats, blob_stats
from .config import AREA_GATE, DARK_BAND, DetectorConfig

# pixel-center sampling adds 1/12 variance per axis; removed before axis fit
_SAMPLING_VAR = 1.0 / 12.0

_cell_index_cache: dict = {}


@dataclass
class HeatMap:
    scores: np.ndarray  # (side, side) float64 in [0,1]

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[0] != self.scores.shape[1]:
            raise DimensionMismatchError(f"heat map must be square, got {self.scores.shape}")
        if self.scores.size and (self.scores.min() < 0 or self.scores.max() > 1):
            raise DimensionMismatchError("heat-map scores must lie in [0,1]")

    @property
    def side(self) -> int:
        return self.scores.shape[0]


def _cell_index_flat(side: int, cell_px: int) -> np.ndarray:
    key = (side, cell_px)
    cached = _cell_index_cache.get(key)
    if cached is None:
        n = side * cell_px
        rows = np.repeat(np.arange(n) // cell_px, n)
        cols = np.tile(np.arange(n) // cell_px, n)
        cached = (rows * side + cols).astype(np.int64)
        _cell_index_cache[key] = cached
    return cached


def blob_responses(stats: BlobStats, cfg: DetectorConfig) -> np.ndarray:
    """Response in [0,1] for blobs 1..n; 0 for blobs failing the gates."""
    t = cfg.template
    n = stats.n
    if n == 0:
        return np.zeros(0)
    count = stats.count[1:]
    mean_i = stats.i_sum[1:] / count
    mr = stats.r_sum[1:] / count
    mc = stats.c_sum[1:] / count
    var_r = stats.rr_sum[1:] / count - mr * mr
    var_c = stats.cc_sum[1:] / count - mc * mc
    cov = stats.rc_sum[1:] / count - mr * mc

    half_tr = (var_r + var_c) / 2.0
    spread = np.sqrt(((var_r - var_c) / 2.0) ** 2 + cov * cov)
    lam1 = np.maximum(half_tr + spread - _SAMPLING_VAR, 1e-9)
    lam2 = np.maximum(half_tr - spread - _SAMPLING_VAR, 1e-9)
    est_major = 4.0 * np.sqrt(lam1)
    est_minor = 4.0 * np.sqrt(lam2)

    f_area = np.clip(1.0 - np.abs(count - t.area_px) / t.area_px, 0.0, 1.0)
    f_shape = np.clip(
        1.0 - (np.abs(est_major - t.major_px) / t.major_px
               + np.abs(est_minor - t.minor_px) / t.minor_px) / 2.0,
        0.0, 1.0,
    )
    f_dark = np.clip(1.0 - np.abs(mean_i - t.intensity) / DARK_BAND, 0.0, 1.0)

    response = np.clip(0.5 * f_area + 0.3 * f_shape + 0.2 * f_dark, 0.0, 1.0)

    lo, hi = AREA_GATE
    gate = (count >= lo * t.area_px) & (count <= hi * t.area_px) \
        & (mean_i <= t.intensity + DARK_BAND)
    return np.where(gate, response, 0.0)


def score_heatmap(image: np.ndarray, cfg: DetectorConfig) -> HeatMap:
    """Deterministic heat map of a raster; raises on geometry mismatch."""
    image = np.asarray(image, dtype=np.float64)
    expected = (cfg.image_side, cfg.image_side)
    if image.shape != expected:
        raise DimensionMismatchError(
            f"image shape {image.shape} does not match configured {expected}"
        )

    stats = blob_stats(image, cfg.template.dark_cut)
    side = cfg.heatmap_side
    scores = np.zeros(side * side, dtype=np.float64)
    if stats.n:
        responses = blob_responses(stats, cfg)
        lab_flat = stats.labels.ravel()
        nz = lab_flat.astype(bool)
        cell_idx = _cell_index_flat(side, cfg.grid_cell_px)
        ncells = side * side
        keys = lab_flat[nz].astype(np.int64) * ncells + cell_idx[nz]
        uniq = np.unique(keys)
        blob_ids = (uniq // ncells).astype(np.intp)
        cells = (uniq % ncells).astype(np.intp)
        np.maximum.at(scores, cells, responses[blob_ids - 1])
    return HeatMap(scores.reshape(side, side))
