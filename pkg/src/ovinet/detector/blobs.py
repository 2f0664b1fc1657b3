"""Dark-blob labeling and statistics: the detector's hot kernel.

Two interchangeable backends compute identical results:

* ``ovinet._native`` — a compiled single-pass union-find kernel;
* a pure-Python fallback on scipy.ndimage + numpy bincount.

The compiled backend is used when importable; set ``OVINET_PURE=1`` to force
the fallback. Both accumulate in raster-scan order, so outputs are
bit-identical and everything downstream is backend-agnostic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


@dataclass
class BlobStats:
    """Per-blob pixel statistics; index 0 is the background bin."""

    labels: np.ndarray   # int32 label image, 0 = background
    n: int               # number of blobs
    count: np.ndarray    # pixel counts, length n+1
    i_sum: np.ndarray    # intensity sums
    r_sum: np.ndarray    # row-coordinate sums
    c_sum: np.ndarray    # col-coordinate sums
    rr_sum: np.ndarray   # row^2 sums
    cc_sum: np.ndarray   # col^2 sums
    rc_sum: np.ndarray   # row*col sums


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_coord_cache: dict = {}


def _coords(shape):
    cached = _coord_cache.get(shape)
    if cached is None:
        h, w = shape
        rows = np.repeat(np.arange(h, dtype=np.float64), w)
        cols = np.tile(np.arange(w, dtype=np.float64), h)
        cached = (rows, cols, rows * rows, cols * cols, rows * cols)
        _coord_cache[shape] = cached
    return cached


def blob_stats_pure(image: np.ndarray, threshold: float) -> BlobStats:
    """Fallback: scipy labeling + bincount accumulation (raster order)."""
    from scipy import ndimage

    mask = image <= threshold
    labels, n = ndimage.label(mask, structure=_CROSS)
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    flat = labels.ravel()
    img_flat = image.ravel()
    rows, cols, rr, cc, rc = _coords(image.shape)
    minlen = n + 1
    arrays = [
        np.bincount(flat, minlength=minlen).astype(np.float64),
        np.bincount(flat, weights=img_flat, minlength=minlen),
        np.bincount(flat, weights=rows, minlength=minlen),
        np.bincount(flat, weights=cols, minlength=minlen),
        np.bincount(flat, weights=rr, minlength=minlen),
        np.bincount(flat, weights=cc, minlength=minlen),
        np.bincount(flat, weights=rc, minlength=minlen),
    ]
    for arr in arrays:  # bin 0 is background; native skips it entirely
        arr[0] = 0.0
    return BlobStats(labels, int(n), *arrays)


def blob_stats_native(image: np.ndarray, threshold: float) -> BlobStats:
    from ovinet import _native

    labels, arrays = _native.label_and_stats(image, float(threshold))
    count, i_sum, r_sum, c_sum, rr_sum, cc_sum, rc_sum = arrays
    return BlobStats(
        labels=labels,
        n=int(count.shape[0] - 1),
        count=count,
        i_sum=i_sum,
        r_sum=r_sum,
        c_sum=c_sum,
        rr_sum=rr_sum,
        cc_sum=cc_sum,
        rc_sum=rc_sum,
    )


def _pick_backend():
    if os.environ.get("OVINET_PURE", "") not in ("", "0"):
        return "pure", blob_stats_pure
    try:
        from ovinet import _native  # noqa: F401
    except ImportError:
        return "pure", blob_stats_pure
    return "native", blob_stats_native


BACKEND, _impl = _pick_backend()


def blob_stats(image: np.ndarray, threshold: float) -> BlobStats:
    """Label 4-connected pixels with intensity <= threshold and accumulate stats."""
    image = np.ascontiguousarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("blob_stats expects a 2-D raster")
    return _impl(image, threshold)
