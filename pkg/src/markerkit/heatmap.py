"""Corner heatmap codec and its weighted loss.

Heatmaps are ``(rows, cols)`` float arrays in [0, 1]; pixel ``(i, j)`` sits at
``x = j, y = i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import canonical_order, order_by_angle

HEATMAP_SIZE = 64
COVARIANCE_FACTOR = 10.0
DEFAULT_THRESHOLD = 0.5


def encode_corners(corners, base_sigma2: float = 1.0, size: int = HEATMAP_SIZE) -> np.ndarray:
    """Render up to four corners as unit-peak isotropic Gaussians, merged by maximum.

    Each Gaussian has covariance ``10 * base_sigma2 * I``.
    """
    pts = np.asarray(corners, dtype=float).reshape(-1, 2)
    if np.any(pts < 0) or np.any(pts >= size):
        raise ValueError(f"corners must lie in [0, {size})^2")
    var = COVARIANCE_FACTOR * base_sigma2
    i, j = np.mgrid[0:size, 0:size]
    out = np.zeros((size, size))
    for x, y in pts:
        np.maximum(out, np.exp(-((j - x) ** 2 + (i - y) ** 2) / (2.0 * var)), out=out)
    return out


def weight_map(target) -> np.ndarray:
    """Per-pixel loss weights in [1, 10]: 1 at the target minimum, 10 at its maximum."""
    y = np.asarray(target, dtype=float)
    lo, hi = y.min(), y.max()
    if hi <= lo:
        return np.ones_like(y)
    return (y - lo) / (hi - lo) * 9.0 + 1.0


def weighted_mse(target, prediction) -> float:
    y = np.asarray(target, dtype=float)
    yhat = np.asarray(prediction, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    return float(np.mean((yhat - y) ** 2 * weight_map(y)))


@dataclass(frozen=True, eq=False)
class Blob:
    """A 4-connected component; ``values`` is the heatmap zeroed outside it."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def area(self) -> int:
        return len(self.rows)

    @property
    def score(self) -> float:
        return float(self.values[self.rows, self.cols].mean())

    @property
    def top_left(self):
        k = np.lexsort((self.cols, self.rows))[0]
        return int(self.rows[k]), int(self.cols[k])


def expected_blob_area(threshold: float, base_sigma2: float = 1.0) -> float:
    """Area of the level set ``{g >= threshold}`` of one encoded Gaussian."""
    return math.pi * 2.0 * COVARIANCE_FACTOR * base_sigma2 * math.log(1.0 / threshold)


def default_area_range(threshold: float = DEFAULT_THRESHOLD, base_sigma2: float = 1.0):
    area = expected_blob_area(threshold, base_sigma2)
    return 0.5 * area, 1.5 * area


def extract_blobs(heatmap, value_threshold: float = DEFAULT_THRESHOLD, area_range=None) -> list:
    """Connected regions at or above ``value_threshold``, best score first.

    Regions whose pixel count falls outside ``area_range`` are discarded.
    Equal scores are ordered by their top-left pixel.
    """
    if not 0 < value_threshold < 1:
        raise ValueError("value_threshold must be in (0, 1)")
    h = np.asarray(heatmap, dtype=float)
    lo, hi = area_range if area_range is not None else default_area_range(value_threshold)
    labels, n = ndimage.label(h >= value_threshold)
    blobs = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        if not lo <= len(rows) <= hi:
            continue
        values = np.zeros_like(h)
        values[rows, cols] = h[rows, cols]
        blobs.append(Blob(rows, cols, values))
    blobs.sort(key=lambda b: (-b.score, b.top_left))
    return blobs


def blob_centroid(blob: Blob):
    """Value-weighted mean position ``(x, y)`` of the masked blob."""
    v = blob.values
    total = v.sum()
    if total <= 0:
        raise ValueError("blob has zero mass")
    i, j = np.indices(v.shape)
    return float((j * v).sum() / total), float((i * v).sum() / total)


def decode_corners(
    heatmap,
    value_threshold: float = DEFAULT_THRESHOLD,
    area_range=None,
    max_corners: int = 4,
) -> np.ndarray:
    """Corner estimates from the best-scoring blobs.

    Four corners come back in canonical counterclockwise order starting at
    the top-left; fewer are returned in score order.
    """
    blobs = extract_blobs(heatmap, value_threshold, area_range)[:max_corners]
    pts = np.array([blob_centroid(b) for b in blobs], dtype=float).reshape(-1, 2)
    if len(pts) == 4:
        pts = canonical_order(order_by_angle(pts))
    return pts
