"""Classical marker detector: adaptive threshold, quad extraction, decoding.

No learned components; it gives the rest of the toolkit an end-to-end
detector to evaluate and a reference point for the learned pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage import measure

from .decode import decode_at
from .geometry import BBox, ensure_ccw, iou, is_convex, quad_bbox, signed_area
from .imaging import to_luma


@dataclass(frozen=True, eq=False)
class Detection:
    quad: np.ndarray
    score: float
    id: int | None = None
    hamming: int | None = None
    bbox: BBox = field(default=None)

    def __post_init__(self):
        if self.bbox is None:
            object.__setattr__(self, "bbox", quad_bbox(self.quad))

    def to_dict(self):
        return {
            "bbox": self.bbox.to_list(),
            "corners": [[float(x), float(y)] for x, y in self.quad],
            "score": float(self.score),
            "id": None if self.id is None else int(self.id),
            "hamming": None if self.hamming is None else int(self.hamming),
        }

    @classmethod
    def from_dict(cls, d):
        corners = d.get("corners")
        quad = np.asarray(corners, dtype=float).reshape(-1, 2) if corners else np.zeros((0, 2))
        bbox = BBox.from_list(d["bbox"]) if d.get("bbox") is not None else quad_bbox(quad)
        return cls(quad=quad, score=float(d["score"]), id=d.get("id"), hamming=d.get("hamming"), bbox=bbox)


@dataclass(frozen=True)
class DetectorConfig:
    window: int = 15
    offset: float = 7.0 / 255.0
    min_area: float = 100.0
    tolerance: float = 0.02
    max_hamming: int = 2
    nms_iou: float = 0.5


def adaptive_threshold(gray, window: int = 15, offset: float = 7.0 / 255.0) -> np.ndarray:
    """Dark mask: pixels below their ``window`` box mean minus ``offset``."""
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    g = np.asarray(gray, dtype=float)
    mean = ndimage.uniform_filter(g, size=window, mode="nearest")
    return g < mean - offset


def _simplify_closed(contour, tolerance):
    # start Douglas-Peucker at the point farthest from the centroid, which is a vertex
    start = int(np.argmax(np.sum((contour - contour.mean(axis=0)) ** 2, axis=1)))
    ring = np.roll(contour[:-1], -start, axis=0)
    ring = np.vstack([ring, ring[:1]])
    return measure.approximate_polygon(ring, tolerance)[:-1]


def _refine_corners(contour, vertex_idx):
    """Intersect total-least-squares lines fitted to each side's inner 80%."""
    n = len(contour)
    lines = []
    for k in range(4):
        a, b = vertex_idx[k], vertex_idx[(k + 1) % 4]
        span = (b - a) % n
        if span < 5:
            return None
        lo, hi = a + int(0.1 * span), a + int(0.9 * span)
        pts = contour[np.arange(lo, hi + 1) % n]
        c = pts.mean(axis=0)
        _, _, vt = np.linalg.svd(pts - c)
        normal = vt[1]
        lines.append((normal, normal @ c))
    corners = []
    for k in range(4):
        (n1, d1), (n2, d2) = lines[k - 1], lines[k]
        m = np.array([n1, n2])
        if abs(np.linalg.det(m)) < 1e-9:
            return None
        corners.append(np.linalg.solve(m, [d1, d2]))
    return np.array(corners)


def find_quads(mask, min_area: float = 100.0, tolerance: float = 0.02) -> list:
    """Convex four-vertex outlines of dark regions, as CCW quads.

    Each region's outer border is traced, simplified with a tolerance of
    ``tolerance`` times its perimeter, and kept if it has exactly four
    vertices and encloses at least ``min_area`` px^2.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3)))
    quads = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        region = labels[sl] == k
        if region.sum() < 4:
            continue
        filled = ndimage.binary_fill_holes(region)
        padded = np.pad(filled, 1).astype(float)
        contours = measure.find_contours(padded, 0.5)
        if not contours:
            continue
        contour = max(contours, key=len)
        # (row, col) in padded index space -> continuous (x, y)
        xy = np.stack([contour[:, 1] - 1 + sl[1].start + 0.5, contour[:, 0] - 1 + sl[0].start + 0.5], axis=1)
        perimeter = np.sum(np.linalg.norm(np.diff(xy, axis=0), axis=1))
        if perimeter <= 0:
            continue
        approx = _simplify_closed(xy, tolerance * perimeter)
        if len(approx) != 4:
            continue
        if abs(signed_area(approx)) < min_area or not is_convex(approx):
            continue
        ring = xy[:-1]
        vertex_idx = [int(np.argmin(np.sum((ring - v) ** 2, axis=1))) for v in approx]
        order = np.argsort(vertex_idx)
        vertex_idx = [vertex_idx[i] for i in order]
        refined = _refine_corners(ring, vertex_idx)
        quad = approx[order] if refined is None or not is_convex(refined) else refined
        quads.append(ensure_ccw(quad))
    return quads


def non_max_suppression(detections, iou_threshold: float = 0.5) -> list:
    """Greedy NMS on bbox IoU; higher score wins, ties keep input order."""
    order = sorted(range(len(detections)), key=lambda k: (-detections[k].score, k))
    kept = []
    for k in order:
        if all(iou(detections[k].bbox, detections[j].bbox) <= iou_threshold for j in kept):
            kept.append(k)
    return [detections[k] for k in kept]


def detect(img, dictionary, max_hamming: int | None = None, config: DetectorConfig | None = None) -> list:
    config = config or DetectorConfig()
    if max_hamming is None:
        max_hamming = config.max_hamming
    mask = adaptive_threshold(to_luma(img), config.window, config.offset)
    candidates = []
    for quad in find_quads(mask, config.min_area, config.tolerance):
        try:
            outcome = decode_at(img, quad, dictionary, max_hamming)
        except ValueError:
            continue
        if not outcome.accepted:
            continue
        candidates.append(
            Detection(
                quad=quad,
                score=1.0 - outcome.distance / 36.0,
                id=outcome.id,
                hamming=outcome.distance,
            )
        )
    return non_max_suppression(candidates, config.nms_iou)
