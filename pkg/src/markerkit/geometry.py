"""Points, quads, boxes and homographies.

Coordinates are continuous image coordinates: ``x`` grows to the right, ``y``
grows downward, and pixel ``(row i, col j)`` covers ``[j, j+1) x [i, i+1)``.
A quad is a ``(4, 2)`` float array of ``(x, y)`` corners stored in
counterclockwise order *as seen on screen* (y down), e.g. top-left,
bottom-left, bottom-right, top-right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    pass


class DegenerateQuadError(GeometryError):
    pass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left ``(x, y)`` and extent ``(w, h)``."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise GeometryError(f"box extent must be positive, got w={self.w}, h={self.h}")

    @property
    def x1(self):
        return self.x + self.w

    @property
    def y1(self):
        return self.y + self.h

    @property
    def area(self):
        return self.w * self.h

    def to_list(self):
        return [float(self.x), float(self.y), float(self.w), float(self.h)]

    @classmethod
    def from_list(cls, values):
        x, y, w, h = (float(v) for v in values)
        return cls(x, y, w, h)

    def scaled(self, s):
        return BBox(self.x * s, self.y * s, self.w * s, self.h * s)


def as_quad(points) -> np.ndarray:
    q = np.asarray(points, dtype=float).reshape(-1, 2)
    if q.shape != (4, 2):
        raise GeometryError(f"a quad has 4 corners, got {len(q)}")
    if not np.all(np.isfinite(q)):
        raise GeometryError("quad corners must be finite")
    return q


def signed_area(points) -> float:
    """Shoelace area, positive for counterclockwise order on screen (y down)."""
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(xn * y - x * yn))


def is_ccw(points) -> bool:
    return signed_area(points) > 0


def is_convex(points) -> bool:
    """Strict convexity: every turn has the same nonzero orientation."""
    p = np.asarray(points, dtype=float)
    a = np.roll(p, 1, axis=0)
    c = np.roll(p, -1, axis=0)
    cross = (p[:, 0] - a[:, 0]) * (c[:, 1] - p[:, 1]) - (p[:, 1] - a[:, 1]) * (c[:, 0] - p[:, 0])
    return bool(np.all(cross > 0) or np.all(cross < 0))


def ensure_ccw(points) -> np.ndarray:
    q = as_quad(points)
    if signed_area(q) < 0:
        q = q[::-1].copy()
    return q


def order_by_angle(points) -> np.ndarray:
    """Sort points by angle around their centroid (gives a simple polygon)."""
    p = np.asarray(points, dtype=float)
    c = p.mean(axis=0)
    return p[np.argsort(np.arctan2(p[:, 1] - c[1], p[:, 0] - c[0]), kind="stable")]


def canonical_order(points) -> np.ndarray:
    """Counterclockwise order starting at the corner nearest the box top-left.

    Ties in distance go to the lower original index (after orientation fix).
    """
    q = ensure_ccw(points)
    origin = q.min(axis=0)
    d2 = np.sum((q - origin) ** 2, axis=1)
    start = int(np.argmin(d2))
    return np.roll(q, -start, axis=0)


def quad_bbox(points) -> BBox:
    p = np.asarray(points, dtype=float)
    lo = p.min(axis=0)
    hi = p.max(axis=0)
    return BBox(float(lo[0]), float(lo[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))


def expand_bbox(box: BBox, margin: float = 0.2, bounds=None) -> BBox:
    """Grow a box by ``margin`` of its width on each side (and of its height on top/bottom).

    With ``bounds=(width, height)`` the result is clamped to the image; an
    empty intersection raises :class:`GeometryError`.
    """
    if margin < 0:
        raise GeometryError("margin must be non-negative")
    x0 = box.x - margin * box.w
    y0 = box.y - margin * box.h
    x1 = box.x1 + margin * box.w
    y1 = box.y1 + margin * box.h
    if bounds is not None:
        width, height = bounds
        x0, y0 = max(x0, 0.0), max(y0, 0.0)
        x1, y1 = min(x1, float(width)), min(y1, float(height))
        if x1 <= x0 or y1 <= y0:
            raise GeometryError("expanded box does not intersect the image")
    return BBox(x0, y0, x1 - x0, y1 - y0)


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x1, b.x1) - max(a.x, b.x)
    ih = min(a.y1, b.y1) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # x1 - x can differ from w by an ulp, so keep the ratio inside [0, 1]
    return min(1.0, inter / (a.area + b.area - inter))


def rect_quad(x0, y0, x1, y1) -> np.ndarray:
    """Axis-aligned rectangle as a CCW quad starting at the top-left."""
    return np.array([[x0, y0], [x0, y1], [x1, y1], [x1, y0]], dtype=float)


# -- homographies -----------------------------------------------------------


def _normalizing_transform(p):
    centroid = p.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(p - centroid, axis=1))
    if mean_dist <= 0:
        raise DegenerateQuadError("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def _has_collinear_triple(p, rel_tol=1e-9):
    scale = max(np.ptp(p[:, 0]), np.ptp(p[:, 1])) ** 2
    if scale == 0:
        return True
    for skip in range(4):
        a, b, c = np.delete(p, skip, axis=0)
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cross) <= rel_tol * scale:
            return True
    return False


def homography_from_quad(src, dst) -> np.ndarray:
    """Homography mapping ``src[k]`` onto ``dst[k]`` for the four corners.

    Normalized DLT: both point sets are shifted to their centroid and scaled to
    mean distance sqrt(2) before solving the 8x9 system by SVD.
    """
    src = as_quad(src)
    dst = as_quad(dst)
    if _has_collinear_triple(src) or _has_collinear_triple(dst):
        raise DegenerateQuadError("three corners are collinear")
    ts = _normalizing_transform(src)
    td = _normalizing_transform(dst)
    ps = src @ ts[:2, :2].T + ts[:2, 2]
    pd = dst @ td[:2, :2].T + td[:2, 2]

    a = np.zeros((8, 9))
    for k in range(4):
        x, y = ps[k]
        u, v = pd[k]
        a[2 * k] = [-x, -y, -1, 0, 0, 0, u * x, u * y, u]
        a[2 * k + 1] = [0, 0, 0, -x, -y, -1, v * x, v * y, v]
    _, s, vt = np.linalg.svd(a)
    if s[7] <= 1e-12 * s[0]:
        raise DegenerateQuadError("rank-deficient correspondence")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.solve(td, hn @ ts)
    if abs(np.linalg.det(h)) < 1e-300:
        raise DegenerateQuadError("singular homography")
    if h[2, 2] != 0:
        h = h / h[2, 2]
    return h


def apply_homography(h, points) -> np.ndarray:
    """Map one ``(x, y)`` point or an ``(n, 2)`` array through ``h``."""
    p = np.asarray(points, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    w = h[2, 0] * p[:, 0] + h[2, 1] * p[:, 1] + h[2, 2]
    if np.any(np.abs(w) < 1e-12):
        raise GeometryError("point maps to infinity")
    x = (h[0, 0] * p[:, 0] + h[0, 1] * p[:, 1] + h[0, 2]) / w
    y = (h[1, 0] * p[:, 0] + h[1, 1] * p[:, 1] + h[1, 2]) / w
    out = np.stack([x, y], axis=1)
    return out[0] if single else out


def inset_quad(quad, fraction: float) -> np.ndarray:
    """Shrink a quad projectively by ``fraction`` of its side on every edge.

    The quad is treated as the image of the unit square, so the inset follows
    perspective rather than image-space distances.
    """
    q = as_quad(quad)
    if fraction == 0:
        return q
    unit = rect_quad(0.0, 0.0, 1.0, 1.0)
    h = homography_from_quad(unit, q)
    f = fraction
    return apply_homography(h, rect_quad(f, f, 1.0 - f, 1.0 - f))


# -- crop coordinates -------------------------------------------------------
# Crops (and heatmaps) use pixel-index coordinates: the centre of crop pixel
# (i, j) is (x=j, y=i).


def to_crop_coords(points, box: BBox, out_w: int, out_h: int) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    x = (p[..., 0] - box.x) * (out_w / box.w) - 0.5
    y = (p[..., 1] - box.y) * (out_h / box.h) - 0.5
    return np.stack([x, y], axis=-1)


def from_crop_coords(points, box: BBox, out_w: int, out_h: int) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    x = (p[..., 0] + 0.5) * (box.w / out_w) + box.x
    y = (p[..., 1] + 0.5) * (box.h / out_h) + box.y
    return np.stack([x, y], axis=-1)
