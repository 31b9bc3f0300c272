"""Raster primitives shared by synthesis and decoding.

Images are ``(h, w, 3)`` ``uint8`` RGB arrays; gray images are ``(h, w)``
float arrays. Resampling is bilinear with pixel-centre sampling and edge
clamping.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .geometry import as_quad, homography_from_quad, rect_quad

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def as_image(arr) -> np.ndarray:
    img = np.asarray(arr)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (h, w, 3) image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    return img


def to_uint8(values) -> np.ndarray:
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def to_luma(img) -> np.ndarray:
    """Per-pixel luma in [0, 1] with standard-definition weights."""
    return np.asarray(img, dtype=float) @ LUMA_WEIGHTS / 255.0


def median_luma(img) -> float:
    return float(np.median(to_luma(img)))


def normalize_minmax(gray) -> np.ndarray:
    """Rescale to [0, 1]; a constant input maps to all zeros."""
    g = np.asarray(gray, dtype=float)
    lo, hi = g.min(), g.max()
    if hi <= lo:
        return np.zeros_like(g)
    return (g - lo) / (hi - lo)


def sample_bilinear(arr, x, y) -> np.ndarray:
    """Sample ``arr`` at continuous coordinates ``(x, y)`` (pixel centres at +0.5)."""
    a = np.asarray(arr, dtype=float)
    h, w = a.shape[:2]
    fx = np.clip(np.asarray(x, dtype=float) - 0.5, 0.0, w - 1)
    fy = np.clip(np.asarray(y, dtype=float) - 0.5, 0.0, h - 1)
    x0 = np.floor(fx).astype(int)
    y0 = np.floor(fy).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = fx - x0
    ty = fy - y0
    if a.ndim == 3:
        tx = tx[..., None]
        ty = ty[..., None]
    top = a[y0, x0] * (1 - tx) + a[y0, x1] * tx
    bottom = a[y1, x0] * (1 - tx) + a[y1, x1] * tx
    return top * (1 - ty) + bottom * ty


def warp_quad(arr, src, out_w: int, out_h: int) -> np.ndarray:
    """Float warp of the region ``src`` onto an ``out_w`` x ``out_h`` rectangle.

    Corner ``k`` of ``src`` lands on corner ``k`` of the output rectangle
    (top-left, bottom-left, bottom-right, top-right).
    """
    h = homography_from_quad(as_quad(src), rect_quad(0, 0, out_w, out_h))
    hinv = np.linalg.inv(h)
    v, u = np.mgrid[0:out_h, 0:out_w]
    px = u + 0.5
    py = v + 0.5
    w = hinv[2, 0] * px + hinv[2, 1] * py + hinv[2, 2]
    sx = (hinv[0, 0] * px + hinv[0, 1] * py + hinv[0, 2]) / w
    sy = (hinv[1, 0] * px + hinv[1, 1] * py + hinv[1, 2]) / w
    return sample_bilinear(arr, sx, sy)


def warp_crop(img, src, out_w: int, out_h: int) -> np.ndarray:
    return to_uint8(warp_quad(as_image(img), src, out_w, out_h))


def crop_resize(img, box, out_w: int, out_h: int) -> np.ndarray:
    """Axis-aligned crop of ``box`` resampled to ``out_w`` x ``out_h``."""
    return warp_crop(img, rect_quad(box.x, box.y, box.x1, box.y1), out_w, out_h)


# -- I/O --------------------------------------------------------------------


def read_png(path) -> np.ndarray:
    with PILImage.open(path) as im:
        return np.array(im.convert("RGB"), dtype=np.uint8)


def write_png(path, img) -> None:
    PILImage.fromarray(as_image(img), mode="RGB").save(path, format="PNG")


def write_gray(path, gray) -> None:
    """Write ``GRAY <w> <h>\\n`` followed by little-endian float32 values."""
    g = np.asarray(gray, dtype="<f4")
    if g.ndim != 2:
        raise ValueError("gray images are 2-D")
    h, w = g.shape
    with open(path, "wb") as fh:
        fh.write(f"GRAY {w} {h}\n".encode("ascii"))
        fh.write(g.tobytes(order="C"))


def read_gray(path) -> np.ndarray:
    data = Path(path).read_bytes()
    header, sep, body = data.partition(b"\n")
    parts = header.split()
    if not sep or len(parts) != 3 or parts[0] != b"GRAY":
        raise ValueError(f"{path}: missing GRAY header")
    w, h = int(parts[1]), int(parts[2])
    if len(body) != 4 * w * h:
        raise ValueError(f"{path}: expected {4 * w * h} payload bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(float)
