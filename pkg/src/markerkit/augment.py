"""Lighting fields, photometric noise and label-consistent crop transforms.

Fields are ``(h, w)`` float arrays of multiplicative factors. Positions use
pixel-index coordinates (pixel ``(i, j)`` sits at ``x=j, y=i``) except for the
half-plane and circle helpers, which take continuous image coordinates.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import canonical_order
from .imaging import as_image, to_uint8


# -- lighting fields --------------------------------------------------------


def gradient_field(w: int, h: int, angle: float, lo: float, hi: float, rng=None) -> np.ndarray:
    """Linear ramp from ``lo`` to ``hi`` along direction ``angle`` (radians, 0 = +x).

    ``rng`` is accepted for signature symmetry with the other fields and unused.
    """
    if not 0.0 <= lo <= hi <= 2.0:
        raise ValueError("need 0 <= lo <= hi <= 2")
    i, j = np.mgrid[0:h, 0:w]
    proj = j * math.cos(angle) + i * math.sin(angle)
    pmin, pmax = proj.min(), proj.max()
    if pmax - pmin < 1e-12:
        t = np.zeros_like(proj)
    else:
        t = (proj - pmin) / (pmax - pmin)
    return lo + (hi - lo) * t


def _fade(t):
    return t * t * t * (t * (t * 6 - 15) + 10)


def perlin_field(w: int, h: int, cell: float, seed: int) -> np.ndarray:
    """Classic 2D gradient noise on a lattice of spacing ``cell`` px, remapped to [0, 1]."""
    if cell < 2:
        raise ValueError("cell must be >= 2")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(256)
    perm = np.concatenate([perm, perm])
    angles = rng.uniform(0, 2 * np.pi, 256)
    grads = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    i, j = np.mgrid[0:h, 0:w]
    x = j / cell
    y = i / cell
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    fx = x - x0
    fy = y - y0

    def corner(dx, dy):
        idx = perm[perm[(x0 + dx) & 255] + ((y0 + dy) & 255)]
        g = grads[idx]
        return g[..., 0] * (fx - dx) + g[..., 1] * (fy - dy)

    u = _fade(fx)
    v = _fade(fy)
    top = corner(0, 0) * (1 - u) + corner(1, 0) * u
    bottom = corner(0, 1) * (1 - u) + corner(1, 1) * u
    raw = top * (1 - v) + bottom * v
    return np.clip((raw + 1.0) / 2.0, 0.0, 1.0)


def line_step(w, h, point, angle, low, high=1.0, softness=0.0) -> np.ndarray:
    """Half-plane step across the line through ``point`` with normal ``angle``.

    Pixels on the negative side of the normal get ``low``, the positive side
    ``high``; ``softness`` (px) widens the transition into a linear ramp.
    """
    i, j = np.mgrid[0:h, 0:w]
    s = (j + 0.5 - point[0]) * math.cos(angle) + (i + 0.5 - point[1]) * math.sin(angle)
    if softness <= 0:
        t = (s >= 0).astype(float)
    else:
        t = np.clip(0.5 + s / softness, 0.0, 1.0)
    return low + (high - low) * t


def lines_field(w: int, h: int, rng: np.random.Generator, n_lines=None) -> np.ndarray:
    """Product of 2-6 soft half-plane shadows; values in [0, 1]."""
    n = int(rng.integers(2, 7)) if n_lines is None else n_lines
    field = np.ones((h, w))
    for _ in range(n):
        point = (rng.uniform(0, w), rng.uniform(0, h))
        field *= line_step(
            w, h, point, rng.uniform(0, 2 * np.pi),
            low=rng.uniform(0.2, 0.9), softness=rng.uniform(0, 0.15 * max(w, h)),
        )
    return field


def circle_shadow(w, h, center, radius, depth, softness=0.5) -> np.ndarray:
    """Disk darkened by ``depth`` at its centre, fading to 1 at ``radius``."""
    if radius <= 0 or depth == 0:
        return np.ones((h, w))
    i, j = np.mgrid[0:h, 0:w]
    d = np.hypot(j + 0.5 - center[0], i + 0.5 - center[1])
    inner = radius * (1.0 - softness)
    t = np.clip((d - inner) / max(radius - inner, 1e-9), 0.0, 1.0)
    smooth = t * t * (3 - 2 * t)
    return 1.0 - depth * (1.0 - smooth)


def circles_field(w: int, h: int, rng: np.random.Generator, n_circles=None) -> np.ndarray:
    n = int(rng.integers(1, 5)) if n_circles is None else n_circles
    field = np.ones((h, w))
    for _ in range(n):
        field *= circle_shadow(
            w, h,
            center=(rng.uniform(0, w), rng.uniform(0, h)),
            radius=rng.uniform(0.1, 0.6) * max(w, h),
            depth=rng.uniform(0.2, 0.9),
            softness=rng.uniform(0.1, 1.0),
        )
    return field


def combine_fields(*fields) -> np.ndarray:
    out = np.asarray(fields[0], dtype=float)
    for f in fields[1:]:
        out = out * f
    return out


def apply_lighting(img, *fields) -> np.ndarray:
    """Multiply every channel by the product of ``fields``, then round and clamp."""
    img = as_image(img)
    if not fields:
        return img.copy()
    for f in fields:
        if np.shape(f) != img.shape[:2]:
            raise ValueError(f"field shape {np.shape(f)} does not match image {img.shape[:2]}")
    return to_uint8(img * combine_fields(*fields)[..., None])


# -- photometric noise ------------------------------------------------------


def color_shift(img, rng: np.random.Generator, max_shift: int = 20) -> np.ndarray:
    offset = rng.integers(-max_shift, max_shift + 1, 3)
    return to_uint8(as_image(img).astype(float) + offset)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1)
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def blur_float(arr, sigma: float) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if sigma <= 0:
        return a.copy()
    k = gaussian_kernel1d(sigma)
    a = ndimage.correlate1d(a, k, axis=0, mode="nearest")
    return ndimage.correlate1d(a, k, axis=1, mode="nearest")


def gaussian_blur(img, sigma: float) -> np.ndarray:
    img = as_image(img)
    if sigma <= 0:
        return img.copy()
    return to_uint8(blur_float(img, sigma))


def gaussian_noise(img, sigma: float, rng: np.random.Generator) -> np.ndarray:
    img = as_image(img)
    if sigma <= 0:
        return img.copy()
    return to_uint8(img + rng.normal(0.0, sigma, img.shape))


# -- detection-set augmentation --------------------------------------------


@dataclass(frozen=True)
class AugmentConfig:
    gradient_range: tuple = (0.0, 2.0)
    blur_prob: float = 0.2
    blur_sigma: tuple = (0.5, 2.0)
    color_shift_prob: float = 0.5
    max_color_shift: int = 20
    noise_prob: float = 0.5
    noise_sigma: tuple = (0.0, 12.0)


def augment_image(img, rng: np.random.Generator, config: AugmentConfig | None = None) -> np.ndarray:
    """One offline-augmented copy: random-angle gradient, then optional blur, tint and noise."""
    config = config or AugmentConfig()
    h, w = img.shape[:2]
    lo, hi = np.sort(rng.uniform(*config.gradient_range, 2))
    out = apply_lighting(img, gradient_field(w, h, rng.uniform(0, 2 * np.pi), lo, hi))
    if rng.random() < config.blur_prob:
        out = gaussian_blur(out, rng.uniform(*config.blur_sigma))
    if rng.random() < config.color_shift_prob:
        out = color_shift(out, rng, config.max_color_shift)
    if rng.random() < config.noise_prob:
        lo_s, hi_s = config.noise_sigma
        # (lo, hi] so a drawn noise level is never exactly zero
        out = gaussian_noise(out, hi_s - rng.uniform(0, hi_s - lo_s), rng)
    return out


def augment_detection_set(manifest, out_dir, seed: int, copies: int = 9, config=None):
    """Write ``copies`` augmented variants of every image next to the originals.

    Returns the new manifest: the original images followed, per image, by
    their ``_augK`` variants, all annotations copied unchanged.
    """
    from .dataset import DatasetManifest, ImageRecord, save_manifest
    from .imaging import read_png, write_png

    config = config or AugmentConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    src_dir = Path(manifest.root) if manifest.root is not None else out_dir

    records = []
    backgrounds = []
    for index, record in enumerate(manifest.images):
        img = read_png(src_dir / record.image)
        if src_dir.resolve() != out_dir.resolve():
            write_png(out_dir / record.image, img)
        records.append(record)
        backgrounds.append(manifest.background_of(index))
        stem = Path(record.image).stem
        for k in range(1, copies + 1):
            rng = np.random.default_rng(np.random.SeedSequence([seed, index, k]))
            name = f"{stem}_aug{k}.png"
            write_png(out_dir / name, augment_image(img, rng, config))
            records.append(ImageRecord(image=name, markers=list(record.markers)))
            backgrounds.append(manifest.background_of(index))

    result = DatasetManifest(
        split=manifest.split,
        seed=manifest.seed,
        config={**manifest.config, "augment": {"seed": seed, "copies": copies, **asdict(config)}},
        images=records,
        backgrounds=backgrounds,
        root=str(out_dir),
    )
    if copies > 0 or src_dir.resolve() != out_dir.resolve():
        save_manifest(result, out_dir)
    return result


# -- geometric crop augmentation -------------------------------------------


@dataclass(frozen=True)
class GeoTransform:
    """Flips first, then ``rotation_quarters`` clockwise quarter-turns."""

    rotation_quarters: int = 0
    flip_h: bool = False
    flip_v: bool = False

    @classmethod
    def random(cls, rng: np.random.Generator):
        return cls(int(rng.integers(4)), bool(rng.integers(2)), bool(rng.integers(2)))


def geo_augment_crop(crop, corners, t: GeoTransform):
    """Apply ``t`` to a crop and its corner labels (pixel-index coordinates).

    Returned corners are re-canonicalized: counterclockwise, starting from
    the corner nearest the top-left, since a mirror reverses orientation.
    """
    img = np.asarray(crop)
    pts = np.array(corners, dtype=float).reshape(-1, 2)
    if t.flip_h:
        img = img[:, ::-1]
        pts[:, 0] = img.shape[1] - 1 - pts[:, 0]
    if t.flip_v:
        img = img[::-1]
        pts[:, 1] = img.shape[0] - 1 - pts[:, 1]
    for _ in range(t.rotation_quarters % 4):
        h = img.shape[0]
        img = np.rot90(img, -1)
        pts = np.stack([h - 1 - pts[:, 1], pts[:, 0]], axis=1)
    img = np.ascontiguousarray(img)
    if len(pts) == 4:
        pts = canonical_order(pts)
    return img, pts


# -- crop preparation -------------------------------------------------------


def marker_crop(img, corners, size: int = 64, margin: float = 0.2):
    """Crop around a marker as a corner regressor would see it.

    The quad's bounding box is expanded by ``margin`` on every side, clamped
    to the image and resampled to ``size`` x ``size``. Returns
    ``(crop, box, crop_corners)`` with corners in crop pixel-index coordinates.
    """
    from .geometry import expand_bbox, quad_bbox, to_crop_coords
    from .imaging import crop_resize

    img = as_image(img)
    box = expand_bbox(quad_bbox(corners), margin, bounds=(img.shape[1], img.shape[0]))
    crop = crop_resize(img, box, size, size)
    return crop, box, to_crop_coords(corners, box, size, size)
