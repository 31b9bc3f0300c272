"""Marker faces (real and fake) and their perspective projection into frames.

A face is 10x10 cells: a white quiet ring, a black ring, and the 6x6 payload.
The annotated quad of a projected marker is the *outer boundary of the black
ring*, i.e. the 8x8-cell square, with corners in face order top-left,
bottom-left, bottom-right, top-right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import augment
from .dictionary import CODE_SIDE, as_code
from .geometry import (
    GeometryError,
    apply_homography,
    homography_from_quad,
    is_ccw,
    is_convex,
    rect_quad,
)
from .imaging import sample_bilinear, to_uint8

FACE_CELLS = CODE_SIDE + 4
# black-ring boundary in cell units within the face
RING_LO = 1
RING_HI = FACE_CELLS - 1


class FakeKind(str, Enum):
    NONE = "none"
    FULL_BLACK = "full_black"
    INVERTED = "inverted"
    COLORED = "colored"
    NOISE_PATTERN = "noise_pattern"


FAKE_KINDS = [k for k in FakeKind if k is not FakeKind.NONE]


class ProjectionError(GeometryError):
    pass


class OutOfFrameError(ProjectionError):
    pass


class DegenerateProjectionError(ProjectionError):
    pass


class PlacementError(RuntimeError):
    """No valid pose found within the retry budget."""


@dataclass(frozen=True, eq=False)
class MarkerFace:
    image: np.ndarray
    payload: np.ndarray | None = None
    fake_kind: FakeKind = FakeKind.NONE

    @property
    def cell_px(self) -> int:
        return self.image.shape[0] // FACE_CELLS

    @property
    def quad(self) -> np.ndarray:
        """Black-ring outer boundary in face pixel coordinates."""
        c = self.cell_px
        return rect_quad(RING_LO * c, RING_LO * c, RING_HI * c, RING_HI * c)


def _cells_to_image(cells, cell_px):
    """Expand a (10, 10) or (10, 10, 3) cell array into pixels."""
    px = np.repeat(np.repeat(cells, cell_px, axis=0), cell_px, axis=1)
    if px.ndim == 2:
        px = np.repeat(px[..., None], 3, axis=2)
    return px.astype(np.uint8)


def _layout(code):
    cells = np.ones((FACE_CELLS, FACE_CELLS), dtype=np.uint8)
    cells[RING_LO:RING_HI, RING_LO:RING_HI] = 0
    cells[2:-2, 2:-2] = code
    return cells


def render_marker(code, cell_px: int) -> MarkerFace:
    if cell_px < 1:
        raise ValueError("cell_px must be >= 1")
    code = as_code(code)
    image = _cells_to_image(_layout(code) * 255, cell_px)
    return MarkerFace(image=image, payload=code)


def _saturated_color(rng):
    hue = rng.uniform(0, 6)
    i = int(hue) % 6
    f = hue - int(hue)
    v, p, q, t = 1.0, 0.0, 1.0 - f, f
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return np.array(rgb) * rng.uniform(0.6, 1.0) * 255


def make_fake_marker(kind, cell_px: int, rng: np.random.Generator, dictionary=None) -> MarkerFace:
    """Negative example face of the given kind; ``payload`` is always ``None``."""
    kind = FakeKind(kind)
    if kind is FakeKind.NONE:
        raise ValueError("kind must name a fake marker")

    def random_code():
        if dictionary is not None and len(dictionary):
            return dictionary[int(rng.integers(len(dictionary)))]
        return rng.integers(0, 2, (CODE_SIDE, CODE_SIDE)).astype(np.uint8)

    if kind is FakeKind.FULL_BLACK:
        cells = np.ones((FACE_CELLS, FACE_CELLS), dtype=np.uint8)
        cells[RING_LO:RING_HI, RING_LO:RING_HI] = 0
        image = _cells_to_image(cells * 255, cell_px)
    elif kind is FakeKind.INVERTED:
        image = 255 - render_marker(random_code(), cell_px).image
    elif kind is FakeKind.COLORED:
        base = render_marker(random_code(), cell_px).image[..., :1] / 255.0
        dark = _saturated_color(rng) * rng.uniform(0.2, 0.6)
        light = _saturated_color(rng)
        image = to_uint8(dark * (1 - base) + light * base)
    else:
        side = CODE_SIDE * cell_px
        seed = int(rng.integers(2**31))
        noise = augment.perlin_field(side, side, max(2, side // 3), seed)
        lines = augment.lines_field(side, side, rng)
        mix = rng.uniform(0.3, 0.7)
        pattern = (mix * noise + (1 - mix) * lines) >= np.median(mix * noise + (1 - mix) * lines)
        cells = np.ones((FACE_CELLS, FACE_CELLS), dtype=np.uint8)
        cells[RING_LO:RING_HI, RING_LO:RING_HI] = 0
        image = _cells_to_image(cells * 255, cell_px)
        image[2 * cell_px : -2 * cell_px, 2 * cell_px : -2 * cell_px] = (pattern * 255)[..., None]
    return MarkerFace(image=image, payload=None, fake_kind=kind)


# -- pose and projection ----------------------------------------------------


@dataclass(frozen=True)
class PoseSample:
    """Marker pose: angles in radians, ``scale`` = fronto-parallel quad side in px."""

    yaw: float
    pitch: float
    roll: float
    scale: float
    focal: float
    center: tuple

    @property
    def view_angle(self) -> float:
        c = math.cos(self.yaw) * math.cos(self.pitch)
        return math.acos(max(-1.0, min(1.0, c)))


@dataclass(frozen=True)
class PoseConfig:
    """Sampling ranges; ``None`` centre ranges mean anywhere in the frame."""

    view_angle: tuple = (0.0, math.radians(65.0))
    azimuth: tuple = (0.0, 2 * math.pi)
    roll: tuple = (0.0, 2 * math.pi)
    side: tuple = (24.0, 120.0)
    focal: tuple = (400.0, 1200.0)
    center_x: tuple | None = None
    center_y: tuple | None = None
    max_retries: int = 100


def rotation_matrix(yaw, pitch, roll) -> np.ndarray:
    """``Rz(roll) @ Ry(yaw) @ Rx(pitch)`` in camera axes (x right, y down, z forward)."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cr, -sr, 0], [sr, cr, 0], [0, 0, 1]])
    return rz @ ry @ rx


def marker_points_3d(pose: PoseSample, half_extent: float = 0.5) -> np.ndarray:
    """Camera-frame 3D corners of a square of half-side ``half_extent`` (quad side = 1)."""
    e = half_extent
    local = np.array([[-e, -e, 0.0], [-e, e, 0.0], [e, e, 0.0], [e, -e, 0.0]])
    depth = pose.focal / pose.scale
    return local @ rotation_matrix(pose.yaw, pose.pitch, pose.roll).T + [0.0, 0.0, depth]


def project_points(pose: PoseSample, points_3d) -> np.ndarray:
    p = np.asarray(points_3d, dtype=float)
    if np.any(p[:, 2] <= 1e-9):
        raise DegenerateProjectionError("point behind the camera")
    cx, cy = pose.center
    return np.stack(
        [cx + pose.focal * p[:, 0] / p[:, 2], cy + pose.focal * p[:, 1] / p[:, 2]], axis=1
    )


def _outline_half_extent():
    return 0.5 * FACE_CELLS / (RING_HI - RING_LO)


def projected_corners(pose: PoseSample, frame_w=None, frame_h=None):
    """Return ``(quad, outline)``: projected black-ring quad and full face outline."""
    if pose.view_angle >= math.radians(85.0):
        raise DegenerateProjectionError("view angle too steep")
    quad = project_points(pose, marker_points_3d(pose))
    outline = project_points(pose, marker_points_3d(pose, _outline_half_extent()))
    if not (is_ccw(quad) and is_convex(quad)):
        raise DegenerateProjectionError("projected quad is not a convex CCW polygon")
    if frame_w is not None:
        if (
            outline[:, 0].min() < 0
            or outline[:, 1].min() < 0
            or outline[:, 0].max() > frame_w
            or outline[:, 1].max() > frame_h
        ):
            raise OutOfFrameError("marker leaves the frame")
    return quad, outline


@dataclass(frozen=True, eq=False)
class ProjectedMarker:
    """Warped face over its frame window ``[y0:y1, x0:x1]`` plus the annotated quad.

    ``image`` is float RGB and ``mask`` the boolean coverage, both window-sized.
    """

    image: np.ndarray
    mask: np.ndarray
    corners: np.ndarray
    outline: np.ndarray
    window: tuple  # (x0, y0, x1, y1)
    frame_size: tuple  # (w, h)

    @property
    def slices(self):
        x0, y0, x1, y1 = self.window
        return np.s_[y0:y1, x0:x1]

    def full_image(self) -> np.ndarray:
        w, h = self.frame_size
        out = np.zeros((h, w, 3))
        out[self.slices] = self.image
        return out

    def full_mask(self) -> np.ndarray:
        w, h = self.frame_size
        out = np.zeros((h, w), dtype=bool)
        out[self.slices] = self.mask
        return out


def project_marker(face: MarkerFace, pose: PoseSample, frame_w: int, frame_h: int) -> ProjectedMarker:
    quad, outline = projected_corners(pose, frame_w, frame_h)
    h = homography_from_quad(face.quad, quad)
    hinv = np.linalg.inv(h)

    x0 = max(int(math.floor(outline[:, 0].min())), 0)
    y0 = max(int(math.floor(outline[:, 1].min())), 0)
    x1 = min(int(math.ceil(outline[:, 0].max())), frame_w)
    y1 = min(int(math.ceil(outline[:, 1].max())), frame_h)
    v, u = np.mgrid[y0:y1, x0:x1]
    src = apply_homography(hinv, np.stack([u.ravel() + 0.5, v.ravel() + 0.5], axis=1))
    side = face.image.shape[0]
    inside = (src[:, 0] >= 0) & (src[:, 0] < side) & (src[:, 1] >= 0) & (src[:, 1] < side)
    inside = inside.reshape(y1 - y0, x1 - x0)
    region = sample_bilinear(face.image, src[:, 0], src[:, 1]).reshape(y1 - y0, x1 - x0, 3)
    region[~inside] = 0.0
    return ProjectedMarker(
        image=region,
        mask=inside,
        corners=quad,
        outline=outline,
        window=(x0, y0, x1, y1),
        frame_size=(frame_w, frame_h),
    )


def pose_from_view(view_angle, azimuth, roll, scale, focal, center) -> PoseSample:
    """Pose tilted by ``view_angle`` toward ``azimuth``, then rolled in-plane."""
    st, ct = math.sin(view_angle), math.cos(view_angle)
    yaw = math.atan2(st * math.cos(azimuth), ct)
    pitch = math.asin(st * math.sin(azimuth))
    return PoseSample(yaw, pitch, roll, scale, focal, (float(center[0]), float(center[1])))


def sample_pose(rng: np.random.Generator, frame_w: int, frame_h: int, config: PoseConfig | None = None) -> PoseSample:
    """Rejection-sample a pose whose face lies inside the frame."""
    config = config or PoseConfig()

    def draw(lo_hi):
        lo, hi = lo_hi
        return lo if hi == lo else float(rng.uniform(lo, hi))

    for _ in range(config.max_retries):
        pose = pose_from_view(
            view_angle=draw(config.view_angle),
            azimuth=draw(config.azimuth),
            roll=draw(config.roll),
            scale=draw(config.side),
            focal=draw(config.focal),
            center=(
                draw(config.center_x or (0.0, float(frame_w))),
                draw(config.center_y or (0.0, float(frame_h))),
            ),
        )
        try:
            projected_corners(pose, frame_w, frame_h)
        except ProjectionError:
            continue
        return pose
    raise PlacementError(f"no valid pose after {config.max_retries} attempts")
