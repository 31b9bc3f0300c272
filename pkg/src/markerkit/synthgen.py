"""Synthetic marker scenes: luma-balanced background sampling, marker and fake
composition with luma projection, and dataset emission.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import augment
from .dataset import DatasetManifest, ImageRecord, SceneAnnotation, config_digest, save_manifest
from .geometry import BBox, iou, quad_bbox
from .imaging import median_luma, read_png, to_luma, to_uint8, write_png
from .marker_render import (
    FAKE_KINDS,
    PlacementError,
    PoseConfig,
    ProjectionError,
    make_fake_marker,
    project_marker,
    projected_corners,
    render_marker,
    sample_pose,
)

FRAME_W = 640
FRAME_H = 360
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}


class SynthesisError(RuntimeError):
    pass


# -- backgrounds ------------------------------------------------------------


def prepare_background(img, target_w: int = FRAME_W, target_h: int = FRAME_H):
    """Rotate portrait images to landscape and centre-crop; ``None`` if too small."""
    img = np.asarray(img)
    if img.shape[0] > img.shape[1]:
        img = np.rot90(img, -1)
    h, w = img.shape[:2]
    if w < target_w or h < target_h:
        return None
    y0 = (h - target_h) // 2
    x0 = (w - target_w) // 2
    return np.ascontiguousarray(img[y0 : y0 + target_h, x0 : x0 + target_w])


@dataclass
class BackgroundPool:
    """Backgrounds with their median luma, split into equal-size luma bins.

    ``items`` holds ``(source, luma)``; a source is an image array or a path.
    ``bins[k]`` lists item indices, contiguous in luma-sorted order.
    """

    items: list
    bins: list

    @property
    def n_bins(self):
        return len(self.bins)


def bin_by_luma(lumas, sources=None, n_bins: int = 10) -> BackgroundPool:
    lumas = [float(v) for v in lumas]
    if sources is None:
        sources = list(range(len(lumas)))
    if len(lumas) < n_bins:
        raise SynthesisError(f"need at least {n_bins} backgrounds, got {len(lumas)}")
    order = sorted(range(len(lumas)), key=lambda k: (lumas[k], k))
    per_bin = len(lumas) // n_bins
    # leftovers are the brightest items; they are dropped
    bins = [order[b * per_bin : (b + 1) * per_bin] for b in range(n_bins)]
    return BackgroundPool(items=list(zip(sources, lumas)), bins=bins)


def bin_backgrounds(images, n_bins: int = 10, sources=None) -> BackgroundPool:
    images = list(images)
    return bin_by_luma([median_luma(im) for im in images], sources if sources is not None else images, n_bins)


def sample_backgrounds(pool: BackgroundPool, total: int, rng: np.random.Generator) -> list:
    """Draw ``total / n_bins`` item indices from every bin, without replacement."""
    if total % pool.n_bins:
        raise SynthesisError(f"total {total} is not divisible by {pool.n_bins} bins")
    per_bin = total // pool.n_bins
    picked = []
    for b, members in enumerate(pool.bins):
        if per_bin > len(members):
            raise SynthesisError(f"bin {b} holds {len(members)} backgrounds, {per_bin} requested")
        picked.extend(int(members[k]) for k in rng.choice(len(members), per_bin, replace=False))
    return picked


def list_images(directory) -> list:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def load_background(source):
    if isinstance(source, np.ndarray):
        return prepare_background(source)
    return prepare_background(read_png(source))


def pool_from_sources(sources, n_bins: int = 10) -> BackgroundPool:
    """Prepare every source, drop the rejected ones, and bin the rest by median luma."""
    kept, lumas = [], []
    for src in sources:
        img = load_background(src)
        if img is None:
            continue
        kept.append(src)
        lumas.append(median_luma(img))
    return bin_by_luma(lumas, kept, n_bins)


def synthetic_background(rng: np.random.Generator, w: int = FRAME_W, h: int = FRAME_H) -> np.ndarray:
    """Procedural stand-in for a photo: tinted Perlin texture under a soft gradient."""
    base = rng.uniform(40, 230, 3)
    tint = rng.uniform(-40, 40, 3)
    noise = augment.perlin_field(w, h, rng.uniform(40, 160), int(rng.integers(2**31)))
    detail = augment.perlin_field(w, h, rng.uniform(8, 24), int(rng.integers(2**31)))
    light = augment.gradient_field(w, h, rng.uniform(0, 2 * np.pi), *np.sort(rng.uniform(0.6, 1.2, 2)))
    rgb = (base + tint * (2 * noise[..., None] - 1)) * (0.85 + 0.3 * detail[..., None])
    return to_uint8(rgb * light[..., None])


# -- scenes -----------------------------------------------------------------


@dataclass(frozen=True)
class SceneConfig:
    """Composition parameters; ``markers`` and ``fakes`` are inclusive count ranges."""

    markers: tuple = (1, 20)
    fakes: tuple = (0, 4)
    pose: PoseConfig = field(default_factory=PoseConfig)
    min_local_luma: float = 0.05
    placement_attempts: int = 100

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        pose = PoseConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.pop("pose", {}).items()})
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(pose=pose, **d)


def _cell_px_for(scale):
    # render finer than the on-image cell so bilinear minification stays clean
    return max(2, int(math.ceil(1.5 * scale / 8)))


def _overlaps(box, placed):
    return any(iou(box, other) > 0 for other in placed)


def compose_scene(background, dictionary, rng: np.random.Generator, config: SceneConfig | None = None):
    """Overlay real and fake markers on ``background``.

    Every marker face is multiplied by the background luma under it before
    being pasted, so it inherits the scene lighting. Slots that cannot be
    placed are dropped.
    """
    config = config or SceneConfig()
    background = np.asarray(background)
    h, w = background.shape[:2]
    luma = to_luma(background)
    out = background.astype(float)

    n_real = int(rng.integers(config.markers[0], config.markers[1] + 1))
    n_real = min(n_real, len(dictionary))
    n_fake = int(rng.integers(config.fakes[0], config.fakes[1] + 1))
    ids = rng.choice(len(dictionary), n_real, replace=False) if n_real else []
    slots = [("real", int(i)) for i in ids]
    slots += [("fake", FAKE_KINDS[int(rng.integers(len(FAKE_KINDS)))]) for _ in range(n_fake)]

    placed = []
    annotations = []
    for kind, value in slots:
        for _ in range(config.placement_attempts):
            try:
                pose = sample_pose(rng, w, h, config.pose)
            except PlacementError:
                break
            try:
                corners, outline = projected_corners(pose, w, h)
            except ProjectionError:
                continue
            footprint = quad_bbox(outline)
            if _overlaps(footprint, placed):
                continue
            cell_px = _cell_px_for(pose.scale)
            if kind == "real":
                face = render_marker(dictionary[value], cell_px)
            else:
                face = make_fake_marker(value, cell_px, rng, dictionary)
            projected = project_marker(face, pose, w, h)
            window = projected.slices
            mask = projected.mask
            local_luma = luma[window]
            if not mask.any() or np.median(local_luma[mask]) < config.min_local_luma:
                continue
            layer = projected.image * local_luma[..., None]
            target = out[window]
            target[mask] = layer[mask]
            placed.append(footprint)
            if kind == "real":
                annotations.append(SceneAnnotation.from_corners(projected.corners, marker_id=value))
            else:
                annotations.append(
                    SceneAnnotation.from_corners(projected.corners, fake=True, fake_kind=value.value)
                )
            break
    return to_uint8(out), annotations


# -- datasets ---------------------------------------------------------------


def _scene_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _render_one(job):
    source, dictionary, seed, index, config, out_path = job
    background = load_background(source)
    image, annotations = compose_scene(background, dictionary, _scene_rng(seed, index), config)
    write_png(out_path, image)
    return annotations


def _source_label(source, index):
    return str(source) if not isinstance(source, np.ndarray) else f"array:{index}"


def plan_backgrounds(pool: BackgroundPool, split_sizes, seed: int):
    """Assign pool items to the splits: balanced across bins, disjoint across splits."""
    total = sum(split_sizes)
    per_bin = -(-total // pool.n_bins)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB6]))
    picked = sample_backgrounds(pool, per_bin * pool.n_bins, rng)
    # round-robin over bins so truncation keeps the bins within one of each other
    by_bin = [picked[b * per_bin : (b + 1) * per_bin] for b in range(pool.n_bins)]
    interleaved = [by_bin[b][k] for k in range(per_bin) for b in range(pool.n_bins)][:total]
    interleaved = [interleaved[k] for k in rng.permutation(total)]
    splits = []
    start = 0
    for size in split_sizes:
        splits.append(interleaved[start : start + size])
        start += size
    return splits


def generate_dataset(
    backgrounds,
    dictionary,
    out_dir,
    seed: int,
    split_sizes=(2000, 500),
    config: SceneConfig | None = None,
    jobs: int = 1,
    split_names=("train", "val"),
):
    """Render every split to ``out_dir/<split>/`` and return ``{split: manifest}``.

    ``backgrounds`` is a :class:`BackgroundPool` or a sequence of image arrays
    or paths. Each image draws from its own RNG derived from ``(seed, index)``,
    so serial and parallel runs write identical bytes.
    """
    config = config or SceneConfig()
    pool = backgrounds if isinstance(backgrounds, BackgroundPool) else pool_from_sources(list(backgrounds))
    plan = plan_backgrounds(pool, split_sizes, seed)
    out_dir = Path(out_dir)
    run_config = {"scene": config.to_dict(), "split_sizes": list(split_sizes), "dictionary": dictionary.name}

    manifests = {}
    index = 0
    for name, item_ids in zip(split_names, plan):
        split_dir = out_dir / name
        split_dir.mkdir(parents=True, exist_ok=True)
        jobs_list = []
        files = []
        labels = []
        for k, item in enumerate(item_ids):
            source = pool.items[item][0]
            fname = f"{name}_{k:05d}.png"
            files.append(fname)
            labels.append(_source_label(source, item))
            jobs_list.append((source, dictionary, seed, index, config, split_dir / fname))
            index += 1
        if jobs > 1 and len(jobs_list) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_render_one, jobs_list, chunksize=4))
        else:
            results = [_render_one(j) for j in jobs_list]
        manifest = DatasetManifest(
            split=name,
            seed=seed,
            config={**run_config, "digest": config_digest(run_config)},
            images=[ImageRecord(f, a) for f, a in zip(files, results)],
            backgrounds=labels,
            root=str(split_dir),
        )
        save_manifest(manifest, split_dir)
        manifests[name] = manifest
    return manifests
