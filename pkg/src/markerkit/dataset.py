"""Annotation records and the on-disk dataset layout.

A split directory holds the PNG images, ``annotations.jsonl`` (one object per
image) and ``manifest.json``::

    {"image": "train_00000.png",
     "markers": [{"id": 17, "fake": false, "fake_kind": null,
                  "bbox": [x, y, w, h], "corners": [[x, y], ...]}]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import BBox, as_quad, quad_bbox

ANNOTATIONS_FILE = "annotations.jsonl"
MANIFEST_FILE = "manifest.json"


class SchemaError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SceneAnnotation:
    id: int | None
    corners: np.ndarray
    bbox: BBox
    fake: bool = False
    fake_kind: str | None = None

    @classmethod
    def from_corners(cls, corners, marker_id=None, fake=False, fake_kind=None):
        q = as_quad(corners)
        return cls(id=marker_id, corners=q, bbox=quad_bbox(q), fake=fake, fake_kind=fake_kind)

    def to_dict(self):
        return {
            "id": None if self.id is None else int(self.id),
            "fake": bool(self.fake),
            "fake_kind": self.fake_kind,
            "bbox": self.bbox.to_list(),
            "corners": [[float(x), float(y)] for x, y in self.corners],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                id=d["id"],
                corners=as_quad(d["corners"]),
                bbox=BBox.from_list(d["bbox"]),
                fake=bool(d.get("fake", False)),
                fake_kind=d.get("fake_kind"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad marker record: {exc}") from exc

    def __eq__(self, other):
        if not isinstance(other, SceneAnnotation):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass
class ImageRecord:
    image: str
    markers: list = field(default_factory=list)

    def to_dict(self):
        return {"image": self.image, "markers": [m.to_dict() for m in self.markers]}

    @classmethod
    def from_dict(cls, d):
        if "image" not in d or not isinstance(d.get("markers", []), list):
            raise SchemaError("image record needs 'image' and a 'markers' list")
        return cls(image=d["image"], markers=[SceneAnnotation.from_dict(m) for m in d["markers"]])


@dataclass
class DatasetManifest:
    split: str
    seed: int | None
    config: dict
    images: list
    backgrounds: list | None = None
    root: str | None = None

    def __post_init__(self):
        # keep the in-memory config identical to what a reload produces
        self.config = json.loads(json.dumps(self.config, sort_keys=True, default=str))

    def background_of(self, index):
        return None if self.backgrounds is None else self.backgrounds[index]

    def to_dict(self):
        return {
            "split": self.split,
            "seed": self.seed,
            "config": self.config,
            "config_digest": config_digest(self.config),
            "images": [r.image for r in self.images],
            "backgrounds": self.backgrounds,
            "annotations": ANNOTATIONS_FILE,
        }

    def __eq__(self, other):
        if not isinstance(other, DatasetManifest):
            return NotImplemented
        return self.to_dict() == other.to_dict() and [r.to_dict() for r in self.images] == [
            r.to_dict() for r in other.images
        ]


def config_digest(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    return rows


def save_manifest(manifest: DatasetManifest, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_jsonl(directory / ANNOTATIONS_FILE, [r.to_dict() for r in manifest.images])
    path = directory / MANIFEST_FILE
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path) -> DatasetManifest:
    """Load ``manifest.json`` (or a split directory containing it)."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_FILE
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    for key in ("split", "config", "images"):
        if key not in meta:
            raise SchemaError(f"{path}: missing '{key}'")
    records = [ImageRecord.from_dict(d) for d in read_jsonl(path.parent / meta.get("annotations", ANNOTATIONS_FILE))]
    by_name = {r.image: r for r in records}
    missing = [name for name in meta["images"] if name not in by_name]
    if missing:
        raise SchemaError(f"{path}: no annotations for {missing[:3]}")
    return DatasetManifest(
        split=meta["split"],
        seed=meta.get("seed"),
        config=meta["config"],
        images=[by_name[name] for name in meta["images"]],
        backgrounds=meta.get("backgrounds"),
        root=str(path.parent),
    )
