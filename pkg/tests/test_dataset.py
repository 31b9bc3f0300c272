import json

import numpy as np
import pytest

from markerkit.dataset import (
    DatasetManifest,
    ImageRecord,
    SceneAnnotation,
    SchemaError,
    config_digest,
    load_manifest,
    read_jsonl,
    save_manifest,
)
from markerkit.geometry import rect_quad


def sample_manifest():
    real = SceneAnnotation.from_corners(rect_quad(1.5, 2, 30, 40.25), marker_id=12)
    fake = SceneAnnotation.from_corners(rect_quad(50, 50, 70, 70), fake=True, fake_kind="colored")
    return DatasetManifest(
        split="train", seed=3, config={"a": (1, 2), "b": {"c": 0.5}},
        images=[ImageRecord("x.png", [real, fake]), ImageRecord("y.png", [])],
    )


def test_annotation_schema():
    d = sample_manifest().images[0].markers[0].to_dict()
    assert d == {
        "id": 12, "fake": False, "fake_kind": None, "bbox": [1.5, 2.0, 28.5, 38.25],
        "corners": [[1.5, 2.0], [1.5, 40.25], [30.0, 40.25], [30.0, 2.0]],
    }


def test_manifest_round_trip(tmp_path):
    m = sample_manifest()
    save_manifest(m, tmp_path)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["images"] == ["x.png", "y.png"] and doc["config_digest"] == config_digest(m.config)
    assert [r["image"] for r in read_jsonl(tmp_path / "annotations.jsonl")] == ["x.png", "y.png"]
    assert load_manifest(tmp_path) == m


def test_digest_is_order_independent():
    assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_schema_errors(tmp_path):
    save_manifest(sample_manifest(), tmp_path)
    (tmp_path / "annotations.jsonl").write_text('{"image": "x.png", "markers": [{"id": 1}]}\n')
    with pytest.raises(SchemaError):
        load_manifest(tmp_path)
    (tmp_path / "annotations.jsonl").write_text('{"image": "x.png", "markers": []}\n')
    with pytest.raises(SchemaError, match="y.png"):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text("{")
    with pytest.raises(SchemaError):
        load_manifest(tmp_path)
    with pytest.raises(OSError):
        load_manifest(tmp_path / "nowhere")
