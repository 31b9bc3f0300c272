"""``markerkit`` command line.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 validation error (malformed input data).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import augment as aug
from . import evaluation, heatmap, synthgen
from .dataset import SchemaError, config_digest, load_manifest, read_jsonl, write_jsonl
from .detect_baseline import Detection, DetectorConfig, detect
from .dictionary import DictionaryError, load_dictionary
from .geometry import GeometryError, from_crop_coords
from .imaging import read_gray, read_png, write_gray, write_png
from .marker_render import PoseConfig

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _section(config, name, cls):
    """Build ``cls`` from a config-file table, rejecting unknown keys."""
    table = dict(config.get(name, {}))
    known = set(cls.__dataclass_fields__)
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")
    return {k: tuple(v) if isinstance(v, list) else v for k, v in table.items()}


def _scene_config(config):
    pose = PoseConfig(**_section(config, "pose", PoseConfig))
    return synthgen.SceneConfig(pose=pose, **{k: v for k, v in _section(config, "scene", synthgen.SceneConfig).items() if k != "pose"})


def _write_run_config(path, command, params):
    params = {"command": command, **params}
    payload = {"config": params, "digest": config_digest(params)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return payload["digest"]


# -- commands ---------------------------------------------------------------


def cmd_gen(args):
    config = _load_config(args.config)
    scene = _scene_config(config)
    if args.max_markers is not None:
        scene = synthgen.SceneConfig(**{**scene.__dict__, "markers": (min(1, args.max_markers), args.max_markers)})
    dictionary = load_dictionary(args.dictionary)
    if args.backgrounds:
        sources = synthgen.list_images(args.backgrounds)
    else:
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xBA]))
        count = max(args.synthetic_backgrounds, 10 * -(-(args.train + args.val) // 10))
        sources = [synthgen.synthetic_background(rng) for _ in range(count)]
    manifests = synthgen.generate_dataset(
        sources, dictionary, args.out, seed=args.seed,
        split_sizes=(args.train, args.val), config=scene, jobs=args.jobs,
    )
    for name, m in manifests.items():
        n_markers = sum(len([a for a in r.markers if not a.fake]) for r in m.images)
        print(f"{name}: {len(m.images)} images, {n_markers} markers -> {Path(args.out) / name}")
    return EXIT_OK


def cmd_augment(args):
    config = _load_config(args.config)
    aug_config = aug.AugmentConfig(**_section(config, "augment", aug.AugmentConfig))
    manifest = load_manifest(args.manifest)
    out = args.out or manifest.root
    result = aug.augment_detection_set(manifest, out, seed=args.seed, copies=args.copies, config=aug_config)
    print(f"{len(manifest.images)} -> {len(result.images)} images in {out}")
    return EXIT_OK


def _heatmaps_encode(args):
    manifest = load_manifest(args.manifest)
    out = Path(args.out)
    (out / "crops").mkdir(parents=True, exist_ok=True)
    (out / "heatmaps").mkdir(parents=True, exist_ok=True)
    rows = []
    for record in manifest.images:
        img = read_png(Path(manifest.root) / record.image)
        stem = Path(record.image).stem
        for k, ann in enumerate(record.markers):
            if ann.fake:
                continue
            crop, box, corners = aug.marker_crop(img, ann.corners, args.size, args.margin)
            hm = heatmap.encode_corners(corners, args.base_sigma2, args.size)
            crop_name = f"crops/{stem}_m{k:02d}.png"
            hm_name = f"heatmaps/{stem}_m{k:02d}.gray"
            write_png(out / crop_name, crop)
            write_gray(out / hm_name, hm)
            rows.append({
                "image": record.image, "marker": k, "id": ann.id,
                "crop": crop_name, "heatmap": hm_name, "box": box.to_list(),
                "corners": corners.tolist(),
            })
    write_jsonl(out / "crops.jsonl", rows)
    _write_run_config(out / "crops.config.json", "heatmaps-encode", vars_clean(args))
    print(f"{len(rows)} crops -> {out}")
    return EXIT_OK


def _heatmaps_decode(args):
    crops_path = Path(args.crops)
    if crops_path.is_dir():
        crops_path = crops_path / "crops.jsonl"
    base = crops_path.parent
    out_rows = []
    for row in read_jsonl(crops_path):
        for key in ("heatmap", "box"):
            if key not in row:
                raise SchemaError(f"crop record missing '{key}'")
        hm = read_gray(base / row["heatmap"])
        pts = heatmap.decode_corners(hm, args.threshold)
        box = synthgen.BBox.from_list(row["box"])
        result = {
            "crop": row.get("crop"), "heatmap": row["heatmap"], "image": row.get("image"),
            "marker": row.get("marker"), "id": row.get("id"),
            "corners": pts.tolist(),
            "image_corners": from_crop_coords(pts, box, hm.shape[1], hm.shape[0]).tolist() if len(pts) else [],
        }
        if row.get("corners"):
            result["corner_error"] = evaluation.corner_error(pts, row["corners"]).tolist()
        out_rows.append(result)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(out, out_rows)
    errors = [e for r in out_rows for e in r.get("corner_error", [])]
    found = sum(len(r["corners"]) == 4 for r in out_rows)
    mean = f"{np.mean(errors):.4f}" if errors else "n/a"
    print(f"{len(out_rows)} heatmaps, {found} with 4 corners, mean corner error {mean} px")
    return EXIT_OK


def cmd_heatmaps(args):
    return _heatmaps_encode(args) if args.action == "encode" else _heatmaps_decode(args)


def _detect_one(job):
    path, dictionary, max_hamming, config = job
    return [d.to_dict() for d in detect(read_png(path), dictionary, max_hamming, config)]


def cmd_detect(args):
    dictionary = load_dictionary(args.dictionary)
    config = DetectorConfig(**_section(_load_config(args.config), "detect", DetectorConfig))
    src = Path(args.images)
    if (src / "manifest.json").exists():
        m = load_manifest(src)
        paths = [Path(m.root) / r.image for r in m.images]
    else:
        paths = synthgen.list_images(src)
    jobs = [(p, dictionary, args.max_hamming, config) for p in paths]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_detect_one, jobs))
    else:
        results = [_detect_one(j) for j in jobs]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(out, [{"image": p.name, "detections": r} for p, r in zip(paths, results)])
    _write_run_config(out.with_suffix(".config.json"), "detect", {**vars_clean(args), "detector": asdict(config)})
    print(f"{sum(map(len, results))} detections in {len(paths)} images -> {out}")
    return EXIT_OK


def load_detections(path):
    out = {}
    for row in read_jsonl(path):
        if "image" not in row or not isinstance(row.get("detections"), list):
            raise SchemaError(f"{path}: each row needs 'image' and a 'detections' list")
        try:
            out[row["image"]] = [Detection.from_dict(d) for d in row["detections"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad detection in {row['image']}: {exc}") from exc
    return out


def cmd_eval(args):
    manifest = load_manifest(args.annotations)
    dets = load_detections(args.detections)
    gts_per_image = [r.markers for r in manifest.images]
    dets_per_image = [dets.get(r.image, []) for r in manifest.images]
    results = evaluation.evaluate(dets_per_image, gts_per_image, args.iou, args.filter_px)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_curve_csv(out / "detection_pr.csv", results["detection"])
    evaluation.write_curve_csv(out / "decoder_pr.csv", results["decoder"])
    evaluation.write_summary(out / "summary.json", results)
    digest = _write_run_config(out / "eval.config.json", "eval", vars_clean(args))
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    summary["config_digest"] = digest
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"detection AUC {results['detection'].auc:.4f}, decoder AUC {results['decoder'].auc:.4f}")
    return EXIT_OK


def cmd_plot(args):
    curves = {Path(p).stem: evaluation.read_curve_csv(p) for p in args.csv}
    evaluation.plot_curves(curves, args.out, title=args.title)
    print(f"plot -> {args.out}")
    return EXIT_OK


def vars_clean(args):
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}


# -- parser -----------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="markerkit", description="Synthetic fiducial-marker data, codecs and metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic detection dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--backgrounds", help="directory of background photos (default: procedural backgrounds)")
    g.add_argument("--synthetic-backgrounds", type=int, default=0, help="procedural pool size when no directory is given")
    g.add_argument("--train", type=int, default=2000)
    g.add_argument("--val", type=int, default=500)
    g.add_argument("--max-markers", type=int)
    g.add_argument("--dictionary")
    g.add_argument("--config")
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("augment", help="add offline-augmented copies (x10 by default)")
    a.add_argument("--manifest", required=True)
    a.add_argument("--out")
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--copies", type=int, default=9)
    a.add_argument("--config")
    a.set_defaults(func=cmd_augment)

    h = sub.add_parser("heatmaps", help="encode corner heatmaps from annotations, or decode them")
    h.add_argument("action", choices=["encode", "decode"])
    h.add_argument("--manifest", help="encode: split directory or manifest.json")
    h.add_argument("--crops", help="decode: crops.jsonl or its directory")
    h.add_argument("--out", required=True)
    h.add_argument("--size", type=int, default=heatmap.HEATMAP_SIZE)
    h.add_argument("--margin", type=float, default=0.2)
    h.add_argument("--base-sigma2", type=float, default=1.0)
    h.add_argument("--threshold", type=float, default=heatmap.DEFAULT_THRESHOLD)
    h.set_defaults(func=cmd_heatmaps)

    d = sub.add_parser("detect", help="run the classical baseline detector")
    d.add_argument("--images", required=True, help="image directory or split directory")
    d.add_argument("--out", required=True)
    d.add_argument("--max-hamming", type=int, default=2)
    d.add_argument("--dictionary")
    d.add_argument("--config")
    d.add_argument("--jobs", type=int, default=1)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="score detections against annotations")
    e.add_argument("--detections", required=True)
    e.add_argument("--annotations", required=True, help="split directory or manifest.json")
    e.add_argument("--out", required=True)
    e.add_argument("--iou", type=float, default=0.5)
    e.add_argument("--filter-px", type=float, default=5.0)
    e.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="render PR curves from CSV files to SVG")
    pl.add_argument("csv", nargs="+")
    pl.add_argument("--out", required=True)
    pl.add_argument("--title", default="Precision-Recall")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "heatmaps":
        if args.action == "encode" and not args.manifest:
            parser.error("heatmaps encode needs --manifest")
        if args.action == "decode" and not args.crops:
            parser.error("heatmaps decode needs --crops")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, TypeError, synthgen.SynthesisError) as exc:
        print(f"markerkit: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, DictionaryError, GeometryError, ValueError) as exc:
        print(f"markerkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"markerkit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
