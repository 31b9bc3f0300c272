"""Detection and decoding metrics.

* Detections match ground truth greedily by score at IoU >= 0.5.
* PR curves sweep every distinct score; AUC integrates precision over
  recall with the trapezoid rule, starting from ``(0, p_first)``.
* Corner errors measure each predicted corner against its nearest
  ground-truth corner; marker statistics discard corners farther than 5 px.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geometry import iou


@dataclass
class PRCurve:
    """``points`` holds ``(threshold, recall, precision)`` in sweep order."""

    points: list = field(default_factory=list)
    auc: float = 0.0

    @property
    def recalls(self):
        return [p[1] for p in self.points]

    @property
    def precisions(self):
        return [p[2] for p in self.points]


@dataclass
class Matching:
    """Per-detection GT index (``None`` for false positives) plus counts."""

    assignment: list
    n_gt: int

    @property
    def tp(self):
        return sum(a is not None for a in self.assignment)

    @property
    def fp(self):
        return sum(a is None for a in self.assignment)

    @property
    def fn(self):
        return self.n_gt - self.tp


def _is_real(gt):
    return not getattr(gt, "fake", False)


def match_detections(dets, gts, iou_thr: float = 0.5) -> Matching:
    """Greedy score-ordered matching of one image's detections to its real GTs.

    Each detection (highest score first, ties by input order) claims the
    unclaimed real GT with the highest IoU >= ``iou_thr``; IoU ties go to the
    lower GT index. Assignments index into ``gts``.
    """
    real = [k for k, g in enumerate(gts) if _is_real(g)]
    order = sorted(range(len(dets)), key=lambda k: (-dets[k].score, k))
    claimed = set()
    assignment = [None] * len(dets)
    for d in order:
        best, best_iou = None, iou_thr
        for g in real:
            if g in claimed:
                continue
            v = iou(dets[d].bbox, gts[g].bbox)
            if v >= best_iou and (best is None or v > best_iou):
                best, best_iou = g, v
        if best is not None:
            claimed.add(best)
            assignment[d] = best
    return Matching(assignment=assignment, n_gt=len(real))


def auc_trapezoid(recalls, precisions) -> float:
    """Area under ``(recall, precision)`` points, prefixed by ``(0, precisions[0])``."""
    if not len(recalls):
        return 0.0
    r = np.concatenate([[0.0], np.asarray(recalls, dtype=float)])
    p = np.concatenate([[precisions[0]], np.asarray(precisions, dtype=float)])
    return float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2.0))


def pr_curve(dets_per_image, gts_per_image, iou_thr: float = 0.5) -> PRCurve:
    """PR curve over a set of images (parallel lists of detections and GTs)."""
    n_gt = sum(sum(_is_real(g) for g in gts) for gts in gts_per_image)
    if n_gt == 0:
        raise ValueError("no real ground-truth markers: recall is undefined")
    scored = []
    for dets, gts in zip(dets_per_image, gts_per_image):
        m = match_detections(dets, gts, iou_thr)
        scored.extend((det.score, a is not None) for det, a in zip(dets, m.assignment))
    if not scored:
        return PRCurve()
    scores = np.array([s for s, _ in scored])
    hits = np.array([h for _, h in scored])
    points = []
    for thr in np.unique(scores)[::-1]:
        keep = scores >= thr
        tp = int(np.sum(hits & keep))
        points.append((float(thr), tp / n_gt, tp / int(np.sum(keep))))
    return PRCurve(points=points, auc=auc_trapezoid([p[1] for p in points], [p[2] for p in points]))


def corner_error(pred, gt) -> np.ndarray:
    """Distance from each predicted corner to its nearest ground-truth corner."""
    p = np.asarray(pred, dtype=float).reshape(-1, 2)
    g = np.asarray(gt, dtype=float).reshape(-1, 2)
    if len(p) == 0:
        return np.zeros(0)
    return np.min(np.linalg.norm(p[:, None, :] - g[None, :, :], axis=2), axis=1)


@dataclass
class MarkerRecord:
    """One ground-truth marker's outcome; unmatched markers carry no corners."""

    gt_id: int
    matched: bool = False
    corner_distances: list = field(default_factory=list)
    pred_id: int | None = None


@dataclass
class MarkerStats:
    matched_bb: float
    corners_filtered: float
    corners_plus_id: float
    only_id: float
    corner_error_mean: float
    corner_error_std: float
    n_markers: int = 0

    def to_dict(self):
        return asdict(self)


def marker_stats(records, filter_px: float = 5.0) -> MarkerStats:
    """Percentages of ground-truth markers reaching each stage.

    matched_bb: matched with 4 predicted corners. corners_filtered: those
    whose 4 corners are all within ``filter_px``. corners_plus_id: the
    latter with the right id. only_id: matched, right id, fewer than 4
    corners surviving the filter. Corner error uses surviving corners only.
    """
    records = list(records)
    n = len(records)
    if n == 0:
        return MarkerStats(0.0, 0.0, 0.0, 0.0, float("nan"), float("nan"), 0)
    matched_bb = filtered = plus_id = only_id = 0
    surviving = []
    for rec in records:
        if not rec.matched:
            continue
        d = np.asarray(rec.corner_distances, dtype=float)
        kept = d[d <= filter_px]
        surviving.extend(kept.tolist())
        correct = rec.pred_id is not None and rec.pred_id == rec.gt_id
        four = len(d) == 4
        matched_bb += four
        if four and len(kept) == 4:
            filtered += 1
            plus_id += correct
        elif correct:
            only_id += 1
    pct = 100.0 / n
    errs = np.asarray(surviving)
    return MarkerStats(
        matched_bb=matched_bb * pct,
        corners_filtered=filtered * pct,
        corners_plus_id=plus_id * pct,
        only_id=only_id * pct,
        corner_error_mean=float(errs.mean()) if len(errs) else float("nan"),
        corner_error_std=float(errs.std()) if len(errs) else float("nan"),
        n_markers=n,
    )


def decoder_pr(outcomes, gt_count: int, thresholds=range(10)) -> PRCurve:
    """Decoder PR over Hamming thresholds; ``outcomes`` are ``(min_hamming, id_correct)``.

    Thresholds with no surviving outcome have undefined precision and are skipped.
    """
    if gt_count <= 0:
        raise ValueError("gt_count must be positive")
    dist = np.array([o[0] for o in outcomes], dtype=float)
    correct = np.array([bool(o[1]) for o in outcomes], dtype=bool)
    points = []
    for t in thresholds:
        keep = dist <= t
        kept = int(keep.sum())
        if kept == 0:
            continue
        points.append((int(t), kept / gt_count, int(np.sum(keep & correct)) / kept))
    return PRCurve(points=points, auc=auc_trapezoid([p[1] for p in points], [p[2] for p in points]))


# -- whole-dataset evaluation ----------------------------------------------


def build_marker_records(dets_per_image, gts_per_image, iou_thr: float = 0.5):
    """Per-GT records plus decoder outcomes ``(hamming, id_correct)`` for matched detections."""
    records, outcomes = [], []
    for dets, gts in zip(dets_per_image, gts_per_image):
        m = match_detections(dets, gts, iou_thr)
        by_gt = {g: d for d, g in enumerate(m.assignment) if g is not None}
        for g, gt in enumerate(gts):
            if not _is_real(gt):
                continue
            if g not in by_gt:
                records.append(MarkerRecord(gt_id=gt.id))
                continue
            det = dets[by_gt[g]]
            dist = corner_error(det.quad, gt.corners).tolist()
            records.append(MarkerRecord(gt_id=gt.id, matched=True, corner_distances=dist, pred_id=det.id))
            if det.hamming is not None:
                outcomes.append((det.hamming, det.id == gt.id))
    return records, outcomes


def evaluate(dets_per_image, gts_per_image, iou_thr: float = 0.5, filter_px: float = 5.0):
    n_gt = sum(sum(_is_real(g) for g in gts) for gts in gts_per_image)
    curve = pr_curve(dets_per_image, gts_per_image, iou_thr)
    records, outcomes = build_marker_records(dets_per_image, gts_per_image, iou_thr)
    dec = decoder_pr(outcomes, n_gt)
    return {"detection": curve, "decoder": dec, "markers": marker_stats(records, filter_px)}


def write_curve_csv(path, curve: PRCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for thr, rec, prec in curve.points:
            writer.writerow([repr(thr), repr(prec), repr(rec)])


def read_curve_csv(path) -> PRCurve:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    points = [(float(r["threshold"]), float(r["recall"]), float(r["precision"])) for r in rows]
    return PRCurve(points=points, auc=auc_trapezoid([p[1] for p in points], [p[2] for p in points]))


def write_summary(path, results) -> None:
    summary = {
        "detection_auc": results["detection"].auc,
        "decoder_auc": results["decoder"].auc,
        "detection_max_recall": max(results["detection"].recalls, default=0.0),
        "detection_min_precision": min(results["detection"].precisions, default=None),
        "markers": results["markers"].to_dict(),
    }
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def plot_curves(curves: dict, path, title: str = "Precision-Recall") -> None:
    """Render ``{label: PRCurve}`` to an SVG file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for label, curve in curves.items():
        ax.plot(curve.recalls, curve.precisions, marker=".", label=f"{label} (AUC {curve.auc:.4f})")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    if curves:
        ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
