import csv
import json
import math

import numpy as np
import pytest

from markerkit.dataset import SceneAnnotation
from markerkit.detect_baseline import Detection
from markerkit.evaluation import (
    MarkerRecord,
    PRCurve,
    auc_trapezoid,
    corner_error,
    decoder_pr,
    evaluate,
    marker_stats,
    match_detections,
    plot_curves,
    pr_curve,
    read_curve_csv,
    write_curve_csv,
    write_summary,
)
from markerkit.geometry import rect_quad

import oracles


def gt(x, y, s=10, marker_id=1, fake=False):
    return SceneAnnotation.from_corners(rect_quad(x, y, x + s, y + s), None if fake else marker_id, fake, "inverted" if fake else None)


def det(x, y, score, s=10, marker_id=1, hamming=0):
    return Detection(rect_quad(x, y, x + s, y + s), score, marker_id, hamming)


def test_single_exact_match():
    m = match_detections([det(0, 0, 0.9)], [gt(0, 0)])
    assert (m.tp, m.fp, m.fn) == (1, 0, 0)


def test_double_detection_single_claim():
    m = match_detections([det(0, 0, 0.4), det(1, 0, 0.9)], [gt(0, 0)])
    assert m.assignment == [None, 0]
    assert (m.tp, m.fp, m.fn) == (1, 1, 0)


def test_fakes_are_not_matchable():
    m = match_detections([det(0, 0, 0.9)], [gt(0, 0, fake=True)])
    assert (m.tp, m.fp, m.fn) == (0, 1, 0)


def test_perfect_curve():
    gts = [gt(0, 0), gt(30, 0)]
    c = pr_curve([[det(0, 0, 1.0), det(30, 0, 1.0)]], [gts])
    assert c.points == [(1.0, 1.0, 1.0)] and c.auc == 1.0


def test_hand_worked_curve():
    gts = [gt(0, 0), gt(30, 0)]
    dets = [det(0, 0, 0.9), det(60, 0, 0.8), det(30, 0, 0.7)]
    c = pr_curve([dets], [gts])
    assert [(r, p) for _, r, p in c.points] == pytest.approx([(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)])
    assert c.auc == pytest.approx(0.5 * 1.0 + 0.5 * (0.5 + 2 / 3) / 2)
    assert round(c.auc, 4) == 0.7917


def test_no_detections_and_no_gt():
    c = pr_curve([[]], [[gt(0, 0)]])
    assert c.points == [] and c.auc == 0.0
    with pytest.raises(ValueError):
        pr_curve([[det(0, 0, 1.0)]], [[gt(0, 0, fake=True)]])


def test_corner_error_examples():
    q = rect_quad(0, 0, 10, 10)
    assert np.all(corner_error(q, q) == 0)
    pred = q.copy()
    pred[2] += (3, 4)
    assert corner_error(pred, q)[2] == 5.0
    # nearest GT corner may serve several predictions
    assert np.allclose(corner_error([[1, 1], [0, 2]], q), [math.sqrt(2), 2])


def test_marker_stats_examples():
    perfect = [MarkerRecord(k, True, [0.0] * 4, k) for k in range(3)]
    s = marker_stats(perfect)
    assert (s.matched_bb, s.corners_filtered, s.corners_plus_id, s.only_id) == (100, 100, 100, 0)
    assert s.corner_error_mean == 0.0
    s = marker_stats([MarkerRecord(5, True, [0.1, 0.2, 6.0, 0.3], 5)])
    assert (s.matched_bb, s.corners_filtered, s.only_id) == (100, 0, 100)


def test_marker_stats_hand_fixture():
    # 10 markers tabulated by hand
    recs = [
        MarkerRecord(0, True, [1, 1, 1, 1], 0),    # filtered + id
        MarkerRecord(1, True, [2, 2, 2, 2], 1),    # filtered + id
        MarkerRecord(2, True, [0, 0, 0, 0], 7),    # filtered, wrong id
        MarkerRecord(3, True, [1, 1, 1, 9], 3),    # only id
        MarkerRecord(4, True, [1, 1, 1], 4),       # 3 corners, only id
        MarkerRecord(5, True, [1, 1, 1, 9], 8),    # matched bb only
        MarkerRecord(6),                           # missed
        MarkerRecord(7),                           # missed
        MarkerRecord(8, True, [3, 3, 3, 3], 8),    # filtered + id
        MarkerRecord(9, True, [], None),           # matched, nothing usable
    ]
    s = marker_stats(recs)
    assert (s.matched_bb, s.corners_filtered, s.corners_plus_id, s.only_id) == pytest.approx((60, 40, 30, 20))
    kept = [1] * 4 + [2] * 4 + [0] * 4 + [1] * 3 + [1] * 3 + [1] * 3 + [3] * 4
    assert s.corner_error_mean == pytest.approx(np.mean(kept))
    assert s.corner_error_std == pytest.approx(np.std(kept))
    assert s.n_markers == 10


def test_decoder_pr_examples():
    c = decoder_pr([(0, True)] * 4, 5)
    assert [p[1:] for p in c.points] == [(0.8, 1.0)] * 10
    c = decoder_pr([(3, True)], 2)
    assert [p[0] for p in c.points] == [3, 4, 5, 6, 7, 8, 9]


def test_decoder_pr_hand_fixture():
    outcomes = [(0, True), (0, True), (1, True), (2, False), (4, True), (9, False)]
    c = decoder_pr(outcomes, 8)
    expected = [
        (0, 2 / 8, 1.0), (1, 3 / 8, 1.0), (2, 4 / 8, 3 / 4), (3, 4 / 8, 3 / 4), (4, 5 / 8, 4 / 5),
        (5, 5 / 8, 4 / 5), (6, 5 / 8, 4 / 5), (7, 5 / 8, 4 / 5), (8, 5 / 8, 4 / 5), (9, 6 / 8, 4 / 6),
    ]
    assert c.points == pytest.approx(expected)


def test_against_oracles_on_random_fixtures():
    rng = np.random.default_rng(0)
    for _ in range(100):
        images = [oracles.random_fixture(rng) for _ in range(int(rng.integers(1, 4)))]
        dets = [d for d, _ in images]
        gts = [g for _, g in images]
        for d, g in images:
            m = match_detections(d, g)
            assert {k: v for k, v in enumerate(m.assignment) if v is not None} == oracles.greedy_match(d, g)
        if not any(not a.fake for g in gts for a in g):
            continue
        c = pr_curve(dets, gts)
        ref = oracles.pr_points(dets, gts)
        assert len(c.points) == len(ref)
        for a, b in zip(c.points, ref):
            assert np.allclose(a, b, rtol=0, atol=1e-12)
        assert abs(c.auc - oracles.trapezoid_auc(ref)) <= 1e-12


def test_auc_bounds():
    assert auc_trapezoid([], []) == 0.0
    assert auc_trapezoid([1.0], [1.0]) == 1.0
    assert 0.0 <= auc_trapezoid([0.2, 0.5, 0.5, 1.0], [1.0, 0.5, 0.4, 0.9]) <= 1.0


def test_evaluate_and_files(tmp_path):
    gts = [[gt(0, 0, marker_id=3), gt(30, 0, marker_id=4), gt(60, 0, fake=True)]]
    dets = [[det(0, 0, 1.0, marker_id=3), det(30, 0, 0.9, marker_id=5, hamming=2)]]
    res = evaluate(dets, gts)
    assert res["detection"].auc == 1.0
    assert res["markers"].corners_plus_id == 50.0
    assert res["decoder"].points[0] == (0, 0.5, 1.0)
    write_curve_csv(tmp_path / "c.csv", res["decoder"])
    with open(tmp_path / "c.csv") as fh:
        assert next(csv.reader(fh)) == ["threshold", "precision", "recall"]
    back = read_curve_csv(tmp_path / "c.csv")
    assert back.points == res["decoder"].points and back.auc == res["decoder"].auc
    write_summary(tmp_path / "s.json", res)
    assert json.loads((tmp_path / "s.json").read_text())["detection_auc"] == 1.0


def test_plot_is_svg(tmp_path):
    import xml.etree.ElementTree as ET

    plot_curves({"a": PRCurve([(1.0, 0.5, 1.0), (0.5, 1.0, 0.8)], 0.9)}, tmp_path / "pr.svg")
    root = ET.parse(tmp_path / "pr.svg").getroot()
    assert root.tag.endswith("svg")
