import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from markerkit.heatmap import (
    Blob,
    blob_centroid,
    decode_corners,
    default_area_range,
    encode_corners,
    expected_blob_area,
    extract_blobs,
    weight_map,
    weighted_mse,
)


def blob_from(mapping, shape=(8, 8)):
    values = np.zeros(shape)
    rows, cols = zip(*mapping)
    for (i, j), v in mapping.items():
        values[i, j] = v
    return Blob(np.array(rows), np.array(cols), values)


def test_single_corner_peak():
    h = encode_corners([(32.0, 32.0)])
    assert h.max() == 1.0
    assert np.unravel_index(np.argmax(h), h.shape) == (32, 32)


def test_gaussian_uses_tenfold_covariance():
    h = encode_corners([(20.0, 30.0)])
    # pixel (row 32, col 24): dx=4, dy=2, d^2=20
    assert h[32, 24] == pytest.approx(math.exp(-1.0), abs=1e-15)
    h2 = encode_corners([(20.0, 30.0)], base_sigma2=2.0)
    assert h2[32, 24] == pytest.approx(math.exp(-0.5), abs=1e-15)


def test_two_corners_symmetric():
    a = encode_corners([(10.0, 20.0), (45.0, 40.0)])
    b = encode_corners([(45.0, 40.0), (10.0, 20.0)])
    assert np.array_equal(a, b)
    assert a[20, 10] == 1.0 and a[40, 45] == 1.0


def test_out_of_bounds_corner():
    with pytest.raises(ValueError):
        encode_corners([(64.0, 3.0)])
    with pytest.raises(ValueError):
        encode_corners([(-0.1, 3.0)])


def test_weight_map_examples():
    y = np.array([[0.0, 0.5, 1.0]])
    assert np.array_equal(weight_map(y), [[1.0, 5.5, 10.0]])
    assert np.all(weight_map(np.full((4, 4), 0.3)) == 1.0)


def test_weighted_mse_examples():
    assert weighted_mse([[0.0, 1.0]], [[0.0, 0.0]]) == 5.0
    y = encode_corners([(5.0, 9.0)])
    assert weighted_mse(y, y) == 0.0
    with pytest.raises(ValueError):
        weighted_mse(np.zeros((2, 2)), np.zeros((2, 3)))


def naive_weighted_mse(y, yhat):
    rows, cols = y.shape
    lo, hi = y.min(), y.max()
    total = 0.0
    for i in range(rows):
        for j in range(cols):
            w = 1.0 if hi == lo else (y[i, j] - lo) / (hi - lo) * 9 + 1
            total += (yhat[i, j] - y[i, j]) ** 2 * w
    return total / (rows * cols)


def test_weighted_mse_matches_double_loop():
    rng = np.random.default_rng(0)
    for _ in range(5):
        y, yhat = rng.random((64, 64)), rng.random((64, 64))
        assert weighted_mse(y, yhat) == pytest.approx(naive_weighted_mse(y, yhat), abs=1e-9)


@settings(max_examples=50)
@given(arrays(float, (6, 6), elements=st.floats(0, 1)), arrays(float, (6, 6), elements=st.floats(0, 1)))
def test_weighted_mse_dominates_plain_mse(y, yhat):
    w = weight_map(y)
    assert w.min() >= 1.0 and w.max() <= 10.0
    assert weighted_mse(y, yhat) >= np.mean((y - yhat) ** 2) - 1e-15


def test_extract_blobs_empty():
    assert extract_blobs(np.zeros((64, 64))) == []
    with pytest.raises(ValueError):
        extract_blobs(np.zeros((4, 4)), value_threshold=1.0)


def test_one_corner_one_blob_at_low_threshold():
    lo, hi = default_area_range(0.2)
    assert (lo, hi) == pytest.approx((0.5 * 20 * math.pi * math.log(5), 1.5 * 20 * math.pi * math.log(5)))
    assert 20 <= lo and hi <= 200
    blobs = extract_blobs(encode_corners([(30.3, 28.6)]), 0.2, (20, 200))
    assert len(blobs) == 1
    assert abs(blobs[0].area - expected_blob_area(0.2)) < 0.1 * expected_blob_area(0.2)


def test_equal_blobs_ordered_by_top_left():
    h = np.zeros((20, 20))
    h[12:15, 2:5] = 0.8
    h[3:6, 10:13] = 0.8
    blobs = extract_blobs(h, 0.5, (1, 100))
    assert [b.top_left for b in blobs] == [(3, 10), (12, 2)]
    assert blobs[0].score == blobs[1].score == pytest.approx(0.8)


def test_blobs_are_four_connected():
    h = np.zeros((10, 10))
    h[2, 2] = h[3, 3] = 0.9  # diagonal neighbours only
    assert len(extract_blobs(h, 0.5, (1, 10))) == 2


def test_centroid_examples():
    assert blob_centroid(blob_from({(7, 3): 0.4}, (10, 10))) == pytest.approx((3.0, 7.0), abs=1e-12)
    plateau = {(i, j): 0.6 for i in range(4, 7) for j in range(4, 7)}
    assert blob_centroid(blob_from(plateau, (10, 10))) == pytest.approx((5.0, 5.0), abs=1e-15)
    assert blob_centroid(blob_from({(0, 0): 1.0, (0, 1): 3.0})) == (0.75, 0.0)
    with pytest.raises(ValueError):
        blob_centroid(blob_from({(1, 1): 0.0}))


def test_centroid_brute_force_and_inside_bbox():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        cells = {(int(i), int(j)): float(rng.random() + 1e-3) for i, j in rng.integers(0, 16, (n, 2))}
        b = blob_from(cells, (16, 16))
        total = sum(cells.values())
        x = sum(j * v for (i, j), v in cells.items()) / total
        y = sum(i * v for (i, j), v in cells.items()) / total
        cx, cy = blob_centroid(b)
        assert abs(cx - x) < 1e-12 and abs(cy - y) < 1e-12
        assert b.cols.min() <= cx <= b.cols.max() and b.rows.min() <= cy <= b.rows.max()


def test_decode_roundtrip_example():
    corners = np.array([(10, 10), (12, 48), (52, 50), (50, 12)], dtype=float)
    out = decode_corners(encode_corners(corners))
    assert out.shape == (4, 2)
    assert np.max(np.linalg.norm(out - corners, axis=1)) <= 0.5


def test_decode_returns_canonical_order():
    corners = np.array([(50, 12), (10, 10), (52, 50), (12, 48)], dtype=float)
    out = decode_corners(encode_corners(corners))
    assert np.allclose(out, [(10, 10), (12, 48), (52, 50), (50, 12)], atol=0.5)


def test_decode_empty_map():
    assert decode_corners(np.zeros((64, 64))).shape == (0, 2)


def test_decode_keeps_top_four_by_score():
    h = np.zeros((64, 64))
    spots = [(5, 5, 0.9), (5, 40, 0.8), (40, 40, 0.7), (40, 5, 0.6), (22, 22, 0.5)]
    for i, j, v in spots:
        h[i : i + 3, j : j + 3] = v
    out = decode_corners(h, value_threshold=0.4, area_range=(1, 100))
    assert len(out) == 4
    assert not np.any(np.all(np.isclose(out, [23.0, 23.0]), axis=1))


def test_fewer_than_four_in_score_order():
    h = np.zeros((64, 64))
    h[40:43, 40:43] = 0.9
    h[5:8, 5:8] = 0.7
    out = decode_corners(h, value_threshold=0.4, area_range=(1, 100))
    assert np.allclose(out, [(41, 41), (6, 6)])
