import hashlib
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markerkit.dictionary import (
    Dictionary,
    DictionaryError,
    MatchResult,
    hamming,
    load_dictionary,
    match_code,
    rotate_bits,
)

bit_grids = st.lists(st.integers(0, 1), min_size=36, max_size=36).map(
    lambda b: np.array(b, dtype=np.uint8).reshape(6, 6)
)


def _write(tmp_path, lines):
    p = tmp_path / "dict.txt"
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def _line(code):
    return "".join(str(int(b)) for b in np.asarray(code).ravel())


def test_bundled_dictionary_has_250_ids(dictionary):
    assert len(dictionary) == 250
    assert dictionary.codes.shape == (250, 6, 6)
    assert set(np.unique(dictionary.codes)) <= {0, 1}
    ids = [i for i, _ in dictionary.entries]
    assert ids == list(range(250))


def test_bundled_codes_are_frozen(dictionary):
    # values exported once from OpenCV's 6x6/250 family
    assert _line(dictionary[0]) == "000111100011110111011000001010100110"
    assert _line(dictionary[2]) == "000101011001000001111110101011001101"
    digest = hashlib.sha256(dictionary.codes.tobytes()).hexdigest()
    assert digest == "1c779ac99bbbacbc67b2e4bfde745a7252e658bca50c4c1ac4557132c2510332"


def test_short_line_is_rejected_with_line_number(tmp_path, dictionary):
    lines = [_line(dictionary[0]), _line(dictionary[1])[:35]]
    with pytest.raises(DictionaryError, match="line 2"):
        load_dictionary(_write(tmp_path, lines))


def test_bad_character_is_rejected(tmp_path, dictionary):
    bad = _line(dictionary[0])[:-1] + "2"
    with pytest.raises(DictionaryError, match="line 1"):
        load_dictionary(_write(tmp_path, [bad]))


def test_code_with_own_rotation_is_rejected(tmp_path, dictionary):
    code = dictionary[5]
    lines = [_line(code), _line(rotate_bits(code, 1))]
    with pytest.raises(DictionaryError, match="line 2"):
        load_dictionary(_write(tmp_path, lines))


def test_comments_and_blank_lines_do_not_consume_ids(tmp_path, dictionary):
    lines = ["# header", _line(dictionary[3]), "", "# more", _line(dictionary[4])]
    d = load_dictionary(_write(tmp_path, lines))
    assert len(d) == 2
    assert np.array_equal(d[1], dictionary[4])


def test_rotate_single_bit_moves_to_top_right():
    code = np.zeros((6, 6), dtype=np.uint8)
    code[0, 0] = 1
    out = rotate_bits(code, 1)
    assert out[0, 5] == 1 and out.sum() == 1


def test_rotate_index_map():
    code = np.arange(36).reshape(6, 6)
    out = rotate_bits(code, 1)
    for r, c in itertools.product(range(6), repeat=2):
        assert out[c, 5 - r] == code[r, c]


@given(bit_grids, st.integers(-8, 8))
def test_rotation_group(code, k):
    assert np.array_equal(rotate_bits(code, 0), code)
    four = code
    for _ in range(4):
        four = rotate_bits(four, 1)
    assert np.array_equal(four, code)
    assert np.array_equal(rotate_bits(code, k), rotate_bits(code, k % 4))


@given(bit_grids, bit_grids)
def test_hamming_properties(a, b):
    assert hamming(a, a) == 0
    assert hamming(a, 1 - a) == 36
    assert hamming(a, b) == hamming(b, a)
    assert (hamming(a, b) == 0) == np.array_equal(a, b)


def test_hamming_three_flips(dictionary):
    b = dictionary[11].copy()
    flipped = b.copy()
    for r, c in [(0, 0), (2, 3), (5, 5)]:
        flipped[r, c] ^= 1
    assert hamming(b, flipped) == 3


def test_match_exact(dictionary):
    assert match_code(dictionary, dictionary[7]) == MatchResult(id=7, distance=0, rotation=0)


def test_match_rotated_reports_undoing_turns(dictionary):
    # observed = stored turned once clockwise; three more clockwise turns realign it
    observed = rotate_bits(dictionary[7], 1)
    m = match_code(dictionary, observed)
    assert (m.id, m.distance, m.rotation) == (7, 0, 3)
    assert np.array_equal(rotate_bits(observed, m.rotation), dictionary[7])


def test_match_one_flip_has_unique_neighbour(dictionary):
    code = dictionary[7].copy()
    code[2, 4] ^= 1
    m = match_code(dictionary, code)
    assert (m.id, m.distance) == (7, 1)
    # brute force: no other candidate within distance 1
    close = [
        (i, r)
        for i in range(len(dictionary))
        for r in range(4)
        if hamming(rotate_bits(code, r), dictionary[i]) <= 1
    ]
    assert close == [(7, 0)]


def _brute_match(d, code):
    best = None
    for i in range(len(d)):
        for r in range(4):
            key = (hamming(rotate_bits(code, r), d[i]), i, r)
            best = key if best is None or key < best else best
    return best


@settings(max_examples=40, deadline=None)
@given(bit_grids)
def test_match_equals_brute_force(dictionary, code):
    dist, i, r = _brute_match(dictionary, code)
    assert match_code(dictionary, code) == MatchResult(id=i, distance=dist, rotation=r)


@settings(max_examples=40, deadline=None)
@given(bit_grids)
def test_match_never_worse_than_rotation_zero(dictionary, code):
    m = match_code(dictionary, code)
    assert m.distance <= min(hamming(code, c) for c in dictionary.codes)


def test_ties_prefer_lower_id():
    a = np.zeros((6, 6), dtype=np.uint8)
    a[0, :3] = 1
    b = np.zeros((6, 6), dtype=np.uint8)
    b[5, 1:4] = 1
    d = Dictionary(codes=np.stack([a, b]), name="tiny")
    m = match_code(d, np.zeros((6, 6), dtype=np.uint8))
    assert m.distance == 3 and m.id == 0
