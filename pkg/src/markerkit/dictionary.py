"""ArUco code dictionaries and rotation-aware Hamming identification.

Codes are 6x6 ``uint8`` arrays of 0 (black) / 1 (white), read row-major from
the top-left cell. Rotation indices count clockwise quarter-turns applied to
the *observed* code to align it with the stored one.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

CODE_SIDE = 6
CODE_BITS = CODE_SIDE * CODE_SIDE

DEFAULT_DICTIONARY = "aruco_6x6_250.txt"


class DictionaryError(ValueError):
    """Malformed dictionary file or violated dictionary invariant."""


@dataclass(frozen=True)
class MatchResult:
    id: int
    distance: int
    rotation: int


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Immutable ordered collection of codes; entry ``i`` has id ``i``."""

    codes: np.ndarray  # (n, 6, 6) uint8
    name: str = "custom"

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.uint8)
        if codes.ndim != 3 or codes.shape[1:] != (CODE_SIDE, CODE_SIDE):
            raise DictionaryError(f"codes must have shape (n, 6, 6), got {codes.shape}")
        if np.any(codes > 1):
            raise DictionaryError("codes must be binary")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        flat = codes.reshape(len(codes), CODE_BITS)
        object.__setattr__(self, "_flat", flat)

    def __len__(self):
        return len(self.codes)

    def __getitem__(self, marker_id):
        return self.codes[marker_id]

    @property
    def entries(self):
        return list(enumerate(self.codes))


def as_code(bits) -> np.ndarray:
    """Coerce a 36-element sequence or a 6x6 array into a 6x6 ``uint8`` code."""
    arr = np.asarray(bits)
    if arr.size != CODE_BITS:
        raise ValueError(f"a code has {CODE_BITS} bits, got {arr.size}")
    arr = arr.reshape(CODE_SIDE, CODE_SIDE)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("code entries must be 0 or 1")
    return arr.astype(np.uint8)


def rotate_bits(code, quarter_turns: int) -> np.ndarray:
    """Rotate a code clockwise; cell ``(r, c)`` moves to ``(c, 5 - r)`` per turn."""
    return np.rot90(np.asarray(code), -(quarter_turns % 4)).copy()


def hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a).ravel() != np.asarray(b).ravel()))


def _rotation_violations(codes: np.ndarray):
    """Yield ``(i, j, r)`` where code ``i`` rotated ``r`` equals code ``j`` (i != j or r != 0)."""
    flat = codes.reshape(len(codes), -1)
    index = {}
    for j, row in enumerate(flat):
        index.setdefault(row.tobytes(), []).append(j)
    for i, code in enumerate(codes):
        for r in range(4):
            key = rotate_bits(code, r).tobytes()
            for j in index.get(key, ()):
                if j != i or r != 0:
                    yield i, j, r


def validate(dictionary: Dictionary) -> None:
    """Raise :class:`DictionaryError` unless every code is unique under rotation."""
    for i, j, r in _rotation_violations(dictionary.codes):
        if i == j:
            raise DictionaryError(f"code {i} is symmetric under {r} quarter-turn(s)")
        raise DictionaryError(f"code {i} rotated {r} quarter-turn(s) duplicates code {j}")


def load_dictionary(path=None, name=None) -> Dictionary:
    """Load a dictionary file; ``None`` loads the bundled 6x6/250 family.

    One code per non-comment line: 36 characters of ``0``/``1``. Blank lines
    and lines starting with ``#`` are skipped; ids count the remaining lines
    from 0. Errors name the physical line number.
    """
    if path is None:
        text = resources.files("markerkit.data").joinpath(DEFAULT_DICTIONARY).read_text("utf-8")
        name = name or "DICT_6X6_250"
    else:
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        name = name or path.stem

    codes = []
    lineno_of = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if len(line) != CODE_BITS:
            raise DictionaryError(
                f"line {lineno}: expected {CODE_BITS} characters, got {len(line)}"
            )
        if set(line) - {"0", "1"}:
            raise DictionaryError(f"line {lineno}: only '0' and '1' are allowed")
        codes.append([int(ch) for ch in line])
        lineno_of.append(lineno)
    if not codes:
        raise DictionaryError("dictionary file contains no codes")

    arr = np.array(codes, dtype=np.uint8).reshape(-1, CODE_SIDE, CODE_SIDE)
    for i, j, r in _rotation_violations(arr):
        if i == j:
            raise DictionaryError(
                f"line {lineno_of[i]}: code is symmetric under {r} quarter-turn(s)"
            )
        first, second = sorted((i, j))
        raise DictionaryError(
            f"line {lineno_of[second]}: code duplicates line {lineno_of[first]} "
            f"under rotation"
        )
    return Dictionary(arr, name=name)


def match_code(dictionary: Dictionary, code) -> MatchResult:
    """Nearest dictionary entry over all four rotations of ``code``.

    Ties are broken by lower distance, then lower id, then lower rotation.
    """
    if len(dictionary) == 0:
        raise ValueError("empty dictionary")
    code = as_code(code)
    observed = np.stack([rotate_bits(code, r).ravel() for r in range(4)])  # (4, 36)
    dist = (observed[:, None, :] != dictionary._flat[None, :, :]).sum(axis=2)  # (4, n)
    n = dist.shape[1]
    rot = np.arange(4)[:, None]
    ids = np.arange(n)[None, :]
    key = dist * (4 * n) + ids * 4 + rot
    r, i = np.unravel_index(np.argmin(key), key.shape)
    return MatchResult(id=int(i), distance=int(dist[r, i]), rotation=int(r))
