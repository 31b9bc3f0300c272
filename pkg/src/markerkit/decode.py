"""From a located quad to an identified marker.

The deterministic bit reader here stands in for a learned 32x32 -> 6x6
decoder: same input (rectified, min-max normalized gray crop) and the same
output semantics (bits after rounding).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dictionary import CODE_SIDE, MatchResult, match_code
from .geometry import inset_quad
from .imaging import normalize_minmax, to_luma, warp_quad

RECT_SIZE = 32
# one cell of the 8-cell black-ring square separates its boundary from the payload
RING_FRACTION = 1.0 / 8.0


@dataclass(frozen=True, eq=False)
class DecodeOutcome:
    bits: np.ndarray
    match: MatchResult
    accepted: bool

    @property
    def id(self):
        return self.match.id

    @property
    def distance(self):
        return self.match.distance


def rectify(img, quad, size: int = RECT_SIZE, ring_fraction: float = RING_FRACTION) -> np.ndarray:
    """Warp the payload area inside ``quad`` to a ``size`` x ``size`` normalized gray image."""
    payload = inset_quad(quad, ring_fraction)
    return normalize_minmax(to_luma(warp_quad(img, payload, size, size)))


@lru_cache(maxsize=8)
def _cell_windows(size: int, cells: int, inset: float):
    pitch = size / cells
    centers = np.arange(size) + 0.5
    windows = []
    for k in range(cells):
        lo = k * pitch + inset * pitch / 2
        hi = (k + 1) * pitch - inset * pitch / 2
        sel = np.nonzero((centers >= lo) & (centers < hi))[0]
        if len(sel) == 0:
            sel = np.array([min(int((k + 0.5) * pitch), size - 1)])
        windows.append(sel)
    return tuple(windows)


def cell_means(rect, cells: int = CODE_SIDE, inset: float = 0.5) -> np.ndarray:
    """Mean of the central window of each cell; ``inset`` is the fraction trimmed."""
    rect = np.asarray(rect, dtype=float)
    rows = _cell_windows(rect.shape[0], cells, inset)
    cols = _cell_windows(rect.shape[1], cells, inset)
    out = np.empty((cells, cells))
    for r, ri in enumerate(rows):
        block = rect[ri]
        for c, ci in enumerate(cols):
            out[r, c] = block[:, ci].mean()
    return out


def extract_bits(rect) -> np.ndarray:
    return (cell_means(rect) >= 0.5).astype(np.uint8)


def identify(dictionary, bits, max_hamming: int) -> DecodeOutcome:
    match = match_code(dictionary, bits)
    return DecodeOutcome(bits=np.asarray(bits, dtype=np.uint8), match=match, accepted=match.distance <= max_hamming)


def decode_at(img, quad, dictionary, max_hamming: int, ring_fraction: float = RING_FRACTION) -> DecodeOutcome:
    return identify(dictionary, extract_bits(rectify(img, quad, ring_fraction=ring_fraction)), max_hamming)
