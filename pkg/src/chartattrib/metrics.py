"""Evaluation arithmetic: mask-based multi-box IOU, single-box IOU,
Cohen's kappa, and embedding cosine similarity.

Box sets are rasterized to packed bit masks, which turns the IOU of two
sets (with arbitrary internal overlaps) into popcounts of AND/OR. A
2000x2000 frame costs 0.5 MB per mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .attribution import PixelBox, cosine
from .errors import ContractError, ValidationError


class BoxSet:
    """Pixel boxes over one image frame (width, height).

    Boxes reaching outside the frame are clamped, not rejected: baseline
    models emit out-of-frame coordinates and evaluation must still score
    them. Boxes empty after clamping contribute no pixels and are dropped.
    """

    __slots__ = ("boxes", "frame")

    def __init__(self, boxes: Iterable, frame: tuple[int, int]):
        w, h = int(frame[0]), int(frame[1])
        if w < 1 or h < 1:
            raise ValidationError(f"frame dims must be >= 1, got {frame}")
        kept = []
        for b in boxes:
            x1, y1, x2, y2 = b.as_tuple() if isinstance(b, PixelBox) else map(int, b)
            x1, x2 = max(x1, 0), min(x2, w)
            y1, y2 = max(y1, 0), min(y2, h)
            if x2 > x1 and y2 > y1:
                kept.append(PixelBox(x1, y1, x2, y2))
        self.boxes = tuple(kept)
        self.frame = (w, h)

    def __len__(self):
        return len(self.boxes)

    def __eq__(self, other):
        return (
            isinstance(other, BoxSet)
            and self.frame == other.frame
            and self.boxes == other.boxes
        )


class BinaryMask:
    """One bit per pixel, row-major, packed MSB-first into bytes."""

    __slots__ = ("width", "height", "bits")

    def __init__(self, width: int, height: int, bits: np.ndarray):
        if bits.size != (width * height + 7) // 8:
            raise ValidationError("bit buffer does not match frame")
        self.width = width
        self.height = height
        self.bits = bits

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        a = np.asarray(arr, dtype=bool)
        h, w = a.shape
        return cls(w, h, np.packbits(a.ravel()))

    def to_array(self) -> np.ndarray:
        flat = np.unpackbits(self.bits, count=self.width * self.height)
        return flat.reshape(self.height, self.width).astype(bool)

    def count(self) -> int:
        return int(np.bitwise_count(self.bits).sum())

    def _check(self, other: "BinaryMask"):
        if (self.width, self.height) != (other.width, other.height):
            raise ContractError("frame mismatch between masks")

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        self._check(other)
        return BinaryMask(self.width, self.height, self.bits & other.bits)

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        self._check(other)
        return BinaryMask(self.width, self.height, self.bits | other.bits)

    def __eq__(self, other):
        return (
            isinstance(other, BinaryMask)
            and (self.width, self.height) == (other.width, other.height)
            and bool(np.array_equal(self.bits, other.bits))
        )


def rasterize(s: BoxSet) -> BinaryMask:
    """Union of the set's boxes as a bit mask (half-open convention)."""
    w, h = s.frame
    grid = np.zeros((h, w), dtype=bool)
    for b in s.boxes:
        grid[b.y1 : b.y2, b.x1 : b.x2] = True
    return BinaryMask.from_array(grid)


def multibox_iou(pred: BoxSet, gt: BoxSet) -> float:
    """|Mp AND Mgt| / |Mp OR Mgt| over the rasterized masks.

    Two empty masks agree perfectly (1.0); exactly one empty scores 0.0.
    """
    if pred.frame != gt.frame:
        raise ContractError(f"frame mismatch: {pred.frame} vs {gt.frame}")
    mp = rasterize(pred)
    mg = rasterize(gt)
    union = (mp | mg).count()
    if union == 0:
        return 1.0
    return (mp & mg).count() / union


def single_iou(p: PixelBox, g: PixelBox) -> float:
    """Closed-form rectangle intersection over union; 0.0 when disjoint."""
    iw = min(p.x2, g.x2) - max(p.x1, g.x1)
    ih = min(p.y2, g.y2) - max(p.y1, g.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (p.area + g.area - inter)


@dataclass(frozen=True)
class AgreementTable:
    """2x2 binary agreement counts: a both-yes, b yes/no, c no/yes, d both-no."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0 or self.n < 1:
            raise ValidationError(f"bad agreement table {self}")

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


def kappa(t: AgreementTable) -> float:
    """Cohen's kappa: chance-corrected agreement over a 2x2 table.

    Marginals are kept as exact integers; the degenerate case where
    expected agreement is 1 is defined as 1.0 for perfect observed
    agreement and an error otherwise.
    """
    n = t.n
    po_num = t.a + t.d
    pe_num = (t.a + t.b) * (t.a + t.c) + (t.c + t.d) * (t.b + t.d)
    if pe_num == n * n:
        if po_num == n:
            return 1.0
        raise ContractError("kappa undefined: degenerate marginals with disagreement")
    p_o = po_num / n
    p_e = pe_num / (n * n)
    return (p_o - p_e) / (1.0 - p_e)


def sts_cosine(v1: Sequence[float], v2: Sequence[float]) -> float:
    """Semantic similarity of two sentence embeddings (shared cosine)."""
    return cosine(np.asarray(v1), np.asarray(v2))
