"""Independent oracles and synthetic fixtures.

Everything here deliberately avoids the fast paths it checks: window
scores are recomputed by direct per-window summation (no summed-area
table), and box-set IOU is recomputed by exact integer coordinate
compression (no rasterization). These live in the shipped package, not
only in tests, so the CLI can cross-check arbitrary user inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attribution import GridRegion, ScoredRegion, WindowConfig
from .errors import ContractError, ValidationError
from .metrics import BoxSet


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a reproducible grid with known best regions.

    Patches inside each planted region equal that region's signal vector
    plus noise*eps; the background is sampled and then Gram-Schmidt
    projected away from the query direction, so at noise 0 recovery of
    the planted regions is provable, not just likely. The query is the
    first planted signal (or a seeded random vector when nothing is
    planted).
    """

    seed: int
    height: int
    width: int
    dim: int
    planted: tuple = field(default_factory=tuple)  # of (GridRegion, signal vector)
    noise: float = 0.0

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.dim < 1:
            raise ValidationError(f"bad grid geometry {self.height}x{self.width}x{self.dim}")
        if self.noise < 0:
            raise ValidationError("noise must be >= 0")
        for region, signal in self.planted:
            if region.i + region.h > self.height or region.j + region.w > self.width:
                raise ValidationError(f"planted region {region} outside grid")
            if not np.any(np.asarray(signal)):
                raise ValidationError("signal vectors must be nonzero")


def gen_synthetic(spec: SyntheticSpec):
    """Returns (grid float32, query, expected regions in score order).

    Deterministic for a seed: the background is drawn first, then each
    region's noise in planted order, from a single PCG64 stream.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.planted:
        query = np.asarray(spec.planted[0][1], dtype=np.float64).copy()
    else:
        query = rng.standard_normal(spec.dim)
    qhat = query / np.linalg.norm(query)

    grid = rng.standard_normal((spec.height, spec.width, spec.dim))
    grid -= (grid @ qhat)[:, :, None] * qhat  # background leans orthogonal

    for region, signal in spec.planted:
        sig = np.asarray(signal, dtype=np.float64)
        if sig.shape != (spec.dim,):
            raise ContractError(f"signal dim {sig.shape} != grid dim {spec.dim}")
        block = np.broadcast_to(sig, (region.h, region.w, spec.dim)).copy()
        if spec.noise > 0:
            block += spec.noise * rng.standard_normal((region.h, region.w, spec.dim))
        grid[region.i : region.i + region.h, region.j : region.j + region.w] = block

    def score(entry):
        sig = np.asarray(entry[1], dtype=np.float64)
        return float(sig @ qhat / np.linalg.norm(sig))

    expected = [r for r, _ in sorted(
        spec.planted, key=lambda e: (-score(e),) + e[0].tie_key()
    )]
    return grid.astype(np.float32), query, expected


def _normalized(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    norms = np.sqrt((g * g).sum(axis=2, keepdims=True))
    out = np.zeros_like(g)
    np.divide(g, norms, out=out, where=norms > 0)
    return out


def _direct_scores(grid, query, cfg: WindowConfig, normalize: bool):
    """Score every admissible window by direct summation, in tie order.

    Each window's cosine is taken against the sum of its nonzero patches
    (cosine ignores the mean's 1/(h*w) scale, and skipping zero patches
    keeps windows that differ only by zero padding exactly tied).
    """
    g = np.asarray(grid)
    if g.ndim != 3:
        raise ContractError(f"grid must be rank 3, got rank {g.ndim}")
    H, W, D = g.shape
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (D,):
        raise ContractError(f"query dim {q.shape} != grid dim {D}")
    shapes = cfg.shapes(H, W)
    if not shapes:
        raise ContractError(
            f"no admissible window: grid {H}x{W} is smaller than min_size {cfg.min_size}"
        )
    gn = _normalized(g) if normalize else g.astype(np.float64)
    occupied = (gn != 0).any(axis=2)
    qn = float(np.linalg.norm(q))
    for h, w in shapes:
        for i in range(0, H - h + 1, cfg.stride):
            for j in range(0, W - w + 1, cfg.stride):
                rows = gn[i : i + h, j : j + w].reshape(h * w, D)
                sel = rows[occupied[i : i + h, j : j + w].reshape(h * w)]
                if sel.shape[0] == 0:
                    yield 0.0, GridRegion(i, j, h, w)
                    continue
                total = sel.sum(axis=0)
                den = float(np.linalg.norm(total)) * qn
                s = float(total @ q) / den if den > 0 else 0.0
                yield s, GridRegion(i, j, h, w)


def brute_force_attribute(
    grid, query, cfg: WindowConfig = WindowConfig(), *, normalize: bool = True
) -> ScoredRegion:
    """Reference best-window search: direct per-window summation, no tables."""
    best = None
    for s, region in _direct_scores(grid, query, cfg, normalize):
        if best is None or s > best[0]:
            best = (s, region)
    return ScoredRegion(best[1], best[0])


def brute_force_topk(
    grid, query, cfg: WindowConfig = WindowConfig(), k: int = 5,
    nms_iou: float = 0.3, *, normalize: bool = True,
) -> list[ScoredRegion]:
    """Reference greedy NMS selection over directly-scored windows."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    pool = list(_direct_scores(grid, query, cfg, normalize))
    picked: list[ScoredRegion] = []
    while pool and len(picked) < k:
        best = None
        for s, region in pool:  # pool is in tie order; strict > keeps first
            if best is None or s > best[0]:
                best = (s, region)
        s, region = best
        picked.append(ScoredRegion(region, s))
        kept = []
        for item in pool:
            r = item[1]
            iw = min(r.j + r.w, region.j + region.w) - max(r.j, region.j)
            ih = min(r.i + r.h, region.i + region.h) - max(r.i, region.i)
            inter = max(iw, 0) * max(ih, 0)
            iou = inter / (r.h * r.w + region.h * region.w - inter)
            if iou <= nms_iou and r != region:
                kept.append(item)
        pool = kept
    return picked


def exact_multibox_iou(pred: BoxSet, gt: BoxSet) -> float:
    """Mask-free multi-box IOU via integer coordinate compression.

    Areas are exact integers (sweep over the <= 2(|pred|+|gt|) distinct
    x/y cuts), so the result is bit-for-bit comparable with the
    rasterized implementation.
    """
    if pred.frame != gt.frame:
        raise ContractError(f"frame mismatch: {pred.frame} vs {gt.frame}")
    boxes = pred.boxes + gt.boxes
    if not boxes:
        return 1.0
    xs = sorted({v for b in boxes for v in (b.x1, b.x2)})
    ys = sorted({v for b in boxes for v in (b.y1, b.y2)})
    inter = 0
    union = 0
    for yi in range(len(ys) - 1):
        y1, y2 = ys[yi], ys[yi + 1]
        for xi in range(len(xs) - 1):
            x1, x2 = xs[xi], xs[xi + 1]
            in_p = any(b.x1 <= x1 and b.x2 >= x2 and b.y1 <= y1 and b.y2 >= y2
                       for b in pred.boxes)
            in_g = any(b.x1 <= x1 and b.x2 >= x2 and b.y1 <= y1 and b.y2 >= y2
                       for b in gt.boxes)
            if in_p or in_g:
                area = (x2 - x1) * (y2 - y1)
                union += area
                if in_p and in_g:
                    inter += area
    if union == 0:
        return 1.0
    return inter / union
