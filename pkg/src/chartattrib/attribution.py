"""Sliding-window attribution over a patch-embedding grid.

Every admissible rectangular window of the grid is scored by the cosine
between its (normalize-then-average) patch mean and a query embedding.
Window sums come from a double-precision summed-area table, so the full
square scan (12,529 windows on a 35x35 grid, sizes 3..35) costs four
table lookups per window and dimension instead of re-summing patches.

Table differences cancel catastrophically on sparse grids (a window of
all-zero patches keeps residue of the global prefix magnitude, and
num/residue is garbage), so selection never trusts a fast score alone:

  * windows containing no nonzero patch are scored 0.0 exactly, via an
    integer count table that cannot round;
  * every other window carries a rounding bound derived from the prefix
    magnitudes; windows whose score interval reaches the maximum are
    re-scored by direct summation, and the pick is made on those exact
    values with the deterministic tie order (smaller h, then w, then i,
    then j).

Dense inputs re-score one window; genuinely tied inputs (an all-equal
grid ties everywhere) degrade smoothly toward brute-force cost while
staying exactly consistent with the brute-force oracle.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

# workqueue is always available and stays quiet about TBB versions
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from numba import njit, prange  # noqa: E402

from .errors import CapacityError, ContractError, ValidationError

# Integral tables above this budget are refused (float64 entries).
DEFAULT_INTEGRAL_BUDGET = 2 << 30


@dataclass(frozen=True)
class GridRegion:
    """Window in patch coordinates: top row i, left col j, h x w patches."""

    i: int
    j: int
    h: int
    w: int

    def __post_init__(self):
        if self.i < 0 or self.j < 0 or self.h < 1 or self.w < 1:
            raise ValidationError(f"bad region {self}")

    def tie_key(self):
        """Total order used to break score ties: compact first, then top-left."""
        return (self.h, self.w, self.i, self.j)


@dataclass(frozen=True)
class ScoredRegion:
    region: GridRegion
    score: float


@dataclass(frozen=True)
class PixelBox:
    """Half-open pixel rectangle: (x1, y1) inclusive, (x2, y2) exclusive."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2) or self.x1 < 0 or self.y1 < 0:
            raise ValidationError(f"bad pixel box {self}")

    @property
    def area(self) -> int:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class WindowConfig:
    """Admissible window geometry for a scan.

    Defaults follow the model geometry this engine targets: square
    windows from 3x3 up to the full 35x35 grid, stride 1. max_size is
    clamped to the grid, so the defaults work on smaller grids too.
    """

    min_size: int = 3
    max_size: int = 35
    square_only: bool = True
    stride: int = 1

    def __post_init__(self):
        if not 1 <= self.min_size <= self.max_size:
            raise ValidationError(f"need 1 <= min_size <= max_size, got {self}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")

    def shapes(self, grid_h: int, grid_w: int) -> list[tuple[int, int]]:
        """Window shapes in tie-break order (h ascending, then w)."""
        if self.square_only:
            top = min(self.max_size, grid_h, grid_w)
            return [(s, s) for s in range(self.min_size, top + 1)]
        hs = range(self.min_size, min(self.max_size, grid_h) + 1)
        ws = range(self.min_size, min(self.max_size, grid_w) + 1)
        return [(h, w) for h in hs for w in ws]


@dataclass(frozen=True)
class IntegralGrid:
    """(H+1, W+1, D) float64 prefix sums; row 0 and column 0 are zeros."""

    table: np.ndarray

    @property
    def grid_height(self) -> int:
        return self.table.shape[0] - 1

    @property
    def grid_width(self) -> int:
        return self.table.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.table.shape[2]


def check_grid(grid: np.ndarray) -> np.ndarray:
    """Validate an (H, W, D) embedding grid and return it as an ndarray."""
    g = np.asarray(grid)
    if g.ndim != 3:
        raise ContractError(f"embedding grid must be rank 3 (H, W, D), got rank {g.ndim}")
    if any(d < 1 for d in g.shape):
        raise ValidationError(f"grid dims must be positive, got {g.shape}")
    if not np.isfinite(g).all():
        raise ValidationError("grid contains non-finite values")
    return g


def check_query(query: np.ndarray, dim: int | None = None) -> np.ndarray:
    q = np.asarray(query)
    if q.ndim != 1:
        raise ContractError(f"query must be rank 1, got rank {q.ndim}")
    if dim is not None and q.shape[0] != dim:
        raise ContractError(f"query dim {q.shape[0]} != grid dim {dim}")
    if not np.isfinite(q).all():
        raise ValidationError("query contains non-finite values")
    return q


def _normalize_f64(g: np.ndarray) -> np.ndarray:
    g = g.astype(np.float64)
    norms = np.sqrt(np.einsum("ijk,ijk->ij", g, g))
    norms[norms == 0] = 1.0  # zero vectors divide by 1 and stay zero
    g /= norms[:, :, None]
    return g


def normalize_grid(grid: np.ndarray) -> np.ndarray:
    """Scale each patch vector to unit L2 norm; zero vectors stay zero.

    Returns a float64 copy (norms are accumulated in double precision).
    """
    return _normalize_f64(check_grid(grid))


@njit(cache=True, parallel=True)
def _integral_fill(grid, out):
    # Each embedding dimension's 2-D prefix sum is independent, so
    # threading over dimension blocks cannot change any result bit.
    H, W, D = grid.shape
    nb = min(32, D)
    for b in prange(nb):
        d0 = b * D // nb
        d1 = (b + 1) * D // nb
        for i in range(H):
            for j in range(W):
                for d in range(d0, d1):
                    out[i + 1, j + 1, d] = (
                        grid[i, j, d] + out[i, j + 1, d] + out[i + 1, j, d] - out[i, j, d]
                    )


def _integral_table(g64: np.ndarray, max_bytes: int) -> np.ndarray:
    H, W, D = g64.shape
    need = (H + 1) * (W + 1) * D * 8
    if need > max_bytes:
        raise CapacityError(f"integral table needs {need} bytes, budget is {max_bytes}")
    out = np.zeros((H + 1, W + 1, D), dtype=np.float64)
    _integral_fill(g64, out)
    return out


def build_integral(grid: np.ndarray, max_bytes: int = DEFAULT_INTEGRAL_BUDGET) -> IntegralGrid:
    """Summed-area table of the grid, accumulated in float64."""
    g = np.ascontiguousarray(check_grid(grid), dtype=np.float64)
    return IntegralGrid(_integral_table(g, max_bytes))


def window_mean(ig: IntegralGrid, region: GridRegion) -> np.ndarray:
    """Mean patch vector over a region, via four table lookups per dim."""
    t = ig.table
    i, j, h, w = region.i, region.j, region.h, region.w
    if i + h > ig.grid_height or j + w > ig.grid_width:
        raise ContractError(f"region {region} outside {ig.grid_height}x{ig.grid_width} grid")
    total = t[i + h, j + w] - t[i, j + w] - t[i + h, j] + t[i, j]
    return total / (h * w)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in double precision; 0.0 when either norm is 0."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise ContractError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
    if denom == 0.0:
        return 0.0
    return float(np.dot(va, vb) / denom)


@njit(cache=True, parallel=True)
def _window_sum_norms(table, hs, ws, stride, offsets, out):
    # out[offsets[k] + a*nw + b] = ||window sum||^2 for shape k at strided (a, b).
    # Each window is accumulated independently, so results do not depend on
    # the number of threads.
    for k in prange(hs.shape[0]):
        h = hs[k]
        w = ws[k]
        nh = (table.shape[0] - 1 - h) // stride + 1
        nw = (table.shape[1] - 1 - w) // stride + 1
        D = table.shape[2]
        base = offsets[k]
        for a in range(nh):
            i = a * stride
            for b in range(nw):
                j = b * stride
                acc = 0.0
                for d in range(D):
                    t = (
                        table[i + h, j + w, d]
                        - table[i, j + w, d]
                        - table[i + h, j, d]
                        + table[i, j, d]
                    )
                    acc += t * t
                out[base + a * nw + b] = acc


class _Scan:
    """Per-shape score and error-bound grids for one (grid, query, config)."""

    def __init__(self, grid, query, cfg: WindowConfig, normalize: bool):
        g = check_grid(grid)
        q = check_query(query, g.shape[2])
        self.gn = _normalize_f64(g) if normalize else g.astype(np.float64)
        self.q = q.astype(np.float64)
        self.qnorm = float(np.linalg.norm(self.q))
        H, W, _ = self.gn.shape
        self.shapes = cfg.shapes(H, W)
        if not self.shapes:
            raise ContractError(
                f"no admissible window: grid {H}x{W} is smaller than min_size {cfg.min_size}"
            )
        self.stride = cfg.stride
        table = _integral_table(self.gn, DEFAULT_INTEGRAL_BUDGET)

        # Exact integer table of nonzero-patch counts: a window that
        # contains no nonzero patch scores 0.0 with zero uncertainty.
        self.nonzero = (self.gn != 0).any(axis=2)
        ic = np.zeros((H + 1, W + 1))
        np.cumsum(self.nonzero.astype(np.float64), axis=0, out=ic[1:, 1:])
        np.cumsum(ic[1:, 1:], axis=1, out=ic[1:, 1:])

        # Rounding bounds for table-derived quantities. Entries carry
        # accumulated cumsum error ~ (H+W) ulps of the prefix magnitude,
        # and the prefix magnitude is at most the summed patch norms; the
        # factors are deliberately generous.
        eps = np.finfo(np.float64).eps
        slack = 4.0 * (H + W + 8) * eps
        if normalize:
            norm_sum = float(ic[H, W]) + 1.0  # unit-norm patches
        else:
            norm_sum = float(np.sqrt(np.einsum("ijk,ijk->ij", self.gn, self.gn)).sum()) + 1.0
        self.sum_err = slack * norm_sum

        # Scalar numerator table: window-summed dot products with the query.
        p = self.gn @ self.q
        ip = np.zeros((H + 1, W + 1))
        np.cumsum(p, axis=0, out=ip[1:, 1:])
        np.cumsum(ip[1:, 1:], axis=1, out=ip[1:, 1:])
        self.num_err = slack * float(np.abs(ip).max())

        hs = np.array([s[0] for s in self.shapes], dtype=np.int64)
        ws = np.array([s[1] for s in self.shapes], dtype=np.int64)
        nhs = (H - hs) // self.stride + 1
        nws = (W - ws) // self.stride + 1
        counts = nhs * nws
        offsets = np.zeros(len(self.shapes), dtype=np.int64)
        offsets[1:] = np.cumsum(counts)[:-1]
        flat = np.empty(int(counts.sum()), dtype=np.float64)
        _window_sum_norms(table, hs, ws, self.stride, offsets, flat)

        s = self.stride
        self.score_grids: list[np.ndarray] = []
        self.bound_grids: list[np.ndarray] = []
        for k, (h, w) in enumerate(self.shapes):
            num = (ip[h:, w:] - ip[h:, :-w] - ip[:-h, w:] + ip[:-h, :-w])[::s, ::s]
            cnt = (ic[h:, w:] - ic[h:, :-w] - ic[:-h, w:] + ic[:-h, :-w])[::s, ::s]
            norm = np.sqrt(flat[offsets[k] : offsets[k] + counts[k]].reshape(nhs[k], nws[k]))
            empty = cnt < 0.5
            if self.qnorm == 0.0:
                # cosine against a zero query is 0 by definition, exactly
                scores = np.zeros(norm.shape)
                bounds = np.zeros(norm.shape)
            else:
                # trusted only where the window norm clears its own
                # cancellation noise; everything else gets re-scored
                trusted = (norm > 0) & (norm >= 8.0 * self.sum_err)
                safe = np.where(trusted, norm, 1.0)
                scores = np.where(empty, 0.0,
                                  np.where(trusted, num / (safe * self.qnorm), 0.0))
                bounds = np.where(
                    empty, 0.0,
                    np.where(trusted,
                             np.maximum(2.0 * (self.num_err / self.qnorm
                                               + self.sum_err) / safe, 1e-12),
                             np.inf),
                )
            self.score_grids.append(scores)
            self.bound_grids.append(bounds)

    def direct_score(self, region: GridRegion) -> float:
        """Re-score one window directly (no integral table).

        The cosine is taken against the sum of the window's nonzero
        patches: zero patches cannot perturb the reduction, so windows
        that differ only by zero padding (mathematically tied, since
        cosine ignores the 1/(h*w) scale) score bit-identically and fall
        through to the deterministic tie order.
        """
        i, j, h, w = region.i, region.j, region.h, region.w
        rows = self.gn[i : i + h, j : j + w].reshape(h * w, -1)
        keep = self.nonzero[i : i + h, j : j + w].reshape(h * w)
        sel = rows[keep]
        if sel.shape[0] == 0:
            return 0.0
        total = sel.sum(axis=0)
        den = float(np.linalg.norm(total)) * self.qnorm
        if den == 0.0:
            return 0.0
        return float(np.dot(total, self.q) / den)

    def select(self, k: int, nms_iou: float) -> list[ScoredRegion]:
        """Greedy pick of up to k windows, suppressing overlap above nms_iou."""
        suppressed = [np.zeros(sg.shape, dtype=bool) for sg in self.score_grids]
        picked: list[ScoredRegion] = []
        s = self.stride
        while len(picked) < k:
            # Highest certain lower bound over the remaining windows.
            floor = -np.inf
            exhausted = True
            for sg, bg, sup in zip(self.score_grids, self.bound_grids, suppressed):
                avail = ~sup
                if avail.any():
                    exhausted = False
                    m = (sg - bg)[avail].max()
                    if m > floor:
                        floor = m
            if exhausted:
                break

            # Every window whose score interval reaches the floor might be
            # the true maximum; re-score those exactly and pick by the
            # direct score, ties broken by (h, w, i, j).
            winner: tuple | None = None
            for (h, w), sg, bg, sup in zip(self.shapes, self.score_grids,
                                           self.bound_grids, suppressed):
                cand = np.argwhere(~sup & (sg + bg >= floor))
                for a, b in cand:  # row-major: already in (i, j) tie order
                    region = GridRegion(int(a) * s, int(b) * s, h, w)
                    score = self.direct_score(region)
                    if winner is None or score > winner[0]:
                        winner = (score, region)
            assert winner is not None
            score, region = winner
            picked.append(ScoredRegion(region, score))

            # Suppress the pick itself plus everything overlapping too much.
            for (h, w), sup in zip(self.shapes, suppressed):
                nh, nw = sup.shape
                ii = np.arange(nh)[:, None] * s
                jj = np.arange(nw)[None, :] * s
                inter_h = np.minimum(ii + h, region.i + region.h) - np.maximum(ii, region.i)
                inter_w = np.minimum(jj + w, region.j + region.w) - np.maximum(jj, region.j)
                inter = np.clip(inter_h, 0, None) * np.clip(inter_w, 0, None)
                union = h * w + region.h * region.w - inter
                sup |= inter / union > nms_iou
                if (h, w) == (region.h, region.w):
                    sup[region.i // s, region.j // s] = True
        return picked


def attribute_best(
    grid: np.ndarray,
    query: np.ndarray,
    cfg: WindowConfig = WindowConfig(),
    *,
    normalize: bool = True,
) -> ScoredRegion:
    """Highest-cosine window over all windows admitted by cfg."""
    return _Scan(grid, query, cfg, normalize).select(k=1, nms_iou=1.0)[0]


def attribute_topk(
    grid: np.ndarray,
    query: np.ndarray,
    cfg: WindowConfig = WindowConfig(),
    k: int = 5,
    nms_iou: float = 0.3,
    *,
    normalize: bool = True,
) -> list[ScoredRegion]:
    """Up to k windows by greedy non-maximum suppression, best first."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if not 0.0 <= nms_iou <= 1.0:
        raise ContractError(f"nms_iou must be in [0, 1], got {nms_iou}")
    return _Scan(grid, query, cfg, normalize).select(k=k, nms_iou=nms_iou)


def grid_to_pixels(
    region: GridRegion, grid_h: int, grid_w: int, img_w: int, img_h: int
) -> PixelBox:
    """Map a patch window to image pixels (floor/ceil of the exact scale)."""
    if region.i + region.h > grid_h or region.j + region.w > grid_w:
        raise ContractError(f"region {region} outside {grid_h}x{grid_w} grid")
    if img_w < grid_w or img_h < grid_h:
        raise ContractError(
            f"image {img_w}x{img_h} smaller than grid {grid_w}x{grid_h}"
        )
    # Exact integer floor/ceil of j*img_w/grid_w etc.
    x1 = region.j * img_w // grid_w
    y1 = region.i * img_h // grid_h
    x2 = -((region.j + region.w) * img_w // -grid_w)
    y2 = -((region.i + region.h) * img_h // -grid_h)
    return PixelBox(max(x1, 0), max(y1, 0), min(x2, img_w), min(y2, img_h))
