"""Change extraction from posterior draws: f/g series, KDE cutoff, AO/LS separation, DP pruning."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .model import PosteriorDraws

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class GSeries:
    values: np.ndarray
    d: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("g series must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("g series contains non-finite values")

    def __len__(self):
        return self.values.shape[0]

    def masked(self, indices: Sequence[int]) -> "GSeries":
        """Copy with the given 1-based indices set to zero."""
        vals = self.values.copy()
        for n in indices:
            vals[n - 1] = 0.0
        return GSeries(vals, self.d)


def extract_f(V: np.ndarray) -> np.ndarray:
    """Signed largest-magnitude entry of each column; ties go to the smallest row index."""
    V = np.asarray(V, dtype=float)
    rows = np.argmax(np.abs(V), axis=0)
    return V[rows, np.arange(V.shape[1])]


def posterior_g(draws: PosteriorDraws, d: int) -> GSeries:
    if len(draws) == 0:
        raise ValueError("posterior_g needs at least one draw")
    V = draws.V(d)
    rows = np.argmax(np.abs(V), axis=1)
    f = np.take_along_axis(V, rows[:, None, :], axis=1)[:, 0, :]
    return GSeries(np.median(f, axis=0), d)


def kde_bandwidth(x: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), floored."""
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(np.std(x, ddof=1), (q75 - q25) / 1.34)
    bw = 0.9 * spread * len(x) ** (-0.2)
    return max(float(bw), config.KDE_BANDWIDTH_FLOOR)


def rectangular_density(x: np.ndarray, grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """Density of a uniform kernel with standard deviation `bandwidth` evaluated on `grid`."""
    half = np.sqrt(3.0) * bandwidth
    xs = np.sort(x)
    upper = np.searchsorted(xs, grid + half, side="right")
    lower = np.searchsorted(xs, grid - half, side="left")
    return (upper - lower) / (2.0 * half * len(xs))


def _separated(x: np.ndarray, cut: float, separation: float) -> bool:
    above = x[x > cut]
    below = x[x <= cut]
    if above.size == 0 or below.size == 0:
        return False
    return float(above.min()) >= separation * float(np.median(below))


def kde_cutoff(g: GSeries, delta: float = config.DEFAULT_DELTA,
               grid_size: int = config.KDE_GRID_SIZE,
               separation: float = config.KDE_SEPARATION) -> float:
    """
    First interior local minimum of the density of |g| lying below delta.

    A local minimum is strictly below its left neighbour and not above its
    right one. It only counts as a cutoff when the values above it are at
    least `separation` times the median of the values below it; zero-density
    gaps inside a noise-level bulk do not qualify. separation=1 accepts every
    minimum. Returns +inf when no minimum qualifies.
    """
    if len(g) < 2:
        raise ValueError("kde_cutoff needs at least two values")
    x = np.abs(g.values)
    top = float(x.max())
    if top <= 0.0:
        return float("inf")
    grid = np.linspace(0.0, top, grid_size)
    dens = rectangular_density(x, grid, kde_bandwidth(x))
    interior = np.arange(1, grid_size - 1)
    is_min = (dens[interior] < dens[interior - 1]) & (dens[interior] <= dens[interior + 1])
    hits = interior[is_min & (dens[interior] < delta)]
    for i in hits:
        if _separated(x, float(grid[i]), separation):
            return float(grid[i])
    if hits.size:
        logger.debug("no density minimum separates |g| from its bulk (%d candidates)", hits.size)
    return float("inf")


def detect_changes(g: GSeries, cutoff: float) -> List[int]:
    return [int(i) + 1 for i in np.flatnonzero(np.abs(g.values) > cutoff)]


def separate_ao_ls(g: GSeries, cpt: Sequence[int]) -> Tuple[List[int], List[int]]:
    """
    Split ordered change points into additive outliers and level shifts.

    Two consecutive indices with opposite-signed g form one AO at the first
    index; everything else is a level shift.
    """
    cpt = [int(n) for n in cpt]
    if any(b <= a for a, b in zip(cpt, cpt[1:])):
        raise ValueError(f"change points must be strictly increasing: {cpt}")
    cpt0: List[int] = []
    cpt1: List[int] = []
    i = 0
    while i < len(cpt):
        if i + 1 < len(cpt):
            adjacent = cpt[i + 1] - cpt[i] == 1
            opposite = g.values[cpt[i] - 1] * g.values[cpt[i + 1] - 1] < 0
            if adjacent and opposite:
                cpt0.append(cpt[i])
                i += 2
                continue
        cpt1.append(cpt[i])
        i += 1
    return cpt0, cpt1


class _SegmentCost:
    """Within-segment squared error of S rows over columns [a, b) via prefix sums."""

    def __init__(self, S: np.ndarray):
        S = np.asarray(S, dtype=float)
        zeros = np.zeros((S.shape[0], 1))
        self.s1 = np.hstack([zeros, np.cumsum(S, axis=1)])
        self.s2 = np.hstack([zeros, np.cumsum(S * S, axis=1)])

    def __call__(self, a: int, b: int) -> float:
        if b <= a:
            return 0.0
        tot = self.s1[:, b] - self.s1[:, a]
        sq = self.s2[:, b] - self.s2[:, a]
        return float(np.sum(sq - tot * tot / (b - a)))


def segmentation_error(S_hat: np.ndarray, points: Sequence[int]) -> float:
    """Total within-segment squared error when segments start at the given 1-based points."""
    N = S_hat.shape[1]
    cost = _SegmentCost(S_hat)
    bounds = [0] + [p - 1 for p in sorted(points)] + [N]
    return sum(cost(a, b) for a, b in zip(bounds, bounds[1:]))


def dp_error_curve(S_hat: np.ndarray, candidates: Sequence[int]) -> Tuple[np.ndarray, List[List[int]]]:
    """
    For m = 0..len(candidates) the minimal segmentation error using m of the
    candidates, and the subset achieving it.
    """
    N = S_hat.shape[1]
    cand = sorted(int(c) for c in candidates)
    L = len(cand)
    cost = _SegmentCost(S_hat)
    # boundary j: 0 -> start, 1..L -> candidate column offsets, L+1 -> end
    bounds = [0] + [c - 1 for c in cand] + [N]
    err = np.full((L + 1, L + 2), np.inf)
    back = np.zeros((L + 1, L + 2), dtype=int)
    for j in range(1, L + 2):
        err[0, j] = cost(bounds[0], bounds[j])
    for m in range(1, L + 1):
        for j in range(m + 1, L + 2):
            best, arg = np.inf, -1
            for i in range(m, j):
                val = err[m - 1, i] + cost(bounds[i], bounds[j])
                if val < best:
                    best, arg = val, i
            err[m, j] = best
            back[m, j] = arg

    curve = err[:, L + 1].copy()
    subsets: List[List[int]] = []
    for m in range(L + 1):
        chosen, j = [], L + 1
        for k in range(m, 0, -1):
            j = back[k, j]
            chosen.append(cand[j - 1])
        subsets.append(sorted(chosen))
    return curve, subsets


def elbow(curve: np.ndarray) -> int:
    """Index of the largest second difference, padding the curve flat at both ends."""
    padded = np.concatenate([[curve[0]], curve, [curve[-1]]])
    second = padded[:-2] - 2.0 * padded[1:-1] + padded[2:]
    if second.max() <= 1e-12 * max(1.0, abs(float(curve[0]))):
        return 0
    return int(np.argmax(second))


def prune_ls_dp(S_hat: np.ndarray, cpt1: Sequence[int], max_keep: Optional[int] = None) -> List[int]:
    if max_keep is not None and max_keep < 0:
        raise ValueError(f"max_keep must be nonnegative, got {max_keep}")
    if len(cpt1) == 0:
        return []
    curve, subsets = dp_error_curve(S_hat, cpt1)
    m = min(max_keep, len(cpt1)) if max_keep is not None else elbow(curve)
    logger.info("pruning level shifts: kept %d of %d candidates", m, len(cpt1))
    return subsets[m]

