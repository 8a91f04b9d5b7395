"""Brute-force optimizers over classifier grids, for certifying the exact solvers.

Classifier values are restricted to ``{0, 1/k, ..., 1}``. Each group's grid
is enumerated exhaustively; pairs of group classifiers whose welfares differ
by at most the slack are matched with a sorted window plus a sparse-table
range-maximum, which returns the same optimum as the full product
enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_group, check_utility
from .classifier import Classifier
from .concepts import UtilityTable
from .exceptions import InstanceTooLarge, WEFairError, WOutOfDomain
from .population import Population

MAX_CELLS = 8
MAX_GROUP_GRID = 1 << 22
MAX_TABLE_GRID = 1 << 20


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 50
    welfare_slack: float | None = None

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 1:
            raise WEFairError(f"grid resolution must be a positive integer, got {self.resolution}")
        if self.welfare_slack is not None and not self.welfare_slack >= 0:
            raise WEFairError("welfare slack must be nonnegative")

    def slack(self, cell_welfare_weights: np.ndarray) -> float:
        if self.welfare_slack is not None:
            return float(self.welfare_slack)
        if len(cell_welfare_weights) == 0:
            return 0.0
        return float(np.max(cell_welfare_weights)) / self.resolution


def _enumerate(ww: np.ndarray, rr: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Welfare and revenue of every grid classifier (first cell most significant)."""
    levels = np.arange(k + 1) / k
    W = np.zeros(1)
    R = np.zeros(1)
    for wi, ri in zip(ww, rr):
        W = (W[:, None] + wi * levels[None, :]).ravel()
        R = (R[:, None] + ri * levels[None, :]).ravel()
    return W, R


def _decode(code: int, n: int, k: int) -> np.ndarray:
    digits = []
    for _ in range(n):
        code, d = divmod(code, k + 1)
        digits.append(d / k)
    return np.array(digits[::-1])


def _sparse_argmax(values: np.ndarray) -> list[np.ndarray]:
    table = [np.arange(len(values))]
    span = 1
    while 2 * span <= len(values):
        prev = table[-1]
        left, right = prev[:-span], prev[span:]
        table.append(np.where(values[right] > values[left], right, left))
        span *= 2
    return table


def _range_argmax(table, values, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Argmax of ``values[lo:hi]`` for each query (requires ``hi > lo``)."""
    length = hi - lo
    j = np.floor(np.log2(length)).astype(int)
    out = np.empty(len(lo), dtype=int)
    for level in np.unique(j):
        sel = j == level
        left = table[level][lo[sel]]
        right = table[level][hi[sel] - (1 << level)]
        out[sel] = np.where(values[right] > values[left], right, left)
    return out


def _check_size(pop: Population, u: UtilityTable):
    if len(pop) > MAX_CELLS:
        raise InstanceTooLarge(f"{len(pop)} cells exceeds the enumeration bound of {MAX_CELLS}")
    return check_utility(u, pop)


def brute_force_we(pop: Population, u: UtilityTable, grid: GridSpec = GridSpec()) -> tuple[Classifier, float]:
    """Best grid classifier whose group welfares differ by at most the slack.

    The default slack is ``max_cell P(x|a) ubar(x,a) / k``.
    """
    u = _check_size(pop, u)
    k = int(grid.resolution)
    ubar = u.mean(pop)
    ww = pop.cond_mass * ubar
    slack = grid.slack(ww)
    groups = [pop.group(0), pop.group(1)]
    sizes = [(k + 1) ** len(g) for g in groups]
    if max(sizes) > MAX_GROUP_GRID or min(sizes) > MAX_TABLE_GRID:
        raise InstanceTooLarge(f"grid sizes {sizes} exceed enumeration limits")
    gain = pop.mass * pop.r
    W0, R0 = _enumerate(ww[groups[0]], gain[groups[0]], k)
    W1, R1 = _enumerate(ww[groups[1]], gain[groups[1]], k)

    # index the smaller grid, query with the larger
    swap = len(W0) > len(W1)
    (Wq, Rq), (Wt, Rt) = ((W1, R1), (W0, R0)) if swap else ((W0, R0), (W1, R1))
    order = np.argsort(Wt, kind="stable")
    Wt_s, Rt_s = Wt[order], Rt[order]
    eps = 1e-14 * max(1.0, float(ww.sum()))
    lo = np.searchsorted(Wt_s, Wq - slack - eps, side="left")
    hi = np.searchsorted(Wt_s, Wq + slack + eps, side="right")
    ok = hi > lo
    if not ok.any():
        raise WEFairError("no grid classifier meets the welfare slack")
    table = _sparse_argmax(Rt_s)
    qi = np.flatnonzero(ok)
    ti = _range_argmax(table, Rt_s, lo[qi], hi[qi])
    totals = Rq[qi] + Rt_s[ti]
    best = int(np.argmax(totals))
    q_code, t_code = int(qi[best]), int(order[ti[best]])
    codes = (t_code, q_code) if swap else (q_code, t_code)

    c = np.zeros(len(pop))
    for g, code in zip(groups, codes):
        c[g] = _decode(code, len(g), k)
    return Classifier(pop.keys, c), float(np.dot(gain, c))


def brute_force_curve_point(
    pop: Population, u: UtilityTable, a: int, w: float, grid: GridSpec = GridSpec()
) -> float:
    """Best conditional revenue of group ``a`` over grid classifiers with welfare near ``w``."""
    a = check_group(a)
    u = check_utility(u, pop)
    idx = pop.group(a)
    if len(idx) > MAX_CELLS:
        raise InstanceTooLarge(f"group {a} has {len(idx)} cells; the bound is {MAX_CELLS}")
    k = int(grid.resolution)
    if (k + 1) ** len(idx) > MAX_GROUP_GRID:
        raise InstanceTooLarge("grid too large to enumerate")
    ww = (pop.cond_mass * u.mean(pop))[idx]
    w_max = float(ww.sum())
    eps = 1e-12 * max(1.0, w_max)
    if not -eps <= w <= w_max + eps:
        raise WOutOfDomain(f"welfare level {w} outside [0, {w_max}]")
    slack = grid.slack(ww)
    W, R = _enumerate(ww, (pop.cond_mass * pop.r)[idx], k)
    feasible = np.abs(W - w) <= slack + eps
    return float(R[feasible].max())
