"""Revenue-optimal classifiers: unconstrained, unaware and welfare-equalizing.

The welfare-equalizing problem is a linear program with one equality
constraint and box constraints. :func:`solve_we` solves it exactly in two
stages: for each group it builds the concave piecewise-linear curve of best
revenue attainable at each welfare level (a parametric fractional knapsack),
then it maximizes the mass-weighted sum of the two curves over the common
welfare level. :func:`solve_we_bisection` is an independent Lagrangian
implementation kept for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_classifier, check_group, check_utility
from .classifier import Classifier
from .concepts import UtilityTable
from .exceptions import BracketNotFound
from .population import GROUPS, Population

EQ_TOL = 1e-9
MAX_DOUBLINGS = 128


def _revenue(pop: Population, c: np.ndarray) -> float:
    return float(np.dot(pop.mass * pop.r, c))


def _welfare(pop: Population, ubar: np.ndarray, c: np.ndarray) -> tuple[float, float]:
    wu = pop.cond_mass * ubar * c
    return tuple(float(wu[pop.a == g].sum()) for g in GROUPS)


def solve_unconstrained(pop: Population) -> tuple[Classifier, float]:
    """Approve exactly the cells with ``p > t``; knife-edge cells are rejected."""
    c = (pop.p > pop.t).astype(float)
    return Classifier(pop.keys, c), _revenue(pop, c)


def pooled_repayment(pop: Population) -> dict[str, float]:
    """Repayment probability per label when the group is ignored.

    Labels whose cells all have zero mass fall back to the plain mean of
    their cells' ``p``.
    """
    pooled = {}
    for x in sorted(set(pop.x)):
        idx = [i for i, xi in enumerate(pop.x) if xi == x]
        m = pop.mass[idx]
        if m.sum() > 0:
            pooled[x] = float(np.dot(m, pop.p[idx]) / m.sum())
        else:
            pooled[x] = float(pop.p[idx].mean())
    return pooled


def solve_unaware(pop: Population) -> tuple[Classifier, float]:
    """Best classifier forced to treat both groups with the same label alike."""
    pbar = pooled_repayment(pop)
    c = np.array([1.0 if pbar[x] > t else 0.0 for x, t in zip(pop.x, pop.t)])
    return Classifier(pop.keys, c), _revenue(pop, c)


@dataclass(frozen=True, eq=False)
class ConcaveCurve:
    """Best conditional revenue of one group as a function of its welfare.

    ``w`` and ``R`` are the breakpoints; ``slopes[k]`` is the revenue-per-welfare
    ratio of the cell consumed on segment ``k`` (population index
    ``segment_cells[k]``). Slopes are sorted, so concavity holds exactly.
    """

    group: int
    w: np.ndarray
    R: np.ndarray
    slopes: np.ndarray
    segment_cells: tuple[int, ...]
    baseline: float
    baseline_cells: tuple[int, ...]

    @property
    def w_max(self) -> float:
        return float(self.w[-1])

    @property
    def is_degenerate(self) -> bool:
        return len(self.w) == 1

    def _eps(self) -> float:
        return 1e-12 * max(1.0, self.w_max)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        out = np.interp(w, self.w, self.R)
        eps = self._eps()
        return np.where((w < -eps) | (w > self.w_max + eps), -np.inf, out)

    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.w.tolist(), self.R.tolist()))

    def supergradient(self, w: float) -> tuple[float, float]:
        """Interval ``[lo, hi]`` of supergradients at ``w`` (ends may be infinite)."""
        if self.is_degenerate:
            return (-math.inf, math.inf)
        eps = self._eps()
        if w <= self.w[0] + eps:
            return (float(self.slopes[0]), math.inf)
        if w >= self.w[-1] - eps:
            return (-math.inf, float(self.slopes[-1]))
        k = int(np.searchsorted(self.w, w))
        if abs(self.w[k] - w) <= eps:
            return (float(self.slopes[k]), float(self.slopes[k - 1]))
        if k > 0 and abs(self.w[k - 1] - w) <= eps:
            return (float(self.slopes[k - 1]), float(self.slopes[k - 2]))
        s = float(self.slopes[k - 1])
        return (s, s)

    def multiplier(self, w: float) -> float:
        """The supergradient element closest to zero."""
        lo, hi = self.supergradient(w)
        return float(min(max(0.0, lo), hi))

    def fill(self, w: float) -> dict[int, float]:
        """Greedy classifier values (by population index) reaching welfare ``w``.

        At most one cell ends up fractional.
        """
        vals = {i: 1.0 for i in self.baseline_cells}
        eps = self._eps()
        for k, i in enumerate(self.segment_cells):
            lo, hi = self.w[k], self.w[k + 1]
            if hi <= w + eps:
                vals[i] = 1.0
            else:
                if w > lo:
                    vals[i] = float(min(1.0, (w - lo) / (hi - lo)))
                break
        return vals


def welfare_curve(pop: Population, u: UtilityTable, a: int) -> ConcaveCurve:
    """Exact concave envelope ``R_a*(w)`` for group ``a``.

    Zero-utility cells don't move welfare and are approved iff profitable
    (the baseline). The remaining cells enter in decreasing order of
    revenue per unit of welfare, ties broken by label.
    """
    a = check_group(a)
    u = check_utility(u, pop)
    ubar = u.mean(pop)
    idx = pop.group(a)
    q = pop.cond_mass
    base = [i for i in idx if ubar[i] == 0 and pop.r[i] > 0]
    baseline = float(sum(q[i] * pop.r[i] for i in base))
    sweep = [i for i in idx if q[i] * ubar[i] > 0]
    sweep.sort(key=lambda i: (-pop.r[i] / ubar[i], pop.x[i]))
    dw = np.array([q[i] * ubar[i] for i in sweep])
    dr = np.array([q[i] * pop.r[i] for i in sweep])
    w = np.concatenate([[0.0], np.cumsum(dw)])
    R = baseline + np.concatenate([[0.0], np.cumsum(dr)])
    slopes = np.array([pop.r[i] / ubar[i] for i in sweep])
    for arr in (w, R, slopes):
        arr.setflags(write=False)
    return ConcaveCurve(a, w, R, slopes, tuple(int(i) for i in sweep), baseline, tuple(int(i) for i in base))


def objective_curve(pop: Population, curves) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints of ``P(A=0) R_0*(w) + P(A=1) R_1*(w)`` on the common domain."""
    w_hi = min(c.w_max for c in curves)
    pts = np.unique(np.concatenate([c.w[c.w <= w_hi] for c in curves] + [[w_hi]]))
    F = sum(pop.group_mass[c.group] * c(pts) for c in curves)
    return pts, F


@dataclass(frozen=True, eq=False)
class WESolveResult:
    classifier: Classifier
    revenue: float
    w_star: float
    welfare: tuple[float, float]
    lambdas: tuple[float, float]
    tie_cells: tuple[tuple[str, int, float], ...]
    algorithm: str
    mu: float | None = None
    curves: tuple[ConcaveCurve, ConcaveCurve] | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "revenue": self.revenue,
            "w_star": self.w_star,
            "welfare": list(self.welfare),
            "lambda": list(self.lambdas),
            "classifier": self.classifier.to_records(),
            "tie_cells": [{"x": x, "a": a, "tau": tau} for x, a, tau in self.tie_cells],
            "algorithm": self.algorithm,
        }


def _tie_cells(pop, ubar, lambdas, c, tol=1e-12):
    lam = np.asarray(lambdas)[pop.a]
    scale = np.maximum(1.0, np.maximum(np.abs(pop.r), np.abs(lam * ubar)))
    ties = np.abs(pop.r - lam * ubar) <= tol * scale
    return tuple((pop.x[i], int(pop.a[i]), float(c[i])) for i in np.flatnonzero(ties))


def solve_we(pop: Population, u: UtilityTable) -> WESolveResult:
    """Revenue-optimal welfare-equalizing classifier via the two-stage curve method.

    Among welfare levels that maximize total revenue the largest is chosen,
    which gives borrowers the most welfare at no cost to the lender.
    """
    u = check_utility(u, pop)
    ubar = u.mean(pop)
    curves = (welfare_curve(pop, u, 0), welfare_curve(pop, u, 1))
    pts, F = objective_curve(pop, curves)
    L = float(np.dot(pop.mass, np.abs(pop.r)))
    best = F.max()
    w_star = float(pts[F >= best - 1e-12 * max(1.0, L)].max())

    c = np.zeros(len(pop))
    lambdas = tuple(cv.multiplier(w_star) for cv in curves)
    for cv, lam in zip(curves, lambdas):
        for i, v in cv.fill(w_star).items():
            c[i] = v
        # zero-mass cells never enter the sweep; place them by the threshold rule
        for i in pop.group(cv.group):
            if pop.mass[i] == 0 and ubar[i] > 0:
                c[i] = 1.0 if pop.r[i] > lam * ubar[i] else 0.0
    clf = Classifier(pop.keys, c)
    return WESolveResult(
        classifier=clf,
        revenue=_revenue(pop, c),
        w_star=w_star,
        welfare=_welfare(pop, ubar, c),
        lambdas=lambdas,
        tie_cells=_tie_cells(pop, ubar, lambdas, c),
        algorithm="curve",
        curves=curves,
    )


def solve_we_bisection(pop: Population, u: UtilityTable, tol: float = 1e-12) -> WESolveResult:
    """Welfare-equalizing optimum by bisection on the constraint multiplier.

    For multiplier ``mu`` each cell is approved iff
    ``mass * r - mu * s > 0`` where ``s`` is the cell's signed contribution to
    the welfare gap ``W(0) - W(1)``. The gap is nonincreasing in ``mu``;
    once the sign change is isolated, the knife-edge cells of the lagging
    group receive a common fraction that closes the gap.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u = check_utility(u, pop)
    ubar = u.mean(pop)
    gain = pop.mass * pop.r
    s = np.where(pop.a == 0, 1.0, -1.0) * pop.cond_mass * ubar

    def classify(mu):
        return (gain - mu * s > 0).astype(float)

    def gap(mu):
        return float(np.dot(s, classify(mu)))

    g0 = gap(0.0)
    if g0 == 0:
        lo = hi = 0.0
    else:
        sign = 1.0 if g0 > 0 else -1.0
        near, far = 0.0, sign
        for _ in range(MAX_DOUBLINGS):
            if sign * gap(far) <= 0:
                break
            near, far = far, 2 * far
        else:
            raise BracketNotFound(
                f"welfare gap keeps sign {sign:+.0f} up to mu = {far:g}; use solve_we instead"
            )
        lo, hi = sorted((near, far))
        while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            gm = gap(mid)
            if gm > 0:
                lo = mid
            elif gm < 0:
                hi = mid
            else:
                lo = hi = mid
        if gap(lo) == 0:
            hi = lo
        elif gap(hi) == 0:
            lo = hi

    active = s != 0
    ties = np.zeros(len(pop), dtype=bool)
    if lo == hi:
        mu = lo
    else:
        bp = np.full(len(pop), np.nan)
        bp[active] = gain[active] / s[active]
        slack = tol * max(1.0, abs(lo), abs(hi))
        ties = active & (bp >= lo - slack) & (bp <= hi + slack)
        if not ties.any():
            mid = 0.5 * (lo + hi)
            j = int(np.nanargmin(np.abs(bp - mid)))
            ties[j] = True
        mu = float(np.mean(bp[ties]))

    c = classify(mu)
    c[ties] = 0.0
    A = float(np.dot(s, c))
    if A != 0 and ties.any():
        group = 0 if A < 0 else 1
        sel = ties & (pop.a == group)
        delta = float(np.abs(s[sel]).sum())
        if delta > 0:
            c[sel] = min(1.0, abs(A) / delta)

    P = pop.group_mass
    lambdas = (float(mu / P[0]), float(-mu / P[1]))
    welfare = _welfare(pop, ubar, c)
    return WESolveResult(
        classifier=Classifier(pop.keys, c),
        revenue=_revenue(pop, c),
        w_star=0.5 * (welfare[0] + welfare[1]),
        welfare=welfare,
        lambdas=lambdas,
        tie_cells=tuple((pop.x[i], int(pop.a[i]), float(c[i])) for i in np.flatnonzero(ties)),
        algorithm="bisection",
        mu=float(mu),
    )


def rescale_to_exact_equality(c, pop: Population, u: UtilityTable) -> Classifier:
    """Scale down the higher-welfare group so both welfares match exactly."""
    u = check_utility(u, pop)
    vals = np.array(check_classifier(c, pop), dtype=float)
    w0, w1 = _welfare(pop, u.mean(pop), vals)
    if w0 == w1 or max(w0, w1) == 0:
        return Classifier(pop.keys, vals)
    hi_group = 1 if w0 < w1 else 0
    factor = min(w0, w1) / max(w0, w1)
    vals[pop.a == hi_group] *= factor
    return Classifier(pop.keys, vals)
