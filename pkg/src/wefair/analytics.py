"""Welfare and revenue evaluation, fairness audits and guarantee checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_classifier, check_group, check_utility
from .concepts import (
    ConceptSpec,
    UtilityTable,
    conditional_rate,
    make_utility,
)
from .exceptions import UndefinedConditional
from .population import GROUPS, Population
from .solver import solve_unaware, solve_unconstrained, solve_we

TOL = 1e-9
EQUAL_WELFARE_TOL = 1e-12


def group_welfare(pop: Population, u: UtilityTable, c, a: int) -> float:
    """Expected loan utility in group ``a``: ``sum_x P(x|a) ubar(x,a) c(x,a)``."""
    a = check_group(a)
    u = check_utility(u, pop)
    c = check_classifier(c, pop)
    idx = pop.group(a)
    return float(np.dot(pop.cond_mass[idx], u.mean(pop)[idx] * c[idx]))


def welfare_pair(pop: Population, u: UtilityTable, c) -> tuple[float, float]:
    return tuple(group_welfare(pop, u, c, g) for g in GROUPS)


def revenue(pop: Population, c) -> float:
    c = check_classifier(c, pop)
    return float(np.dot(pop.mass * pop.r, c))


def approval_rate(pop: Population, c, a: int) -> float:
    c = check_classifier(c, pop)
    idx = pop.group(a)
    return float(np.dot(pop.cond_mass[idx], c[idx]))


@dataclass(frozen=True)
class AuditReport:
    revenue: float
    group_welfare: tuple[float, float]
    we_gap: float
    dp_gap: float
    eo_gap: float | None
    fp_gap: float | None

    def to_dict(self) -> dict:
        # undefined conditional gaps are left out rather than reported as 0
        doc = asdict(self)
        doc["group_welfare"] = list(self.group_welfare)
        return {k: v for k, v in doc.items() if v is not None}


def _rate_gap(pop, c, y):
    try:
        return abs(conditional_rate(pop, c, 0, y) - conditional_rate(pop, c, 1, y))
    except UndefinedConditional:
        return None


def audit(pop: Population, u: UtilityTable, c) -> AuditReport:
    c = check_classifier(c, pop)
    w = welfare_pair(pop, u, c)
    return AuditReport(
        revenue=revenue(pop, c),
        group_welfare=w,
        we_gap=abs(w[0] - w[1]),
        dp_gap=abs(approval_rate(pop, c, 0) - approval_rate(pop, c, 1)),
        eo_gap=_rate_gap(pop, c, 1),
        fp_gap=_rate_gap(pop, c, 0),
    )


def disadvantaged_group(pop: Population, u: UtilityTable) -> int | None:
    """Group with strictly lower welfare under the unconstrained optimum."""
    c, _ = solve_unconstrained(pop)
    w0, w1 = welfare_pair(pop, u, c)
    if abs(w0 - w1) <= EQUAL_WELFARE_TOL:
        return None
    return 0 if w0 < w1 else 1


@dataclass(frozen=True)
class TheoremCheck:
    disadvantaged: int | None
    welfare_before: tuple[float, float]
    welfare_after: tuple[float, float]
    welfare_ok: bool
    pointwise_ok: bool
    violating_cells: tuple[tuple[str, int], ...]

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["welfare_before"] = list(self.welfare_before)
        doc["welfare_after"] = list(self.welfare_after)
        doc["violating_cells"] = [list(k) for k in self.violating_cells]
        return doc


def check_theorem1(pop: Population, u: UtilityTable, tol: float = TOL, result=None) -> TheoremCheck:
    """Verify the disadvantaged group is weakly better off, in total and per cell.

    A failed check is reported, never raised: it would mean a solver defect.
    ``result`` may pass a precomputed :func:`solve_we` output.
    """
    c_unc, _ = solve_unconstrained(pop)
    res = result if result is not None else solve_we(pop, u)
    before = welfare_pair(pop, u, c_unc)
    after = welfare_pair(pop, u, res.classifier)
    d = disadvantaged_group(pop, u)
    if d is None:
        return TheoremCheck(None, before, after, True, True, ())
    welfare_ok = after[d] >= before[d] - tol
    cu, cw = c_unc.values, res.classifier.values
    bad = tuple(pop.keys[i] for i in pop.group(d) if cu[i] > cw[i] + tol)
    return TheoremCheck(d, before, after, welfare_ok, not bad, bad)


@dataclass(frozen=True)
class RobustnessReport:
    applicable: bool
    disadvantaged: int | None
    welfare_before: float | None
    welfare_after: float | None
    holds: bool | None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def check_robustness(pop: Population, u_true: UtilityTable, u_assumed: UtilityTable, tol: float = TOL) -> RobustnessReport:
    """Does fairness under an assumed utility still help the truly disadvantaged group?

    Only meaningful when both utilities name the same disadvantaged group;
    otherwise the report says the guarantee does not apply.
    """
    d_true = disadvantaged_group(pop, u_true)
    d_assumed = disadvantaged_group(pop, u_assumed)
    if d_true is None or d_true != d_assumed:
        return RobustnessReport(
            False, None, None, None, None,
            note=f"guarantee inapplicable: disadvantaged group is {d_true} under the true "
            f"utility and {d_assumed} under the assumed one",
        )
    c_unc, _ = solve_unconstrained(pop)
    res = solve_we(pop, u_assumed)
    before = group_welfare(pop, u_true, c_unc, d_true)
    after = group_welfare(pop, u_true, res.classifier, d_true)
    return RobustnessReport(True, d_true, before, after, after >= before - tol)


@dataclass(frozen=True)
class PolicyOutcome:
    revenue: float
    welfare: tuple[float, float]
    revenue_drop: float
    welfare_delta: tuple[float, float]


@dataclass(frozen=True)
class PriceOfFairness:
    unconstrained: PolicyOutcome
    fair: PolicyOutcome
    unaware: PolicyOutcome

    def to_dict(self) -> dict:
        return asdict(self)


def price_of_fairness(
    pop: Population, u: UtilityTable, spec: ConceptSpec | str, *, eo_unnormalized: bool = False
) -> PriceOfFairness:
    """Revenue lost and welfare shifted when moving off the unconstrained optimum.

    ``u`` measures welfare; ``spec`` is the fairness concept imposed. The
    unaware policy is included for comparison.
    """
    c_unc, rev_unc = solve_unconstrained(pop)
    w_unc = welfare_pair(pop, u, c_unc)

    def outcome(c, rev):
        w = welfare_pair(pop, u, c)
        return PolicyOutcome(rev, w, rev_unc - rev, (w[0] - w_unc[0], w[1] - w_unc[1]))

    res = solve_we(pop, make_utility(spec, pop, eo_unnormalized=eo_unnormalized))
    c_un, rev_un = solve_unaware(pop)
    return PriceOfFairness(
        unconstrained=outcome(c_unc, rev_unc),
        fair=outcome(res.classifier, res.revenue),
        unaware=outcome(c_un, rev_un),
    )
