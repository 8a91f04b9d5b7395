"""Borrower utility tables and the fairness concepts they encode.

A utility table stores ``u(x, a, y)``, the utility a borrower in cell
``(x, a)`` with outcome ``y`` gets from receiving a loan. Rejection is worth
zero. Equalizing expected utility across groups gives the welfare-equalizing
constraint; particular tables recover demographic parity and equal
opportunity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ._validation import check_classifier
from .exceptions import (
    InvalidConcept,
    NegativeUtility,
    NoGoodBorrowersInGroup,
    UndefinedConditional,
    UtilityDomainMismatch,
    ZeroClassifierNotWE,
)
from .population import GROUPS, Population

WE_TOL = 1e-9

DEMOGRAPHIC_PARITY = "demographic_parity"
EQUAL_OPPORTUNITY = "equal_opportunity"
EQUALIZED_ODDS_MEMBER = "equalized_odds_member"
HETEROGENEOUS_EO = "heterogeneous_eo"
CUSTOM = "custom"
KINDS = (DEMOGRAPHIC_PARITY, EQUAL_OPPORTUNITY, EQUALIZED_ODDS_MEMBER, HETEROGENEOUS_EO, CUSTOM)


def _table(keys, values) -> np.ndarray:
    v = np.array(values, dtype=float)
    if v.shape != (len(keys), 2):
        raise UtilityDomainMismatch(f"expected utility shape ({len(keys)}, 2), got {v.shape}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class UtilityTable:
    """Loan utilities; ``values[i, y]`` is ``u(x_i, a_i, y)``."""

    keys: tuple[tuple[str, int], ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple((str(x), int(a)) for x, a in self.keys))
        object.__setattr__(self, "values", _table(self.keys, self.values))
        if np.any(~np.isfinite(self.values)):
            raise NegativeUtility("utility table has non-finite entries")
        if np.any(self.values < 0):
            raise NegativeUtility("utility table has negative entries")

    @classmethod
    def from_records(cls, pop: Population, records) -> "UtilityTable":
        vals = np.full((len(pop), 2), np.nan)
        for rec in records:
            key = (str(rec["x"]), int(rec["a"]))
            if key not in pop._index:
                raise UtilityDomainMismatch(f"utility given for unknown cell {key}")
            y = int(rec["y"])
            if y not in (0, 1):
                raise UtilityDomainMismatch(f"utility outcome must be 0 or 1, got {y}")
            vals[pop.index(*key), y] = float(rec["value"])
        if np.any(np.isnan(vals)):
            raise UtilityDomainMismatch("utility table does not cover every (cell, y) pair")
        return cls(pop.keys, vals)

    def reorder(self, keys) -> "UtilityTable":
        pos = {k: i for i, k in enumerate(self.keys)}
        return UtilityTable(tuple(keys), self.values[[pos[k] for k in keys]])

    def mean(self, pop: Population) -> np.ndarray:
        """Mean utility per cell, ``u(x,a,1) p + u(x,a,0) (1 - p)``."""
        return self.values[:, 1] * pop.p + self.values[:, 0] * (1 - pop.p)

    def to_records(self) -> list[dict]:
        return [
            {"x": x, "a": a, "y": y, "value": float(self.values[i, y])}
            for i, (x, a) in enumerate(self.keys)
            for y in (0, 1)
        ]


@dataclass(frozen=True, eq=False)
class RawUtility:
    """Utilities before normalization: ``plus`` for a loan, ``minus`` for a rejection.

    Both arrays have shape ``(n_cells, 2)`` indexed by outcome ``y`` and may
    hold negative values.
    """

    keys: tuple[tuple[str, int], ...]
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "plus", _table(self.keys, self.plus))
        object.__setattr__(self, "minus", _table(self.keys, self.minus))

    def group_welfare(self, pop: Population, c, a: int) -> float:
        c = check_classifier(c, pop)
        p = pop.p
        up = self.plus[:, 1] * p + self.plus[:, 0] * (1 - p)
        um = self.minus[:, 1] * p + self.minus[:, 0] * (1 - p)
        idx = pop.group(a)
        return float(np.dot(pop.cond_mass[idx], up[idx] * c[idx] + um[idx] * (1 - c[idx])))


@dataclass(frozen=True)
class ConceptSpec:
    kind: str
    alpha: float | None = None
    beta: float | None = None
    m: Mapping[str, float] | None = None
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConcept(f"unknown concept kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == EQUALIZED_ODDS_MEMBER:
            if self.alpha is None or self.beta is None:
                raise InvalidConcept("equalized_odds_member needs alpha and beta")
            if not (self.alpha >= self.beta >= 0):
                raise InvalidConcept(f"need alpha >= beta >= 0, got alpha={self.alpha}, beta={self.beta}")
        elif self.kind == HETEROGENEOUS_EO:
            if not self.m:
                raise InvalidConcept("heterogeneous_eo needs a non-empty amount map m")
            if any(not float(v) > 0 for v in self.m.values()):
                raise InvalidConcept("heterogeneous_eo amounts must be positive")
        elif self.kind == CUSTOM and self.table is None:
            raise InvalidConcept("custom concept needs a utility table")

    @classmethod
    def from_dict(cls, doc) -> "ConceptSpec":
        if not isinstance(doc, Mapping) or "kind" not in doc:
            raise InvalidConcept("concept must be an object with a 'kind' field")
        kind = doc["kind"]
        try:
            if kind == EQUALIZED_ODDS_MEMBER:
                return cls(kind, alpha=float(doc["alpha"]), beta=float(doc["beta"]))
            if kind == HETEROGENEOUS_EO:
                return cls(kind, m={str(k): float(v) for k, v in doc["m"].items()})
            if kind == CUSTOM:
                return cls(kind, table=tuple(dict(r) for r in doc["u"]))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidConcept(f"malformed {kind} concept: {exc}") from None
        return cls(kind)

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == EQUALIZED_ODDS_MEMBER:
            doc.update(alpha=self.alpha, beta=self.beta)
        elif self.kind == HETEROGENEOUS_EO:
            doc["m"] = dict(self.m)
        elif self.kind == CUSTOM:
            doc["u"] = list(self.table)
        return doc


def load_concept(path) -> ConceptSpec:
    with open(path, encoding="utf-8") as fh:
        return ConceptSpec.from_dict(json.load(fh))


def _group_constant(pop: Population, per_group) -> np.ndarray:
    return np.asarray(per_group, dtype=float)[pop.a]


def make_utility(spec: ConceptSpec | str, pop: Population, *, eo_unnormalized: bool = False) -> UtilityTable:
    """Build the utility table realizing a fairness concept on ``pop``.

    Equal opportunity divides by the group base rate ``P(Y=1 | A=a)`` so that
    group welfare equals the good-borrower approval rate on any population.
    Pass ``eo_unnormalized=True`` for the plain ``u = 1{y=1}`` table, which
    matches equal opportunity only when base rates coincide. Heterogeneous EO
    is normalized the same way.
    """
    if isinstance(spec, str):
        spec = ConceptSpec(spec)
    n = len(pop)
    vals = np.zeros((n, 2))
    if spec.kind == DEMOGRAPHIC_PARITY:
        vals[:] = 1.0
    elif spec.kind == EQUAL_OPPORTUNITY:
        if eo_unnormalized:
            vals[:, 1] = 1.0
        else:
            rates = [pop.base_rate(g) for g in GROUPS]
            for g, rate in zip(GROUPS, rates):
                if not rate > 0:
                    raise NoGoodBorrowersInGroup(f"group {g} has no good borrowers; EO is undefined")
            vals[:, 1] = 1.0 / _group_constant(pop, rates)
    elif spec.kind == EQUALIZED_ODDS_MEMBER:
        vals[:, 1] = spec.alpha
        vals[:, 0] = spec.beta
    elif spec.kind == HETEROGENEOUS_EO:
        missing = sorted(set(pop.x) - set(spec.m))
        if missing:
            raise UtilityDomainMismatch(f"no amount given for labels {missing}")
        amount = np.array([float(spec.m[x]) for x in pop.x])
        if eo_unnormalized:
            vals[:, 1] = amount
        else:
            denom = []
            for g in GROUPS:
                idx = pop.group(g)
                d = float(np.dot(pop.cond_mass[idx], amount[idx] * pop.p[idx]))
                if not d > 0:
                    raise NoGoodBorrowersInGroup(f"group {g} has no good borrowers; EO is undefined")
                denom.append(d)
            vals[:, 1] = amount / _group_constant(pop, denom)
    else:
        return UtilityTable.from_records(pop, spec.table)
    return UtilityTable(pop.keys, vals)


def _group_means(pop: Population, cell_values: np.ndarray) -> np.ndarray:
    return np.array([np.dot(pop.cond_mass[pop.group(g)], cell_values[pop.group(g)]) for g in GROUPS])


def shift_to_zero_minus(raw: RawUtility, pop: Population, tol: float = WE_TOL) -> UtilityTable:
    """Normalize rejection utility to zero when the zero classifier is fair.

    If ``E[u_minus | A=0] == E[u_minus | A=1]`` then subtracting ``u_minus``
    from both outcomes leaves the set of welfare-equalizing classifiers
    unchanged.
    """
    if tuple(raw.keys) != pop.keys:
        raise UtilityDomainMismatch("raw utility cells differ from population cells")
    p = pop.p
    mean_minus = raw.minus[:, 1] * p + raw.minus[:, 0] * (1 - p)
    e0, e1 = _group_means(pop, mean_minus)
    if abs(e0 - e1) > tol:
        raise ZeroClassifierNotWE(
            f"E[u_minus | A=0] = {e0:.6g} differs from E[u_minus | A=1] = {e1:.6g}"
        )
    shifted = raw.plus - raw.minus
    if np.any(shifted < -1e-12):
        raise NegativeUtility("u_plus - u_minus is negative for some cell")
    return UtilityTable(pop.keys, np.maximum(shifted, 0.0))


def conditional_rate(pop: Population, c, a: int, y: int) -> float:
    """``E[c | Y=y, A=a]``; raises UndefinedConditional on a null event."""
    c = check_classifier(c, pop)
    idx = pop.group(a)
    py = pop.p[idx] if y == 1 else 1 - pop.p[idx]
    w = pop.cond_mass[idx] * py
    denom = w.sum()
    if not denom > 0:
        raise UndefinedConditional(f"P(Y={y}, A={a}) = 0")
    return float(np.dot(w, c[idx]) / denom)


def is_we_for_eo_family(c, pop: Population, tol: float = WE_TOL) -> tuple[bool, tuple[float, float]]:
    """Check welfare equality for every ``u = (alpha, beta)``, ``alpha >= beta >= 0``.

    That holds exactly when the approval rates conditional on ``Y=0`` and on
    ``Y=1`` both match across groups. Returns the verdict and the two gaps
    ``(gap_y0, gap_y1)``.
    """
    gaps = tuple(
        abs(conditional_rate(pop, c, 0, y) - conditional_rate(pop, c, 1, y)) for y in (0, 1)
    )
    return all(g <= tol for g in gaps), gaps
