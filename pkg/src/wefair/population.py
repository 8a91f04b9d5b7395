"""Population data model, empirical construction and numeric discretization.

A population is a finite joint distribution over cells ``(x, a)`` where ``x``
is an opaque label for the non-protected attributes and ``a`` in ``{0, 1}``
is the protected group. Each cell carries its probability mass, the
repayment probability ``p``, and the revenue/loss coefficients of a loan.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    ConstantFeatureWithQuantiles,
    DuplicateCell,
    EmptyGroup,
    EmptyInput,
    InconsistentAlphaAcrossGroups,
    MassNotNormalized,
    MissingAlphaEntry,
    NegativeMass,
    NonPositiveAlpha,
    ProbabilityOutOfRange,
    WEFairError,
    ZeroBins,
)

MASS_TOL = 1e-12

GROUPS = (0, 1)


@dataclass(frozen=True)
class Cell:
    x: str
    a: int
    mass: float
    p: float
    alpha_plus: float
    alpha_minus: float

    @property
    def key(self) -> tuple[str, int]:
        return (self.x, self.a)


@dataclass(frozen=True)
class SampleRow:
    x: str
    a: int
    y: int
    weight: float = 1.0


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Population:
    """Validated population. Build it with :func:`validate_population`.

    Cells are ordered by ``(a, x)``; every per-cell array below follows that
    order.
    """

    cells: tuple[Cell, ...]
    keys: tuple[tuple[str, int], ...] = field(init=False)
    x: tuple[str, ...] = field(init=False)
    a: np.ndarray = field(init=False)
    mass: np.ndarray = field(init=False)
    p: np.ndarray = field(init=False)
    alpha_plus: np.ndarray = field(init=False)
    alpha_minus: np.ndarray = field(init=False)
    t: np.ndarray = field(init=False)
    r: np.ndarray = field(init=False)
    group_mass: np.ndarray = field(init=False)
    cond_mass: np.ndarray = field(init=False)

    def __post_init__(self):
        cells = self.cells
        set_ = lambda name, value: object.__setattr__(self, name, value)
        set_("keys", tuple(c.key for c in cells))
        set_("x", tuple(c.x for c in cells))
        set_("a", _readonly([c.a for c in cells], dtype=int))
        set_("mass", _readonly([c.mass for c in cells]))
        set_("p", _readonly([c.p for c in cells]))
        ap = np.array([c.alpha_plus for c in cells], dtype=float)
        am = np.array([c.alpha_minus for c in cells], dtype=float)
        set_("alpha_plus", _readonly(ap))
        set_("alpha_minus", _readonly(am))
        t = am / (ap + am)
        set_("t", _readonly(t))
        set_("r", _readonly((ap + am) * (self.p - t)))
        gm = np.array([self.mass[self.a == g].sum() for g in GROUPS])
        set_("group_mass", _readonly(gm))
        set_("cond_mass", _readonly(self.mass / gm[self.a]))
        set_("_index", {k: i for i, k in enumerate(self.keys)})

    def __len__(self) -> int:
        return len(self.cells)

    def __repr__(self) -> str:
        return f"Population(n_cells={len(self)}, group_mass={self.group_mass.tolist()})"

    def index(self, x: str, a: int) -> int:
        return self._index[(x, a)]

    def group(self, a: int) -> np.ndarray:
        """Indices of the cells belonging to group ``a``."""
        return np.flatnonzero(self.a == a)

    def base_rate(self, a: int) -> float:
        """P(Y=1 | A=a)."""
        idx = self.group(a)
        return float(np.dot(self.cond_mass[idx], self.p[idx]))

    def to_dict(self) -> dict:
        return {
            "cells": [
                {
                    "x": c.x,
                    "a": c.a,
                    "mass": c.mass,
                    "p": c.p,
                    "alpha_plus": c.alpha_plus,
                    "alpha_minus": c.alpha_minus,
                }
                for c in self.cells
            ]
        }


def _as_cell(raw) -> Cell:
    if isinstance(raw, Cell):
        return raw
    if isinstance(raw, Mapping):
        try:
            return Cell(
                x=raw["x"],
                a=raw["a"],
                mass=raw["mass"],
                p=raw["p"],
                alpha_plus=raw["alpha_plus"],
                alpha_minus=raw["alpha_minus"],
            )
        except KeyError as exc:
            raise WEFairError(f"cell is missing field {exc.args[0]!r}") from None
    return Cell(*raw)


def validate_population(raw_cells: Iterable) -> Population:
    """Check every population invariant and return an immutable Population.

    Masses whose total is within ``1e-12`` of one are renormalized; anything
    further off is rejected rather than silently rescaled.
    """
    cells = [_as_cell(c) for c in raw_cells]
    if not cells:
        raise EmptyInput("population has no cells")

    seen = set()
    alphas: dict[str, tuple[float, float]] = {}
    clean = []
    for c in cells:
        x = c.x
        if not isinstance(x, str) or not x:
            raise WEFairError(f"cell label must be a non-empty string, got {x!r}")
        try:
            a = int(c.a)
        except (TypeError, ValueError):
            raise WEFairError(f"group must be 0 or 1, got {c.a!r}") from None
        if a not in GROUPS or a != c.a:
            raise WEFairError(f"group must be 0 or 1, got {c.a!r}")
        mass, p = float(c.mass), float(c.p)
        ap, am = float(c.alpha_plus), float(c.alpha_minus)
        if not mass >= 0 or not math.isfinite(mass):
            raise NegativeMass(f"cell ({x!r}, {a}) has mass {mass}")
        if not 0.0 <= p <= 1.0:
            raise ProbabilityOutOfRange(f"cell ({x!r}, {a}) has p = {p}")
        if not (ap > 0 and am > 0) or not math.isfinite(ap + am):
            raise NonPositiveAlpha(
                f"cell ({x!r}, {a}) has alpha_plus={ap}, alpha_minus={am}"
            )
        if (x, a) in seen:
            raise DuplicateCell(f"cell ({x!r}, {a}) appears twice")
        seen.add((x, a))
        if x in alphas:
            ap0, am0 = alphas[x]
            if not (math.isclose(ap, ap0, rel_tol=1e-12) and math.isclose(am, am0, rel_tol=1e-12)):
                raise InconsistentAlphaAcrossGroups(
                    f"label {x!r} has alphas {(ap0, am0)} and {(ap, am)} in different groups"
                )
        else:
            alphas[x] = (ap, am)
        clean.append(Cell(x, a, mass, p, ap, am))

    total = math.fsum(c.mass for c in clean)
    if abs(total - 1.0) > MASS_TOL:
        raise MassNotNormalized(f"cell masses sum to {total!r}, expected 1")
    if total != 1.0:
        clean = [Cell(c.x, c.a, c.mass / total, c.p, c.alpha_plus, c.alpha_minus) for c in clean]

    for g in GROUPS:
        if not math.fsum(c.mass for c in clean if c.a == g) > 0:
            raise EmptyGroup(f"group {g} has zero probability mass")

    clean.sort(key=lambda c: (c.a, c.x))
    return Population(tuple(clean))


def _as_sample(raw) -> SampleRow:
    if isinstance(raw, SampleRow):
        return raw
    if isinstance(raw, Mapping):
        return SampleRow(raw["x"], raw["a"], raw["y"], raw.get("weight", 1.0))
    return SampleRow(*raw)


def from_samples(
    rows: Iterable, alpha_table: Mapping[str, Sequence[float]]
) -> Population:
    """Estimate a population from weighted labeled rows.

    ``alpha_table`` maps each label to ``(alpha_plus, alpha_minus)``. Rows
    with zero weight carry no information and are dropped.
    """
    mass: dict[tuple[str, int], float] = {}
    good: dict[tuple[str, int], float] = {}
    for raw in rows:
        row = _as_sample(raw)
        w = float(row.weight)
        if not w >= 0:
            raise NegativeMass(f"row {row} has negative weight")
        if row.y not in (0, 1):
            raise ProbabilityOutOfRange(f"row {row} has outcome outside {{0, 1}}")
        if row.a not in GROUPS:
            raise WEFairError(f"row {row} has group outside {{0, 1}}")
        if w == 0:
            continue
        key = (str(row.x), int(row.a))
        mass[key] = mass.get(key, 0.0) + w
        good[key] = good.get(key, 0.0) + w * row.y

    total = math.fsum(mass.values())
    if not total > 0:
        raise EmptyInput("rows carry no positive weight")

    cells = []
    for (x, a), w in mass.items():
        if x not in alpha_table:
            raise MissingAlphaEntry(f"no alpha entry for label {x!r}")
        ap, am = alpha_table[x]
        cells.append(Cell(x, a, w / total, good[(x, a)] / w, ap, am))

    for g in GROUPS:
        if not any(c.a == g for c in cells):
            raise EmptyGroup(f"no rows observed for group {g}")
    return validate_population(cells)


def _weighted_edges(values: np.ndarray, weights: np.ndarray, n_bins: int) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    v, cw = values[order], np.cumsum(weights[order])
    total = cw[-1]
    levels = np.arange(1, n_bins) / n_bins * total
    # guard against cumulative-sum roundoff sitting just below a level
    pos = np.searchsorted(cw, levels * (1 - 1e-12), side="left")
    return v[np.minimum(pos, len(v) - 1)]


def bin_numeric(
    rows: Sequence,
    scheme: str = "equal_width",
    bins_per_feature: int | Sequence[int] = 4,
    on_constant: str = "raise",
) -> list[SampleRow]:
    """Map numeric feature vectors to composite bin labels.

    Each row is ``(features, a, y, weight)``; ``features`` may be a scalar.
    Labels look like ``"b2"`` for one feature and ``"b2-0-1"`` for several.

    ``quantile`` uses weighted quantile edges with right-closed bins.
    ``equal_width`` splits ``[min, max]`` evenly and puts ``max`` in the last
    bin. A constant feature under ``quantile`` raises
    :class:`ConstantFeatureWithQuantiles` unless ``on_constant="fallback"``,
    which warns and places every row in bin 0.
    """
    if scheme not in ("equal_width", "quantile"):
        raise WEFairError(f"unknown binning scheme {scheme!r}")
    if on_constant not in ("raise", "fallback"):
        raise WEFairError(f"on_constant must be 'raise' or 'fallback', got {on_constant!r}")
    rows = list(rows)
    if not rows:
        raise EmptyInput("no rows to bin")

    feats = np.array([np.atleast_1d(np.asarray(r[0], dtype=float)) for r in rows])
    weights = np.array([float(r[3]) if len(r) > 3 else 1.0 for r in rows])
    if np.any(weights < 0):
        raise NegativeMass("negative row weight")
    n_feat = feats.shape[1]
    if np.isscalar(bins_per_feature):
        bins = [int(bins_per_feature)] * n_feat
    else:
        bins = [int(b) for b in bins_per_feature]
    if len(bins) != n_feat:
        raise WEFairError(f"{len(bins)} bin counts given for {n_feat} features")
    if any(b <= 0 for b in bins):
        raise ZeroBins(f"bin counts must be positive, got {bins}")

    idx = np.zeros_like(feats, dtype=int)
    for j, k in enumerate(bins):
        col = feats[:, j]
        lo, hi = col.min(), col.max()
        if k == 1:
            continue
        if lo == hi:
            if scheme == "quantile":
                msg = f"feature {j} is constant; quantile bins collapse"
                if on_constant == "raise":
                    raise ConstantFeatureWithQuantiles(msg)
                warnings.warn(msg + "; all rows placed in bin 0", stacklevel=2)
            continue
        if scheme == "equal_width":
            idx[:, j] = np.minimum(((col - lo) / (hi - lo) * k).astype(int), k - 1)
        else:
            w = weights if weights.sum() > 0 else np.ones_like(weights)
            edges = _weighted_edges(col, w, k)
            idx[:, j] = np.searchsorted(edges, col, side="left")

    out = []
    for row, ix in zip(rows, idx):
        label = "b" + "-".join(str(i) for i in ix)
        weight = float(row[3]) if len(row) > 3 else 1.0
        out.append(SampleRow(label, int(row[1]), int(row[2]), weight))
    return out


# -- file formats ---------------------------------------------------------

def load_population(path) -> Population:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "cells" not in doc:
        raise WEFairError("population file must be an object with a 'cells' list")
    return validate_population(doc["cells"])


def dump_population(pop: Population, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(pop.to_dict(), fh, indent=2)
        fh.write("\n")


def read_samples_csv(path) -> list[SampleRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"x", "a", "y"} - set(reader.fieldnames or ())
        if missing:
            raise WEFairError(f"samples CSV is missing columns {sorted(missing)}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                weight = rec.get("weight")
                rows.append(
                    SampleRow(
                        rec["x"],
                        int(rec["a"]),
                        int(rec["y"]),
                        float(weight) if weight not in (None, "") else 1.0,
                    )
                )
            except ValueError as exc:
                raise WEFairError(f"line {lineno}: {exc}") from None
    return rows


def load_alpha_table(path) -> dict[str, tuple[float, float]]:
    """Read ``{label: [alpha_plus, alpha_minus]}`` (or objects with those keys)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise WEFairError("alpha file must map labels to (alpha_plus, alpha_minus)")
    table = {}
    for x, v in doc.items():
        if isinstance(v, Mapping):
            table[x] = (float(v["alpha_plus"]), float(v["alpha_minus"]))
        else:
            ap, am = v
            table[x] = (float(ap), float(am))
    return table
