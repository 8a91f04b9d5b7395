"""Small hand-built populations used throughout the docs, tests and CLI."""

from __future__ import annotations

from fractions import Fraction

from .population import Cell, Population, validate_population


def _grid(p_rows, alpha_plus, alpha_minus, labels=None) -> Population:
    n_x = len(p_rows[0])
    labels = labels or [str(i) for i in range(n_x)]
    mass = 1.0 / (2 * n_x)
    cells = [
        Cell(labels[j], a, mass, float(p), alpha_plus, alpha_minus)
        for a, row in enumerate(p_rows)
        for j, p in enumerate(row)
    ]
    return validate_population(cells)


def alphas_for_threshold(t) -> tuple[float, float]:
    """Integer ``(alpha_plus, alpha_minus)`` whose break-even probability is ``t``."""
    frac = Fraction(t).limit_denominator(10_000)
    if not 0 < frac < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    return float(frac.denominator - frac.numerator), float(frac.numerator)


def example1() -> Population:
    """Two binary attributes, uniform cells; ``X`` separates only group 1.

    With a default costing two repayments the threshold is 2/3 and only
    ``(x=1, a=1)`` is worth lending to.
    """
    return _grid([[0.4, 0.6], [0.0, 1.0]], 1.0, 2.0)


def unawareness_example(t=0.6) -> Population:
    """``X`` means opposite things in the two groups; pooling erases the signal."""
    ap, am = alphas_for_threshold(t)
    return _grid([[2 / 3, 1 / 3], [1 / 3, 2 / 3]], ap, am)


def dp_harm_example(t=0.6) -> Population:
    """Ternary ``X``; group 1 is perfectly separated, group 0 is not.

    The default ``t = 3/5`` corresponds to ``alpha_plus = 2, alpha_minus = 3``.
    """
    ap, am = alphas_for_threshold(t)
    return _grid([[0.75, 0.75, 0.25], [1.0, 0.0, 0.0]], ap, am)


def eo_harm_example(t=0.7) -> Population:
    """Same distribution as :func:`dp_harm_example` with a higher threshold."""
    return dp_harm_example(t)


def symmetric_example() -> Population:
    """Both groups identical, so the unconstrained optimum is already fair."""
    return _grid([[0.3, 0.8, 0.55], [0.3, 0.8, 0.55]], 1.0, 1.0)


# -- seeded random instances ----------------------------------------------
#
# Sampling ranges: p ~ U(0, 1); raw cell weights ~ U(0.05, 1), normalized to
# sum to one; alpha_plus, alpha_minus ~ U(0.5, 3), drawn once per label so
# they agree across groups; random utilities ~ U(0, 2) per (cell, y).

UTILITY_KINDS = ("demographic_parity", "equal_opportunity", "repayment", "random")


def random_population(rng, n_cells=None, max_per_group: int = 5) -> Population:
    """Random valid population; ``n_cells=(n0, n1)`` fixes the group sizes.

    Group ``a`` uses labels ``x0 .. x{n_a - 1}``, so labels overlap across groups.
    """
    if n_cells is None:
        n_cells = tuple(int(rng.integers(1, max_per_group + 1)) for _ in range(2))
    n_labels = max(n_cells)
    ap = rng.uniform(0.5, 3.0, n_labels)
    am = rng.uniform(0.5, 3.0, n_labels)
    cells = []
    for a, n in enumerate(n_cells):
        for j in range(n):
            cells.append([f"x{j}", a, rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0), ap[j], am[j]])
    total = sum(c[2] for c in cells)
    for c in cells:
        c[2] /= total
    return validate_population([Cell(*c) for c in cells])


def random_utility(rng, pop: Population, kind: str):
    """Utility table of the given kind; ``repayment`` is ``u(x,a,y) = y``."""
    from .concepts import ConceptSpec, UtilityTable, make_utility

    if kind == "repayment":
        return make_utility(ConceptSpec("equalized_odds_member", alpha=1.0, beta=0.0), pop)
    if kind == "random":
        return UtilityTable(pop.keys, rng.uniform(0.0, 2.0, (len(pop), 2)))
    return make_utility(kind, pop)
