"""scikit-learn style lenders.

``X`` is a two-column array of ``(x_label, a)`` pairs and ``y`` the observed
repayment outcome. Fitting estimates the population from the (weighted)
rows and solves for the lender's policy; ``predict_proba`` returns each
row's loan probability and ``predict`` draws the randomized decision.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_consistent_length, check_is_fitted

from .concepts import ConceptSpec, make_utility
from .population import Population, SampleRow, from_samples
from .solver import solve_unaware, solve_unconstrained, solve_we, solve_we_bisection


def _cells(X) -> list[tuple[str, int]]:
    X = np.asarray(X, dtype=object)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"X must have shape (n_samples, 2) holding (x_label, a); got {X.shape}")
    keys = []
    for x, a in X:
        a_int = int(a)
        if a_int not in (0, 1) or a_int != a:
            raise ValueError(f"protected attribute must be 0 or 1, got {a!r}")
        keys.append((str(x), a_int))
    return keys


class _BaseLender(ClassifierMixin, BaseEstimator):
    def __init__(self, alpha_plus=1.0, alpha_minus=1.0, alpha_table=None, random_state=None):
        self.alpha_plus = alpha_plus
        self.alpha_minus = alpha_minus
        self.alpha_table = alpha_table
        self.random_state = random_state

    def _alphas(self, labels):
        if self.alpha_table is not None:
            return dict(self.alpha_table)
        return {x: (self.alpha_plus, self.alpha_minus) for x in labels}

    def fit(self, X, y, sample_weight=None):
        keys = _cells(X)
        y = np.asarray(y)
        check_consistent_length(keys, y)
        w = np.ones(len(keys)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        check_consistent_length(keys, w)
        rows = [SampleRow(x, a, int(yi), float(wi)) for (x, a), yi, wi in zip(keys, y, w)]
        return self.fit_population(from_samples(rows, self._alphas({x for x, _ in keys})))

    def fit_population(self, population: Population):
        """Fit directly on a known population instead of samples."""
        self.population_ = population
        self.classes_ = np.array([0, 1])
        self.classifier_, self.revenue_ = self._solve(population)
        self._lookup = self.classifier_.as_dict()
        return self

    def _solve(self, pop):
        raise NotImplementedError

    def predict_proba(self, X):
        check_is_fitted(self, "classifier_")
        try:
            c = np.array([self._lookup[k] for k in _cells(X)])
        except KeyError as exc:
            raise ValueError(f"cell {exc.args[0]} was not seen during fit") from None
        return np.column_stack([1 - c, c])

    def predict(self, X):
        rng = check_random_state(self.random_state)
        c = self.predict_proba(X)[:, 1]
        return (rng.random_sample(len(c)) < c).astype(int)


class UnconstrainedLender(_BaseLender):
    """Approves exactly the cells whose repayment probability beats break-even."""

    def _solve(self, pop):
        return solve_unconstrained(pop)


class UnawareLender(_BaseLender):
    """Best policy that ignores the protected attribute."""

    def _solve(self, pop):
        return solve_unaware(pop)


class WelfareEqualizingLender(_BaseLender):
    """Revenue-maximizing lender constrained to equalize group welfare.

    Parameters
    ----------
    concept : str or ConceptSpec
        Fairness concept defining borrower utility, e.g.
        ``"demographic_parity"`` or ``"equal_opportunity"``.
    algorithm : {"curve", "bisection"}
    eo_unnormalized : bool
        Use the raw ``u = 1{y=1}`` table for equal opportunity.
    tol : float
        Multiplier tolerance for the bisection solver.

    Attributes
    ----------
    result_ : WESolveResult
    utility_ : UtilityTable
    """

    def __init__(
        self,
        concept="demographic_parity",
        algorithm="curve",
        eo_unnormalized=False,
        tol=1e-12,
        alpha_plus=1.0,
        alpha_minus=1.0,
        alpha_table=None,
        random_state=None,
    ):
        super().__init__(alpha_plus, alpha_minus, alpha_table, random_state)
        self.concept = concept
        self.algorithm = algorithm
        self.eo_unnormalized = eo_unnormalized
        self.tol = tol

    def _solve(self, pop):
        if self.algorithm not in ("curve", "bisection"):
            raise ValueError(f"algorithm must be 'curve' or 'bisection', got {self.algorithm!r}")
        spec = self.concept if isinstance(self.concept, ConceptSpec) else ConceptSpec(self.concept)
        self.utility_ = make_utility(spec, pop, eo_unnormalized=self.eo_unnormalized)
        if self.algorithm == "curve":
            self.result_ = solve_we(pop, self.utility_)
        else:
            self.result_ = solve_we_bisection(pop, self.utility_, self.tol)
        return self.result_.classifier, self.result_.revenue
