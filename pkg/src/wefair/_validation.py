"""Input coercion shared by the solver, analytics and estimator layers."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .classifier import Classifier
from .exceptions import DomainMismatch, NegativeUtility, UtilityDomainMismatch, WEFairError


def check_group(a) -> int:
    if a not in (0, 1) or isinstance(a, bool):
        raise WEFairError(f"group must be 0 or 1, got {a!r}")
    return int(a)


def check_classifier(c, pop) -> np.ndarray:
    """Return classifier values aligned with ``pop`` cell order."""
    if isinstance(c, Classifier):
        if c.keys != pop.keys:
            if set(c.keys) != set(pop.keys):
                raise DomainMismatch("classifier cells differ from population cells")
            d = c.as_dict()
            return np.array([d[k] for k in pop.keys])
        return np.asarray(c.values)
    if isinstance(c, Mapping):
        if set(c) != set(pop.keys):
            raise DomainMismatch("classifier cells differ from population cells")
        return Classifier.from_mapping(pop, c).values
    arr = np.asarray(c, dtype=float)
    if arr.shape != (len(pop),):
        raise DomainMismatch(f"classifier has shape {arr.shape}, population has {len(pop)} cells")
    return Classifier(pop.keys, arr).values


def check_utility(u, pop):
    """Verify a UtilityTable covers exactly ``pop``'s cells and is nonnegative."""
    if tuple(u.keys) != pop.keys:
        if set(u.keys) != set(pop.keys):
            raise UtilityDomainMismatch("utility cells differ from population cells")
        u = u.reorder(pop.keys)
    if np.any(u.values < 0):
        raise NegativeUtility("utility table has negative entries")
    return u
