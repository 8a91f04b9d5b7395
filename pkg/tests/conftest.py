import numpy as np
import pytest

from wefair import datasets
from wefair.concepts import ConceptSpec, make_utility

REPAYMENT = ConceptSpec("equalized_odds_member", alpha=1.0, beta=0.0)


@pytest.fixture
def ex1():
    return datasets.example1()


@pytest.fixture
def dp(ex1):
    return make_utility("demographic_parity", ex1)


@pytest.fixture
def repay(ex1):
    """u(x, a, y) = y on Example 1."""
    return make_utility(REPAYMENT, ex1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
