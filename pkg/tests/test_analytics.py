import numpy as np
import pytest

from wefair import datasets
from wefair.analytics import (
    approval_rate,
    audit,
    check_robustness,
    check_theorem1,
    disadvantaged_group,
    group_welfare,
    price_of_fairness,
    revenue,
    welfare_pair,
)
from wefair.concepts import make_utility
from wefair.population import Cell, validate_population
from wefair.solver import solve_unconstrained, solve_we


def test_welfare_and_revenue_example1(ex1, dp):
    c = [0, 1, 0, 1]
    assert welfare_pair(ex1, dp, c) == pytest.approx((0.5, 0.5))
    assert revenue(ex1, c) == pytest.approx(0.25 * 3 * (0.6 - 2 / 3) + 0.25)
    assert approval_rate(ex1, c, 1) == pytest.approx(0.5)


def test_group_welfare_mixed_utility(ex1, repay):
    # u = y, so welfare is P(approved and repays | A=a)
    assert group_welfare(ex1, repay, [1, 1, 1, 1], 0) == pytest.approx(0.5)
    assert group_welfare(ex1, repay, [1, 0, 0, 0], 0) == pytest.approx(0.2)


def test_audit_example1(ex1, dp):
    rep = audit(ex1, dp, solve_unconstrained(ex1)[0])
    assert rep.we_gap == pytest.approx(0.5)
    assert rep.dp_gap == pytest.approx(0.5)
    assert rep.eo_gap == pytest.approx(1.0)
    assert rep.fp_gap == pytest.approx(0.0)
    assert set(rep.to_dict()) == {"revenue", "group_welfare", "we_gap", "dp_gap", "eo_gap", "fp_gap"}


def test_audit_drops_undefined_gaps():
    cells = [Cell("0", 0, 0.5, 1.0, 1.0, 1.0), Cell("0", 1, 0.5, 0.5, 1.0, 1.0)]
    pop = validate_population(cells)
    doc = audit(pop, make_utility("demographic_parity", pop), [1, 1]).to_dict()
    assert "fp_gap" not in doc
    assert doc["eo_gap"] == pytest.approx(0.0)


def test_disadvantaged_group(ex1, dp):
    assert disadvantaged_group(ex1, dp) == 0
    sym = datasets.symmetric_example()
    assert disadvantaged_group(sym, make_utility("demographic_parity", sym)) is None


def test_guarantee_example1(ex1, dp):
    chk = check_theorem1(ex1, dp)
    assert chk.disadvantaged == 0
    assert chk.welfare_before == pytest.approx((0.0, 0.5))
    assert chk.welfare_after == pytest.approx((0.5, 0.5))
    assert chk.welfare_ok and chk.pointwise_ok
    assert chk.to_dict()["violating_cells"] == []


@pytest.mark.parametrize("seed", range(100))
def test_guarantee_random(seed):
    rng = np.random.default_rng(seed)
    pop = datasets.random_population(rng)
    u = datasets.random_utility(rng, pop, datasets.UTILITY_KINDS[seed % 4])
    chk = check_theorem1(pop, u)
    assert chk.welfare_ok, chk
    assert chk.pointwise_ok, chk


def test_guarantee_accepts_precomputed_result(ex1, dp):
    res = solve_we(ex1, dp)
    assert check_theorem1(ex1, dp, result=res) == check_theorem1(ex1, dp)


def test_robustness_applicable(ex1, dp, repay):
    rep = check_robustness(ex1, repay, dp)
    assert rep.applicable and rep.disadvantaged == 0
    assert rep.holds
    assert rep.welfare_after >= rep.welfare_before


def test_robustness_inapplicable():
    sym = datasets.symmetric_example()
    rep = check_robustness(sym, make_utility("demographic_parity", sym), make_utility("equal_opportunity", sym))
    assert not rep.applicable
    assert rep.holds is None
    assert "inapplicable" in rep.note


def test_dp_harm_robustness_failure_is_outside_guarantee():
    # imposing DP hurts good borrowers of group 0, but group 0 is the
    # advantaged group under the good-borrower measure, so nothing is promised
    pop = datasets.dp_harm_example()
    rep = check_robustness(pop, make_utility("equal_opportunity", pop), make_utility("demographic_parity", pop))
    assert not rep.applicable


def test_price_of_fairness_example1(ex1, dp):
    pof = price_of_fairness(ex1, dp, "demographic_parity")
    assert pof.unconstrained.revenue_drop == 0
    assert pof.fair.revenue_drop == pytest.approx(0.05)
    assert pof.fair.welfare_delta == pytest.approx((0.5, 0.0))
    assert pof.unaware.revenue_drop >= 0
    assert set(pof.to_dict()) == {"unconstrained", "fair", "unaware"}
