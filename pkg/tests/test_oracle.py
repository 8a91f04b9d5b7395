import numpy as np
import pytest

from wefair import datasets
from wefair.concepts import make_utility
from wefair.exceptions import InstanceTooLarge, WEFairError, WOutOfDomain
from wefair.oracle import GridSpec, brute_force_curve_point, brute_force_we
from wefair.solver import solve_we, welfare_curve


def test_example1_dp(ex1, dp):
    # the optimum is a grid point, so zero slack recovers it exactly
    c, rev = brute_force_we(ex1, dp, GridSpec(10, welfare_slack=0.0))
    assert rev == pytest.approx(0.2)
    np.testing.assert_allclose(c.values, [0, 1, 0, 1])


def test_example1_repayment(ex1, repay):
    _, rev = brute_force_we(ex1, repay, GridSpec(50))
    assert rev == pytest.approx(0.1, abs=2 * 0.75 / 50)


@pytest.mark.parametrize("seed", range(15))
def test_oracle_within_band(seed):
    rng = np.random.default_rng(seed)
    pop = datasets.random_population(rng, max_per_group=2)
    u = datasets.random_utility(rng, pop, datasets.UTILITY_KINDS[seed % 4])
    exact = solve_we(pop, u).revenue
    L = float(np.dot(pop.mass, np.abs(pop.r)))
    for k in (10, 20, 40):
        _, rev = brute_force_we(pop, u, GridSpec(k))
        assert abs(rev - exact) <= 2 * L / k + 1e-12


def test_curve_point_example1(ex1, dp):
    exact = GridSpec(10, welfare_slack=0.0)
    cv = welfare_curve(ex1, dp, 1)
    for w in np.linspace(0, 1, 11):
        assert brute_force_curve_point(ex1, dp, 1, w, exact) == pytest.approx(float(cv(w)))


def test_default_slack_can_overshoot(ex1, dp):
    # slack 0.5 / 10 admits welfare 0.05 at target 0, worth revenue 0.05
    assert brute_force_curve_point(ex1, dp, 1, 0.0, GridSpec(10)) == pytest.approx(0.05)
    _, rev = brute_force_we(ex1, dp, GridSpec(10))
    assert 0.2 <= rev <= 0.2 + 2 * 0.75 / 10


def test_curve_point_out_of_domain(ex1, dp):
    with pytest.raises(WOutOfDomain):
        brute_force_curve_point(ex1, dp, 0, 1.5)
    with pytest.raises(WOutOfDomain):
        brute_force_curve_point(ex1, dp, 0, -0.1)


def test_too_many_cells(rng):
    pop = datasets.random_population(rng, n_cells=(5, 4))
    u = make_utility("demographic_parity", pop)
    with pytest.raises(InstanceTooLarge):
        brute_force_we(pop, u)


def test_grid_too_fine(ex1, dp):
    with pytest.raises(InstanceTooLarge):
        brute_force_we(ex1, dp, GridSpec(5000))


@pytest.mark.parametrize("bad", [dict(resolution=0), dict(resolution=2.5), dict(welfare_slack=-1.0)])
def test_bad_grid(bad):
    with pytest.raises(WEFairError):
        GridSpec(**bad)


def test_explicit_slack(ex1, dp):
    # with a huge slack the constraint disappears
    _, rev = brute_force_we(ex1, dp, GridSpec(4, welfare_slack=10.0))
    assert rev == pytest.approx(0.25)
