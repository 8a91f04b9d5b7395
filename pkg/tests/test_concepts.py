import numpy as np
import pytest

from wefair import datasets
from wefair.analytics import group_welfare
from wefair.classifier import Classifier
from wefair.concepts import (
    ConceptSpec,
    RawUtility,
    UtilityTable,
    conditional_rate,
    is_we_for_eo_family,
    make_utility,
    shift_to_zero_minus,
)
from wefair.exceptions import (
    InvalidConcept,
    NegativeUtility,
    NoGoodBorrowersInGroup,
    UndefinedConditional,
    UtilityDomainMismatch,
    ZeroClassifierNotWE,
)
from wefair.population import Cell, validate_population
from wefair.solver import rescale_to_exact_equality, solve_unconstrained


def test_dp_table_is_constant(ex1, dp):
    assert dp.values.shape == (4, 2)
    assert np.all(dp.values == 1.0)


def test_eo_table_example1(ex1):
    # P(Y=1 | A=a) = (0.4 + 0.6) / 2 = (0 + 1) / 2 = 1/2 in both groups
    assert ex1.base_rate(0) == pytest.approx(0.5)
    assert ex1.base_rate(1) == pytest.approx(0.5)
    u = make_utility("equal_opportunity", ex1)
    np.testing.assert_allclose(u.values[:, 1], 2.0)
    np.testing.assert_array_equal(u.values[:, 0], 0.0)


def test_eo_unnormalized_variant(ex1):
    u = make_utility("equal_opportunity", ex1, eo_unnormalized=True)
    np.testing.assert_array_equal(u.values, [[0, 1]] * 4)


def test_eo_undefined_without_good_borrowers():
    pop = validate_population(
        [Cell("0", 0, 0.25, 0.5, 1, 1), Cell("1", 0, 0.25, 0.7, 1, 1), Cell("0", 1, 0.25, 0.0, 1, 1), Cell("1", 1, 0.25, 0.0, 1, 1)]
    )
    with pytest.raises(NoGoodBorrowersInGroup):
        make_utility("equal_opportunity", pop)


def test_equalized_odds_member_table(ex1):
    u = make_utility(ConceptSpec("equalized_odds_member", alpha=3.0, beta=1.0), ex1)
    np.testing.assert_array_equal(u.values, [[1.0, 3.0]] * 4)


def test_heterogeneous_eo_normalization(ex1):
    spec = ConceptSpec("heterogeneous_eo", m={"0": 2.0, "1": 5.0})
    u = make_utility(spec, ex1)
    # group 0: E[m Y | A=0] = (2*0.4 + 5*0.6) / 2 = 1.9; group 1: 5*1/2 = 2.5
    np.testing.assert_allclose(u.values[:, 1], [2 / 1.9, 5 / 1.9, 2 / 2.5, 5 / 2.5])
    # so full approval gives welfare exactly 1 in each group
    for g in (0, 1):
        assert group_welfare(ex1, u, Classifier.constant(ex1, 1.0), g) == pytest.approx(1.0)


def test_heterogeneous_eo_missing_amount(ex1):
    with pytest.raises(UtilityDomainMismatch):
        make_utility(ConceptSpec("heterogeneous_eo", m={"0": 1.0}), ex1)


def test_custom_concept_round_trip(ex1, repay):
    spec = ConceptSpec.from_dict({"kind": "custom", "u": repay.to_records()})
    u = make_utility(spec, ex1)
    np.testing.assert_array_equal(u.values, repay.values)


def test_custom_concept_negative(ex1):
    recs = make_utility("demographic_parity", ex1).to_records()
    recs[0]["value"] = -1.0
    with pytest.raises(NegativeUtility):
        make_utility(ConceptSpec("custom", table=tuple(recs)), ex1)


def test_custom_concept_incomplete(ex1):
    recs = make_utility("demographic_parity", ex1).to_records()[:-1]
    with pytest.raises(UtilityDomainMismatch):
        make_utility(ConceptSpec("custom", table=tuple(recs)), ex1)


@pytest.mark.parametrize(
    "doc",
    [
        {"kind": "parity"},
        {"kind": "equalized_odds_member", "alpha": 0.5, "beta": 1.0},
        {"kind": "equalized_odds_member", "alpha": 1.0},
        {"kind": "heterogeneous_eo", "m": {"a": 0.0}},
        {"kind": "custom"},
        {"no_kind": 1},
    ],
)
def test_invalid_concepts(doc):
    with pytest.raises(InvalidConcept):
        ConceptSpec.from_dict(doc)


def test_concept_dict_round_trip():
    for doc in (
        {"kind": "demographic_parity"},
        {"kind": "equal_opportunity"},
        {"kind": "equalized_odds_member", "alpha": 2.0, "beta": 1.0},
        {"kind": "heterogeneous_eo", "m": {"a": 1.5}},
    ):
        assert ConceptSpec.from_dict(doc).to_dict() == doc


@pytest.mark.parametrize("seed", range(10))
def test_eo_welfare_is_good_borrower_rate(seed):
    rng = np.random.default_rng(seed)
    pop = datasets.random_population(rng)
    u = make_utility("equal_opportunity", pop)
    for _ in range(5):
        c = rng.uniform(size=len(pop))
        for g in (0, 1):
            idx = pop.group(g)
            direct = np.sum(pop.mass[idx] * pop.p[idx] * c[idx]) / np.sum(pop.mass[idx] * pop.p[idx])
            assert group_welfare(pop, u, c, g) == pytest.approx(direct, abs=1e-12)


# -- zero-rejection shift ------------------------------------------------

def _raw(pop, plus, minus):
    return RawUtility(pop.keys, np.broadcast_to(plus, (len(pop), 2)), np.broadcast_to(minus, (len(pop), 2)))


def test_shift_constant(ex1):
    u = shift_to_zero_minus(_raw(ex1, 5.0, 2.0), ex1)
    np.testing.assert_array_equal(u.values, 3.0)


def test_shift_rejects_unequal_rejection_welfare(ex1):
    minus = np.where(ex1.a[:, None] == 0, 1.0, 2.0) * np.ones((4, 2))
    with pytest.raises(ZeroClassifierNotWE):
        shift_to_zero_minus(_raw(ex1, 5.0, minus), ex1)


def test_shift_identity(ex1):
    plus = np.tile([0.0, 1.0], (4, 1))
    u = shift_to_zero_minus(_raw(ex1, plus, 0.0), ex1)
    np.testing.assert_array_equal(u.values, plus)


def test_shift_negative_result(ex1):
    with pytest.raises(NegativeUtility):
        shift_to_zero_minus(_raw(ex1, 1.0, 2.0), ex1)


def random_raw_with_fair_zero(rng, pop):
    """Random raw utility whose zero classifier equalizes welfare."""
    minus = rng.uniform(-2, 2, (len(pop), 2))
    mean_minus = minus[:, 1] * pop.p + minus[:, 0] * (1 - pop.p)
    e = [np.dot(pop.cond_mass[pop.a == g], mean_minus[pop.a == g]) for g in (0, 1)]
    minus[pop.a == 1] += e[0] - e[1]
    plus = minus + rng.uniform(0, 2, (len(pop), 2))
    return RawUtility(pop.keys, plus, minus)


@pytest.mark.parametrize("seed", range(5))
def test_shift_preserves_we_membership(seed):
    rng = np.random.default_rng(seed)
    pop = datasets.random_population(rng)
    raw = random_raw_with_fair_zero(rng, pop)
    u = shift_to_zero_minus(raw, pop)
    for i in range(20):
        c = rng.uniform(size=len(pop))
        if i % 2:
            c = rescale_to_exact_equality(c, pop, u).values
        raw_gap = raw.group_welfare(pop, c, 0) - raw.group_welfare(pop, c, 1)
        new_gap = group_welfare(pop, u, c, 0) - group_welfare(pop, u, c, 1)
        assert raw_gap == pytest.approx(new_gap, abs=1e-12)
        assert (abs(raw_gap) <= 1e-9) == (abs(new_gap) <= 1e-9)


# -- equalized odds family ------------------------------------------------

def test_zero_classifier_in_eo_family(ex1):
    ok, gaps = is_we_for_eo_family(Classifier.constant(ex1, 0.0), ex1)
    assert ok and gaps == (0.0, 0.0)


def test_perfect_classifier_in_eo_family():
    cells = [Cell(x, a, 0.25, float(x), 1.0, 2.0) for x in "01" for a in (0, 1)]
    pop = validate_population(cells)
    ok, gaps = is_we_for_eo_family(pop.p.copy(), pop)
    assert ok
    assert gaps == (0.0, 0.0)


def test_unconstrained_example1_not_in_eo_family(ex1):
    c, _ = solve_unconstrained(ex1)
    ok, (fp_gap, tp_gap) = is_we_for_eo_family(c, ex1)
    assert not ok
    assert tp_gap == pytest.approx(1.0)
    assert fp_gap == pytest.approx(0.0)


def test_eo_family_member_equalizes_every_member_utility(rng):
    pop = datasets.symmetric_example()
    c = rng.uniform(size=len(pop) // 2)
    c = np.concatenate([c, c])
    ok, _ = is_we_for_eo_family(c, pop)
    assert ok
    for alpha, beta in [(1, 0), (2, 1), (1, 1)]:
        u = make_utility(ConceptSpec("equalized_odds_member", alpha=alpha, beta=beta), pop)
        assert group_welfare(pop, u, c, 0) == pytest.approx(group_welfare(pop, u, c, 1), abs=1e-12)


def test_eo_family_undefined_conditional(ex1):
    # every group-0 borrower repays, so P(Y=0 | A=0) is zero
    cells = [Cell("0", 0, 0.5, 1.0, 1.0, 1.0), Cell("0", 1, 0.5, 0.5, 1.0, 1.0)]
    pop = validate_population(cells)
    with pytest.raises(UndefinedConditional):
        is_we_for_eo_family([0.5, 0.5], pop)
    with pytest.raises(UndefinedConditional):
        conditional_rate(pop, [0.5, 0.5], 0, 0)


def test_utility_table_rejects_negative(ex1):
    with pytest.raises(NegativeUtility):
        UtilityTable(ex1.keys, -np.ones((4, 2)))
