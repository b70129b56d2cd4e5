import numpy as np
import pytest

from complier.data import (
    ObservedSample,
    PotentialTable,
    compliance_crosstab,
    transform_mcate_outcomes,
    true_estimands,
    validate_observed,
)
from complier.errors import (
    EmptyArm,
    LengthMismatch,
    NoCompliers,
    NonBinaryValue,
    NonFiniteInput,
    ZeroDenominator,
)
from complier.simulation import DgpParams, generate_population

from conftest import make_population, make_sample


def obs(z, d, y, x=None):
    return validate_observed(ObservedSample(z=np.array(z), d=np.array(d), y=np.array(y), x=x))


def test_minimal_two_unit_sample():
    s = obs([1, 0], [1, 0], [1, 0])
    assert (s.n, s.n1, s.n0, s.p) == (2, 1, 1, 0)
    assert s.covariate_names == ()


def test_empty_control_arm():
    with pytest.raises(EmptyArm):
        obs([1, 1], [0, 1], [1, 0])


def test_nonbinary_outcome():
    with pytest.raises(NonBinaryValue):
        obs([1, 0], [1, 0], [2, 0])


def test_length_mismatch_and_nonfinite():
    with pytest.raises(LengthMismatch):
        obs([1, 0, 1], [1, 0], [1, 0, 0])
    with pytest.raises(NonFiniteInput):
        obs([1, 0], [1, 0], [1, 0], x=np.array([[0.0], [np.nan]]))


def test_default_covariate_names():
    s = obs([1, 0, 1], [1, 0, 0], [1, 0, 1], x=np.zeros((3, 2)))
    assert s.covariate_names == ("x1", "x2")


def test_arrays_are_read_only():
    s = obs([1, 0], [1, 0], [1, 0])
    with pytest.raises(ValueError):
        s.y[0] = 0.0


def test_crosstab_large_shape():
    # 566 treated of whom 409 take treatment; 895 controls, none take it
    z = np.r_[np.ones(566), np.zeros(895)]
    d = np.r_[np.ones(409), np.zeros(157), np.zeros(895)]
    ct = compliance_crosstab(obs(z, d, np.zeros(z.size)))
    assert tuple(ct) == (409, 157, 0, 895)
    assert ct.n == 1461


def test_crosstab_perfect_compliance():
    z = [1, 1, 0, 0, 1, 0]
    ct = compliance_crosstab(obs(z, z, [0, 1, 1, 0, 0, 1]))
    assert ct.n10 == 0 and ct.n01 == 0


def test_crosstab_hand_tally():
    z = [1, 1, 1, 0, 0, 0]
    d = [1, 0, 1, 1, 0, 0]
    ct = compliance_crosstab(obs(z, d, [0] * 6))
    assert tuple(ct) == (2, 1, 1, 2)
    np.testing.assert_array_equal(ct.as_matrix(), [[2, 1], [1, 2]])


def test_mcate_transform_small():
    g, h = transform_mcate_outcomes(obs([1, 0, 1], [1, 0, 1], [1, 1, 0]))
    np.testing.assert_array_equal(g.y, [1, 0, 0])
    np.testing.assert_array_equal(h.y, [0, 1, 0])


def test_mcate_transform_everyone_takes_treatment():
    y = [1, 0, 1, 1]
    g, h = transform_mcate_outcomes(obs([1, 0, 1, 0], [1, 1, 1, 1], y))
    np.testing.assert_array_equal(g.y, y)
    np.testing.assert_array_equal(h.y, 0)


def test_mcate_transform_sums_to_y(rng):
    s = make_sample(rng, n=20)
    g, h = transform_mcate_outcomes(s)
    np.testing.assert_array_equal(g.y + h.y, s.y)


def test_all_compliers_constant_effect():
    n = 5
    pop = PotentialTable(y0=np.zeros(n), y1=np.ones(n), d0=np.zeros(n), d1=np.ones(n))
    te = true_estimands(pop)
    assert te.tau == 1.0
    assert te.strata_props["complier"] == 1.0


def test_hand_population():
    # strata:      C  C  C  A  A  N  N  C
    d0 = np.array([0, 0, 0, 1, 1, 0, 0, 0])
    d1 = np.array([1, 1, 1, 1, 1, 0, 0, 1])
    y0 = np.array([0, 1, 0, 1, 0, 1, 0, 0])
    y1 = np.array([1, 1, 0, 1, 0, 1, 0, 1])
    te = true_estimands(PotentialTable(y0=y0, y1=y1, d0=d0, d1=d1))
    # compliers are units 0,1,2,7: effects 1,0,0,1
    assert te.tau == 0.5
    assert te.n_compliers == 4
    assert te.tau == pytest.approx(te.tau_y / te.tau_d, abs=1e-15)
    # G: y1 d1 - y0 d0 -> 1,1,0,0,0,0,0,1 ; H: y1(1-d1) - y0(1-d0) -> 0,-1,0,0,0,0,0,0
    assert te.tau_g == 3 / 8 and te.tau_h == -1 / 8
    assert te.tau_m == 3.0


def test_strata_props_sum_to_one(rng):
    te = true_estimands(make_population(rng, n=30))
    assert abs(sum(te.strata_props.values()) - 1) <= 1e-12
    assert all(0 <= v <= 1 for v in te.strata_props.values())


def test_no_compliers():
    one = np.ones(4)
    with pytest.raises(NoCompliers):
        true_estimands(PotentialTable(y0=one, y1=one, d0=one, d1=one))


def test_tau_m_undefined_when_tau_h_zero():
    # compliers with y0 = 0 everywhere: tau_H = 0
    n = 4
    te = true_estimands(PotentialTable(y0=np.zeros(n), y1=np.ones(n), d0=np.zeros(n), d1=np.ones(n)))
    assert te.tau_m is None
    with pytest.raises(ZeroDenominator):
        te.require_tau_m()


def test_monotonicity_and_defiers():
    pop = PotentialTable(y0=[0, 1], y1=[0, 1], d0=[1, 0], d1=[0, 1])
    assert not pop.monotone
    assert pop.n_defiers == 1


def test_observe_picks_potentials(rng):
    pop = make_population(rng, n=8)
    z = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    s = pop.observe(z)
    np.testing.assert_array_equal(s.d, np.where(z == 1, pop.d1, pop.d0))
    np.testing.assert_array_equal(s.y, np.where(z == 1, pop.y1, pop.y0))


@pytest.mark.slow
def test_large_population_strata_proportions():
    pop = generate_population(DgpParams(n=10**6, seed=7))
    props = true_estimands(pop).strata_props
    assert props["complier"] == pytest.approx(0.494, abs=0.002)
    assert props["always_taker"] == pytest.approx(0.362, abs=0.002)
    assert props["never_taker"] == pytest.approx(0.144, abs=0.002)
    assert props["defier"] == 0
