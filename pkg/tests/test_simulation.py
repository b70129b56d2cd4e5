import logging
import math

import numpy as np
import pytest

from complier.data import ObservedSample, PotentialTable, true_estimands, validate_observed
from complier.errors import InvalidArmSize, InvalidCovariance
from complier.estimators import itt_difference_in_means
from complier.randomizer import RngStream, enumerate_assignments
from complier.simulation import (
    DgpParams,
    ReplicationRecord,
    generate_population,
    monte_carlo,
    population_truth,
    replay_synthetic_population,
    run_replication,
    simulate_records,
    summarize,
)

from conftest import make_population, make_sample


def test_dgp_validation():
    with pytest.raises(InvalidCovariance):
        DgpParams(rho=2.0)
    with pytest.raises(InvalidArmSize):
        DgpParams(n1_frac=1.0)
    with pytest.raises(InvalidArmSize):
        DgpParams(n=3, n1_frac=0.1).n1
    assert DgpParams(n=500, n1_frac=0.3).n1 == 150


@pytest.mark.parametrize("rho", [0.0, 1.0])
def test_population_structure(rho):
    pop = generate_population(DgpParams(n=2000, rho=rho, seed=3))
    assert pop.monotone and pop.exclusion_holds
    same = pop.d0 == pop.d1
    np.testing.assert_array_equal(pop.y0[same], pop.y1[same])
    c = np.cov(pop.x, rowvar=False)
    assert c[0, 1] == pytest.approx(rho, abs=0.15)
    assert c[0, 0] == pytest.approx(2.0, abs=0.2)


def test_population_is_seeded():
    a = generate_population(DgpParams(seed=8))
    b = generate_population(DgpParams(seed=8))
    c = generate_population(DgpParams(seed=9))
    np.testing.assert_array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_zero_effect_perfect_compliance():
    n = 20
    y = np.tile([0, 1], n // 2)
    pop = PotentialTable(y0=y, y1=y, d0=np.zeros(n), d1=np.ones(n))
    hits = 0
    for k in range(60):
        rec = run_replication(pop, 10, RngStream(1, k), methods=("wald",))[0]
        if rec.point == 0:
            hits += 1
            assert rec.ci_lo <= 0 <= rec.ci_hi
    assert hits > 0
    z = np.tile([1, 1, 0, 0], n // 4)
    assert itt_difference_in_means(pop.observe(z)) == 0


def test_replication_determinism(rng):
    pop = generate_population(DgpParams(n=200, seed=4))
    a = run_replication(pop, 60, RngStream(5, 3), estimands=("cate", "mcate"))
    b = run_replication(pop, 60, RngStream(5, 3), estimands=("cate", "mcate"))
    assert a == b
    assert len(a) == 8


def test_failures_are_recorded():
    # all units identical: the D difference is always zero
    n = 12
    z = np.zeros(n)
    pop = PotentialTable(y0=z, y1=z + 1, d0=z, d1=z)
    recs = run_replication(pop, 6, RngStream(0, 0), methods=("wald", "ils"))
    assert all(r.failed and "WeakDenominator" in r.reason for r in recs)
    assert all(math.isnan(r.point) for r in recs)


def test_enumeration_mean_matches_truth(rng):
    pop = make_population(rng, n=8)
    te = true_estimands(pop)
    ty = [itt_difference_in_means(pop.observe(z), "y") for z in enumerate_assignments(8, 4)]
    assert np.mean(ty) == pytest.approx(te.tau_y, abs=1e-12)


def test_summarize_constant_estimator():
    recs = [ReplicationRecord(k, "wald", "cate", 0.25, 0.25, 0.25, False) for k in range(5)]
    row = summarize(recs, {"cate": 0.25})[0]
    assert (row.bias, row.sd, row.rmse, row.cp, row.ci_length) == (0, 0, 0, 1, 0)
    assert math.isnan(row.rmse_ratio)  # wald rmse is 0


def test_summarize_moments_and_ratios():
    pts = {"wald": [0.1, 0.3, 0.2, 0.6], "ils": [0.2, 0.25, 0.3, 0.25]}
    recs = [
        ReplicationRecord(k, m, "cate", p, p - 0.1, p + 0.1, False)
        for m, ps in pts.items() for k, p in enumerate(ps)
    ]
    recs.append(ReplicationRecord(4, "ils", "cate", math.nan, math.nan, math.nan, True, "boom"))
    rows = {r.method: r for r in summarize(recs, {"cate": 0.25})}
    w, i = rows["wald"], rows["ils"]
    assert w.bias == pytest.approx(0.05)
    assert w.sd == pytest.approx(np.std(pts["wald"], ddof=1))
    assert w.rmse == pytest.approx(np.sqrt(np.mean((np.array(pts["wald"]) - 0.25) ** 2)))
    assert w.cp == 0.5
    assert w.ci_length == pytest.approx(0.2)
    assert i.n_failed == 1 and i.reps == 5
    assert i.rmse_ratio == pytest.approx(i.rmse / w.rmse)
    assert i.length_ratio == pytest.approx(1.0)
    m = 4
    assert w.rmse**2 == pytest.approx(w.bias**2 + (m - 1) / m * w.sd**2)


def test_single_replication_sd_zero(caplog):
    pop = generate_population(DgpParams(n=100, seed=2))
    with caplog.at_level(logging.WARNING):
        rows = monte_carlo(pop, 1, 30, methods=("wald",))
    assert rows[0].sd == 0
    assert "SD reported as 0" in caplog.text


def test_all_failed_row():
    recs = [ReplicationRecord(k, "wald", "cate", math.nan, math.nan, math.nan, True) for k in range(3)]
    row = summarize(recs, {"cate": 0.1})[0]
    assert row.n_failed == 3 and row.reps == 3 and math.isnan(row.bias)


def test_records_independent_of_workers():
    pop = generate_population(DgpParams(n=150, seed=6))
    a = simulate_records(pop, 12, 45, master_seed=3, workers=1)
    b = simulate_records(pop, 12, 45, master_seed=3, workers=3)
    assert a == b
    assert [r.rep for r in a] == sorted(r.rep for r in a)


def test_mcate_truth_key():
    pop = generate_population(DgpParams(n=300, seed=1))
    truth = population_truth(pop)
    assert truth["mcate"] == pytest.approx(true_estimands(pop).tau_m)


# ---------------------------------------------------------------- replay

def test_replay_preserves_observed_cells(rng):
    s = make_sample(rng, n=120, pd=(0.1, 0.8))
    # make the sample monotone-compatible: nobody in control takes treatment
    s = validate_observed(ObservedSample(z=s.z, d=s.d * s.z, y=s.y, x=s.x))
    pop = replay_synthetic_population(s, seed=4)
    zb = s.z == 1
    np.testing.assert_array_equal(pop.d1[zb], s.d[zb])
    np.testing.assert_array_equal(pop.y1[zb], s.y[zb])
    np.testing.assert_array_equal(pop.d0[~zb], s.d[~zb])
    np.testing.assert_array_equal(pop.y0[~zb], s.y[~zb])
    assert pop.monotone and pop.exclusion_holds


def test_replay_monotone_with_two_sided_noncompliance(rng):
    s = make_sample(rng, n=200, pd=(0.3, 0.7))
    pop = replay_synthetic_population(s, seed=1)
    assert pop.monotone and pop.exclusion_holds
    again = replay_synthetic_population(s, seed=1)
    np.testing.assert_array_equal(pop.y0, again.y0)


def test_replay_perfect_compliance(rng):
    s = make_sample(rng, n=200)
    s = validate_observed(ObservedSample(z=s.z, d=s.z, y=s.y, x=s.x))
    pop = replay_synthetic_population(s, seed=2)
    np.testing.assert_array_equal(pop.d0, 0)
    np.testing.assert_array_equal(pop.d1, 1)
    te = true_estimands(pop)
    assert te.tau == pytest.approx(te.tau_y, abs=1e-15)
    rows = {r.method: r for r in monte_carlo(pop, 200, s.n1, master_seed=2)}
    assert all(r.cp >= 0.94 for r in rows.values())


def test_interval_length_orderings():
    p = DgpParams(n=500, rho=1.0, n1_frac=0.4, seed=31)
    pop = generate_population(p)
    rows = {r.method: r for r in monte_carlo(pop, 200, p.n1, master_seed=31)}
    assert rows["ils"].ci_length <= 1.02 * rows["wald"].ci_length
    assert rows["cob"].ci_length <= 1.02 * rows["ob"].ci_length
