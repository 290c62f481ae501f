import math

import numpy as np
import pytest
from scipy import stats

from momentldp import (ChamberBall, Complement, DegenerateRegion, DualVector, Everything, HalfSpace, Spin,
                       Standard, TooLarge, TorusRep, TraceBall, UnsupportedRep, chamber_decompose,
                       coadjoint, empirical_rate, estimate_mu, exact_mu, infimum_rate, sample_measurement,
                       sample_measurements, verify_upper_bound, weight_data)
from momentldp.simulate import (bound_prefactor, isotypic_probabilities, qubit_block_probability,
                                sample_orbit_direction, wilson_interval)
from momentldp.states import maximally_mixed, random_state

RHO = np.diag([0.7, 0.3]).astype(complex)
Q = Standard(2)
BERN = TorusRep([(0,), (1,)])


def kl(a, p):
    return a * math.log(a / p) + (1 - a) * math.log((1 - a) / (1 - p))


def test_isotypic_examples(rng):
    assert isotypic_probabilities(Spin(0.5), RHO, 1) == {(1, 0): pytest.approx(1.0)}
    probs = isotypic_probabilities(Q, maximally_mixed(2), 2)
    assert probs[(2, 0)] == pytest.approx(0.75, abs=1e-12) and probs[(1, 1)] == pytest.approx(0.25, abs=1e-12)
    p = 0.35
    law = isotypic_probabilities(BERN, np.diag([1 - p, p]), 9)
    for (k,), v in law.items():
        assert v == pytest.approx(math.comb(9, k) * p ** k * (1 - p) ** (9 - k), abs=1e-14)
    rho = random_state(2, rng)
    for m in range(1, 8):
        probs = isotypic_probabilities(Q, rho, m)
        assert sum(probs.values()) == pytest.approx(1, abs=1e-9)
        s, t = sorted(np.linalg.eigvalsh(rho))[::-1]
        for lab, v in probs.items():
            assert v == pytest.approx(qubit_block_probability(s, t, m, lab), abs=1e-12)


def test_isotypic_errors():
    with pytest.raises(TooLarge):
        isotypic_probabilities(Q, RHO, 15)
    with pytest.raises(UnsupportedRep):
        isotypic_probabilities(Standard(3), maximally_mixed(3), 2)


def test_direction_haar_for_invariant_state():
    rng = np.random.default_rng(3)
    hs = sample_orbit_direction(Q, (3, 1), maximally_mixed(2), rng, size=5000)
    assert stats.kstest(np.abs(hs[:, 0, 0]) ** 2, "uniform").pvalue > 0.01


def test_single_copy_pure_state_mean():
    # E[x] = (rho + I) / 3 for the pure state diag(1, 0): the Bloch vector shrinks by 1/3
    rng = np.random.default_rng(4)
    rho = np.diag([1.0, 0.0]).astype(complex)
    batch = sample_measurements(Q, rho, 1, 40000, rng)
    mean = batch.xparts[0].mean(axis=0)
    se = batch.xparts[0].real.std(axis=0).max() / math.sqrt(40000)
    assert np.abs(mean - (rho + np.eye(2)) / 3).max() <= 4 * se


def test_outcome_invariants(rng):
    rho = random_state(2, rng)
    for m in (1, 3, 6):
        o = sample_measurement(Q, rho, m, rng)
        lam = DualVector.from_cartan(Q.group, np.array(o.label, float) / m)
        assert o.x.max_abs_diff(coadjoint(o.direction, lam)) <= 1e-10
        assert np.allclose(chamber_decompose(o.x).x0_cartan, np.array(o.label) / m, atol=1e-10)
        assert weight_data(Q).polytope.contains(chamber_decompose(o.x).x0_cartan)


def test_bernoulli_single_copy():
    rng = np.random.default_rng(5)
    batch = sample_measurements(BERN, np.diag([0.7, 0.3]), 1, 20000, rng)
    assert set(np.unique(batch.x0)) <= {0.0, 1.0}
    assert abs(batch.x0.mean() - 0.3) <= 4 * math.sqrt(0.21 / 20000)


def test_six_copy_mean():
    rng = np.random.default_rng(6)
    m, n = 6, 50000
    probs = isotypic_probabilities(Q, RHO, m)
    exact = sum(v * np.array(k, float) / m for k, v in probs.items())
    batch = sample_measurements(Q, RHO, m, n, rng)
    se = batch.x0.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(batch.x0.mean(axis=0) - exact) <= 3 * se + 1e-12)


def test_estimate_mu_examples():
    p, ci = estimate_mu(Q, RHO, 5, Everything(), 1000, seed=1)
    assert p == 1.0 and ci[1] == 1.0
    ball = ChamberBall((0.7, 0.3), 0.15)
    ex = exact_mu(Q, RHO, 10, ball)
    p, (lo, hi) = estimate_mu(Q, RHO, 10, ball, 40000, seed=2)
    assert lo <= ex <= hi
    # empirical frequency from raw samples agrees with estimate_mu under the same region
    batch = sample_measurements(Q, RHO, 10, 40000, np.random.default_rng(9))
    raw = ball.contains_batch(batch.x0).mean()
    assert abs(raw - p) <= 4 * math.sqrt(p * (1 - p) * 2 / 40000)


def test_estimate_mu_deterministic():
    region = ChamberBall((0.7, 0.3), 0.15)
    a = estimate_mu(Q, RHO, 6, region, 5000, seed=11, workers=3)
    b = estimate_mu(Q, RHO, 6, region, 5000, seed=11, workers=3)
    assert a == b


def test_trace_ball_matches_quadrature():
    x = DualVector(Q.group, [np.array([[0.65, 0.1], [0.1, 0.35]])])
    region = TraceBall(x, 0.2)
    ex = exact_mu(Q, RHO, 4, region)
    p, (lo, hi) = estimate_mu(Q, RHO, 4, region, 40000, seed=3)
    assert lo - 2e-3 <= ex <= hi + 2e-3


def test_complement_decays():
    region = Complement(ChamberBall((0.7,), 0.15))
    mus = [exact_mu(BERN, np.diag([0.3, 0.7]), m, region) for m in (20, 60, 120)]
    assert mus[0] > mus[1] > mus[2]
    inf = infimum_rate(BERN, np.diag([0.3, 0.7]), region).value
    slope = -(math.log(mus[2]) - math.log(mus[1])) / 60
    assert 0.5 * inf <= slope <= 1.5 * inf


def test_upper_bound_examples():
    rows = verify_upper_bound(Q, RHO, range(4, 13), HalfSpace((1.0, 0.0), 0.95))
    assert all(r.holds for r in rows)
    rows = verify_upper_bound(Q, RHO, [2, 5, 8], ChamberBall((0.7, 0.3), 0.1))
    assert all(r.inf_rate == 0 and r.rhs >= 1 and r.holds for r in rows)
    rows = verify_upper_bound(BERN, np.diag([0.5, 0.5]), range(2, 40), HalfSpace((1.0,), 0.8))
    for r in rows:
        tail = sum(math.comb(r.m, k) for k in range(math.ceil(0.8 * r.m - 1e-9), r.m + 1)) / 2 ** r.m
        assert r.mu == pytest.approx(tail, rel=1e-12) and r.holds


def test_upper_bound_monte_carlo():
    rows = verify_upper_bound(Q, RHO, [6, 10], HalfSpace((1.0, 0.0), 0.9), n_samples=4000, seed=4)
    assert all(r.holds for r in rows) and all(r.ci[0] <= r.exact <= r.ci[1] for r in rows)


def test_bound_prefactor():
    assert bound_prefactor(Q, 3) == 4.0 ** 3


def test_infimum_rate_values():
    r = infimum_rate(Q, RHO, HalfSpace((1.0, 0.0), 0.9))
    assert r.value == pytest.approx(0.9 * math.log(0.9 / 0.7) + 0.1 * math.log(0.1 / 0.3), abs=1e-8)
    assert infimum_rate(BERN, np.diag([0.7, 0.3]), HalfSpace((1.0,), 0.6)).value == pytest.approx(
        kl(0.6, 0.3), abs=1e-8)
    assert infimum_rate(Q, RHO, Everything()).value == pytest.approx(0, abs=1e-12)


def test_bernoulli_rates_approach_kl_from_above():
    # Chernoff: mu_m <= exp(-m KL), so every exact rate sits at or above KL
    rows = empirical_rate(BERN, np.diag([0.7, 0.3]), HalfSpace((1.0,), 0.6), [10, 25, 50, 100, 200, 400])
    rates = [r.rate for r in rows]
    target = kl(0.6, 0.3)
    assert all(r >= target - 1e-12 for r in rates)
    assert all(b < a for a, b in zip(rates, rates[1:]))
    assert rates[-1] - target <= 0.02


def test_qubit_rates_trend_to_keyl_infimum():
    region = HalfSpace((1.0, 0.0), 0.9)
    rows = empirical_rate(Q, RHO, region, [4, 8, 12, 14])
    target = infimum_rate(Q, RHO, region).value
    gaps = [r.rate - target for r in rows]
    assert all(g >= -1e-12 for g in gaps) and gaps[-1] < gaps[0]


def test_rates_vanish_when_region_holds_moment():
    rows = empirical_rate(BERN, np.diag([0.7, 0.3]), ChamberBall((0.3,), 0.1), [10, 100, 400])
    assert rows[-1].rate < rows[0].rate and rows[-1].rate < 1e-3


def test_degenerate_region():
    region = HalfSpace((1.0, 0.0), 0.99)
    with pytest.raises(DegenerateRegion):
        empirical_rate(Q, RHO, TraceBall(DualVector.from_cartan(Q.group, [1.0, 0.0]), 0.01), [4],
                       n_samples=200, seed=1)
    rows = empirical_rate(Q, RHO, TraceBall(DualVector.from_cartan(Q.group, [1.0, 0.0]), 0.01), [4],
                          n_samples=200, seed=1, on_degenerate="bound")
    assert rows[0].lower_bound_only and rows[0].rate > 0
    assert exact_mu(Q, RHO, 4, region) > 0


def test_lln_trend_beyond_small_m():
    # block sums from the closed form extend the ball measure past the decomposition limit
    def ball_mass(m):
        tot = 0.0
        for l2 in range(m // 2 + 1):
            l1 = m - l2
            if math.hypot(l1 / m - 0.7, l2 / m - 0.3) <= 0.15 * (1 + 1e-12):
                tot += qubit_block_probability(0.7, 0.3, m, (l1, l2))
        return tot

    assert ball_mass(14) == pytest.approx(exact_mu(Q, RHO, 14, ChamberBall((0.7, 0.3), 0.15)), abs=1e-12)
    seq = [ball_mass(m) for m in (20, 30, 40, 60, 100, 200)]
    assert all(b > a for a, b in zip(seq, seq[1:]))
    assert seq[3] > 0.9


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
