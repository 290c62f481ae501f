import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentldp import (DualVector, GroupElement, OptimizerOptions, Spin, Standard, TensorProduct, TorusRep,
                       chamber_decompose, log_Z, moment_map, rate_AN, rate_bipartite_pure, rate_contracted,
                       rate_cramer, rate_keyl_closed, rate_maximally_mixed, rate_numeric, tilt_point)
from momentldp.lie import AlgebraVector, coadjoint, haar_sample, haar_unitary, random_algebra, random_element
from momentldp.rate import rate_objective
from momentldp.states import maximally_mixed, pure_state, random_state

pytestmark = pytest.mark.filterwarnings("ignore")

RHO = np.diag([0.7, 0.3]).astype(complex)
Q = Standard(2)


def kl(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    m = a > 0
    return float(np.sum(a[m] * np.log(a[m] / b[m])))


def qubit_point(x0, h=None):
    x = DualVector.from_cartan(Q.group, x0)
    return x if h is None else coadjoint(GroupElement(Q.group, [h]), x)


def test_log_z_examples():
    rep = TorusRep([(0,), (1,)])
    p, t = 0.3, 0.8
    assert log_Z(rep, np.diag([1 - p, p]), AlgebraVector.zero(rep.group)) == 0
    assert log_Z(rep, np.diag([1 - p, p]), AlgebraVector(rep.group, [[t]])) == pytest.approx(
        math.log(1 - p + p * math.exp(t)), abs=1e-14)
    xi = AlgebraVector(Q.group, [np.diag([1.0, 0.0])])
    assert log_Z(Q, RHO, xi) == pytest.approx(math.log(0.7 * math.e + 0.3), abs=1e-12)


def test_rate_numeric_examples():
    assert abs(rate_numeric(Q, RHO, moment_map(Q, RHO)).value) <= 1e-8
    res = rate_numeric(Q, RHO, qubit_point([0.9, 0.1]))
    assert res.value == pytest.approx(kl([0.9, 0.1], [0.7, 0.3]), abs=1e-8)
    assert res.certificate.kind == "converged"
    out = rate_numeric(Q, RHO, qubit_point([1.2, -0.2]))
    assert out.is_infinite and out.certificate.kind == "diverged"
    c = out.certificate
    poly_max = max(np.dot(w, c.beta) for w in ([1, 0], [0, 1]))
    assert np.dot([1.2, -0.2], c.beta) > poly_max + 1e-9


def test_rate_boundary_and_rank_flags():
    res = rate_numeric(Q, RHO, qubit_point([1.0, 0.0]))
    assert "boundary" in res.flags
    assert res.value == pytest.approx(-math.log(0.7), abs=1e-6)
    pure = pure_state([0.6, 0.8])
    res = rate_numeric(Q, pure, moment_map(Q, pure))
    assert "rank_deficient" in res.flags and abs(res.value) < 1e-8


def test_rate_an_examples(rng):
    x = qubit_point([0.9, 0.1])
    assert rate_AN(Q, RHO, x).value == pytest.approx(rate_numeric(Q, RHO, x).value, abs=1e-6)
    rep = Standard(3)
    rho = random_state(3, rng)
    x = coadjoint(haar_sample(rep.group, rng), DualVector.from_cartan(rep.group, [0.6, 0.3, 0.1]))
    assert rate_AN(rep, rho, x).value == pytest.approx(rate_numeric(rep, rho, x).value, abs=1e-5)
    trep = TorusRep([(0,), (1,), (2,)])
    trho = np.diag([0.2, 0.5, 0.3])
    xt = DualVector.from_cartan(trep.group, [1.5])
    assert rate_AN(trep, trho, xt).value == pytest.approx(
        rate_cramer({(0,): 0.2, (1,): 0.5, (2,): 0.3}, [1.5]).value, abs=1e-8)


@pytest.mark.parametrize("rep", [Standard(2), Standard(3), Spin(1), TorusRep([(0, 0), (1, 0), (1, 2)])], ids=str)
def test_expression_equivalence(rep, rng):
    rho = random_state(rep.dim, rng)
    wd_pts = np.array([w for w, _ in __import__("momentldp").weight_data(rep).weights])
    lam = rng.dirichlet(np.ones(len(wd_pts)))
    x0 = 0.7 * (lam @ wd_pts) + 0.3 * wd_pts.mean(axis=0)
    x = coadjoint(haar_sample(rep.group, rng), DualVector.from_cartan(rep.group, np.sort(x0)[::-1]
                                                                        if rep.group.factors[0].is_matrix
                                                                        else x0))
    assert rate_AN(rep, rho, x).value == pytest.approx(rate_numeric(rep, rho, x).value, abs=1e-5)


def test_keyl_examples():
    w, v = np.linalg.eigh(RHO)
    h = v[:, ::-1]
    assert rate_keyl_closed(RHO, h, w[::-1]) == pytest.approx(0, abs=1e-15)
    ref = 0.9 * math.log(0.9 / 0.7) + 0.1 * math.log(0.1 / 0.3)
    assert rate_keyl_closed(RHO, np.eye(2), [0.9, 0.1]) == pytest.approx(ref, abs=1e-15)
    assert rate_keyl_closed(random_state(3, np.random.default_rng(1)), np.eye(3), [0.5, 0.5, 0.2]) == math.inf
    assert rate_keyl_closed(RHO, np.eye(2), [1.0, 0.0]) == pytest.approx(-math.log(0.7))


def test_cramer_examples():
    law = {(0,): 0.2, (1,): 0.5, (3,): 0.3}
    assert abs(rate_cramer(law, [0.5 + 0.9]).value) <= 1e-10
    assert rate_cramer(law, [3.2]).is_infinite
    assert rate_cramer(law, [-0.1]).certificate.kind == "diverged"


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.02, 0.98))
def test_cramer_bernoulli(p, x):
    got = rate_cramer({(0,): 1 - p, (1,): p}, [x]).value
    assert got == pytest.approx(kl([x, 1 - x], [p, 1 - p]), abs=1e-8)


def test_cramer_matches_torus_numeric(rng):
    rep = TorusRep([(0, 0), (2, 0), (0, 1), (1, 1)])
    rho = np.diag(rng.dirichlet(np.ones(4))).astype(complex)
    x = np.array([0.8, 0.5])
    law = {w: float(r) for w, r in zip(rep.weights, np.diag(rho).real)}
    assert rate_cramer(law, x).value == pytest.approx(
        rate_numeric(rep, rho, DualVector.from_cartan(rep.group, x)).value, abs=1e-8)


def clr(j, x0, grid=np.linspace(1e-6, 60, 600001)):
    f = x0 * grid - np.log(np.sinh((2 * j + 1) * grid / 2) / np.sinh(grid / 2))
    return math.log(2 * j + 1) + f.max()


@pytest.mark.parametrize("j,x0", [(0.5, 0.25), (1, 0.4), (1.5, 1.2), (2, 0.3)])
def test_maximally_mixed_clr(j, x0):
    assert rate_maximally_mixed(Spin(j), [x0]) == pytest.approx(clr(j, x0), abs=1e-6)


def test_maximally_mixed_examples():
    assert rate_maximally_mixed(Spin(1), [0.0]) == pytest.approx(0, abs=1e-12)
    assert rate_maximally_mixed(Standard(3), [1 / 3] * 3) == pytest.approx(0, abs=1e-10)
    assert rate_maximally_mixed(Spin(0.5), [0.5]) == pytest.approx(math.log(2), abs=1e-9)


def test_maximally_mixed_matches_numeric(rng):
    rep = Spin(1)
    x = coadjoint(haar_sample(rep.group, rng), DualVector.from_cartan(rep.group, [0.6]))
    assert rate_numeric(rep, maximally_mixed(3), x).value == pytest.approx(
        rate_maximally_mixed(rep, [0.6]), abs=1e-6)


def test_contracted():
    opts = OptimizerOptions(restarts=2)
    val, _ = rate_contracted(Q, maximally_mixed(2), [0.8, 0.2], opts)
    assert val == pytest.approx(rate_maximally_mixed(Q, [0.8, 0.2]), abs=1e-5)
    val, h = rate_contracted(Q, RHO, [0.9, 0.1], opts)
    assert val == pytest.approx(kl([0.9, 0.1], [0.7, 0.3]), abs=1e-5)
    val, _ = rate_contracted(Q, RHO, [0.7, 0.3], opts)
    assert abs(val) <= 1e-8


def test_bipartite_examples(rng):
    x0 = np.array([0.6, 0.4])
    psi = np.diag(np.sqrt(x0))
    assert rate_bipartite_pure(psi, np.eye(2), np.eye(2), x0) == pytest.approx(0, abs=1e-14)
    assert rate_bipartite_pure(psi, np.eye(2), np.eye(2), x0, [0.7, 0.3]) == math.inf
    assert rate_bipartite_pure(psi, np.eye(2), np.eye(2), [0.7, 0.4]) == math.inf


@pytest.mark.parametrize("d1,d2", [(2, 2), (2, 3)])
def test_bipartite_matches_numeric(d1, d2, rng):
    rep = TensorProduct((Standard(d1), Standard(d2)))
    psi = rng.normal(size=(d1, d2)) + 1j * rng.normal(size=(d1, d2))
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi.ravel(), psi.ravel().conj())
    h1, h2 = haar_unitary(d1, rng), haar_unitary(d2, rng)
    x1 = np.sort(rng.dirichlet(np.ones(min(d1, d2))))[::-1]
    x2 = np.zeros(d2)
    x2[:len(x1)] = x1
    x = DualVector(rep.group, [h1 @ np.diag(x1) @ h1.conj().T, h2 @ np.diag(x2) @ h2.conj().T])
    assert rate_bipartite_pure(psi, h1, h2, x1, x2) == pytest.approx(rate_numeric(rep, rho, x).value, abs=1e-5)


def test_tilt_examples(rng):
    rho = random_state(2, rng)
    x, v = tilt_point(Q, rho, Q.group.identity())
    assert v == pytest.approx(0, abs=1e-14) and x.max_abs_diff(moment_map(Q, rho)) <= 1e-14
    # a unitary tilt rotates the state by k* and the point back by k: the zero stays at J(rho)
    k = haar_sample(Q.group, rng)
    x, v = tilt_point(Q, rho, k)
    assert v == pytest.approx(0, abs=1e-12)
    assert x.max_abs_diff(moment_map(Q, rho)) <= 1e-12
    pk = k.parts[0]
    rotated = pk.conj().T @ rho @ pk
    assert coadjoint(k.inv(), x).max_abs_diff(moment_map(Q, rotated)) <= 1e-12


@pytest.mark.parametrize("rep", [Standard(2), Standard(3), Spin(1), TorusRep([(0,), (1,), (3,)])], ids=str)
def test_tilt_on_graph(rep, rng):
    for _ in range(3):
        rho = random_state(rep.dim, rng)
        g = random_element(rep.group, rng, 0.7)
        x, v = tilt_point(rep, rho, g)
        assert rate_numeric(rep, rho, x).value == pytest.approx(v, abs=1e-5)


def test_nonnegative_and_positive_away_from_zero(rng):
    rho = random_state(2, rng)
    j = moment_map(Q, rho)
    for _ in range(10):
        x0 = np.sort(rng.dirichlet([1, 1]))[::-1]
        x = coadjoint(haar_sample(Q.group, rng), DualVector.from_cartan(Q.group, x0))
        v = rate_numeric(Q, rho, x).value
        assert v >= -1e-8
        if np.abs(np.linalg.eigvalsh(x.parts[0] - j.parts[0])).sum() >= 0.05:
            assert v > 1e-5


def test_support_monotonicity(rng):
    rep = Standard(3)
    for _ in range(3):
        rho, tau = random_state(3, rng), random_state(3, rng)
        sigma = (rho + tau) / 2                      # rho <= 2 sigma
        x = coadjoint(haar_sample(rep.group, rng), DualVector.from_cartan(rep.group, [0.5, 0.3, 0.2]))
        assert rate_numeric(rep, rho, x).value >= rate_numeric(rep, sigma, x).value - math.log(2) - 1e-6


def test_midpoint_convexity_along_chamber(rng):
    rep = Standard(3)
    rho = random_state(3, rng)
    h = haar_sample(rep.group, rng)
    for _ in range(3):
        a = np.sort(rng.dirichlet(np.ones(3)))[::-1]
        b = np.sort(rng.dirichlet(np.ones(3)))[::-1]
        f = lambda c: rate_AN(rep, rho, coadjoint(h, DualVector.from_cartan(rep.group, c))).value  # noqa: E731
        assert f((a + b) / 2) <= (f(a) + f(b)) / 2 + 1e-6


def test_chamber_point_of_rate_point():
    cd = chamber_decompose(qubit_point([0.2, 0.8]))
    assert np.allclose(cd.x0_cartan, [0.8, 0.2])


def test_warnings_are_quiet_for_converged_runs():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rate_numeric(Q, RHO, qubit_point([0.8, 0.2]))


@pytest.mark.parametrize("rep", [Standard(3), Spin(1), TensorProduct((Standard(2), TorusRep([(0,), (2,)])))],
                         ids=str)
def test_objective_gradient_matches_finite_differences(rep, rng):
    rho = random_state(rep.dim, rng)
    x = moment_map(rep, random_state(rep.dim, rng))
    fun = rate_objective(rep, rho, chamber_decompose(x))
    theta = random_algebra(rep.group, rng, scale=0.5).coords()
    _, g = fun(theta)
    h = 1e-6
    fd = np.array([(fun(theta + h * e)[0] - fun(theta - h * e)[0]) / (2 * h) for e in np.eye(len(theta))])
    assert np.abs(fd - g).max() <= 1e-6 * max(1, np.abs(g).max())
