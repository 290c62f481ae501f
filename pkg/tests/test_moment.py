import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentldp import (SU2, DualVector, GroupElement, GroupSpec, NotAState, Spin, Standard, Torus, TorusRep,
                       Unitary, chamber_decompose, chi, log_chi, moment_map, nonlinear_pairing)
from momentldp.lie import (AlgebraVector, algebra_basis, coadjoint, exp_alg, haar_sample, pairing,
                           random_algebra, random_element)
from momentldp.moment import extended_action, su2_pairing_closed_form
from momentldp.states import random_state

U2 = GroupSpec.of(Unitary(2))
SU = GroupSpec.of(SU2())
GROUPS = [U2, GroupSpec.of(Unitary(3)), SU, GroupSpec.of(Torus(2)), GroupSpec.of(Unitary(2), Torus(1))]


def test_moment_map_examples(rng):
    x = moment_map(Standard(2), np.diag([0.7, 0.3]))
    assert np.allclose(x.parts[0], np.diag([0.7, 0.3]))
    p = 0.37
    x = moment_map(TorusRep([(0,), (1,)]), np.diag([1 - p, p]))
    assert x.parts[0] == pytest.approx([p])
    rep = Spin(1)
    rho = random_state(3, rng)
    x = moment_map(rep, rho)
    for xi in algebra_basis(rep.group):
        assert abs(pairing(x, xi) - np.trace(rep.derived(xi) @ rho).real) <= 1e-12


def test_moment_map_rejects_non_states():
    with pytest.raises(NotAState):
        moment_map(Standard(2), np.diag([0.8, 0.3]))
    with pytest.raises(NotAState):
        moment_map(Standard(2), np.diag([1.2, -0.2]))


@pytest.mark.parametrize("rep", [Standard(2), Standard(3), Spin(1.5), TorusRep([(0, 1), (2, 0), (1, 1)])], ids=str)
def test_moment_map_equivariance(rep, rng):
    rho = random_state(rep.dim, rng)
    k = haar_sample(rep.group, rng)
    pk = rep.apply(k)
    a = moment_map(rep, pk @ rho @ pk.conj().T)
    assert a.max_abs_diff(coadjoint(k, moment_map(rep, rho))) <= 1e-10


def test_chamber_decompose_examples(rng):
    x = DualVector(U2, [np.diag([0.7, 0.3])])
    cd = chamber_decompose(x)
    assert np.allclose(cd.x0.parts[0], x.parts[0]) and np.allclose(cd.h.parts[0], np.eye(2))
    cd = chamber_decompose(DualVector(U2, [np.diag([0.3, 0.7])]))
    assert np.allclose(cd.x0_cartan, [0.7, 0.3])
    assert np.allclose(np.abs(cd.h.parts[0]), [[0, 1], [1, 0]])
    for group in GROUPS:
        x = random_algebra(group, rng, cls=DualVector)
        cd = chamber_decompose(x)
        assert coadjoint(cd.h, cd.x0).max_abs_diff(x) <= 1e-10
        for f, p in zip(group.factors, cd.x0.parts):
            if f.is_matrix:
                assert np.all(np.diff(np.diag(p).real) <= 0)


def test_chamber_decompose_deterministic_ties():
    x = DualVector(GroupSpec.of(Unitary(3)), [np.eye(3) * 0.5])
    a, b = chamber_decompose(x), chamber_decompose(x)
    assert np.array_equal(a.h.parts[0], b.h.parts[0])


def test_extended_action_examples(rng):
    for group in GROUPS:
        x = random_algebra(group, rng, cls=DualVector)
        k = haar_sample(group, rng)
        assert extended_action(k, x).max_abs_diff(coadjoint(k, x)) <= 1e-10
        g1, g2 = random_element(group, rng, 0.7), random_element(group, rng, 0.7)
        lhs = extended_action(g2, extended_action(g1, x))
        assert lhs.max_abs_diff(extended_action(g2 @ g1, x)) <= 1e-9
    x0 = DualVector.from_cartan(U2, [0.8, 0.2])
    a = exp_alg(AlgebraVector(U2, [np.diag([0.4, -1.1])]))
    assert extended_action(a, x0).max_abs_diff(x0) <= 1e-12


def test_chi_examples(rng):
    for group in GROUPS:
        x = random_algebra(group, rng, cls=DualVector)
        assert chi(x, haar_sample(group, rng)) == pytest.approx(1, abs=1e-12)
    p, t = 0.3, 1.7
    g = GroupElement(GroupSpec.of(Torus(1)), [[np.exp(t / 2)]])
    assert chi(DualVector(GroupSpec.of(Torus(1)), [[p]]), g) == pytest.approx(math.exp(p * t), rel=1e-14)


@pytest.mark.parametrize("group", GROUPS, ids=str)
def test_chi_properties(group, rng):
    for _ in range(20):
        x = random_algebra(group, rng, cls=DualVector)
        g1, g2 = random_element(group, rng, 0.7), random_element(group, rng, 0.7)
        k = haar_sample(group, rng)
        assert log_chi(x, g2 @ g1) == pytest.approx(log_chi(extended_action(g1, x), g2) + log_chi(x, g1), abs=1e-9)
        assert log_chi(coadjoint(k, x), g1 @ k.inv()) == pytest.approx(log_chi(x, g1), abs=1e-9)
        assert log_chi(x, g1.inv()) == pytest.approx(-log_chi(extended_action(g1.inv(), x), g1), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 4), st.integers(0, 2 ** 32 - 1))
def test_positive_homogeneity(t, seed):
    rng = np.random.default_rng(seed)
    group = GroupSpec.of(Unitary(3))
    x = random_algebra(group, rng, cls=DualVector)
    g = random_element(group, rng, 0.7)
    xi = random_algebra(group, rng)
    assert log_chi(x * t, g) == pytest.approx(t * log_chi(x, g), abs=1e-10)
    assert nonlinear_pairing(x * t, xi) == pytest.approx(t * nonlinear_pairing(x, xi), abs=1e-10)


def test_nonlinear_pairing_examples(rng):
    for group in GROUPS:
        x = random_algebra(group, rng, cls=DualVector)
        assert nonlinear_pairing(x, AlgebraVector.zero(group)) == pytest.approx(0, abs=1e-14)
    x = DualVector.from_cartan(U2, [0.9, 0.1])
    xi = AlgebraVector(U2, [np.diag([1.3, -0.4])])
    assert nonlinear_pairing(x, xi) == pytest.approx(pairing(x, xi), abs=1e-12)
    group = GroupSpec.of(Torus(3))
    x, xi = random_algebra(group, rng, cls=DualVector), random_algebra(group, rng)
    assert nonlinear_pairing(x, xi) == pytest.approx(pairing(x, xi), abs=1e-12)


def test_nonlinear_pairing_methods_agree(rng):
    for group in GROUPS:
        x, xi = random_algebra(group, rng, cls=DualVector), random_algebra(group, rng)
        assert nonlinear_pairing(x, xi, method="minors") == pytest.approx(
            nonlinear_pairing(x, xi, method="definition"), abs=1e-10)


def test_su2_closed_form(rng):
    for _ in range(100):
        x, xi = random_algebra(SU, rng, cls=DualVector), random_algebra(SU, rng, scale=3)
        assert nonlinear_pairing(x, xi, method="definition") == pytest.approx(su2_pairing_closed_form(x, xi),
                                                                             abs=1e-10)
    x = random_algebra(SU, rng, cls=DualVector)
    assert su2_pairing_closed_form(x * 0, random_algebra(SU, rng)) == 0
    assert su2_pairing_closed_form(x, AlgebraVector.zero(SU)) == pytest.approx(0, abs=1e-15)
