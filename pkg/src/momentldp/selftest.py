"""Invariant suites run on built-in instances.

Each suite returns a :class:`SuiteResult` with the number of checks, the
number of failures and the largest residual.  ``perturb`` names suites
whose computed quantity is deliberately corrupted, to confirm that the
harness reports failures.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .lie import (SU2, DualVector, GroupElement, GroupSpec, Torus, Unitary, coadjoint, haar_sample, haar_unitary,
                  iwasawa, iwasawa_gram_schmidt, random_algebra, random_element, unitarity_error)
from .moment import (chamber_decompose, extended_action, log_chi, moment_map, nonlinear_pairing,
                     su2_pairing_closed_form)
from .optimize import OptimizerOptions
from .rate import rate_keyl_closed, rate_numeric
from .representations import (Spin, Standard, TorusRep, highest_weight_vector, weight_data)
from .simulate import isotypic_probabilities, qubit_block_probability
from .states import random_state

PERTURBATION = 1e-6


@dataclass
class SuiteResult:
    name: str
    checks: int
    failures: int
    max_residual: float
    tolerance: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


class _Tally:
    def __init__(self, name, tol):
        self.name, self.tol = name, tol
        self.checks = self.failures = 0
        self.worst = 0.0

    def add(self, residual, tol=None):
        tol = self.tol if tol is None else tol
        self.checks += 1
        r = float(residual)
        if not r <= tol:
            self.failures += 1
        if not r <= self.worst:
            self.worst = r

    def result(self, t0):
        return SuiteResult(self.name, self.checks, self.failures, self.worst, self.tol,
                           time.perf_counter() - t0)


CHI_GROUPS = (GroupSpec.of(Unitary(2)), GroupSpec.of(Unitary(3)), GroupSpec.of(SU2()),
              GroupSpec.of(Torus(3)))


def suite_iwasawa(n, rng, perturb=False):
    t0 = time.perf_counter()
    tal = _Tally("iwasawa_roundtrip", 1e-10)
    uni = _Tally("iwasawa_unitarity", 1e-12)
    for d in (2, 3, 5):
        g_group = GroupSpec.of(Unitary(d))
        for _ in range(n):
            g = random_element(g_group, rng)
            f = iwasawa(g)
            rec = f.reconstruct().parts[0]
            if perturb:
                rec = rec + PERTURBATION
            gm = g.parts[0]
            tal.add(np.abs(rec - gm).max() / max(1.0, np.abs(gm).max()))
            uni.add(unitarity_error(f.k))
        gs = iwasawa_gram_schmidt(g)
        tal.add(np.abs(gs.alpha.parts[0] - f.alpha.parts[0]).max())
    return [tal.result(t0), uni.result(t0)]


def _rel(a, b):
    return abs(math.expm1(a - b))


def suite_chi(n, rng, perturb=False):
    t0 = time.perf_counter()
    mult = _Tally("chi_multiplicativity", 1e-9)
    kinv = _Tally("chi_k_invariance", 1e-9)
    inv = _Tally("chi_inverse", 1e-9)
    hom = _Tally("chi_homogeneity", 1e-9)
    per_group = max(1, n // len(CHI_GROUPS))
    for group in CHI_GROUPS:
        for _ in range(per_group):
            x = random_algebra(group, rng, cls=DualVector)
            g1, g2 = random_element(group, rng, 0.7), random_element(group, rng, 0.7)
            k = haar_sample(group, rng)
            lhs = log_chi(x, g2 @ g1)
            rhs = log_chi(extended_action(g1, x), g2) + log_chi(x, g1)
            mult.add(_rel(lhs + (PERTURBATION if perturb else 0.0), rhs))
            kinv.add(_rel(log_chi(coadjoint(k, x), g1 @ k.inv()), log_chi(x, g1)))
            inv.add(_rel(log_chi(x, g1.inv()), -log_chi(extended_action(g1.inv(), x), g1)))
            t = float(rng.uniform(0, 3))
            hom.add(_rel(log_chi(x * t, g1), t * log_chi(x, g1)))
    return [s.result(t0) for s in (mult, kinv, inv, hom)]


def suite_highest_weight(n, rng, perturb=False):
    t0 = time.perf_counter()
    tal = _Tally("highest_weight_orbit", 1e-9)
    for j in (0.5, 1.0, 1.5):
        rep = Spin(j)
        group = rep.group
        v = highest_weight_vector(j, "spin")
        lam = DualVector.from_cartan(group, [j])
        for _ in range(max(1, n // 3)):
            g = random_element(group, rng, 0.7)
            h = haar_sample(group, rng)
            w = rep.apply(h) @ v
            pg = rep.apply(g)
            lhs = pg @ np.outer(w, w.conj()) @ pg.conj().T
            k = iwasawa(g @ h).k
            wk = rep.apply(k) @ v
            c = math.exp(log_chi(coadjoint(h, lam), g))
            rhs = c * np.outer(wk, wk.conj())
            if perturb:
                rhs = rhs * (1 + PERTURBATION)
            tal.add(np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max()))
    return [tal.result(t0)]


def suite_pairing(n, rng, perturb=False):
    t0 = time.perf_counter()
    tal = _Tally("su2_pairing_closed_form", 1e-10)
    group = GroupSpec.of(SU2())
    for _ in range(n):
        x = random_algebra(group, rng, cls=DualVector)
        xi = random_algebra(group, rng, scale=float(rng.uniform(0.1, 5)))
        a = nonlinear_pairing(x, xi, method="definition")
        b = su2_pairing_closed_form(x, xi)
        tal.add(abs(a - b) / max(1.0, abs(b)))
    hom = _Tally("pairing_homogeneity", 1e-10)
    for _ in range(n // 4):
        x = random_algebra(group, rng, cls=DualVector)
        xi = random_algebra(group, rng)
        t = float(rng.uniform(0, 3))
        hom.add(abs(nonlinear_pairing(x * t, xi) - t * nonlinear_pairing(x, xi)))
    return [tal.result(t0), hom.result(t0)]


def suite_moment(n, rng, perturb=False):
    t0 = time.perf_counter()
    eq = _Tally("moment_equivariance", 1e-10)
    cham = _Tally("chamber_reconstruction", 1e-10)
    for rep in (Standard(2), Standard(3), Spin(1), TorusRep([(0,), (1,), (2,)])):
        for _ in range(max(1, n // 4)):
            rho = random_state(rep.dim, rng)
            k = haar_sample(rep.group, rng)
            pk = rep.apply(k)
            a = moment_map(rep, pk @ rho @ pk.conj().T)
            b = coadjoint(k, moment_map(rep, rho))
            eq.add(a.max_abs_diff(b))
            cd = chamber_decompose(a)
            cham.add(cd.reconstruct().max_abs_diff(a))
    return [eq.result(t0), cham.result(t0)]


def suite_rate(n, rng, perturb=False):
    t0 = time.perf_counter()
    zero = _Tally("rate_zero_at_moment", 1e-8)
    keyl = _Tally("rate_keyl_oracle", 1e-6)
    cert = _Tally("polytope_certification", 0.5)
    opts = OptimizerOptions()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for rep in (Standard(2), Spin(1), TorusRep([(0,), (1,), (2,)])):
            for _ in range(max(1, n // 3)):
                rho = random_state(rep.dim, rng)
                zero.add(abs(rate_numeric(rep, rho, moment_map(rep, rho), opts).value))
        for d in (2, 3):
            rep = Standard(d)
            for _ in range(max(1, n // 2)):
                rho = random_state(d, rng)
                h = haar_unitary(d, rng)
                x0 = np.sort(rng.dirichlet(np.ones(d)))[::-1]
                hk = GroupElement(rep.group, [h])
                x = coadjoint(hk, DualVector.from_cartan(rep.group, x0))
                v = rate_numeric(rep, rho, x, opts).value
                keyl.add(abs(v - rate_keyl_closed(rho, h, x0)))
        rep = Standard(2)
        poly = weight_data(rep).polytope
        out = np.array([1.0, -1.0]) / math.sqrt(2)       # outward along the edge at (1, 0)
        for _ in range(max(2, n // 2)):
            rho = random_state(2, rng)
            k = haar_sample(rep.group, rng)
            for sign, should_inf in ((-1, False), (1, True)):
                x0 = np.array([1.0, 0.0]) + sign * 0.05 * out
                x = coadjoint(k, DualVector.from_cartan(rep.group, x0))
                res = rate_numeric(rep, rho, x, opts)
                ok = res.is_infinite == should_inf and poly.contains(x0) != should_inf
                cert.add(0.0 if ok else 1.0)
    return [zero.result(t0), keyl.result(t0), cert.result(t0)]


def suite_sampler(n, rng, perturb=False):
    t0 = time.perf_counter()
    tal = _Tally("block_probabilities", 1e-12)
    for m in range(1, 9):
        rho = random_state(2, rng)
        probs = isotypic_probabilities(Standard(2), rho, m)
        p, q = sorted(np.linalg.eigvalsh(rho))[::-1]
        tal.add(abs(sum(probs.values()) - 1))
        for k, v in probs.items():
            tal.add(abs(v - qubit_block_probability(p, q, m, k)))
    rep = TorusRep([(0,), (1,)])
    for m in (1, 5, 20):
        b = isotypic_probabilities(rep, np.diag([0.4, 0.6]).astype(complex), m)
        for k, v in b.items():
            tal.add(abs(v - math.comb(m, k[0]) * 0.6 ** k[0] * 0.4 ** (m - k[0])))
    return [tal.result(t0)]


SUITES = {
    "iwasawa": suite_iwasawa,
    "chi": suite_chi,
    "highest_weight": suite_highest_weight,
    "pairing": suite_pairing,
    "moment": suite_moment,
    "rate": suite_rate,
    "sampler": suite_sampler,
}

DEFAULT_SIZES = {"iwasawa": 200, "chi": 1000, "highest_weight": 300, "pairing": 1000,
                 "moment": 40, "rate": 6, "sampler": 1}


def run_selftest(seed: int = 0, suites=None, sizes=None, perturb=()) -> list:
    """Run the named suites (all by default) and return their results."""
    names = list(SUITES) if suites is None else list(suites)
    sizes = {**DEFAULT_SIZES, **(sizes or {})}
    out = []
    for i, name in enumerate(names):
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
        rng = np.random.default_rng([seed, i])
        out.extend(SUITES[name](sizes[name], rng, perturb=name in perturb))
    return out
