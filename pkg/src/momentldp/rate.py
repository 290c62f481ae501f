"""Rate functions of the moment-map estimation measures.

The rate at ``x = h . x0`` is computed in several equivalent ways:

* :func:`rate_numeric` maximizes ``<<x, xi>> - ln Z(xi)`` over ``xi``;
* :func:`rate_AN` maximizes over the diagonal ``alpha`` of the Borel
  subgroup after minimizing over its unipotent part;
* closed forms for the defining representation of ``U(d)``
  (:func:`rate_keyl_closed`), tori (:func:`rate_cramer`), the maximally
  mixed state (:func:`rate_maximally_mixed`) and pure bipartite states
  (:func:`rate_bipartite_pure`).

Points whose chamber representative lies outside the weight polytope get
value ``inf`` with a separating-direction certificate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import MaxIterations, SingularInput, SingularMinor, UnsupportedRep
from .errors import MismatchedGroup
from .lie import (SU2, AlgebraVector, DualVector, GroupElement, adjoint,
                  algebra_basis, as_dual, coadjoint, exp_alg, factor_basis,
                  haar_sample, log_positive)
from .moment import (ChamberDecomposition, chamber_decompose, derived_basis,
                     extended_action, log_chi, log_Z_and_grad, moment_map,
                     pairing_value_and_grad)
from .optimize import OptimizerOptions, maximize, multistart_maximize
from .polytope import Polytope
from .representations import Representation, Spin, Standard, weight_data
from .states import is_faithful, validate_state

BOUNDARY_TOL = 1e-9
UNBOUNDED_SLOPE = 1e-7
RELAXED_FACTOR = 1e3


@dataclass(frozen=True)
class Certificate:
    """Why a rate value is trusted.

    ``kind`` is ``'converged'`` (gradient norm below tolerance),
    ``'diverged'`` (chamber point outside the weight polytope: ``beta`` in
    Cartan coordinates with ``<x0, beta>`` above the polytope maximum and
    ``slope`` the growth rate along ``direction``), ``'unbounded'`` (the
    objective grows without bound along ``direction`` although ``x0`` lies
    in the polytope, which happens for rank-deficient states) or
    ``'closed_form'``.
    """

    kind: str
    grad_norm: float | None = None
    beta: np.ndarray | None = None
    slope: float | None = None
    direction: AlgebraVector | None = None
    margin: float | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.grad_norm is not None:
            d["grad_norm"] = float(self.grad_norm)
        if self.beta is not None:
            d["beta"] = [float(b) for b in self.beta]
        if self.slope is not None:
            d["slope"] = float(self.slope)
        if self.margin is not None:
            d["margin"] = float(self.margin)
        if self.direction is not None:
            d["direction"] = [float(c) for c in self.direction.coords()]
        return d


@dataclass
class RateResult:
    """Value of a rate function with provenance.

    Attributes
    ----------
    value : float
        Rate value, possibly ``inf``.
    argmax_xi : AlgebraVector or None
        Maximizer (or last iterate) of the variational problem.
    certificate : Certificate
    evaluations : int
        Objective evaluations spent.
    flags : list of str
        ``'boundary'`` (x0 on the polytope boundary), ``'rank_deficient'``
        (non-faithful state: only the upper bound is guaranteed),
        ``'unattained'`` (supremum approached at infinity),
        ``'tolerance_relaxed'`` (gradient above tolerance but within a
        factor 1e3 of it).
    method : str
    """

    value: float
    argmax_xi: AlgebraVector | None
    certificate: Certificate
    evaluations: int = 0
    flags: list = field(default_factory=list)
    method: str = ""
    raw: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "value": "inf" if self.is_infinite else float(self.value),
            "certificate": self.certificate.to_dict(),
            "argmax_xi": None if self.argmax_xi is None else [float(c) for c in self.argmax_xi.coords()],
            "evaluations": int(self.evaluations),
            "flags": list(self.flags),
        }


# ---------------------------------------------------------------------------
# helpers


def _check_rep_point(rep, x):
    if x.group != rep.group:
        raise MismatchedGroup(f"dual vector over {x.group}, representation over {rep.group}")


def _cartan_direction(group, beta, h: GroupElement) -> AlgebraVector:
    """Algebra element ``h beta h*`` for Cartan coordinates ``beta``."""
    return adjoint(h, AlgebraVector.from_cartan(group, beta))


def _flags(rho, cd, poly):
    flags = []
    if poly.on_boundary(cd.x0_cartan, BOUNDARY_TOL):
        flags.append("boundary")
    if not is_faithful(rho):
        flags.append("rank_deficient")
    return flags


def _diverged(group, x0c, cd, poly, method, fun=None):
    """Certificate for ``x0`` outside the weight polytope, or None."""
    sep = poly.separating_direction(x0c)
    if sep is None:
        return None
    beta, gap = sep
    direction = _cartan_direction(group, beta, cd.h)
    nrm = direction.norm()
    cert = Certificate("diverged", beta=beta, slope=gap / nrm, direction=direction / nrm, margin=gap)
    nev = 0
    if fun is not None:
        # confirm the objective grows along the ray
        theta = direction.coords() / nrm
        f1, f2 = fun(10 * theta)[0], fun(20 * theta)[0]
        nev = 2
        if not f2 > f1:
            warnings.warn("separating direction did not increase the objective numerically")
    return RateResult(math.inf, None, cert, nev, [], method)


def log_Z(rep: Representation, rho, xi: AlgebraVector) -> float:
    """``ln Tr(rho pi(exp xi))``.

    Raises
    ------
    NotAState
    """
    rho = validate_state(rho, rep.dim)
    _check_rep_point(rep, xi)
    return log_Z_and_grad(derived_basis(rep), rho, xi.coords(), grad=False)[0]


def log_Z_grad(rep: Representation, rho, xi: AlgebraVector) -> AlgebraVector:
    """Gradient of :func:`log_Z` under the trace form (exact Frechet derivative)."""
    rho = validate_state(rho, rep.dim)
    _, g = log_Z_and_grad(derived_basis(rep), rho, xi.coords())
    return AlgebraVector.from_coords(rep.group, g)


def rate_objective(rep, rho, cd: ChamberDecomposition):
    """``theta -> (<<x, xi>> - ln Z(xi), gradient)`` in algebra coordinates."""
    basis = derived_basis(rep)
    group = rep.group

    def fun(theta):
        xi = AlgebraVector.from_coords(group, theta)
        p, gp = pairing_value_and_grad(cd, xi)
        lz, gz = log_Z_and_grad(basis, rho, theta)
        if gp is None:
            return -np.inf, None
        return p - lz, gp.coords() - gz
    return fun


def _resolve_runs(runs, fun, opts, method, flags, poly, x0c, make_xi=None, extra_eval=0):
    """Turn optimizer runs into a RateResult.

    Escaped runs are probed further out; a positive slope there means an
    infinite supremum.  Otherwise the best finite run is reported.
    """
    make_xi = make_xi or (lambda v: None)
    nev = sum(r.evaluations for r in runs) + extra_eval
    escaped = [r for r in runs if r.status == "escaped"]
    for r in sorted(escaped, key=lambda r: -r.value):
        t = np.linalg.norm(r.x)
        f1 = fun(r.x)[0]
        f2 = fun(2 * r.x)[0]
        nev += 2
        slope = (f2 - f1) / t if np.isfinite(f2) else 0.0
        if slope > UNBOUNDED_SLOPE:
            sep = poly.separating_direction(x0c)
            d = make_xi(r.direction)
            if sep is not None:
                cert = Certificate("diverged", beta=sep[0], slope=slope, direction=d, margin=sep[1])
            else:
                cert = Certificate("unbounded", slope=slope, direction=d)
            return RateResult(math.inf, d, cert, nev, flags, method, raw=r.direction)
    finite = [r for r in runs if np.isfinite(r.value)]
    best = max(finite, key=lambda r: r.value)
    if best.status == "escaped":
        val = max(best.value, fun(2 * best.x)[0])
        return RateResult(val, make_xi(best.x), Certificate("converged", grad_norm=best.grad_norm),
                          nev + 1, flags + ["unattained"], method, raw=best.x)
    gn = best.grad_norm
    if gn > opts.gradient_tolerance:
        conv = [r for r in finite if r.grad_norm <= opts.gradient_tolerance]
        if conv and max(r.value for r in conv) >= best.value - 1e-10:
            best = max(conv, key=lambda r: r.value)
            gn = best.grad_norm
        elif gn <= RELAXED_FACTOR * opts.gradient_tolerance or ("boundary" in flags and gn <= 1e-4):
            flags = flags + ["tolerance_relaxed"]
        else:
            raise MaxIterations(f"{method}: best gradient norm {gn:.3e} after "
                                f"{best.iterations} iterations ({best.status})")
    return RateResult(best.value, make_xi(best.x), Certificate("converged", grad_norm=gn),
                      nev, flags, method, raw=best.x)


# ---------------------------------------------------------------------------
# general-purpose rate


def rate_numeric(rep: Representation, rho, x: DualVector,
                 opts: OptimizerOptions = OptimizerOptions()) -> RateResult:
    """Rate ``sup_xi <<x, xi>> - ln Z(xi)`` by multistart BFGS.

    Parameters
    ----------
    rep : Representation
    rho : array_like
        Density matrix on the representation space.
    x : DualVector
    opts : OptimizerOptions

    Returns
    -------
    RateResult
        ``inf`` with a ``'diverged'`` certificate when the chamber point lies
        outside the weight polytope, ``inf`` with an ``'unbounded'``
        certificate when the optimizer escapes with positive slope inside the
        polytope, otherwise the converged supremum.

    Raises
    ------
    NotAState
    MaxIterations
        When no start converges or certifies divergence.
    """
    rho = validate_state(rho, rep.dim)
    _check_rep_point(rep, x)
    cd = chamber_decompose(x)
    x0c = cd.x0_cartan
    poly = weight_data(rep).polytope
    fun = rate_objective(rep, rho, cd)
    div = _diverged(rep.group, x0c, cd, poly, "numeric", fun)
    if div is not None:
        div.flags = _flags(rho, cd, poly)
        return div
    flags = _flags(rho, cd, poly)
    _, runs = multistart_maximize(fun, rep.group.compact_dim, opts)
    return _resolve_runs(runs, fun, opts, "numeric", flags, poly, x0c,
                         lambda v: AlgebraVector.from_coords(rep.group, v))


# ---------------------------------------------------------------------------
# Borel (AN) form


def _leading_minor_ratios(sigma: np.ndarray, tol: float = 1e-13):
    """``D_i / D_{i-1}`` of a PSD matrix, or None when a minor underflows."""
    d = sigma.shape[0]
    scale = max(np.abs(sigma).max(), 1e-300)
    out = np.zeros(d)
    prev = 1.0
    for i in range(1, d + 1):
        if prev <= tol:
            return None
        cur = np.linalg.det(sigma[:i, :i] / scale).real
        out[i - 1] = max(cur / prev, 0.0) * scale
        prev = cur
    return out


def _unipotent_slices(group):
    """Index layout of strictly-upper-triangular parameters per matrix factor."""
    layout, i = [], 0
    for f in group.factors:
        if f.is_matrix:
            iu = np.triu_indices(f.size, 1)
            k = len(iu[0])
            layout.append((f, iu, slice(i, i + 2 * k)))
            i += 2 * k
        else:
            layout.append((f, None, None))
    return layout, i


def _unipotent_element(group, layout, z):
    parts = []
    for f, iu, sl in layout:
        if iu is None:
            parts.append(np.ones(f.d, complex))
            continue
        n = np.eye(f.size, dtype=complex)
        k = len(iu[0])
        v = z[sl]
        n[iu] = v[:k] + 1j * v[k:]
        parts.append(n)
    return GroupElement(group, parts, check=False)


def _unipotent_generators(group, layout, n: GroupElement):
    """For each real parameter, the algebra element ``n^{-1} dn`` (raw parts)."""
    gens = []
    ninv = [np.linalg.inv(p) if f.is_matrix else None for (f, _, _), p in zip(layout, n.parts)]
    for fi, (f, iu, sl) in enumerate(layout):
        if iu is None:
            continue
        for phase in (1.0, 1j):
            for a, b in zip(*iu):
                e = np.zeros((f.size, f.size), complex)
                e[a, b] = phase
                parts = [np.zeros((g.size, g.size), complex) if g.is_matrix else np.zeros(g.d)
                         for g, _, _ in layout]
                parts[fi] = ninv[fi] @ e
                gens.append(parts)
    return gens


class _InnerN:
    """``min_n sum_b D_b [pi(n)* sigma pi(n)]_bb`` over the unipotent subgroup.

    Conjugating ``pi(exp(alpha / 2))`` through ``n`` turns the Borel-form
    inner problem into a weighted diagonal sum with ``sigma`` fixed, whose
    minimizer stays bounded as ``alpha`` grows.  Warm-started across calls.
    """

    def __init__(self, rep, sigma, opts):
        self.rep = rep
        self.group = rep.group
        self.sigma = sigma
        self.layout, self.nz = _unipotent_slices(rep.group)
        self.z = np.zeros(self.nz)
        self.opts = OptimizerOptions(max_iterations=opts.max_iterations,
                                     gradient_tolerance=min(1e-10, opts.gradient_tolerance),
                                     restarts=0, divergence_norm=1e8,
                                     max_step=opts.max_step)
        self.evaluations = 0

    def value_grad(self, dw, z):
        n = _unipotent_element(self.group, self.layout, z)
        p = self.rep.apply(n)
        t = p.conj().T @ self.sigma @ p
        tdiag = np.diagonal(t).real
        tr = float(dw @ tdiag)
        dt = dw[:, None] * t
        gens = _unipotent_generators(self.group, self.layout, n)
        g = np.empty(self.nz)
        idx = 0
        for f, iu, sl in self.layout:
            if iu is None:
                continue
            for j in range(2 * len(iu[0])):
                g[sl.start + j] = 2 * np.sum(dt * self.rep._derived_parts(gens[idx]).T).real
                idx += 1
        return tr, g, tdiag

    def solve(self, dw):
        """Minimum value and the diagonal of ``pi(n)* sigma pi(n)`` at the minimizer."""
        if self.nz == 0:
            tdiag = np.diagonal(self.sigma).real
            return float(dw @ tdiag), tdiag

        def fun(z):
            tr, g, _ = self.value_grad(dw, z)
            if tr <= 0:
                return -np.inf, None
            return -math.log(tr), -g / tr
        res = maximize(fun, self.z, self.opts)
        self.evaluations += res.evaluations
        self.z = res.x
        tr, _, tdiag = self.value_grad(dw, res.x)
        return tr, tdiag


def rate_AN(rep: Representation, rho, x: DualVector,
            opts: OptimizerOptions = OptimizerOptions()) -> RateResult:
    """Rate via the Borel form ``sup_alpha min_n``.

    For ``x = h . x0`` this maximizes over ``alpha``
    ``<x0, alpha> - ln min_n Tr pi(n)* E sigma E pi(n)`` with
    ``sigma = pi(h)* rho pi(h)`` and ``E = pi(exp(alpha / 2))``.  For the
    defining representation of ``U(d)`` the inner minimum is
    ``sum_i e^{alpha_i} D_i(sigma) / D_{i-1}(sigma)`` (leading principal
    minors); otherwise it is found numerically.  A :class:`SingularMinor`
    warning is issued when a minor underflows and the numeric path is used.
    """
    rho = validate_state(rho, rep.dim)
    _check_rep_point(rep, x)
    cd = chamber_decompose(x)
    x0c = cd.x0_cartan
    group = rep.group
    poly = weight_data(rep).polytope
    flags = _flags(rho, cd, poly)
    div = _diverged(group, x0c, cd, poly, "AN")
    if div is not None:
        div.flags = flags
        return div
    ph = rep.apply(cd.h)
    sigma = ph.conj().T @ rho @ ph
    w = rep.basis_weights()
    closed = None
    if isinstance(rep, Standard):
        closed = _leading_minor_ratios(sigma)
        if closed is None:
            warnings.warn("leading principal minor underflow; using numeric inner minimization",
                          SingularMinor, stacklevel=2)
    inner = None if closed is not None else _InnerN(rep, sigma, opts)

    def fun(alpha):
        s = w @ alpha
        if closed is not None:
            with np.errstate(divide="ignore"):
                lt = logsumexp(s, b=closed)
            if not np.isfinite(lt):
                return -np.inf, None
            grad = x0c - (closed * np.exp(s - lt)) @ w
            return float(x0c @ alpha - lt), grad
        c = s.max()
        dw = np.exp(s - c)
        tr, tdiag = inner.solve(dw)
        if not tr > 0:
            return -np.inf, None
        grad = x0c - (dw * tdiag / tr) @ w
        return float(x0c @ alpha - c - math.log(tr)), grad

    _, runs = multistart_maximize(fun, group.cartan_dim, opts)
    res = _resolve_runs(runs, fun, opts, "AN", flags, poly, x0c,
                        extra_eval=0 if inner is None else inner.evaluations)
    if res.is_infinite:
        return res
    if inner is not None:
        fun(res.raw)            # leave the inner solver at the optimal alpha
    try:
        res.argmax_xi = _an_to_xi(rep, cd, sigma, res.raw, closed, inner)
    except (np.linalg.LinAlgError, SingularInput):
        res.argmax_xi = None    # singular Borel factor: no finite maximizer to report
    return res


def _an_to_xi(rep, cd, sigma, alpha, closed, inner):
    """Algebra element ``xi`` with ``exp(xi) = b b*`` for the optimal ``b = h a n``."""
    group = rep.group
    a = AlgebraVector.from_cartan(group, alpha)
    ahalf = exp_alg(a, 0.5)
    if closed is not None:
        e = ahalf.parts[0]
        q = e @ sigma @ e.conj().T
        c = np.linalg.cholesky(q)                    # q = L D L*, L unit lower
        lmat = c / np.diagonal(c).real[None, :]
        n = GroupElement(group, [np.linalg.inv(lmat).conj().T], check=False)
        b = cd.h @ ahalf @ n
    else:
        # the inner solver works with n' = a n a^{-1}, so h a n = h n' a
        b = cd.h @ _unipotent_element(group, inner.layout, inner.z) @ ahalf
    bb = b @ b.star()
    return log_positive(bb)


# ---------------------------------------------------------------------------
# closed forms


def _xlogx(v):
    v = np.asarray(v, float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


def _probability_vector(x0, tol=1e-12):
    x0 = np.asarray(x0, float)
    return abs(x0.sum() - 1) <= tol and np.all(x0 >= -tol)


def _kl_from_ratios(x0, r):
    val = float(_xlogx(x0).sum())
    for xi, ri in zip(x0, r):
        if xi > 0:
            if ri <= 0:
                return math.inf
            val -= xi * math.log(ri)
    return val


def rate_keyl_closed(rho, h, x0) -> float:
    """Closed-form rate for the defining representation of ``U(d)``.

    ``sum_i x0_i ln x0_i - x0_i ln(D_i / D_{i-1})`` with ``D_i`` the leading
    principal minors of ``h* rho h``; ``inf`` unless ``x0`` is a probability
    vector.

    Parameters
    ----------
    rho : array_like, shape (d, d)
    h : GroupElement or array_like
        Unitary matrix.
    x0 : array_like
        Nonincreasing vector.
    """
    hm = h.parts[0] if isinstance(h, GroupElement) else np.asarray(h, complex)
    x0 = np.asarray(x0, float)
    if np.any(np.diff(x0) > 1e-12):
        raise ValueError("x0 must be nonincreasing")
    if not _probability_vector(x0):
        return math.inf
    sigma = hm.conj().T @ np.asarray(rho, complex) @ hm
    r = _minor_ratios_exact(sigma)
    return _kl_from_ratios(x0, r)


def _minor_ratios_exact(sigma):
    d = sigma.shape[0]
    r = np.zeros(d)
    prev = 1.0
    for i in range(1, d + 1):
        cur = np.linalg.det(sigma[:i, :i]).real
        r[i - 1] = cur / prev if prev > 0 else 0.0
        prev = cur if cur > 0 else 0.0
    return np.clip(r, 0.0, None)


def rate_cramer(weight_probs: dict, x, opts: OptimizerOptions = OptimizerOptions()) -> RateResult:
    """Legendre transform ``sup_a <x, a> - ln sum_n r_n e^{<n, a>}``.

    Parameters
    ----------
    weight_probs : dict
        Map from integer weight (int or tuple) to probability.
    x : array_like
    """
    keys = list(weight_probs)
    pts = np.array([np.atleast_1d(k) for k in keys], float)
    r = np.array([weight_probs[k] for k in keys], float)
    if np.any(r < 0) or abs(r.sum() - 1) > 1e-9:
        raise ValueError("weight probabilities must be nonnegative and sum to 1")
    pts, r = pts[r > 0], r[r > 0]
    x = np.atleast_1d(np.asarray(x, float))
    poly = Polytope(pts)
    lr = np.log(r)

    def fun(a):
        s = pts @ a + lr
        lz = logsumexp(s)
        p = np.exp(s - lz)
        return float(x @ a - lz), x - p @ pts
    flags = ["boundary"] if poly.on_boundary(x, BOUNDARY_TOL) else []
    sep = poly.separating_direction(x)
    if sep is not None:
        beta, gap = sep
        return RateResult(math.inf, None, Certificate("diverged", beta=beta, slope=gap, margin=gap),
                          0, flags, "cramer")
    _, runs = multistart_maximize(fun, len(x), opts)
    return _resolve_runs(runs, fun, opts, "cramer", flags, poly, x)


def _chamber_constraints(group):
    """Rows ``c`` with ``c @ alpha >= 0`` describing the dominant chamber of ``a``."""
    rows = []
    for f, sl in zip(group.factors, group.cartan_slices()):
        if isinstance(f, SU2):
            r = np.zeros(group.cartan_dim)
            r[sl.start] = 1
            rows.append(r)
        elif f.is_matrix:
            for i in range(f.size - 1):
                r = np.zeros(group.cartan_dim)
                r[sl.start + i] = 1
                r[sl.start + i + 1] = -1
                rows.append(r)
    return np.array(rows).reshape(-1, group.cartan_dim)


def rate_maximally_mixed(rep: Representation, x0, alpha_cap: float = 50.0) -> float:
    """Rate of the maximally mixed state on an irreducible representation.

    ``sup_alpha <x0, alpha> - ln(character(alpha) / dim)`` over the dominant
    chamber with ``|alpha_i| <= alpha_cap``.

    Parameters
    ----------
    rep : Spin or Standard
    x0 : DualVector or array_like
        Chamber representative, as a dual vector or in Cartan coordinates.
    """
    if not isinstance(rep, (Spin, Standard)):
        raise UnsupportedRep("maximally mixed closed form needs Spin(j) or Standard(d)")
    x0c = x0.cartan_coords() if isinstance(x0, AlgebraVector) else np.atleast_1d(np.asarray(x0, float))
    poly = weight_data(rep).polytope
    if poly.separating_direction(x0c) is not None:
        return math.inf
    lnd = math.log(rep.dim)
    w = rep.basis_weights()

    def negf(a):
        s = w @ a
        lz = logsumexp(s)
        p = np.exp(s - lz)
        return -(x0c @ a - lz + lnd), -(x0c - p @ w)
    cons = _chamber_constraints(rep.group)
    constraints = [{"type": "ineq", "fun": lambda a, c=c: c @ a, "jac": lambda a, c=c: c} for c in cons]
    start = np.zeros(rep.group.cartan_dim)
    res = minimize(negf, start, jac=True, method="SLSQP",
                   bounds=[(-alpha_cap, alpha_cap)] * len(start), constraints=constraints,
                   options={"ftol": 1e-15, "maxiter": 1000})
    return float(max(-res.fun, 0.0))


def rate_contracted(rep: Representation, rho, x0,
                    opts: OptimizerOptions = OptimizerOptions(), inner=None,
                    n_starts: int | None = None):
    """Contracted rate ``inf_{h in K} I(h . x0)``.

    Starts from the identity, from an eigenbasis of ``rho`` aligned with
    ``x0`` and from Haar-random elements; each is refined by descent along
    one-parameter subgroups with finite-difference gradients in a local
    chart.

    Parameters
    ----------
    x0 : DualVector or array_like
        Chamber representative (Cartan coordinates if an array).
    inner : callable, optional
        ``inner(rep, rho, x, opts) -> RateResult``; defaults to :func:`rate_AN`.

    Returns
    -------
    value : float
    h : GroupElement
    """
    rho = validate_state(rho, rep.dim)
    inner = rate_AN if inner is None else inner
    group = rep.group
    x0 = x0 if isinstance(x0, AlgebraVector) else DualVector.from_cartan(group, x0)
    x0 = as_dual(x0)
    rng = np.random.default_rng(opts.seed)
    basis = algebra_basis(group)
    n = len(basis)
    quiet = OptimizerOptions(max_iterations=opts.max_iterations,
                             gradient_tolerance=opts.gradient_tolerance,
                             restarts=min(opts.restarts, 2), divergence_norm=opts.divergence_norm,
                             max_step=opts.max_step, seed=opts.seed)

    def value(h):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularMinor)
            return inner(rep, rho, coadjoint(h, x0), quiet).value

    def rotate(h, theta):
        # h exp(i sum theta_k b_k) stays in K
        parts = []
        for f, sl, p in zip(group.factors, group.compact_slices(), h.parts):
            t = theta[sl]
            if f.is_matrix:
                herm = np.tensordot(t, factor_basis(f), axes=1)
                w, v = np.linalg.eigh(herm)
                parts.append(p @ ((v * np.exp(1j * w)) @ v.conj().T))
            else:
                parts.append(p * np.exp(1j * t))
        return GroupElement(group, parts, check=False)

    starts = [group.identity()]
    starts.append(_aligned_start(rep, rho, group))
    for _ in range(opts.restarts if n_starts is None else n_starts):
        starts.append(haar_sample(group, rng))
    best_val, best_h = math.inf, starts[0]
    fd = 1e-5
    for h in starts:
        f = value(h)
        if not np.isfinite(f):
            continue
        step = 0.5
        for _ in range(200):
            g = np.zeros(n)
            for k in range(n):
                e = np.zeros(n)
                e[k] = fd
                g[k] = (value(rotate(h, e)) - value(rotate(h, -e))) / (2 * fd)
            gn = np.linalg.norm(g)
            if gn < 1e-7:
                break
            improved = False
            while step > 1e-10:
                hn = rotate(h, -step * g / gn)
                fn = value(hn)
                if fn < f - 1e-4 * step * gn:
                    h, f, improved = hn, fn, True
                    step *= 2
                    break
                step /= 2
            if not improved:
                break
        if f < best_val:
            best_val, best_h = f, h
    return best_val, best_h


def _aligned_start(rep, rho, group):
    """An element mapping the sorted eigenbasis of ``rho`` onto the standard one."""
    if isinstance(rep, Standard):
        w, v = np.linalg.eigh(rho)
        v = v[:, ::-1]
        return GroupElement(group, [v], check=False)
    return group.identity()


def rate_bipartite_pure(psi, h1, h2, x1, x2=None) -> float:
    """Rate for a pure state on ``C^{d1} (x) C^{d2}`` under ``U(d1) x U(d2)``.

    ``sum_i x0_i ln x0_i - x0_i ln |D_i(M) / D_{i-1}(M)|^2`` with
    ``M = h1* psi conj(h2)``; ``inf`` when the two chamber vectors differ
    beyond trailing zeros, have negative entries or do not sum to one.

    Parameters
    ----------
    psi : array_like, shape (d1, d2)
        Unit-norm coefficient matrix.
    h1, h2 : array_like or GroupElement
        Unitaries.
    x1 : array_like, length d1
    x2 : array_like, length d2, optional
        Defaults to ``x1`` padded or truncated with zeros.
    """
    psi = np.asarray(psi, complex)
    d1, d2 = psi.shape
    h1 = h1.parts[0] if isinstance(h1, GroupElement) else np.asarray(h1, complex)
    h2 = h2.parts[0] if isinstance(h2, GroupElement) else np.asarray(h2, complex)
    x1 = np.asarray(x1, float)
    if x2 is None:
        x2 = np.zeros(d2)
        k = min(d1, d2)
        x2[:k] = x1[:k]
        if np.any(x1[k:] != 0):
            return math.inf
    x2 = np.asarray(x2, float)
    for v in (x1, x2):
        if np.any(np.diff(v) > 1e-12):
            raise ValueError("chamber vectors must be nonincreasing")
    k = min(d1, d2)
    tol = 1e-12
    if np.any(np.abs(x1[k:]) > tol) or np.any(np.abs(x2[k:]) > tol) or np.any(np.abs(x1[:k] - x2[:k]) > tol):
        return math.inf
    x0 = x1[:k]
    if not _probability_vector(x0):
        return math.inf
    m = h1.conj().T @ psi @ h2.conj()
    r = np.zeros(k)
    prev = 1.0 + 0j
    for i in range(1, k + 1):
        cur = np.linalg.det(m[:i, :i])
        r[i - 1] = abs(cur / prev) ** 2 if abs(prev) > 0 else 0.0
        prev = cur
    return _kl_from_ratios(x0, r)


# ---------------------------------------------------------------------------
# tilting


def tilt_point(rep: Representation, rho, g: GroupElement):
    """Exact point on the graph of the rate function by exponential tilting.

    With ``rho' = pi(g)* rho pi(g) / Tr(...)`` and ``x = g . J(rho')`` the
    rate at ``x`` equals ``-ln chi_x(g^{-1}) - ln Tr pi(g)* rho pi(g)``.

    Returns
    -------
    x : DualVector
    value : float
    """
    rho = validate_state(rho, rep.dim)
    p = rep.apply(g)
    t = p.conj().T @ rho @ p
    tr = np.trace(t).real
    rho_t = (t + t.conj().T) / (2 * tr)
    x = extended_action(g, moment_map(rep, rho_t, check=False))
    val = -log_chi(x, g.inv()) - math.log(tr)
    return x, float(val)
