"""Moment map, Weyl chamber decomposition and the character ``chi_x``.

The nonlinear pairing ``<<x, xi>> = -ln chi_x(exp(-xi/2))`` is evaluated
through principal minors: with ``x = h x0 h*`` and ``eta = h* xi h``,
``<<x, xi>> = -sum_i x0_i ln(D_i / D_{i-1})`` where ``D_i`` is the i-th
leading principal minor of ``exp(-eta)``.  The minors come from a QR
factorization of a row-scaled square root, which stays accurate when
``exp(-eta)`` is badly conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvariantViolation
from .lie import (SU2, AlgebraVector, DualVector, GroupElement, _same_group,
                  algebra_basis, coadjoint, haar_unitary, iwasawa,
                  pairing)
from .representations import Representation
from .states import validate_state

DEGENERACY_TOL = 1e-10
CHI_INVARIANCE_TOL = 1e-8


@lru_cache(maxsize=None)
def derived_basis(rep: Representation) -> np.ndarray:
    """Derived representation on the orthonormal algebra basis, ``(n, D, D)``."""
    out = np.array([rep.derived(b) for b in algebra_basis(rep.group)])
    out.flags.writeable = False
    return out


def moment_map(rep: Representation, rho, check: bool = True) -> DualVector:
    """The dual vector ``J(rho)`` with ``<J(rho), xi> = Tr(dpi(xi) rho)``.

    Raises
    ------
    NotAState
        If ``rho`` fails the density-matrix checks at ``1e-10``.
    """
    if check:
        rho = validate_state(rho, rep.dim)
    b = derived_basis(rep)
    theta = np.einsum("kij,ji->k", b, rho).real
    return DualVector.from_coords(rep.group, theta)


# ---------------------------------------------------------------------------
# chamber decomposition


@dataclass(frozen=True)
class ChamberDecomposition:
    """``x = h . x0`` with ``x0`` in the dominant chamber.

    Attributes
    ----------
    x0 : DualVector
        Diagonal with nonincreasing entries per matrix factor.
    h : GroupElement
        Element of ``K``.
    """

    x0: DualVector
    h: GroupElement

    @property
    def x0_cartan(self) -> np.ndarray:
        return self.x0.cartan_coords()

    def reconstruct(self) -> DualVector:
        return coadjoint(self.h, self.x0)


def _phase_normalize(v, tol=1e-10):
    idx = np.flatnonzero(np.abs(v) > tol)
    if len(idx):
        z = v[idx[0]]
        v = v * (abs(z) / z)
    return v


def _canonical_cluster_basis(vc):
    """Deterministic orthonormal basis of span(vc), independent of vc itself."""
    d, r = vc.shape
    p = vc @ vc.conj().T
    basis = []
    res = p.copy()
    for _ in range(r):
        norms = np.linalg.norm(res, axis=0)
        i = int(np.argmax(norms))
        v = res[:, i] / norms[i]
        for b in basis:
            v = v - np.vdot(b, v) * b
        v = _phase_normalize(v / np.linalg.norm(v))
        basis.append(v)
        res = res - np.outer(v, v.conj() @ res)
    def key(v):
        j = int(np.flatnonzero(np.abs(v) > 1e-10)[0])
        return (j, -v[j].real)
    basis.sort(key=key)
    return np.array(basis).T


def _clusters(w, tol):
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[i - 1]) > tol:
            groups.append((start, i))
            start = i
    return groups


def _chamber_matrix(x, su2):
    w, v = np.linalg.eigh(x)
    w, v = w[::-1].copy(), v[:, ::-1].copy()
    tol = DEGENERACY_TOL * max(1.0, np.abs(w).max())
    for a, b in _clusters(w, tol):
        if b - a == 1:
            v[:, a] = _phase_normalize(v[:, a])
        else:
            v[:, a:b] = _canonical_cluster_basis(v[:, a:b])
            w[a:b] = w[a:b].mean()
    if su2:
        v = v / np.sqrt(np.linalg.det(v))
    return w, v


def chamber_decompose(x: DualVector) -> ChamberDecomposition:
    """Write ``x = h . x0`` with ``x0`` diagonal and nonincreasing.

    Degenerate eigenvalue clusters receive a canonical eigenbasis, so the
    result depends only on ``x``.
    """
    x0s, hs = [], []
    for f, p in zip(x.group.factors, x.parts):
        if f.is_matrix:
            w, v = _chamber_matrix(p, isinstance(f, SU2))
            if isinstance(f, SU2):
                w = np.array([w[0] - w[1], w[1] - w[0]]) / 2
            x0s.append(np.diag(w).astype(complex))
            hs.append(v)
        else:
            x0s.append(p.copy())
            hs.append(np.ones(f.d, complex))
    return ChamberDecomposition(DualVector(x.group, x0s, check=False),
                                GroupElement(x.group, hs, check=False))


def _degenerate(cd: ChamberDecomposition) -> bool:
    for f, p in zip(cd.x0.group.factors, cd.x0.parts):
        if f.is_matrix:
            w = np.diag(p).real
            tol = DEGENERACY_TOL * max(1.0, np.abs(w).max())
            if len(_clusters(w, tol)) < len(w):
                return True
    return False


def stabilizer_sample(cd: ChamberDecomposition, rng: np.random.Generator) -> GroupElement:
    """Random ``u`` in ``K`` commuting with ``x0`` (block unitary on ties)."""
    parts = []
    for f, p in zip(cd.x0.group.factors, cd.x0.parts):
        if not f.is_matrix:
            parts.append(np.exp(2j * np.pi * rng.random(f.d)))
            continue
        w = np.diag(p).real
        tol = DEGENERACY_TOL * max(1.0, np.abs(w).max())
        u = np.zeros((len(w), len(w)), complex)
        for a, b in _clusters(w, tol):
            u[a:b, a:b] = haar_unitary(b - a, rng)
        if isinstance(f, SU2):
            u = u / np.sqrt(np.linalg.det(u))
        parts.append(u)
    return GroupElement(cd.x0.group, parts, check=False)


# ---------------------------------------------------------------------------
# extended action and chi


def extended_action(g: GroupElement, x: DualVector) -> DualVector:
    """``g . x = k(g h) . x0`` where ``x = h . x0``."""
    _same_group(g, x)
    cd = chamber_decompose(x)
    k = iwasawa(g @ cd.h).k
    return coadjoint(k, cd.x0)


def _log_chi_raw(cd, g):
    return 2 * pairing(cd.x0, iwasawa(g @ cd.h).alpha)


def log_chi(x: DualVector, g: GroupElement, check_invariance: bool = True) -> float:
    """``ln chi_x(g) = 2 <x0, alpha(g h)>``.

    When ``x0`` has repeated eigenvalues the value is recomputed with a
    randomized chamber representative ``h u`` (``u`` in the stabilizer) and
    the two must agree.
    """
    _same_group(g, x)
    cd = chamber_decompose(x)
    val = _log_chi_raw(cd, g)
    if check_invariance and _degenerate(cd):
        rng = np.random.default_rng(0x5EED)
        alt = ChamberDecomposition(cd.x0, cd.h @ stabilizer_sample(cd, rng))
        val2 = _log_chi_raw(alt, g)
        if abs(val - val2) > CHI_INVARIANCE_TOL * max(1.0, abs(val)):
            raise InvariantViolation(f"chi depends on the chamber representative: {val} vs {val2}")
    return val


def chi(x: DualVector, g: GroupElement, check_invariance: bool = True) -> float:
    """The positive character ``chi_x(g) = exp(2 <x0, alpha(g h)>)``."""
    return float(np.exp(log_chi(x, g, check_invariance)))


# ---------------------------------------------------------------------------
# nonlinear pairing


def _sinhc(z):
    z = np.asarray(z, float)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 + z * z / 6, np.sinh(safe) / safe)


def exp_divided_differences(lam) -> np.ndarray:
    """``(e^a - e^b) / (a - b)`` on all pairs of ``lam`` (``e^a`` on ties)."""
    a = lam[:, None]
    b = lam[None, :]
    return np.exp((a + b) / 2) * _sinhc((a - b) / 2)


def _pairing_matrix_factor(v, h, xi, grad):
    """Pairing on one matrix factor and its gradient.

    With ``-eta = W diag(nu) W*`` and ``B = diag(e^{(nu - s)/2}) W* = Q R``,
    ``ln(D_i / D_{i-1}) = s + 2 ln |R_ii|``.  Since ``R^{-1} = W D^{-1/2} Q``
    the gradient is ``h W (K o Q diag(x0) Q*) W* h*`` with
    ``K_ij = sinhc((nu_i - nu_j) / 2)``, free of explicit inverses.
    """
    eta = h.conj().T @ xi @ h
    nu, w = np.linalg.eigh(-eta)
    s = nu[-1]
    bmat = (np.exp((nu - s) / 2)[:, None] * w.conj().T)[::-1]
    q, r = np.linalg.qr(bmat)
    rd = np.abs(np.diagonal(r))
    if np.any(rd == 0):
        return -np.inf, None
    val = -float(v @ (s + 2 * np.log(rd)))
    if not grad:
        return val, None
    qe = q[::-1]
    kmat = _sinhc((nu[:, None] - nu[None, :]) / 2)
    smat = (qe * v) @ qe.conj().T
    hw = h @ w
    return val, hw @ (kmat * smat) @ hw.conj().T


def pairing_value_and_grad(cd: ChamberDecomposition, xi: AlgebraVector, grad: bool = True):
    """Nonlinear pairing and its gradient in ``xi`` under the trace form.

    Returns
    -------
    value : float
    gradient : AlgebraVector or None
    """
    val, gparts = 0.0, []
    for f, x0p, hp, xp in zip(cd.x0.group.factors, cd.x0.parts, cd.h.parts, xi.parts):
        if f.is_matrix:
            v, gm = _pairing_matrix_factor(np.diag(x0p).real, hp, xp, grad)
            val += v
            gparts.append(gm)
        else:
            val += float(x0p @ xp)
            gparts.append(x0p)
    if not grad:
        return val, None
    return val, AlgebraVector(cd.x0.group, gparts, check=False) if all(
        g is not None and np.all(np.isfinite(g)) for g in gparts) else None


def nonlinear_pairing(x: DualVector, xi: AlgebraVector, method: str = "minors") -> float:
    """``<<x, xi>> = -ln chi_x(exp(-xi / 2))``.

    Parameters
    ----------
    method : {'minors', 'definition'}
        ``'minors'`` uses the principal-minor formula (stable for large
        ``xi``); ``'definition'`` evaluates ``chi`` through the Iwasawa
        decomposition of ``exp(-xi/2) h``.
    """
    _same_group(x, xi)
    if method == "definition":
        from .lie import exp_alg
        return -log_chi(x, exp_alg(xi, -0.5))
    if method != "minors":
        raise ValueError(f"unknown method {method!r}")
    return pairing_value_and_grad(chamber_decompose(x), xi, grad=False)[0]


def su2_pairing_closed_form(x: DualVector, xi: AlgebraVector) -> float:
    """Closed form of the nonlinear pairing on ``SU(2)``.

    ``-2|x| ln[cosh|xi| - Tr(x xi) / (2 |x| |xi|) sinh|xi|]`` with operator
    norms; evaluated as ``-2|x| (|xi| + ln[(1 - c)/2 + (1 + c)/2 e^{-2|xi|}])``
    to avoid cancellation.  Returns 0 when either norm vanishes.
    """
    if len(x.group.factors) != 1 or not isinstance(x.group.factors[0], SU2):
        raise ValueError("closed form applies to SU(2) only")
    _same_group(x, xi)
    a = x.parts[0]
    b = xi.parts[0]
    nx = float(np.abs(np.linalg.eigvalsh(a)).max())
    nxi = float(np.abs(np.linalg.eigvalsh(b)).max())
    if nx == 0.0 or nxi == 0.0:
        return 0.0
    c = float(np.sum(a * b.T).real) / (2 * nx * nxi)
    c = min(1.0, max(-1.0, c))
    return -2 * nx * (nxi + np.log((1 - c) / 2 + (1 + c) / 2 * np.exp(-2 * nxi)))


# ---------------------------------------------------------------------------
# log moment generating function


def log_Z_and_grad(basis: np.ndarray, rho: np.ndarray, theta: np.ndarray, grad: bool = True):
    """``ln Tr(rho exp(dpi(xi)))`` and its gradient in basis coordinates.

    Parameters
    ----------
    basis : ndarray, shape (n, D, D)
        Derived representation on the orthonormal algebra basis.
    rho : ndarray, shape (D, D)
    theta : ndarray, shape (n,)
    """
    n, dd = basis.shape[0], basis.shape[1]
    flat = basis.reshape(n, dd * dd)
    hmat = (theta @ flat).reshape(dd, dd)
    lam, u = np.linalg.eigh(hmat)
    rt = u.conj().T @ rho @ u
    wts = np.clip(np.diagonal(rt).real, 0.0, None)
    pos = wts > 0                              # weights sum to one, so some are positive
    top = lam[pos].max()
    lnz = float(top + np.log(wts[pos] @ np.exp(lam[pos] - top)))
    if not grad:
        return lnz, None
    phi = exp_divided_differences(lam - lnz)
    gmat = u @ (phi * rt) @ u.conj().T
    g = (flat @ gmat.T.ravel()).real
    return lnz, g
