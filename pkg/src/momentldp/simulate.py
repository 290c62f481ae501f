"""Monte Carlo and exact evaluation of the outcome measures of the
covariant measurement on tensor powers of qubits and torus systems.

For ``m`` copies of a qubit the measurement first projects onto a spin
block ``lambda = (l1, l2)`` and then reports a ray ``h . [v_lambda]`` of the
block irreducible.  Given the block, the direction ``h`` has density
(against Haar measure)

    dim(lambda) <v_lambda, pi_lambda(h* rho h) v_lambda> / Tr pi_lambda(rho)
        = (2j + 1) (u* rho u)^{2j} / s_{2j}(p, q),   u = h e_1,

where ``p >= q`` is the spectrum of ``rho`` and ``s_{2j}`` the complete
homogeneous polynomial.  Directions are drawn exactly by rejection from
Haar samples with acceptance ``(u* rho u / p)^{2j}``.  Torus outcomes are
weights, distributed as the ``m``-fold convolution of the single-copy
weight law.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize as sopt
from scipy import signal
from scipy.stats import binomtest

from .errors import (DegenerateRegion, EnvelopeOverflow, InvalidConfig, SamplerTimeout,
                     TooLarge, UnsupportedRep)
from .lie import SU2, DualVector, GroupElement, Torus, haar_unitary
from .optimize import OptimizerOptions
from .rate import rate_cramer, rate_keyl_closed
from .regions import Region
from .representations import (M_MAX, Representation, Spin, Standard, TorusRep,
                              isotypic_decompose_qubits, qubit_multiplicity)
from .states import validate_state

ACCEPTANCE_FLOOR = 1e-6
_CONCAVE_OPTS = OptimizerOptions(restarts=0)
ENVELOPE_TOL = 1e-12


# ---------------------------------------------------------------------------
# system classification


def _system(rep: Representation) -> str:
    """``'u2'``, ``'su2'`` or ``'torus'``; UnsupportedRep otherwise."""
    if isinstance(rep, Standard) and rep.d == 2:
        return "u2"
    if isinstance(rep, Spin) and rep.j == Fraction(1, 2):
        return "su2"
    if isinstance(rep, TorusRep):
        return "torus"
    raise UnsupportedRep(f"simulation supports qubits and torus representations, not {rep}")


def _check_m(kind, m, m_max):
    if int(m) != m or m < 1:
        raise InvalidConfig("m must be a positive integer")
    if kind != "torus" and m > m_max:
        raise TooLarge(f"m = {m} exceeds the qubit bound {m_max}")


def _spectrum(rho):
    w = np.linalg.eigvalsh(rho)
    return float(max(w[1], 0.0)), float(max(w[0], 0.0))


def _chamber_of_label(kind, label, m):
    """Chamber coordinates of the outcome ``lambda / m``."""
    if kind == "u2":
        return np.array([label[0] / m, label[1] / m])
    if kind == "su2":
        return np.array([(label[0] - label[1]) / (2 * m)])
    return np.asarray(label, float) / m


# ---------------------------------------------------------------------------
# block probabilities


def _torus_weight_law(rep: TorusRep, rho) -> dict:
    """Single-copy law of the integer weight: diagonal of ``rho`` grouped by weight."""
    w2 = rep._doubled_weights()
    if np.any(w2 % 2):
        raise UnsupportedRep("torus simulation needs integer weights")
    diag = np.clip(np.diagonal(rho).real, 0.0, None)
    law: dict = {}
    for row, p in zip(w2 // 2, diag):
        key = tuple(int(v) for v in row)
        law[key] = law.get(key, 0.0) + p
    return law


def _torus_power_law(law: dict, m: int) -> dict:
    """``m``-fold convolution of a law on ``Z^r`` (direct, no FFT round-off)."""
    keys = np.array(list(law), int)
    lo = keys.min(axis=0)
    shape = tuple(keys.max(axis=0) - lo + 1)
    base = np.zeros(shape)
    for k, p in law.items():
        base[tuple(np.asarray(k) - lo)] += p
    out = np.ones((1,) * len(shape))
    # binary powering keeps the number of convolutions at O(log m)
    power, e = base, m
    while e:
        if e & 1:
            out = signal.convolve(out, power, method="direct")
        e >>= 1
        if e:
            power = signal.convolve(power, power, method="direct")
    res = {}
    for idx in zip(*np.nonzero(out)):
        res[tuple(int(i) + m * int(l) for i, l in zip(idx, lo))] = float(out[idx])
    return res


def isotypic_probabilities(rep: Representation, rho, m: int, m_max: int = M_MAX) -> dict:
    """Probability of each isotypic block of ``rep^{(x) m}`` under ``rho^{(x) m}``.

    For qubits the mass of block ``lambda`` is ``Tr(rho^{(x) m} P_lambda)``,
    evaluated in the eigenbasis of ``rho`` (the projectors commute with
    ``U^{(x) m}``) from the diagonal of the Clebsch-Gordan isometry.  Keys
    are U(2) highest weights ``(l1, l2)``.  For tori keys are integer
    weights and the law is the convolution power of the weight law.

    Raises
    ------
    TooLarge
        Qubit power above ``m_max``.
    UnsupportedRep
    """
    kind = _system(rep)
    rho = validate_state(rho, rep.dim)
    _check_m(kind, m, m_max)
    if kind == "torus":
        return _torus_power_law(_torus_weight_law(rep, rho), m)
    p, q = _spectrum(rho)
    dec = isotypic_decompose_qubits(m, basis=True, m_max=m_max)
    # diagonal of (diag(p, q))^{(x) m}; bit = 1 means the second basis vector
    idx = np.arange(2 ** m)
    ones = np.array([bin(i).count("1") for i in idx])
    dvec = p ** (m - ones) * q ** ones
    out = {}
    for b in dec.blocks:
        v = b.isometry
        pdiag = np.asarray(abs(v).power(2).sum(axis=1)).ravel()
        out[tuple(b.label)] = float(dvec @ pdiag)
    return out


def qubit_block_probability(p: float, q: float, m: int, label) -> float:
    """Closed form ``mult (pq)^{l2} s_{l1-l2}(p, q)`` of a qubit block mass."""
    l1, l2 = label
    tj = l1 - l2
    s = sum(p ** a * q ** (tj - a) for a in range(tj + 1))
    return qubit_multiplicity(m, tj) * (p * q) ** l2 * s


# ---------------------------------------------------------------------------
# directions


def _direction_acceptance(p, q, tj):
    """Expected Haar acceptance ``s_{2j}(p, q) / ((2j + 1) p^{2j})``."""
    if tj == 0:
        return 1.0
    r = q / p
    return sum(r ** b for b in range(tj + 1)) / (tj + 1)


def sample_orbit_direction(rep: Representation, label, rho, rng: np.random.Generator,
                           size: int | None = None, max_rounds: int = 10_000):
    """Exact draws of the orbit direction ``h`` within block ``label``.

    Rejection from Haar proposals with envelope ``dim(lambda) p^{2j}`` for
    the block density ``dim(lambda) (u* rho u)^{2j}`` (up to the common
    normalization), ``u = h e_1``.

    Returns
    -------
    GroupElement if ``size`` is None, else an array ``(size, 2, 2)``.

    Raises
    ------
    SamplerTimeout
        Expected acceptance below the floor.
    EnvelopeOverflow
        A proposal exceeded the envelope (a bug, never expected).
    """
    kind = _system(rep)
    if kind == "torus":
        raise UnsupportedRep("torus outcomes carry no orbit direction")
    rho = validate_state(rho, 2)
    tj = int(label[0] - label[1])
    p, q = _spectrum(rho)
    if _direction_acceptance(p, q, tj) < ACCEPTANCE_FLOOR:
        raise SamplerTimeout(f"acceptance below {ACCEPTANCE_FLOOR:g} for block {tuple(label)}")
    n = 1 if size is None else int(size)
    out = np.empty((n, 2, 2), complex)
    got = 0
    for _ in range(max_rounds):
        if got >= n:
            break
        batch = max(16, 2 * (n - got))
        h = haar_unitary(2, rng, size=batch)
        if tj:
            u = h[:, :, 0]
            val = np.einsum("ni,ij,nj->n", u.conj(), rho, u).real
            ratio = (val / p) ** tj
            if np.any(ratio > 1 + ENVELOPE_TOL):
                raise EnvelopeOverflow(f"density ratio {ratio.max():.17g} exceeds 1")
            keep = rng.random(batch) < ratio
            h = h[keep]
        take = min(len(h), n - got)
        out[got:got + take] = h[:take]
        got += take
    else:
        raise SamplerTimeout("rejection sampler exhausted its rounds")
    if kind == "su2":
        out = out / np.sqrt(np.linalg.det(out))[:, None, None]
    if size is None:
        return GroupElement(rep.group, [out[0]], check=False)
    return out


# ---------------------------------------------------------------------------
# outcomes


@dataclass
class MeasurementOutcome:
    """One outcome of the covariant measurement on ``m`` copies.

    Attributes
    ----------
    label : tuple
        Block highest weight (``(l1, l2)`` for qubits, the weight for tori).
    direction : GroupElement
        Orbit point ``h``; the identity for tori.
    x : DualVector
        ``h . (lambda / m)``.
    weight_prob : float
        Mass of the block.
    m : int
    """

    label: tuple
    direction: GroupElement
    x: DualVector
    weight_prob: float
    m: int

    @property
    def x0(self) -> np.ndarray:
        return _chamber_of_label(_kind_of_group(self.x.group), self.label, self.m)


def _kind_of_group(group):
    f = group.factors[0]
    if isinstance(f, Torus):
        return "torus"
    return "su2" if isinstance(f, SU2) else "u2"


@dataclass
class SampleBatch:
    """Vectorized outcomes: block labels, directions, chamber and full coordinates."""

    labels: np.ndarray          # (n, r) int
    directions: np.ndarray      # (n, 2, 2) complex, or None for tori
    x0: np.ndarray              # (n, r)
    xparts: list = field(repr=False)

    def __len__(self):
        return len(self.labels)


def _outcome_matrices(kind, x0, directions):
    """Dual-vector parts ``h diag(x0) h*`` for a batch of qubit outcomes."""
    u = directions[:, :, 0]
    uu = u[:, :, None] * u[:, None, :].conj()
    if kind == "u2":
        a, b = x0[:, 0], x0[:, 1]
        return b[:, None, None] * np.eye(2) + (a - b)[:, None, None] * uu
    c = x0[:, 0]
    return c[:, None, None] * (2 * uu - np.eye(2))


def _sample_batch(rep, rho, m, n, rng, probs=None, directions=True) -> SampleBatch:
    kind = _system(rep)
    probs = isotypic_probabilities(rep, rho, m) if probs is None else probs
    keys = list(probs)
    pv = np.array([probs[k] for k in keys])
    pv = np.clip(pv, 0.0, None)
    pv /= pv.sum()
    pick = rng.choice(len(keys), size=n, p=pv)
    labels = np.array([keys[i] for i in pick], int).reshape(n, -1)
    x0 = np.array([_chamber_of_label(kind, k, m) for k in keys])[pick].reshape(n, -1)
    if kind == "torus":
        return SampleBatch(labels, None, x0, [x0.copy()])
    if not directions:
        return SampleBatch(labels, None, x0, None)
    dirs = np.empty((n, 2, 2), complex)
    for i, k in enumerate(keys):
        sel = np.nonzero(pick == i)[0]
        if len(sel):
            dirs[sel] = sample_orbit_direction(rep, k, rho, rng, size=len(sel))
    return SampleBatch(labels, dirs, x0, [_outcome_matrices(kind, x0, dirs)])


def sample_measurement(rep: Representation, rho, m: int, rng: np.random.Generator) -> MeasurementOutcome:
    """Draw one outcome: a block from :func:`isotypic_probabilities`, then a direction."""
    kind = _system(rep)
    rho = validate_state(rho, rep.dim)
    probs = isotypic_probabilities(rep, rho, m)
    b = _sample_batch(rep, rho, m, 1, rng, probs)
    label = tuple(int(v) for v in b.labels[0])
    if kind == "torus":
        h = rep.group.identity()
        x = DualVector.from_cartan(rep.group, b.x0[0])
    else:
        h = GroupElement(rep.group, [b.directions[0]], check=False)
        x = DualVector(rep.group, [b.xparts[0][0]])
    return MeasurementOutcome(label, h, x, probs[label], m)


def sample_measurements(rep: Representation, rho, m: int, n: int, rng: np.random.Generator) -> SampleBatch:
    """Vectorized version of :func:`sample_measurement`."""
    rho = validate_state(rho, rep.dim)
    return _sample_batch(rep, rho, m, n, rng)


# ---------------------------------------------------------------------------
# measures of regions


def _split_counts(n, workers):
    base, extra = divmod(n, workers)
    return [base + (i < extra) for i in range(workers)]


def _mc_hits(rep, rho, m, region: Region, n_samples, seed, workers):
    probs = isotypic_probabilities(rep, rho, m)
    children = np.random.SeedSequence(seed).spawn(workers)
    sizes = _split_counts(n_samples, workers)

    def work(args):
        ss, n = args
        if n == 0:
            return 0
        rng = np.random.default_rng(ss)
        b = _sample_batch(rep, rho, m, n, rng, probs, directions=not region.chamber_only)
        return int(region.contains_batch(b.x0, b.xparts).sum())

    jobs = list(zip(children, sizes))
    if workers == 1:
        counts = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            counts = list(ex.map(work, jobs))
    return sum(counts)


def wilson_interval(hits: int, n: int, level: float = 0.95):
    ci = binomtest(int(hits), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_mu(rep: Representation, rho, m: int, region: Region, n_samples: int,
                seed: int = 0, workers: int = 1):
    """Monte Carlo estimate of the outcome measure of ``region``.

    Samples are split into ``workers`` contiguous batches with independent
    streams spawned from ``seed``; results depend only on ``(seed,
    workers)``.  Orbit directions are drawn only for regions that are not
    orbit invariant.

    Returns
    -------
    p_hat : float
    ci : (float, float)
        Wilson 95% interval.
    """
    if n_samples < 1 or workers < 1:
        raise InvalidConfig("n_samples and workers must be positive")
    rho = validate_state(rho, rep.dim)
    hits = _mc_hits(rep, rho, m, region, n_samples, seed, workers)
    return hits / n_samples, wilson_interval(hits, n_samples)


def exact_mu(rep: Representation, rho, m: int, region: Region, m_max: int = M_MAX,
             n_theta: int = 64, n_phi: int = 64) -> float:
    """Outcome measure of ``region`` without sampling.

    Orbit-invariant regions are evaluated by exact summation over blocks.
    Other regions integrate the direction density on the Bloch sphere with
    Gauss-Legendre nodes in ``cos(theta)`` and a trapezoid rule in ``phi``
    (the indicator makes this approximate).
    """
    kind = _system(rep)
    rho = validate_state(rho, rep.dim)
    probs = isotypic_probabilities(rep, rho, m, m_max)
    keys = list(probs)
    x0 = np.array([_chamber_of_label(kind, k, m) for k in keys]).reshape(len(keys), -1)
    pv = np.array([probs[k] for k in keys])
    if region.chamber_only or kind == "torus":
        xp = [x0] if kind == "torus" else None
        return float(pv @ region.contains_batch(x0, xp))
    p, q = _spectrum(rho)
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    c, f = np.meshgrid(ct, phi, indexing="ij")
    u = np.stack([np.sqrt((1 + c) / 2) + 0j, np.sqrt((1 - c) / 2) * np.exp(1j * f)], axis=-1)
    u = u.reshape(-1, 2)
    weights = (np.repeat(wt, n_phi) / 2) / n_phi
    val = np.einsum("ni,ij,nj->n", u.conj(), rho, u).real
    total = 0.0
    for k, pk, xk in zip(keys, pv, x0):
        tj = int(k[0] - k[1])
        dens = (tj + 1) * val ** tj / (sum(p ** a * q ** (tj - a) for a in range(tj + 1)))
        h = np.zeros((len(u), 2, 2), complex)
        h[:, :, 0] = u
        h[:, 0, 1], h[:, 1, 1] = -u[:, 1].conj(), u[:, 0].conj()
        xs = np.repeat(xk[None], len(u), axis=0)
        inside = region.contains_batch(xs, [_outcome_matrices(kind, xs, h)])
        total += pk * float(np.sum(weights * dens * inside))
    return total


def direction_bin_probabilities(rep: Representation, rho, m: int, n_bins: int = 20,
                                nodes_per_bin: int = 8, n_angle: int | None = None) -> dict:
    """Joint law of (block, bin of ``cos theta``) by quadrature over ``K``.

    ``cos theta = |h_11|^2 - |h_21|^2`` is the polar Bloch coordinate of the
    ray ``h e_1``.  The density of ``h`` in block ``lambda`` is evaluated
    directly from the Clebsch-Gordan basis as
    ``dim(lambda) sum_c <v_c, (h* rho h)^{(x) m} v_c>`` over the
    highest-weight vectors ``v_c`` of the copies, and integrated over
    ``SU(2)`` in Euler angles ``h = R_z(phi) R_y(theta) R_z(psi)``: a
    Gauss-Legendre rule in ``cos theta`` on each bin, trapezoid rules in
    ``phi`` and ``psi`` (exact for trigonometric polynomials of degree below
    the node count).  The centre of ``U(2)`` acts trivially on the density.

    Returns
    -------
    dict
        ``label -> array(n_bins)``.
    """
    kind = _system(rep)
    if kind == "torus":
        raise UnsupportedRep("torus outcomes carry no orbit direction")
    rho = validate_state(rho, 2)
    if m > 8:
        raise TooLarge("quadrature oracle is limited to m <= 8")
    n_angle = n_angle or 2 * m + 2
    dec = isotypic_decompose_qubits(m, basis=True)
    edges = np.linspace(-1, 1, n_bins + 1)
    gx, gw = np.polynomial.legendre.leggauss(nodes_per_bin)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    cth = (mid[:, None] + half[:, None] * gx[None, :])          # (bins, nodes)
    cw = half[:, None] * gw[None, :] / 2                        # measure of cos theta / 2
    ang = 2 * np.pi * np.arange(n_angle) / n_angle
    c = cth.ravel()
    ch, sh = np.sqrt((1 + c) / 2), np.sqrt((1 - c) / 2)
    # h = Rz(phi) Ry(theta) Rz(psi) on a (node, phi, psi) grid
    C = ch[:, None, None]
    S = sh[:, None, None]
    ep = np.exp(0.5j * ang)[None, :, None]
    es = np.exp(0.5j * ang)[None, None, :]
    h = np.empty(C.shape[:1] + (n_angle, n_angle, 2, 2), complex)
    h[..., 0, 0] = (C / (ep * es))
    h[..., 0, 1] = (-S * es / ep)
    h[..., 1, 0] = (S * ep / es)
    h[..., 1, 1] = (C * ep * es)
    h = h.reshape(-1, 2, 2)
    t = np.einsum("nji,jk,nkl->nil", h.conj(), rho, h)          # h* rho h
    out = {}
    for b in dec.blocks:
        v = b.isometry.toarray()
        hw = v[:, ::b.dim]                                       # copy highest weights
        # apply t^{(x) m} to each highest-weight vector
        vec = hw.T.reshape((hw.shape[1],) + (2,) * m)
        vals = np.zeros(len(t))
        for ci in range(vec.shape[0]):
            y = np.broadcast_to(vec[ci], (len(t),) + (2,) * m).astype(complex)
            for ax in range(m):
                y = np.moveaxis(np.einsum("nij,n...j->n...i", t, np.moveaxis(y, ax + 1, -1)), -1, ax + 1)
            vals += (y.reshape(len(t), -1) @ vec[ci].conj().ravel()).real
        dens = b.dim * vals.reshape(len(c), n_angle * n_angle).mean(axis=1)
        out[tuple(b.label)] = (dens.reshape(cth.shape) * cw).sum(axis=1)
    return out


def direction_bins(directions: np.ndarray, n_bins: int = 20) -> np.ndarray:
    """Bin index of ``cos theta = |h_11|^2 - |h_21|^2`` for a stack of directions."""
    c = np.abs(directions[:, 0, 0]) ** 2 - np.abs(directions[:, 1, 0]) ** 2
    return np.clip(((c + 1) / 2 * n_bins).astype(int), 0, n_bins - 1)


# ---------------------------------------------------------------------------
# rates over regions


def contracted_rate_closed(rep: Representation, rho, x0) -> float:
    """Orbit-minimized rate at chamber point ``x0`` for qubit and torus systems.

    Qubits use the spectrum form ``KL(x0 || spec rho)``; tori use the
    Legendre transform of the weight law (no orbit to minimize over).
    """
    kind = _system(rep)
    x0 = np.atleast_1d(np.asarray(x0, float))
    if kind == "torus":
        # the Legendre objective is concave, so a single start suffices
        res = rate_cramer(_torus_weight_law(rep, validate_state(rho, rep.dim)), x0, _CONCAVE_OPTS)
        return res.value
    if kind == "su2":
        x0 = np.array([0.5 + x0[0], 0.5 - x0[0]])
    if x0[0] < x0[1] - 1e-12 or x0[1] < -1e-12:
        return math.inf
    p, q = _spectrum(rho)
    return rate_keyl_closed(np.diag([p, q]), np.eye(2), np.clip(x0, 0, None))


def _chamber_segment(kind, rep):
    """Chamber of the outcome coordinates as a segment ``a + t (b - a)``, ``t in [0, 1]``."""
    if kind == "u2":
        return np.array([0.5, 0.5]), np.array([1.0, 0.0])
    if kind == "su2":
        return np.array([0.0]), np.array([0.5])
    w = rep.basis_weights()
    if w.shape[1] != 1:
        return None
    return np.array([w.min()]), np.array([w.max()])


@dataclass
class InfimumResult:
    value: float
    point: np.ndarray | None
    lower_bound: bool = False


def infimum_rate(rep: Representation, rho, region: Region, grid: int = 2001) -> InfimumResult:
    """``inf`` of the rate over ``region`` by grid search and local refinement.

    The search runs over chamber coordinates with the orbit-minimized rate.
    For regions that are not orbit invariant this is a lower bound (the
    orbit directions are not constrained), flagged in the result.
    """
    kind = _system(rep)
    rho = validate_state(rho, rep.dim)
    seg = _chamber_segment(kind, rep)
    f = lambda x: contracted_rate_closed(rep, rho, x)  # noqa: E731
    lower = not region.chamber_only
    if region.chamber_only:
        inside = lambda x: region.contains(x)  # noqa: E731
    else:
        inside = lambda x: True  # noqa: E731
    if seg is None:
        return _infimum_box(rep, rho, region, f, inside, lower)
    a, b = seg
    ts = np.linspace(0, 1, grid)
    pts = a[None] + ts[:, None] * (b - a)[None]
    mask = region.contains_batch(pts) if region.chamber_only else np.ones(grid, bool)
    if not mask.any():
        return InfimumResult(math.inf, None, lower)
    vals = np.array([f(p) if ok else math.inf for p, ok in zip(pts, mask)])
    i = int(np.argmin(vals))
    best_t, best_v = ts[i], vals[i]
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
    # shrink the bracket to its feasible part by bisection on membership
    pt = lambda t: a + t * (b - a)  # noqa: E731
    for side in ("lo", "hi"):
        end = lo if side == "lo" else hi
        if not inside(pt(end)):
            good, bad = best_t, end
            for _ in range(60):
                mid = 0.5 * (good + bad)
                if inside(pt(mid)):
                    good = mid
                else:
                    bad = mid
            if side == "lo":
                lo = good
            else:
                hi = good
    if hi > lo:
        r = sopt.minimize_scalar(lambda t: f(pt(t)), bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-12})
        cands = [(best_v, best_t), (float(r.fun), float(r.x)), (f(pt(lo)), lo), (f(pt(hi)), hi)]
        cands = [(v, t) for v, t in cands if inside(pt(t))]
        best_v, best_t = min(cands)
    return InfimumResult(float(best_v), pt(best_t), lower)


def _infimum_box(rep, rho, region, f, inside, lower, per_dim: int = 41):
    w = rep.basis_weights()
    lo, hi = w.min(axis=0), w.max(axis=0)
    axes = [np.linspace(a, b, per_dim) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))
    mask = region.contains_batch(pts) if region.chamber_only else np.ones(len(pts), bool)
    best_v, best_p = math.inf, None
    for p, ok in zip(pts, mask):
        if ok:
            v = f(p)
            if v < best_v:
                best_v, best_p = v, p
    if best_p is None:
        return InfimumResult(math.inf, None, lower)
    pen = lambda p: f(p) if inside(p) else math.inf  # noqa: E731
    r = sopt.minimize(pen, best_p, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    if np.isfinite(r.fun) and r.fun < best_v:
        best_v, best_p = float(r.fun), r.x
    return InfimumResult(float(best_v), best_p, lower)


def bound_prefactor(rep: Representation, m: int) -> float:
    """Polynomial prefactor ``(m + 1)^{D (D + 1) / 2}``, ``D = dim`` of the single-copy space."""
    d = rep.dim
    return float(m + 1) ** (d * (d + 1) / 2)


@dataclass
class BoundRow:
    m: int
    mu: float
    ci: tuple
    exact: float | None
    inf_rate: float
    rhs: float
    holds: bool
    method: str


def verify_upper_bound(rep: Representation, rho, m_list, region: Region, n_samples: int = 0,
                       seed: int = 0, workers: int = 1, exact: bool | None = None,
                       inf_rate: InfimumResult | None = None) -> list:
    """Check ``mu_m(F) <= (m + 1)^{D(D+1)/2} exp(-m inf_F I)`` for each ``m``.

    With ``n_samples > 0`` the upper Wilson bound of the Monte Carlo
    estimate is compared against the right-hand side; the exact measure is
    also reported (and used when ``n_samples == 0``) whenever the region is
    orbit invariant or the system is a torus.
    """
    kind = _system(rep)
    rho = validate_state(rho, rep.dim)
    inf_rate = inf_rate or infimum_rate(rep, rho, region)
    can_exact = region.chamber_only or kind == "torus"
    exact = can_exact if exact is None else exact
    if n_samples <= 0 and not exact:
        raise InvalidConfig("need samples or an exactly computable region")
    rows = []
    for m in m_list:
        ex = exact_mu(rep, rho, m, region) if exact else None
        if n_samples > 0:
            mu, ci = estimate_mu(rep, rho, m, region, n_samples, seed=seed + m, workers=workers)
            test, method = ci[1], "monte_carlo_wilson_upper"
        else:
            mu, ci = ex, (ex, ex)
            test, method = ex, "exact"
        rhs = bound_prefactor(rep, m) * math.exp(-m * inf_rate.value) if np.isfinite(inf_rate.value) else 0.0
        rows.append(BoundRow(m, mu, ci, ex, inf_rate.value, rhs, bool(test <= rhs), method))
    return rows


@dataclass
class RateRow:
    m: int
    rate: float
    lo: float
    hi: float
    mu: float
    method: str
    lower_bound_only: bool = False


def empirical_rate(rep: Representation, rho, region: Region, m_list, n_samples: int = 0,
                   seed: int = 0, workers: int = 1, on_degenerate: str = "raise") -> list:
    """Empirical decay rates ``-(1/m) ln mu_m(region)``.

    Exact block summation is used when the region is orbit invariant or the
    system is a torus (``lo == hi == rate``); otherwise Monte Carlo with
    Wilson error bars.

    Raises
    ------
    DegenerateRegion
        When no sample hits the region at some ``m`` and ``on_degenerate ==
        'raise'``; with ``'bound'`` the row carries the lower bound instead.
    """
    kind = _system(rep)
    rho = validate_state(rho, rep.dim)
    rows = []
    for m in m_list:
        if region.chamber_only or kind == "torus":
            mu = exact_mu(rep, rho, m, region)
            r = -math.log(mu) / m if mu > 0 else math.inf
            rows.append(RateRow(m, r, r, r, mu, "exact"))
            continue
        if n_samples <= 0:
            raise InvalidConfig("Monte Carlo rate needs n_samples > 0")
        mu, (lo, hi) = estimate_mu(rep, rho, m, region, n_samples, seed=seed + m, workers=workers)
        bound = -math.log(hi) / m
        if mu == 0:
            if on_degenerate == "raise":
                raise DegenerateRegion(f"no hits at m = {m}; rate >= {bound:.6g}", lower_bound=bound)
            rows.append(RateRow(m, bound, bound, math.inf, 0.0, "monte_carlo", True))
            continue
        rows.append(RateRow(m, -math.log(mu) / m, bound, -math.log(lo) / m if lo > 0 else math.inf,
                            mu, "monte_carlo"))
    return rows
