"""Finite-dimensional representations of the supported groups.

Every representation extends holomorphically to the complexified group, so
:meth:`Representation.apply` accepts arbitrary invertible elements and
:meth:`Representation.derived` is complex linear on raw factor matrices.

Weights are reported in Cartan coordinates (see :mod:`momentldp.lie`) and
are stored internally as integer arrays of twice their value, so spin
weights stay exact.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .errors import MismatchedGroup, NotDominant, TooLarge, UnsupportedRep
from .lie import SU2, AlgebraVector, GroupElement, GroupSpec, Torus, Unitary
from .polytope import Polytope

M_MAX = 14


class Representation:
    """Base class for representation descriptors."""

    group: GroupSpec

    @property
    def dim(self) -> int:
        raise NotImplementedError

    # subclasses implement these on raw factor arrays
    def _apply_parts(self, parts) -> np.ndarray:
        raise NotImplementedError

    def _derived_parts(self, parts) -> np.ndarray:
        raise NotImplementedError

    def _doubled_weights(self) -> np.ndarray:
        """Integer array ``(dim, cartan_dim)`` of twice the basis weights."""
        raise NotImplementedError

    def apply(self, g: GroupElement) -> np.ndarray:
        """Matrix of ``pi(g)`` for ``g`` in the complexified group."""
        if g.group != self.group:
            raise MismatchedGroup(f"representation of {self.group} applied to element of {g.group}")
        return self._apply_parts(g.parts)

    def derived(self, xi: AlgebraVector) -> np.ndarray:
        """Matrix of the derived representation at ``xi``."""
        if xi.group != self.group:
            raise MismatchedGroup(f"representation of {self.group} applied to vector of {xi.group}")
        return self._derived_parts(xi.parts)

    def basis_weights(self) -> np.ndarray:
        """Weight of each basis vector, shape ``(dim, cartan_dim)``."""
        return _basis_weights(self)


@lru_cache(maxsize=None)
def _basis_weights(rep) -> np.ndarray:
    w = rep._doubled_weights() / 2.0
    w.flags.writeable = False
    return w


def _check_atom(group: GroupSpec, kind):
    if len(group.factors) != 1 or not isinstance(group.factors[0], kind):
        raise MismatchedGroup(f"expected a single {kind.__name__} factor")


# ---------------------------------------------------------------------------
# symmetric powers of 2x2 matrices


@lru_cache(maxsize=None)
def _sym_terms(n: int):
    """Monomial expansion of the n-th symmetric power of [[a, b], [c, d]].

    Returns flat arrays ``(row, col, coef, ea, eb, ec, ed)`` such that entry
    ``(row, col)`` is ``sum coef * a**ea * b**eb * c**ec * d**ed`` in the
    normalized monomial basis ``x^p y^q / sqrt(p! q!)`` ordered by ``q``.
    """
    rows, cols, coefs, ea, eb, ec, ed = [], [], [], [], [], [], []
    lf = [math.lgamma(i + 1) for i in range(n + 1)]
    for q in range(n + 1):
        p = n - q
        for s in range(p + 1):          # y's taken from (ax + cy)^p
            for t in range(q + 1):      # y's taken from (bx + dy)^q
                qq = s + t
                pp = n - qq
                c = math.comb(p, s) * math.comb(q, t)
                c *= math.exp(0.5 * (lf[pp] + lf[qq] - lf[p] - lf[q]))
                rows.append(qq)
                cols.append(q)
                coefs.append(c)
                ea.append(p - s)
                ec.append(s)
                eb.append(q - t)
                ed.append(t)
    return tuple(np.array(v) for v in (rows, cols, coefs, ea, eb, ec, ed))


def sym_power(g: np.ndarray, n: int) -> np.ndarray:
    """The n-th symmetric power of a 2x2 matrix (spin ``n/2`` matrix)."""
    rows, cols, coefs, ea, eb, ec, ed = _sym_terms(n)
    a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    vals = coefs * a ** ea * b ** eb * c ** ec * d ** ed
    out = np.zeros((n + 1, n + 1), complex)
    np.add.at(out, (rows, cols), vals)
    return out


def sym_power_derived(x: np.ndarray, n: int) -> np.ndarray:
    """Derived action of the n-th symmetric power at a 2x2 matrix."""
    a, b, c, d = x[0, 0], x[0, 1], x[1, 0], x[1, 1]
    out = np.zeros((n + 1, n + 1), complex)
    for q in range(n + 1):
        p = n - q
        out[q, q] = p * a + q * d
        if p > 0:
            out[q + 1, q] = c * math.sqrt(p * (q + 1))
        if q > 0:
            out[q - 1, q] = b * math.sqrt(q * (p + 1))
    return out


# ---------------------------------------------------------------------------
# concrete families


@dataclass(frozen=True)
class Standard(Representation):
    """Defining representation of ``U(d)`` on ``C^d``."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")

    @property
    def group(self) -> GroupSpec:
        return GroupSpec((Unitary(self.d),))

    @property
    def dim(self) -> int:
        return self.d

    def _apply_parts(self, parts):
        return np.array(parts[0], complex)

    def _derived_parts(self, parts):
        return np.array(parts[0], complex)

    def _doubled_weights(self):
        return 2 * np.eye(self.d, dtype=int)


@dataclass(frozen=True)
class Spin(Representation):
    """Spin-j representation of ``SU(2)`` on ``Sym^{2j}(C^2)``.

    Parameters
    ----------
    j : float, int or Fraction
        Half-integer spin. The basis is ordered ``m = j, j-1, ..., -j``.
    """

    j: Fraction

    def __post_init__(self):
        j = Fraction(self.j).limit_denominator(2)
        if j < 0 or (2 * j).denominator != 1 or abs(float(j) - float(self.j)) > 1e-12:
            raise ValueError(f"spin must be a nonnegative half-integer, got {self.j}")
        object.__setattr__(self, "j", j)

    @property
    def two_j(self) -> int:
        return int(2 * self.j)

    @property
    def group(self) -> GroupSpec:
        return GroupSpec((SU2(),))

    @property
    def dim(self) -> int:
        return self.two_j + 1

    def _apply_parts(self, parts):
        return sym_power(parts[0], self.two_j)

    def _derived_parts(self, parts):
        return sym_power_derived(parts[0], self.two_j)

    def _doubled_weights(self):
        n = self.two_j
        return (n - 2 * np.arange(n + 1)).reshape(-1, 1)


@dataclass(frozen=True)
class TorusRep(Representation):
    """Representation of ``U(1)^d`` by integer weights with multiplicities.

    Parameters
    ----------
    weights : sequence of integer tuples (or integers when d = 1)
    multiplicities : sequence of positive integers, optional
    """

    weights: tuple
    multiplicities: tuple = None

    def __post_init__(self):
        ws = []
        for w in self.weights:
            w = tuple(int(v) for v in np.atleast_1d(w))
            ws.append(w)
        if not ws:
            raise ValueError("a torus representation needs at least one weight")
        d = len(ws[0])
        if any(len(w) != d for w in ws):
            raise ValueError("all weights must have the same length")
        mult = self.multiplicities
        mult = (1,) * len(ws) if mult is None else tuple(int(m) for m in mult)
        if len(mult) != len(ws) or any(m < 1 for m in mult):
            raise ValueError("multiplicities must be positive and match the weights")
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "multiplicities", mult)

    @property
    def d(self) -> int:
        return len(self.weights[0])

    @property
    def group(self) -> GroupSpec:
        return GroupSpec((Torus(self.d),))

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    def _int_weights(self) -> np.ndarray:
        return np.array([w for w, m in zip(self.weights, self.multiplicities) for _ in range(m)])

    def _apply_parts(self, parts):
        z = np.asarray(parts[0], complex)
        vals = np.prod(z[None, :] ** self._int_weights(), axis=1)
        return np.diag(vals)

    def _derived_parts(self, parts):
        return np.diag(self._int_weights() @ np.asarray(parts[0], float)).astype(complex)

    def _doubled_weights(self):
        return 2 * self._int_weights()


@dataclass(frozen=True)
class TensorProduct(Representation):
    """Outer tensor product; the group is the product of the parts' groups."""

    parts: tuple

    def __post_init__(self):
        ps = tuple(self.parts)
        if not ps:
            raise ValueError("empty tensor product")
        object.__setattr__(self, "parts", ps)

    @property
    def group(self) -> GroupSpec:
        return reduce(lambda a, b: a * b, (p.group for p in self.parts))

    @property
    def dim(self) -> int:
        return math.prod(p.dim for p in self.parts)

    def _split(self, parts):
        out, i = [], 0
        for p in self.parts:
            n = len(p.group.factors)
            out.append(parts[i:i + n])
            i += n
        return out

    def _apply_parts(self, parts):
        mats = [p._apply_parts(q) for p, q in zip(self.parts, self._split(parts))]
        return reduce(np.kron, mats)

    def _derived_parts(self, parts):
        mats = [p._derived_parts(q) for p, q in zip(self.parts, self._split(parts))]
        return _kron_sum(mats)

    def _doubled_weights(self):
        blocks = [p._doubled_weights() for p in self.parts]
        rows = [np.concatenate(r) for r in itertools.product(*blocks)]
        return np.array(rows, dtype=int)


@dataclass(frozen=True)
class Power(Representation):
    """m-fold tensor power of a representation of the same group."""

    base: Representation
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("tensor power must be a positive integer")

    @property
    def group(self) -> GroupSpec:
        return self.base.group

    @property
    def dim(self) -> int:
        return self.base.dim ** self.m

    def _apply_parts(self, parts):
        b = self.base._apply_parts(parts)
        return reduce(np.kron, [b] * self.m)

    def _derived_parts(self, parts):
        b = self.base._derived_parts(parts)
        return _kron_sum([b] * self.m)

    def _doubled_weights(self):
        w = self.base._doubled_weights()
        out = w
        for _ in range(self.m - 1):
            out = (out[:, None, :] + w[None, :, :]).reshape(-1, w.shape[1])
        return out


def _kron_sum(mats):
    dims = [m.shape[0] for m in mats]
    total = math.prod(dims)
    out = np.zeros((total, total), complex)
    for i, m in enumerate(mats):
        left = np.eye(math.prod(dims[:i]))
        right = np.eye(math.prod(dims[i + 1:]))
        out += np.kron(np.kron(left, m), right)
    return out


# ---------------------------------------------------------------------------
# characters and weights


def _cartan_array(rep, alpha):
    if isinstance(alpha, AlgebraVector):
        if alpha.group != rep.group:
            raise MismatchedGroup("Cartan vector over the wrong group")
        return alpha.cartan_coords()
    a = np.asarray(alpha, float).reshape(-1)
    if a.shape != (rep.group.cartan_dim,):
        raise ValueError(f"expected {rep.group.cartan_dim} Cartan coordinates")
    return a


def log_character(rep: Representation, alpha) -> float:
    """``ln Tr pi(exp alpha)`` for ``alpha`` in the Cartan subalgebra."""
    a = _cartan_array(rep, alpha)
    return float(logsumexp(rep.basis_weights() @ a))


def character(rep: Representation, alpha) -> float:
    """``Tr pi(exp alpha) = sum_w mult(w) exp(<w, alpha>)``."""
    return float(np.exp(log_character(rep, alpha)))


@dataclass(frozen=True)
class WeightData:
    """Distinct weights with multiplicities and their convex hull.

    Attributes
    ----------
    weights : list of (ndarray, int)
        Weight in Cartan coordinates and its multiplicity.
    polytope : Polytope
        Convex hull of the weights.
    """

    weights: list = field(hash=False)
    polytope: Polytope = field(hash=False)

    @property
    def vertices(self) -> np.ndarray:
        return self.polytope.vertices

    def as_dict(self) -> dict:
        return {tuple(float(v) for v in w): m for w, m in self.weights}


@lru_cache(maxsize=None)
def weight_data(rep: Representation) -> WeightData:
    """Exact weight multiset of ``rep`` and the polytope it spans."""
    cnt = Counter(tuple(int(v) for v in row) for row in rep._doubled_weights())
    keys = sorted(cnt, reverse=True)
    weights = [(np.array(k, float) / 2, cnt[k]) for k in keys]
    return WeightData(weights, Polytope(np.array([w for w, _ in weights])))


# ---------------------------------------------------------------------------
# highest weight vectors


def highest_weight_vector(lam, family) -> np.ndarray:
    """Unit highest weight vector of the irreducible with highest weight ``lam``.

    Parameters
    ----------
    lam : scalar or sequence
        Spin ``j`` for ``family='spin'`` (or a :class:`Spin` instance),
        ``(1, 0, ..., 0)`` for ``family='standard'`` (or :class:`Standard`),
        and ``(l1, l2)`` with ``l1 >= l2`` for ``family='u2'``.
    family : str or Representation
    """
    if isinstance(family, Spin):
        if Fraction(lam).limit_denominator(2) != family.j:
            raise NotDominant(f"spin {lam} does not label {family}")
        family = "spin"
    elif isinstance(family, Standard):
        family, d = "standard", family.d
        lam = np.asarray(lam, float)
        if lam.shape != (d,):
            raise NotDominant(f"weight of length {lam.shape} for Standard({d})")
    if family == "spin":
        two_j = 2 * float(lam)
        if two_j < 0 or abs(two_j - round(two_j)) > 1e-12:
            raise NotDominant(f"{lam} is not a nonnegative half-integer")
        v = np.zeros(int(round(two_j)) + 1, complex)
        v[0] = 1
        return v
    if family == "standard":
        lam = np.asarray(lam, float)
        if np.any(np.diff(lam) > 0) or np.any(np.abs(lam - np.round(lam)) > 0):
            raise NotDominant(f"{lam.tolist()} is not dominant integral")
        e1 = np.zeros(len(lam))
        e1[0] = 1
        if not np.array_equal(lam, e1):
            raise UnsupportedRep("only the defining highest weight (1, 0, ..., 0) is available")
        return e1.astype(complex)
    if family == "u2":
        l1, l2 = (float(v) for v in lam)
        if l1 < l2 or l1 != round(l1) or l2 != round(l2):
            raise NotDominant(f"({l1}, {l2}) is not dominant integral")
        v = np.zeros(int(l1 - l2) + 1, complex)
        v[0] = 1
        return v
    raise UnsupportedRep(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# isotypic decompositions


@dataclass(frozen=True)
class IsotypicBlock:
    """One isotypic component.

    Attributes
    ----------
    label : tuple
        Highest weight. For qubits ``(l1, l2)`` as a U(2) weight, with spin
        ``(l1 - l2) / 2``; for tori the weight itself.
    dim : int
        Dimension of the irreducible.
    multiplicity : int
    isometry : scipy sparse matrix or None
        Orthonormal columns spanning the block, copy-major (columns
        ``c * dim .. (c + 1) * dim - 1`` belong to copy ``c``, ordered from
        the highest weight down).
    """

    label: tuple
    dim: int
    multiplicity: int
    isometry: object = field(default=None, compare=False, repr=False)

    @property
    def spin(self) -> float:
        return (self.label[0] - self.label[1]) / 2 if len(self.label) == 2 else float("nan")

    def projector(self):
        """Orthogonal projector onto the block (sparse)."""
        if self.isometry is None:
            raise ValueError("decomposition was built without bases")
        v = self.isometry
        return (v @ v.conj().T).tocsr()


@dataclass(frozen=True)
class IsotypicDecomposition:
    blocks: tuple
    total_dim: int

    def dims_check(self) -> bool:
        return sum(b.dim * b.multiplicity for b in self.blocks) == self.total_dim

    def block(self, label) -> IsotypicBlock:
        for b in self.blocks:
            if tuple(b.label) == tuple(label):
                return b
        raise KeyError(label)


def qubit_multiplicity(m: int, two_j: int) -> int:
    """Multiplicity of spin ``two_j / 2`` in ``(C^2)^{(x) m}``."""
    if two_j < 0 or two_j > m or (m - two_j) % 2:
        return 0
    k = (m - two_j) // 2
    return math.comb(m, k) - (math.comb(m, k - 1) if k > 0 else 0)


def isotypic_decompose_qubits(m: int, basis: bool = True, m_max: int = M_MAX) -> IsotypicDecomposition:
    """Decompose ``(C^2)^{(x) m}`` into spin blocks.

    The basis is built by coupling one qubit at a time (as the least
    significant tensor factor) with Condon-Shortley Clebsch-Gordan
    coefficients.  Labels are U(2) highest weights ``((m + 2j)/2, (m - 2j)/2)``.

    Raises
    ------
    TooLarge
        If ``m > m_max``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if m > m_max:
        raise TooLarge(f"m = {m} exceeds the qubit bound {m_max}")
    two_js = range(m % 2, m + 1, 2)
    if not basis:
        blocks = [IsotypicBlock(((m + tj) // 2, (m - tj) // 2), tj + 1, qubit_multiplicity(m, tj))
                  for tj in sorted(two_js, reverse=True)]
        return IsotypicDecomposition(tuple(blocks), 2 ** m)
    levels = _cg_levels(m)
    blocks = []
    for tj in sorted(levels, reverse=True):
        v = levels[tj]
        blocks.append(IsotypicBlock(((m + tj) // 2, (m - tj) // 2), tj + 1,
                                    v.shape[1] // (tj + 1), v))
    return IsotypicDecomposition(tuple(blocks), 2 ** m)


@lru_cache(maxsize=4)
def _cg_levels(m: int) -> dict:
    up = sp.csc_matrix(np.array([[1.0], [0.0]]))
    dn = sp.csc_matrix(np.array([[0.0], [1.0]]))
    levels = {1: sp.identity(2, format="csc")}
    for _ in range(m - 1):
        new = {}
        for tj, v in levels.items():
            mult = v.shape[1] // (tj + 1)
            for tJ in (tj + 1, tj - 1):
                if tJ < 0:
                    continue
                iu, cu, idn, cd = _cg_columns(tj, tJ, mult)
                w = (sp.kron(v[:, iu], up) @ sp.diags(cu)
                     + sp.kron(v[:, idn], dn) @ sp.diags(cd))
                new.setdefault(tJ, []).append(w.tocsc())
        levels = {tJ: sp.hstack(ws, format="csc") for tJ, ws in new.items()}
        for w in levels.values():
            w.eliminate_zeros()
    return levels


def _cg_columns(tj: int, tJ: int, mult: int):
    """Source columns and coefficients for coupling spin tj/2 with a qubit."""
    nj, nJ = tj + 1, tJ + 1
    iu, cu, idn, cd = [], [], [], []
    for c in range(mult):
        for i in range(nJ):
            tM = tJ - 2 * i
            if tJ == tj + 1:
                a = (tj + tM + 1) / (2 * (tj + 1))
                b = (tj - tM + 1) / (2 * (tj + 1))
                su, sd = math.sqrt(max(a, 0.0)), math.sqrt(max(b, 0.0))
            else:
                a = (tj - tM + 1) / (2 * (tj + 1))
                b = (tj + tM + 1) / (2 * (tj + 1))
                su, sd = -math.sqrt(max(a, 0.0)), math.sqrt(max(b, 0.0))
            ju = (tj - (tM - 1)) // 2
            jd = (tj - (tM + 1)) // 2
            if not 0 <= ju < nj:
                ju, su = 0, 0.0
            if not 0 <= jd < nj:
                jd, sd = 0, 0.0
            iu.append(c * nj + ju)
            cu.append(su)
            idn.append(c * nj + jd)
            cd.append(sd)
    return np.array(iu), np.array(cu), np.array(idn), np.array(cd)


def isotypic_decompose_torus(rep: Representation) -> IsotypicDecomposition:
    """Decompose a torus representation (or its power) by weight.

    Each block is the coordinate subspace of basis vectors with that weight.
    """
    if len(rep.group.factors) != 1 or not isinstance(rep.group.factors[0], Torus):
        raise UnsupportedRep("torus decomposition needs a representation of a single torus")
    w2 = rep._doubled_weights()
    keys = [tuple(int(v) for v in row) for row in w2]
    groups: dict = {}
    for i, k in enumerate(keys):
        groups.setdefault(k, []).append(i)
    n = len(keys)
    blocks = []
    for k in sorted(groups, reverse=True):
        idx = groups[k]
        iso = sp.csc_matrix((np.ones(len(idx)), (idx, np.arange(len(idx)))), shape=(n, len(idx)))
        label = tuple(v // 2 for v in k)
        blocks.append(IsotypicBlock(label, 1, len(idx), iso))
    return IsotypicDecomposition(tuple(blocks), n)
