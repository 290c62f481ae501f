"""Concrete compact groups, their complexifications and Lie algebra data.

The supported atoms are the torus ``U(1)^d``, ``SU(2)`` and ``U(d)``.  A
:class:`GroupSpec` is an ordered product of atoms and every operation acts
factor by factor.  Complexified elements are stored as invertible complex
matrices (complex vectors for torus factors); algebra and dual vectors in
``i k`` and ``i k*`` are stored as Hermitian matrices (real vectors for
torus factors).

Duals and algebra vectors are identified through the real trace form
``Re Tr(x xi)`` on matrix factors and the Euclidean dot product on torus
factors.

Cartan coordinates
------------------
Diagonal (Cartan) data is exposed as a flat real vector with one entry per
torus coordinate, one per diagonal entry of a ``U(d)`` factor and a single
scalar for ``SU(2)``.  For ``SU(2)`` the algebra scalar ``a`` stands for
``diag(a/2, -a/2)`` and the dual scalar ``c`` for ``diag(c, -c)``, so that
the spin-j weights are ``-j, ..., j`` and the pairing of Cartan coordinates
is the plain dot product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import MismatchedGroup, SingularInput

COND_LIMIT = 1e12
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


# ---------------------------------------------------------------------------
# group atoms


@dataclass(frozen=True)
class Torus:
    """The torus ``U(1)^d``."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"torus dimension must be a positive integer, got {self.d}")

    is_matrix = False

    @property
    def size(self) -> int:
        return self.d

    @property
    def compact_dim(self) -> int:
        return self.d

    @property
    def cartan_dim(self) -> int:
        return self.d

    def __str__(self):
        return f"Torus({self.d})"


@dataclass(frozen=True)
class SU2:
    """The special unitary group ``SU(2)``."""

    is_matrix = True
    size = 2
    compact_dim = 3
    cartan_dim = 1

    def __str__(self):
        return "SU2"


@dataclass(frozen=True)
class Unitary:
    """The unitary group ``U(d)``."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"unitary dimension must be a positive integer, got {self.d}")

    is_matrix = True

    @property
    def size(self) -> int:
        return self.d

    @property
    def compact_dim(self) -> int:
        return self.d * self.d

    @property
    def cartan_dim(self) -> int:
        return self.d

    def __str__(self):
        return f"Unitary({self.d})"


Atom = Union[Torus, SU2, Unitary]


@dataclass(frozen=True)
class GroupSpec:
    """A finite product of group atoms.

    Parameters
    ----------
    factors : sequence of Torus, SU2 or Unitary
        The ordered factors. At least one is required.
    """

    factors: tuple = field()

    def __post_init__(self):
        facs = tuple(self.factors)
        if not facs:
            raise ValueError("a group needs at least one factor")
        for f in facs:
            if not isinstance(f, (Torus, SU2, Unitary)):
                raise TypeError(f"unknown group atom {f!r}")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def of(cls, *atoms: Atom) -> "GroupSpec":
        return cls(tuple(atoms))

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __mul__(self, other: "GroupSpec") -> "GroupSpec":
        return GroupSpec(self.factors + other.factors)

    @property
    def compact_dim(self) -> int:
        return sum(f.compact_dim for f in self.factors)

    @property
    def cartan_dim(self) -> int:
        return sum(f.cartan_dim for f in self.factors)

    def cartan_slices(self) -> list[slice]:
        out, i = [], 0
        for f in self.factors:
            out.append(slice(i, i + f.cartan_dim))
            i += f.cartan_dim
        return out

    def compact_slices(self) -> list[slice]:
        out, i = [], 0
        for f in self.factors:
            out.append(slice(i, i + f.compact_dim))
            i += f.compact_dim
        return out

    def identity(self) -> "GroupElement":
        parts = [np.ones(f.d, complex) if not f.is_matrix else np.eye(f.size, dtype=complex)
                 for f in self.factors]
        return GroupElement(self, parts, check=False)

    def __str__(self):
        return " x ".join(str(f) for f in self.factors)


def as_group(group) -> GroupSpec:
    if isinstance(group, GroupSpec):
        return group
    if isinstance(group, (Torus, SU2, Unitary)):
        return GroupSpec((group,))
    return GroupSpec(tuple(group))


def _same_group(a, b):
    if a.group != b.group:
        raise MismatchedGroup(f"group {a.group} does not match {b.group}")


# ---------------------------------------------------------------------------
# orthonormal algebra bases


@lru_cache(maxsize=None)
def _matrix_basis(d: int) -> np.ndarray:
    """Orthonormal basis of d x d Hermitian matrices under Re Tr(ab)."""
    out = []
    for a in range(d):
        e = np.zeros((d, d), complex)
        e[a, a] = 1
        out.append(e)
    s = 1 / math.sqrt(2)
    for a in range(d):
        for b in range(a + 1, d):
            e = np.zeros((d, d), complex)
            e[a, b] = e[b, a] = s
            out.append(e)
            e = np.zeros((d, d), complex)
            e[a, b] = -1j * s
            e[b, a] = 1j * s
            out.append(e)
    out = np.array(out)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _su2_basis() -> np.ndarray:
    s = 1 / math.sqrt(2)
    out = np.array([[[1, 0], [0, -1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]]], complex) * s
    out.flags.writeable = False
    return out


def factor_basis(atom: Atom) -> np.ndarray:
    """Orthonormal basis of ``i k`` for one factor, shape ``(dim, n, n)``.

    Torus factors return the identity matrix of shape ``(d, d)`` whose rows
    are the coordinate vectors.
    """
    if isinstance(atom, Torus):
        return np.eye(atom.d)
    if isinstance(atom, SU2):
        return _su2_basis()
    return _matrix_basis(atom.d)


def algebra_basis(group) -> list["AlgebraVector"]:
    """Orthonormal basis of ``i k`` for the whole group."""
    group = as_group(group)
    theta = np.eye(group.compact_dim)
    return [AlgebraVector.from_coords(group, t) for t in theta]


# ---------------------------------------------------------------------------
# group elements


class GroupElement:
    """An element of the complexified group, stored factor by factor.

    Parameters
    ----------
    group : GroupSpec
    parts : sequence of arrays
        One complex vector per torus factor and one square complex matrix per
        matrix factor.
    check : bool
        Validate shapes and the SU(2) determinant.
    """

    __slots__ = ("group", "parts")

    def __init__(self, group, parts: Sequence, check: bool = True):
        group = as_group(group)
        parts = tuple(np.array(p, dtype=complex) for p in parts)
        if check:
            if len(parts) != len(group.factors):
                raise MismatchedGroup(f"expected {len(group.factors)} factors, got {len(parts)}")
            for f, p in zip(group.factors, parts):
                shape = (f.size, f.size) if f.is_matrix else (f.d,)
                if p.shape != shape:
                    raise MismatchedGroup(f"factor {f} expects shape {shape}, got {p.shape}")
                if not np.all(np.isfinite(p)):
                    raise SingularInput("group element has non-finite entries")
                if isinstance(f, SU2):
                    det = np.linalg.det(p)
                    if abs(det - 1) > 1e-8 * max(1.0, np.abs(p).max() ** 2):
                        raise ValueError(f"SU2 factor must have determinant 1, got {det}")
        for p in parts:
            p.flags.writeable = False
        self.group = group
        self.parts = parts

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _same_group(self, other)
        parts = [a @ b if f.is_matrix else a * b
                 for f, a, b in zip(self.group.factors, self.parts, other.parts)]
        return GroupElement(self.group, parts, check=False)

    def inv(self) -> "GroupElement":
        parts = [np.linalg.inv(p) if f.is_matrix else 1 / p
                 for f, p in zip(self.group.factors, self.parts)]
        return GroupElement(self.group, parts, check=False)

    def star(self) -> "GroupElement":
        return cartan_star(self)

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return unitarity_error(self) <= tol

    def __repr__(self):
        return f"GroupElement({self.group}, {[p.tolist() for p in self.parts]})"


def unitarity_error(g: GroupElement) -> float:
    """Max-entry deviation of ``g* g`` from the identity, over all factors."""
    err = 0.0
    for f, p in zip(g.group.factors, g.parts):
        if f.is_matrix:
            e = np.abs(p.conj().T @ p - np.eye(f.size)).max()
        else:
            e = np.abs(np.abs(p) - 1).max()
        err = max(err, float(e))
    return err


def cartan_star(g: GroupElement) -> GroupElement:
    """Conjugate transpose, factor by factor."""
    parts = [p.conj().T if f.is_matrix else p.conj() for f, p in zip(g.group.factors, g.parts)]
    return GroupElement(g.group, parts, check=False)


# ---------------------------------------------------------------------------
# algebra and dual vectors


def _hermitize(m, scale_ref=None):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dev = np.abs(m - m.conj().T).max(initial=0.0)
    ref = max(1.0, np.abs(m).max(initial=0.0))
    if dev > HERMITIAN_TOL * ref:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return (m + m.conj().T) / 2


class AlgebraVector:
    """An element of ``i k``: Hermitian matrices and real vectors per factor.

    Parameters
    ----------
    group : GroupSpec
    parts : sequence of arrays
        Hermitian matrices for matrix factors (traceless for SU2), real
        vectors for torus factors.
    check : bool
        Validate Hermiticity to ``1e-12`` relative to the entry scale; the
        stored value is the Hermitian part.
    """

    __slots__ = ("group", "parts")

    def __init__(self, group, parts: Sequence, check: bool = True):
        group = as_group(group)
        if len(parts) != len(group.factors):
            raise MismatchedGroup(f"expected {len(group.factors)} factors, got {len(parts)}")
        out = []
        for f, p in zip(group.factors, parts):
            if f.is_matrix:
                p = _hermitize(p) if check else np.asarray(p, dtype=complex)
                if p.shape != (f.size, f.size):
                    raise MismatchedGroup(f"factor {f} expects shape {(f.size, f.size)}")
                if isinstance(f, SU2) and check:
                    tr = np.trace(p).real
                    if abs(tr) > 1e-10 * max(1.0, np.abs(p).max()):
                        raise ValueError(f"SU2 component must be traceless, trace {tr:.3e}")
                    p = p - tr / 2 * np.eye(2)
            else:
                p = np.asarray(p)
                if np.iscomplexobj(p):
                    if check and np.abs(p.imag).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(p).max()):
                        raise ValueError("torus component must be real")
                    p = p.real
                p = np.array(p, dtype=float).reshape(-1)
                if p.shape != (f.d,):
                    raise MismatchedGroup(f"factor {f} expects length {f.d}, got {p.shape}")
            p = np.array(p)
            p.flags.writeable = False
            out.append(p)
        self.group = group
        self.parts = tuple(out)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, group):
        group = as_group(group)
        parts = [np.zeros((f.size, f.size), complex) if f.is_matrix else np.zeros(f.d)
                 for f in group.factors]
        return cls(group, parts, check=False)

    @classmethod
    def from_coords(cls, group, theta):
        """Build from coordinates in the orthonormal algebra basis."""
        group = as_group(group)
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (group.compact_dim,):
            raise ValueError(f"expected {group.compact_dim} coordinates, got {theta.shape}")
        parts = []
        for f, sl in zip(group.factors, group.compact_slices()):
            t = theta[sl]
            if f.is_matrix:
                basis = factor_basis(f)
                parts.append((t @ basis.reshape(len(t), -1)).reshape(basis.shape[1:]))
            else:
                parts.append(t.copy())
        return cls(group, parts, check=False)

    @classmethod
    def from_cartan(cls, group, c):
        """Build a diagonal element from Cartan coordinates."""
        group = as_group(group)
        c = np.asarray(c, dtype=float).reshape(-1)
        if c.shape != (group.cartan_dim,):
            raise ValueError(f"expected {group.cartan_dim} Cartan coordinates, got {c.shape}")
        parts = []
        for f, sl in zip(group.factors, group.cartan_slices()):
            v = c[sl]
            if isinstance(f, SU2):
                s = cls._su2_cartan_scale()
                parts.append(np.diag([v[0] * s, -v[0] * s]).astype(complex))
            elif f.is_matrix:
                parts.append(np.diag(v).astype(complex))
            else:
                parts.append(v.copy())
        return cls(group, parts, check=False)

    @staticmethod
    def _su2_cartan_scale():
        return 0.5

    # -- views ------------------------------------------------------------
    def coords(self) -> np.ndarray:
        """Coordinates in the orthonormal algebra basis."""
        out = []
        for f, p in zip(self.group.factors, self.parts):
            if f.is_matrix:
                basis = factor_basis(f)
                out.append((basis.reshape(len(basis), -1) @ p.T.ravel()).real)
            else:
                out.append(p)
        return np.concatenate(out)

    def cartan_coords(self) -> np.ndarray:
        """Cartan coordinates of the diagonal part."""
        out = []
        for f, p in zip(self.group.factors, self.parts):
            if isinstance(f, SU2):
                out.append([(p[0, 0].real - p[1, 1].real) / (2 * self._su2_cartan_scale())])
            elif f.is_matrix:
                out.append(np.diag(p).real)
            else:
                out.append(p)
        return np.concatenate([np.asarray(o, float) for o in out])

    def is_diagonal(self, tol: float = 1e-12) -> bool:
        for f, p in zip(self.group.factors, self.parts):
            if f.is_matrix and np.abs(p - np.diag(np.diag(p))).max() > tol:
                return False
        return True

    # -- arithmetic -------------------------------------------------------
    def _new(self, parts):
        return type(self)(self.group, parts, check=False)

    def __add__(self, other):
        _same_group(self, other)
        return self._new([a + b for a, b in zip(self.parts, other.parts)])

    def __sub__(self, other):
        _same_group(self, other)
        return self._new([a - b for a, b in zip(self.parts, other.parts)])

    def __neg__(self):
        return self._new([-a for a in self.parts])

    def __mul__(self, t):
        t = float(t)
        return self._new([t * a for a in self.parts])

    __rmul__ = __mul__

    def __truediv__(self, t):
        return self * (1.0 / float(t))

    def norm(self) -> float:
        """Norm induced by the trace pairing."""
        return float(np.sqrt(sum(np.vdot(p, p).real for p in self.parts)))

    def trace_norm(self) -> float:
        """Sum over factors of the Schatten-1 norm (l1 norm on torus factors)."""
        tot = 0.0
        for f, p in zip(self.group.factors, self.parts):
            if f.is_matrix:
                tot += np.abs(np.linalg.eigvalsh(p)).sum()
            else:
                tot += np.abs(p).sum()
        return float(tot)

    def max_abs_diff(self, other) -> float:
        _same_group(self, other)
        return float(max(np.abs(a - b).max() for a, b in zip(self.parts, other.parts)))

    def __repr__(self):
        return f"{type(self).__name__}({self.group}, {[np.round(p, 12).tolist() for p in self.parts]})"


class CartanVector(AlgebraVector):
    """Diagonal element of ``i k``, the Lie algebra of ``A``."""

    __slots__ = ()

    def __init__(self, group, parts, check: bool = True):
        super().__init__(group, parts, check)
        if check and not self.is_diagonal(1e-12):
            raise ValueError("Cartan vector must be diagonal")


class DualVector(AlgebraVector):
    """An element of ``i k*``, identified with ``i k`` by the trace pairing.

    The SU(2) Cartan scalar ``c`` stands for ``diag(c, -c)``.
    """

    __slots__ = ()

    @staticmethod
    def _su2_cartan_scale():
        return 1.0


def as_dual(v: AlgebraVector) -> DualVector:
    return DualVector(v.group, v.parts, check=False)


def as_algebra(v: AlgebraVector) -> AlgebraVector:
    return AlgebraVector(v.group, v.parts, check=False)


def pairing(x: AlgebraVector, xi: AlgebraVector) -> float:
    """Trace pairing ``sum Re Tr(x xi)`` (dot product on torus factors)."""
    _same_group(x, xi)
    tot = 0.0
    for f, a, b in zip(x.group.factors, x.parts, xi.parts):
        if f.is_matrix:
            v = np.sum(a * b.T)
            ref = max(1.0, float(np.abs(a).max() * np.abs(b).max() * f.size))
            if abs(v.imag) > HERMITIAN_TOL * ref:
                raise ValueError(f"trace pairing has imaginary part {v.imag:.3e}")
            tot += v.real
        else:
            tot += float(a @ b)
    return float(tot)


# ---------------------------------------------------------------------------
# exponential, logarithm and Iwasawa


def _exp_herm(h, t=1.0):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(t * w)) @ v.conj().T


def exp_alg(xi: AlgebraVector, t: float = 1.0) -> GroupElement:
    """Exponential ``exp(t xi)`` of an element of ``i k``.

    Matrix factors go through the eigendecomposition, so the result is
    Hermitian positive definite.
    """
    parts = []
    for f, p in zip(xi.group.factors, xi.parts):
        parts.append(_exp_herm(p, t) if f.is_matrix else np.exp(t * p).astype(complex))
    return GroupElement(xi.group, parts, check=False)


def log_positive(g: GroupElement) -> AlgebraVector:
    """Inverse of :func:`exp_alg` on Hermitian positive definite elements."""
    parts = []
    for f, p in zip(g.group.factors, g.parts):
        if f.is_matrix:
            h = (p + p.conj().T) / 2
            w, v = np.linalg.eigh(h)
            if w.min() <= 0:
                raise SingularInput("element is not positive definite")
            lp = (v * np.log(w)) @ v.conj().T
            if isinstance(f, SU2):
                lp = lp - np.trace(lp).real / 2 * np.eye(2)
            parts.append(lp)
        else:
            if np.any(p.real <= 0):
                raise SingularInput("element is not positive")
            parts.append(np.log(p.real))
    return AlgebraVector(g.group, parts, check=False)


@dataclass(frozen=True)
class IwasawaFactors:
    """The factorization ``g = k exp(alpha) n``."""

    k: GroupElement
    alpha: CartanVector
    n: GroupElement

    def reconstruct(self) -> GroupElement:
        return self.k @ exp_alg(self.alpha) @ self.n


def check_condition(p: np.ndarray) -> float:
    """Condition number of a factor matrix; raise past the guard."""
    if not np.all(np.isfinite(p)):
        raise SingularInput("non-finite entries")
    s = np.linalg.svd(p, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > COND_LIMIT:
        cond = np.inf if s[-1] == 0 else s[0] / s[-1]
        raise SingularInput(f"condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
    return float(s[0] / s[-1])


def qr_positive(p: np.ndarray):
    """QR factorization with positive real diagonal in R."""
    q, r = np.linalg.qr(p)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    q = q * ph[..., None, :]
    r = r * np.conj(ph)[..., :, None]
    return q, r


def iwasawa_matrix(p: np.ndarray):
    """Iwasawa factors ``(k, log a, n)`` of one invertible matrix."""
    check_condition(p)
    q, r = qr_positive(p)
    a = np.diagonal(r).real
    n = r / a[:, None]
    np.fill_diagonal(n, 1.0)
    return q, np.log(a), n


def iwasawa(g: GroupElement) -> IwasawaFactors:
    """Iwasawa decomposition ``g = k exp(alpha) n``.

    Matrix factors use a QR factorization whose R factor has positive
    diagonal; torus factors reduce to the polar decomposition of each
    coordinate.

    Raises
    ------
    SingularInput
        If a factor has condition number above ``1e12``.
    """
    ks, alphas, ns = [], [], []
    for f, p in zip(g.group.factors, g.parts):
        if f.is_matrix:
            k, al, n = iwasawa_matrix(p)
            if isinstance(f, SU2):
                if abs(al.sum()) > 1e-8 * max(1.0, np.abs(al).max()):
                    raise ValueError("SU2 factor left SL(2): Iwasawa A-part is not traceless")
                al = al - al.mean()
            ks.append(k)
            alphas.append(np.diag(al).astype(complex))
            ns.append(n)
        else:
            if not np.all(np.isfinite(p)):
                raise SingularInput("non-finite entries")
            r = np.abs(p)
            if np.any(r == 0) or r.max() / r.min() > COND_LIMIT:
                raise SingularInput("torus element has a zero or badly scaled coordinate")
            ks.append(p / r)
            alphas.append(np.log(r))
            ns.append(np.ones(f.d, complex))
    return IwasawaFactors(GroupElement(g.group, ks, check=False),
                          CartanVector(g.group, alphas, check=False),
                          GroupElement(g.group, ns, check=False))


def iwasawa_gram_schmidt(g: GroupElement) -> IwasawaFactors:
    """Independent Iwasawa decomposition by modified Gram-Schmidt.

    Used only as a cross-check of :func:`iwasawa`.
    """
    ks, alphas, ns = [], [], []
    for f, p in zip(g.group.factors, g.parts):
        if not f.is_matrix:
            r = np.abs(p)
            ks.append(p / r)
            alphas.append(np.log(r))
            ns.append(np.ones(f.d, complex))
            continue
        d = f.size
        q = np.array(p, complex)
        r = np.zeros((d, d), complex)
        for j in range(d):
            v = q[:, j].copy()
            for i in range(j):
                r[i, j] = np.vdot(q[:, i], v)
                v -= r[i, j] * q[:, i]
            r[j, j] = np.linalg.norm(v)
            q[:, j] = v / r[j, j]
        a = r.diagonal().real
        n = r / a[:, None]
        al = np.log(a)
        if isinstance(f, SU2):
            al = al - al.mean()
        ks.append(q)
        alphas.append(np.diag(al).astype(complex))
        ns.append(n)
    return IwasawaFactors(GroupElement(g.group, ks, check=False),
                          CartanVector(g.group, alphas, check=False),
                          GroupElement(g.group, ns, check=False))


# ---------------------------------------------------------------------------
# sampling and adjoint actions


def haar_unitary(d: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Haar-distributed ``U(d)`` matrices by phase-corrected Ginibre QR.

    Parameters
    ----------
    d : int
    rng : numpy Generator
    size : int or None
        Number of samples; ``None`` returns a single matrix.
    """
    shape = (d, d) if size is None else (size, d, d)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    q, _ = qr_positive(z)
    return q


def haar_sample(group, rng: np.random.Generator) -> GroupElement:
    """Haar-random element of the compact group ``K``."""
    group = as_group(group)
    parts = []
    for f in group.factors:
        if isinstance(f, Torus):
            parts.append(np.exp(2j * np.pi * rng.random(f.d)))
        else:
            u = haar_unitary(f.size, rng)
            if isinstance(f, SU2):
                u = u / np.sqrt(np.linalg.det(u))
            parts.append(u)
    return GroupElement(group, parts, check=False)


def random_element(group, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
    """Random element of the complexification (Ginibre per matrix factor).

    SU(2) factors are rescaled to unit determinant.  Intended for tests and
    self-checks.
    """
    group = as_group(group)
    parts = []
    for f in group.factors:
        if isinstance(f, Torus):
            parts.append(np.exp(scale * rng.standard_normal(f.d) + 2j * np.pi * rng.random(f.d)))
            continue
        while True:
            z = np.eye(f.size) + scale * (rng.standard_normal((f.size, f.size))
                                          + 1j * rng.standard_normal((f.size, f.size))) / math.sqrt(2)
            s = np.linalg.svd(z, compute_uv=False)
            if s[-1] > 0 and s[0] / s[-1] < 1e6:
                break
        if isinstance(f, SU2):
            z = z / np.sqrt(np.linalg.det(z))
        parts.append(z)
    return GroupElement(group, parts, check=False)


def random_algebra(group, rng: np.random.Generator, scale: float = 1.0, cls=AlgebraVector):
    """Gaussian element of ``i k`` (or of the dual with ``cls=DualVector``)."""
    group = as_group(group)
    return cls.from_coords(group, scale * rng.standard_normal(group.compact_dim))


def _require_unitary(k: GroupElement):
    err = unitarity_error(k)
    if err > 1e-8:
        raise ValueError(f"element is not in K (unitarity error {err:.3e})")


def adjoint(k: GroupElement, xi: AlgebraVector) -> AlgebraVector:
    """Adjoint action ``k xi k*`` (identity on torus factors)."""
    _same_group(k, xi)
    _require_unitary(k)
    parts = [u @ p @ u.conj().T if f.is_matrix else p
             for f, u, p in zip(k.group.factors, k.parts, xi.parts)]
    return type(xi)(xi.group, parts, check=False)


def coadjoint(k: GroupElement, x: DualVector) -> DualVector:
    """Coadjoint action; the same formula as :func:`adjoint` under the trace form."""
    out = adjoint(k, x)
    return DualVector(out.group, out.parts, check=False)
