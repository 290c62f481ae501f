"""Density matrices: validation and standard constructors."""

from __future__ import annotations

import numpy as np

from .errors import NotAState
from .lie import haar_unitary

STATE_TOL = 1e-10


def validate_state(rho, dim: int | None = None, tol: float = STATE_TOL) -> np.ndarray:
    """Check that ``rho`` is a density matrix and return its Hermitian part.

    Raises
    ------
    NotAState
        If ``rho`` is not square, not Hermitian, not PSD or not of unit trace
        within ``tol``, or its dimension differs from ``dim``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotAState(f"state must be a square matrix, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise NotAState(f"state has dimension {rho.shape[0]}, representation has {dim}")
    if not np.all(np.isfinite(rho)):
        raise NotAState("state has non-finite entries")
    dev = np.abs(rho - rho.conj().T).max()
    if dev > tol:
        raise NotAState(f"state is not Hermitian (deviation {dev:.3e})")
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise NotAState(f"state trace is {tr!r}, expected 1")
    lmin = np.linalg.eigvalsh(rho).min()
    if lmin < -tol:
        raise NotAState(f"state is not positive semidefinite (min eigenvalue {lmin:.3e})")
    return rho


def is_faithful(rho, tol: float = 1e-12) -> bool:
    return bool(np.linalg.eigvalsh(rho).min() > tol)


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def diagonal_state(p) -> np.ndarray:
    p = np.asarray(p, float)
    return np.diag(p / p.sum()).astype(complex)


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix: Haar eigenvectors and Dirichlet(1) spectrum."""
    rank = dim if rank is None else rank
    p = np.zeros(dim)
    p[:rank] = rng.dirichlet(np.ones(rank))
    u = haar_unitary(dim, rng)
    return (u * p) @ u.conj().T
