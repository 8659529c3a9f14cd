"""Dense real matrix kernels.

Symmetric eigendecomposition, spectra ordered by magnitude, inertia and
unit-circle splits, plus a direct Stein-equation solver used as an
independent oracle for the Lyapunov-Stein inertia relation.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError, NoSolutionError, NumericalError

ABS_FLOOR = 1e-12
SYMMETRY_RTOL = 1e-12


class Inertia(NamedTuple):
    neg: int
    zero: int
    pos: int


class CircleSplit(NamedTuple):
    outside: int
    on: int
    inside: int


def as_matrix(A, name="matrix") -> np.ndarray:
    """Return ``A`` as a finite 2-D float array."""
    M = np.asarray(A, dtype=float)
    if M.ndim == 1 and M.size == 1:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def as_square(A, name="matrix") -> np.ndarray:
    M = as_matrix(A, name)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {M.shape}")
    return M


def as_symmetric(P, name="symmetric form", rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate near-symmetry and return the symmetrized form (P + P^T)/2.

    Asymmetry beyond ``rtol * (1 + ||P||_F)`` is treated as an input error
    rather than silently averaged away.
    """
    M = as_square(P, name)
    gap = np.linalg.norm(M - M.T)
    if gap > max(ABS_FLOOR, rtol * (1.0 + np.linalg.norm(M))):
        raise InvalidInputError(f"{name} is not symmetric (||P - P^T||_F = {gap:.3g})")
    return 0.5 * (M + M.T)


def sym_eigen(P) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric form.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    V : ndarray
        Orthonormal eigenvectors as columns, ``P = V diag(w) V^T``.
    """
    S = as_symmetric(P)
    w, V = np.linalg.eigh(S)
    return w, V


def default_zero_tol(P) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(P)))


def inertia(P, zero_tol: float | None = None) -> Inertia:
    """Count negative, zero and positive eigenvalues of ``P``.

    Eigenvalues within ``[-zero_tol, zero_tol]`` count as zero; the default
    band is ``1e-9 * max(1, ||P||_F)``.
    """
    S = as_symmetric(P)
    if zero_tol is None:
        zero_tol = default_zero_tol(S)
    if zero_tol < 0:
        raise InvalidInputError("zero_tol must be non-negative")
    w = np.linalg.eigvalsh(S)
    neg = int(np.sum(w < -zero_tol))
    pos = int(np.sum(w > zero_tol))
    return Inertia(neg, len(w) - neg - pos, pos)


def spectrum_magnitudes(A) -> np.ndarray:
    """Moduli of the (possibly complex) eigenvalues of ``A``, descending."""
    M = as_square(A)
    return np.sort(np.abs(np.linalg.eigvals(M)))[::-1]


def circle_split(A, tol: float = 1e-9) -> CircleSplit:
    """Count eigenvalues strictly outside, on, and strictly inside the unit circle."""
    mags = spectrum_magnitudes(A)
    outside = int(np.sum(mags > 1.0 + tol))
    inside = int(np.sum(mags < 1.0 - tol))
    return CircleSplit(outside, len(mags) - outside - inside, inside)


def stein_residual(A, P) -> np.ndarray:
    """``A^T P A - P + I``; zero when ``P`` solves the normalized Stein equation."""
    A = np.asarray(A, dtype=float)
    return A.T @ P @ A - P + np.eye(A.shape[0])


def stein_solve(A, tol: float = 1e-9) -> np.ndarray:
    """Solve ``A^T P A - P = -I`` for symmetric ``P``.

    Works on the vectorized system ``(A^T kron A^T - I) vec(P) = -vec(I)``.
    When ``A`` has a reciprocal eigenvalue pair the system is singular but may
    still be consistent (e.g. diagonal ``A``); the minimum-norm solution is
    returned if it meets the residual bound.

    Raises
    ------
    NoSolutionError
        If ``A`` has an eigenvalue on the unit circle (within ``tol``).
    NumericalError
        If the vectorized system has no accurate solution.
    """
    M = as_square(A, "A")
    n = M.shape[0]
    split = circle_split(M, tol)
    if split.on:
        raise NoSolutionError(
            f"A has {split.on} eigenvalue(s) on the unit circle; the Stein equation has no solution"
        )
    K = np.kron(M.T, M.T) - np.eye(n * n)
    rhs = -np.eye(n).reshape(-1, order="F")
    vec, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    if not np.all(np.isfinite(vec)):
        raise NumericalError("non-finite Stein solution")
    P = vec.reshape(n, n, order="F")
    P = 0.5 * (P + P.T)
    res = np.linalg.norm(stein_residual(M, P))
    scale = 1.0 + np.linalg.norm(P) * (1.0 + np.linalg.norm(M) ** 2)
    if res > 1e-8 * scale:
        raise NumericalError(f"singular Stein system: residual {res:.3g} exceeds tolerance")
    return P
