"""Quadratic p-cones ``K(P) = {x : x^T P x <= 0}`` and their contraction.

Contraction of ``K(P_from)`` into ``K(P_to)`` by ``A`` is checked two ways:
algebraically through the residual ``A^T P_to A - gamma^2 P_from`` and
geometrically by sampling the source cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError, InvalidRateError
from .linalg import as_square, as_symmetric


class Membership(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


def _form_tol(P: np.ndarray, x: np.ndarray) -> float:
    return 1e-12 * (1.0 + np.linalg.norm(P) * float(x @ x))


def cone_membership(P, x) -> Membership:
    """Classify ``x`` by the sign of ``x^T P x``."""
    S = as_symmetric(P)
    v = np.asarray(x, dtype=float).ravel()
    if v.shape[0] != S.shape[0]:
        raise InvalidInputError(f"vector of length {v.shape[0]} does not match form of size {S.shape[0]}")
    value = float(v @ S @ v)
    tol = _form_tol(S, v)
    if value < -tol:
        return Membership.INTERIOR
    if value <= tol:
        return Membership.BOUNDARY
    return Membership.EXTERIOR


@dataclass(frozen=True)
class LmiResidual:
    transition: object
    matrix: np.ndarray
    max_eigenvalue: float

    def contracts(self, epsilon: float) -> bool:
        return self.max_eigenvalue <= -epsilon


def residual_matrix(A: np.ndarray, P_from: np.ndarray, P_to: np.ndarray, gamma: float) -> np.ndarray:
    R = A.T @ P_to @ A - gamma * gamma * P_from
    return 0.5 * (R + R.T)


def lmi_residual(A, P_from, P_to, gamma: float, transition=None) -> LmiResidual:
    """Residual ``A^T P_to A - gamma^2 P_from`` and its largest eigenvalue."""
    if not gamma > 0:
        raise InvalidRateError(f"rate must be positive, got {gamma}")
    M = as_square(A, "A")
    Pf = as_symmetric(P_from, "P_from")
    Pt = as_symmetric(P_to, "P_to")
    if not M.shape == Pf.shape == Pt.shape:
        raise InvalidInputError(f"dimension mismatch: A {M.shape}, P_from {Pf.shape}, P_to {Pt.shape}")
    R = residual_matrix(M, Pf, Pt, float(gamma))
    return LmiResidual(transition, R, float(np.linalg.eigvalsh(R)[-1]))


@dataclass(frozen=True)
class ContractionCheck:
    """Outcome of :func:`geometric_contraction_check`.

    ``status`` is ``"consistent"``, ``"violation"`` or ``"degenerate"``.
    """

    status: str
    witness: np.ndarray | None = None
    samples: int = 0

    @property
    def consistent(self) -> bool:
        return self.status == "consistent"


def sample_cone(P, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vectors of ``K(P)``: deterministic eigenbasis boundary points,
    then random boundary points, scaled interior points and rejection samples.

    Returns an array of shape (m, n) with m <= count.
    """
    w, V = np.linalg.eigh(P)
    n = len(w)
    tol = 1e-12 * (1.0 + np.linalg.norm(P))
    neg = V[:, w <= tol]
    negw = np.minimum(w[w <= tol], 0.0)
    pos = V[:, w > tol]
    posw = w[w > tol]
    out = []

    def balanced(a, b, shrink=1.0):
        # x = neg a + s pos b with x^T P x = 0 when shrink == 1
        num = -float(negw @ (a * a))
        den = float(posw @ (b * b)) if len(b) else 0.0
        s = np.sqrt(num / den) * shrink if den > 0 else 0.0
        x = neg @ a + (pos @ b) * s if len(b) else neg @ a
        nx = np.linalg.norm(x)
        return x / nx if nx > 0 else None

    # eigenbasis boundary points at the exact balancing coefficient
    for i in range(neg.shape[1]):
        for j in range(pos.shape[1]):
            for sign in (1.0, -1.0):
                a = np.zeros(neg.shape[1]); a[i] = 1.0
                b = np.zeros(pos.shape[1]); b[j] = sign
                x = balanced(a, b)
                if x is not None:
                    out.append(x)
        a = np.zeros(neg.shape[1]); a[i] = 1.0
        out.append(neg @ a)
    while len(out) < count:
        kind = len(out) % 3
        if kind == 2:
            x = rng.standard_normal(n)
            if x @ P @ x <= 0:
                out.append(x / np.linalg.norm(x))
            else:
                # keep the draw budget bounded when the cone is thin
                a = rng.standard_normal(neg.shape[1])
                b = rng.standard_normal(pos.shape[1])
                x = balanced(a, b, rng.uniform())
                if x is not None:
                    out.append(x)
            continue
        a = rng.standard_normal(neg.shape[1])
        b = rng.standard_normal(pos.shape[1])
        x = balanced(a, b, 1.0 if kind == 0 else rng.uniform())
        if x is not None:
            out.append(x)
    return np.array(out[:count])


def geometric_contraction_check(A, P_from, P_to, samples: int = 1000, seed: int | None = 0) -> ContractionCheck:
    """Check ``A (K(P_from) \\ {0}) subset int K(P_to)`` on sampled unit vectors.

    Returns the first sampled ``x`` whose image is not strictly inside the
    target cone, or ``consistent`` if none is found.  A positive definite
    ``P_from`` has the trivial cone ``{0}`` and is reported as degenerate.
    """
    if samples < 1:
        raise InvalidInputError("samples must be at least 1")
    M = as_square(A, "A")
    Pf = as_symmetric(P_from, "P_from")
    Pt = as_symmetric(P_to, "P_to")
    if not M.shape == Pf.shape == Pt.shape:
        raise InvalidInputError("dimension mismatch")
    w = np.linalg.eigvalsh(Pf)
    if w[0] > 1e-12 * (1.0 + np.linalg.norm(Pf)):
        return ContractionCheck("degenerate")
    rng = np.random.default_rng(seed)
    xs = sample_cone(Pf, samples, rng)
    ys = xs @ M.T
    values = np.einsum("ij,jk,ik->i", ys, Pt, ys)
    tols = 1e-12 * (1.0 + np.linalg.norm(Pt) * np.einsum("ij,ij->i", ys, ys))
    bad = np.flatnonzero(values >= -tols)
    if bad.size:
        return ContractionCheck("violation", xs[bad[0]], int(bad[0]) + 1)
    return ContractionCheck("consistent", None, len(xs))
