"""Transition LMIs over the unknown forms ``{P_q}`` and an ellipsoid-method solver.

For every transition ``d = q1 -sigma-> q2`` the problem requires

    A_sigma^T P_q2 A_sigma - gamma_d^2 P_q1 <= -eps I

No inertia constraint is imposed; with rates chosen inside the loop
spectral gaps, inertia (p, 0, n - p) follows from feasibility and is
checked afterwards by certificate validation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .automata import Transition
from .errors import InvalidInputError, NoSolutionError, NumericalError
from .linalg import stein_solve
from .rates import _require_rates
from .system import SwitchingSystem

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.01
DEFAULT_RADIUS = 1e4
DEFAULT_MAX_ITERS = 200_000


@dataclass(frozen=True)
class LmiConstraint:
    transition: Transition
    A: np.ndarray
    gamma: float
    src: int
    dst: int


@dataclass(frozen=True)
class LmiProblem:
    n: int
    states: tuple[str, ...]
    constraints: tuple[LmiConstraint, ...]
    epsilon: float
    radius: float
    warm_start: dict = field(default_factory=dict, compare=False)

    @property
    def block_size(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def n_vars(self) -> int:
        return len(self.states) * self.block_size


def assemble(system: SwitchingSystem, p: int, rates: dict, epsilon: float = DEFAULT_EPSILON,
             radius: float = DEFAULT_RADIUS) -> LmiProblem:
    """One spectral constraint per automaton transition.

    ``p`` does not enter the constraints; it is checked for range only.
    """
    if not 1 <= p <= system.n - 1:
        raise InvalidInputError(f"degree p must be in 1..{system.n - 1}, got {p}")
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    if not (math.isfinite(radius) and radius > 0):
        raise InvalidInputError(f"radius must be positive, got {radius}")
    _require_rates(system, rates)
    aut = system.automaton
    index = {q: i for i, q in enumerate(aut.states)}
    cons = tuple(
        LmiConstraint(t, system.modes[t.label], float(rates[t]), index[t.src], index[t.dst])
        for t in aut.transitions
    )
    warm = {}
    for t in aut.transitions:
        if t.src == t.dst and t.src not in warm:
            try:
                warm[t.src] = stein_solve(system.modes[t.label] / rates[t])
            except (NoSolutionError, NumericalError):
                pass
    return LmiProblem(system.n, aut.states, cons, float(epsilon), float(radius), warm)


# -- variable layout: lower triangle per state, off-diagonals scaled by sqrt(2)
# so that the Euclidean norm of a block equals the Frobenius norm of P_q.

def _tril(n):
    return np.tril_indices(n)


def pack(problem: LmiProblem, forms: dict) -> np.ndarray:
    n = problem.n
    rows, cols = _tril(n)
    w = np.where(rows == cols, 1.0, math.sqrt(2.0))
    blocks = []
    for q in problem.states:
        P = np.asarray(forms.get(q, np.zeros((n, n))), dtype=float)
        blocks.append(P[rows, cols] * w)
    return np.concatenate(blocks)


def unpack(problem: LmiProblem, x: np.ndarray) -> list[np.ndarray]:
    n = problem.n
    rows, cols = _tril(n)
    w = np.where(rows == cols, 1.0, math.sqrt(2.0))
    k = problem.block_size
    out = []
    for i in range(len(problem.states)):
        P = np.zeros((n, n))
        P[rows, cols] = x[i * k:(i + 1) * k] / w
        P = P + np.tril(P, -1).T
        out.append(P)
    return out


def _sym_gradient(n: int, G: np.ndarray) -> np.ndarray:
    """Coordinates of the linear functional ``P -> <G, P>_F`` (G symmetric)."""
    rows, cols = _tril(n)
    w = np.where(rows == cols, 1.0, math.sqrt(2.0))
    return G[rows, cols] * w


@dataclass(frozen=True)
class FeasibilityOutcome:
    status: str  # "feasible" or "not-found"
    forms: dict | None
    margin: float
    iterations: int
    log_volume: float
    worst: Transition | None = None
    worst_value: float = math.nan

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def evaluate(problem: LmiProblem, forms: list[np.ndarray]):
    """Largest eigenvalue and top eigenvector of every transition residual."""
    vals = []
    vecs = []
    for c in problem.constraints:
        R = c.A.T @ forms[c.dst] @ c.A - c.gamma ** 2 * forms[c.src]
        w, V = np.linalg.eigh(0.5 * (R + R.T))
        vals.append(w[-1])
        vecs.append(V[:, -1])
    return np.array(vals), vecs


def _log_ball_volume(dim: int, r: float) -> float:
    return dim * math.log(r) + (dim / 2) * math.log(math.pi) - gammaln(dim / 2 + 1)


def lipschitz_bound(problem: LmiProblem) -> float:
    """Bound on how fast any residual's top eigenvalue moves per unit step in x."""
    return max(np.linalg.norm(c.A, 2) ** 2 + c.gamma ** 2 for c in problem.constraints)


def solve(problem: LmiProblem, max_iters: int = DEFAULT_MAX_ITERS, seed: int | None = None) -> FeasibilityOutcome:
    """Deep-cut ellipsoid method over the ball ``||P_q||_F <= radius``.

    Every iteration evaluates all transition residuals at the center.  If
    all top eigenvalues are at most ``-epsilon`` the center is returned;
    otherwise the most violated constraint (first in transition order on
    ties) contributes the cut ``P -> v^T R_d(P) v`` from its top eigenvector
    ``v``.  The search stops with ``not-found`` once the ellipsoid is smaller
    than a ball of radius ``1e-3 * epsilon / L`` (``L`` from
    :func:`lipschitz_bound`), i.e. no point with margin ``1.001 * epsilon``
    can remain inside, or after ``max_iters`` iterations.

    The method is deterministic; ``seed`` is accepted for interface
    uniformity and does not influence the result.
    """
    if not problem.constraints:
        raise InvalidInputError("problem has no constraints")
    n = problem.n
    k = problem.block_size
    nq = len(problem.states)
    dim = problem.n_vars
    eps = problem.epsilon
    target = eps * (1.0 + 1e-9)

    x = pack(problem, problem.warm_start)
    R0 = problem.radius * math.sqrt(nq) + float(np.linalg.norm(x))
    E = np.eye(dim) * R0 ** 2
    log_vol = _log_ball_volume(dim, R0)
    log_vol_min = _log_ball_volume(dim, 1e-3 * eps / lipschitz_bound(problem))

    worst_t, worst_v = None, math.nan
    for it in range(1, max_iters + 1):
        forms = unpack(problem, x)
        vals, vecs = evaluate(problem, forms)
        norms = np.array([np.linalg.norm(x[i * k:(i + 1) * k]) for i in range(nq)])
        lmi_viol = vals + target
        norm_viol = norms - problem.radius
        j = int(np.argmax(lmi_viol))
        worst_t, worst_v = problem.constraints[j].transition, float(vals[j])
        if lmi_viol[j] <= 0 and np.all(norm_viol <= 0):
            names = dict(zip(problem.states, forms))
            margin = float(-np.max(vals))
            logger.debug("feasible after %d iterations, margin %.3g", it, margin)
            return FeasibilityOutcome("feasible", names, margin, it, log_vol, worst_t, worst_v)

        h = np.zeros(dim)
        jn = int(np.argmax(norm_viol))
        if norm_viol[jn] > 0 and norm_viol[jn] >= lmi_viol[j]:
            viol = norm_viol[jn]
            h[jn * k:(jn + 1) * k] = x[jn * k:(jn + 1) * k] / norms[jn]
        else:
            viol = lmi_viol[j]
            c = problem.constraints[j]
            v = vecs[j]
            w = c.A @ v
            h[c.dst * k:(c.dst + 1) * k] += _sym_gradient(n, np.outer(w, w))
            h[c.src * k:(c.src + 1) * k] -= c.gamma ** 2 * _sym_gradient(n, np.outer(v, v))

        Eh = E @ h
        hEh = float(h @ Eh)
        if not math.isfinite(hEh):
            raise NumericalError("non-finite ellipsoid update")
        if hEh <= 0:
            # violated constraint independent of P (e.g. A v = +-gamma v on a self-loop)
            return FeasibilityOutcome("not-found", None, math.nan, it, log_vol, worst_t, worst_v)
        denom = math.sqrt(hEh)
        alpha = viol / denom
        if alpha >= 1.0:
            # the cut removes the whole ellipsoid
            log_vol = -math.inf
            return FeasibilityOutcome("not-found", None, math.nan, it, log_vol, worst_t, worst_v)
        b = Eh / denom
        x = x - (1.0 + dim * alpha) / (dim + 1) * b
        E = (dim * dim * (1.0 - alpha * alpha) / (dim * dim - 1.0)) * (
            E - (2.0 * (1.0 + dim * alpha) / ((dim + 1) * (1.0 + alpha))) * np.outer(b, b)
        )
        E = 0.5 * (E + E.T)
        log_vol += 0.5 * (
            dim * math.log(dim * dim * (1.0 - alpha * alpha) / (dim * dim - 1.0))
            + math.log(1.0 - 2.0 * (1.0 + dim * alpha) / ((dim + 1) * (1.0 + alpha)))
        )
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(E)):
            raise NumericalError("non-finite ellipsoid state")
        if log_vol < log_vol_min:
            return FeasibilityOutcome("not-found", None, math.nan, it, log_vol, worst_t, worst_v)
    return FeasibilityOutcome("not-found", None, math.nan, max_iters, log_vol, worst_t, worst_v)
