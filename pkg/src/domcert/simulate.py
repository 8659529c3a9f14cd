"""Trajectories under admissible signals and the dominated splitting they exhibit."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import orth, schur, subspace_angles

from .automata import SwitchingSignal, check_admissible, trim_core
from .errors import DegenerateStartError, GapError, InvalidInputError, NumericalError
from .system import SwitchingSystem

GAP_RTOL = 1e-9
SNAP_RTOL = 1e-12
BURN_IN = 0.1


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # shape (steps + 1, n)
    signal: SwitchingSignal
    path: tuple[str, ...] | None = None

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.states))

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def normalized(self) -> np.ndarray:
        norms = np.linalg.norm(self.states, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(norms > 0, self.states / norms, 0.0)


def _witness_path(aut, signal: SwitchingSignal, steps: int) -> tuple[str, ...]:
    sets = [frozenset(aut.states)]
    for t in range(steps):
        sets.append(aut.successors(sets[-1], signal.label_at(t)))
    path = [min(sets[-1])]
    for t in range(steps - 1, -1, -1):
        label = signal.label_at(t)
        nxt = path[-1]
        path.append(min(q for q in sets[t] if any(
            tr.src == q and tr.label == label and tr.dst == nxt for tr in aut.transitions)))
    return tuple(reversed(path))


def simulate(system: SwitchingSystem, signal: SwitchingSignal, x0, steps: int) -> Trajectory:
    """Iterate ``x(t+1) = A_{sigma(t)} x(t)`` for ``steps`` steps.

    The signal is first replayed through the (trimmed) automaton; the
    returned trajectory carries a witness state path.
    """
    x = np.asarray(x0, dtype=float).ravel()
    if x.shape[0] != system.n:
        raise InvalidInputError(f"x0 has length {x.shape[0]}, system dimension is {system.n}")
    if steps < 0:
        raise InvalidInputError("steps must be non-negative")
    aut = trim_core(system.automaton)
    check_admissible(aut, signal, steps)
    out = np.empty((steps + 1, system.n))
    out[0] = x
    for t in range(steps):
        x = system.modes[signal.label_at(t)] @ x
        out[t + 1] = x
    return Trajectory(out, signal, _witness_path(aut, signal, steps))


def projective_distance(x, y) -> float:
    """``min(|x^ - y^|, |x^ + y^|)`` for the normalized vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x = x / np.linalg.norm(x)
    y = y / np.linalg.norm(y)
    return float(min(np.linalg.norm(x - y), np.linalg.norm(x + y)))


@dataclass(frozen=True)
class FiberSplitting:
    """Dominant fibers ``H(t)`` and complements ``V(t)`` over one period.

    ``H[t]`` and ``V[t]`` hold orthonormal bases (as columns).
    """

    signal: SwitchingSignal
    p: int
    monodromy: np.ndarray
    magnitudes: np.ndarray
    H: tuple[np.ndarray, ...]
    V: tuple[np.ndarray, ...]
    invariance_residual: float

    @property
    def period(self) -> int:
        return len(self.signal)

    def basis(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        k = t % self.period
        return self.H[k], self.V[k]


def _period_product(system: SwitchingSystem, labels, start: int) -> np.ndarray:
    T = len(labels)
    M = np.eye(system.n)
    for k in range(T):
        M = system.modes[labels[(start + k) % T]] @ M
    return M


def _invariant_subspace(M: np.ndarray, threshold: float, dominant: bool, dim: int) -> np.ndarray:
    if dominant:
        select = lambda re, im: math.hypot(re, im) > threshold
    else:
        select = lambda re, im: math.hypot(re, im) < threshold
    _, Z, sdim = schur(M, output="real", sort=select)
    if sdim != dim:
        raise NumericalError(f"invariant subspace has dimension {sdim}, expected {dim}")
    return Z[:, :dim]


def periodic_splitting(system: SwitchingSystem, signal: SwitchingSignal, p: int) -> FiberSplitting:
    """Fibers of the periodic attractor for a periodic signal.

    ``H(t)`` is the real invariant subspace of the period product started at
    phase ``t`` for its ``p`` largest eigenvalue magnitudes, ``V(t)`` the one
    for the remaining ``n - p``.

    Raises
    ------
    GapError
        If ``|lambda_p| = |lambda_{p+1}|`` for the monodromy matrix.
    """
    if signal.kind != "periodic":
        raise InvalidInputError("periodic_splitting needs a periodic signal")
    n = system.n
    if not 1 <= p <= n - 1:
        raise InvalidInputError(f"degree p must be in 1..{n - 1}, got {p}")
    check_admissible(trim_core(system.automaton), signal)
    labels = signal.labels
    T = len(labels)
    M0 = _period_product(system, labels, 0)
    mags = np.sort(np.abs(np.linalg.eigvals(M0)))[::-1]
    hi, lo = mags[p - 1], mags[p]
    if not hi > lo * (1.0 + GAP_RTOL) or hi == 0.0:
        raise GapError(f"no spectral gap at p={p}: |lambda_p| = {hi:.6g}, |lambda_p+1| = {lo:.6g}")
    threshold = math.sqrt(hi * lo) if lo > 0 else 0.5 * hi

    Hs, Vs = [], []
    for t in range(T):
        M = _period_product(system, labels, t)
        Hs.append(_invariant_subspace(M, threshold, True, p))
        Vs.append(_invariant_subspace(M, threshold, False, n - p))

    worst = 0.0
    for t in range(T):
        A = system.modes[labels[t]]
        nxt = (t + 1) % T
        for basis, target in ((Hs[t], Hs[nxt]), (Vs[t], Vs[nxt])):
            image = orth(A @ basis)
            if image.shape[1] == 0:
                continue
            worst = max(worst, float(np.max(np.sin(subspace_angles(image, target)))))
    return FiberSplitting(signal, p, M0, mags, tuple(Hs), tuple(Vs), worst)


def oblique_parts(splitting: FiberSplitting, t: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Components of ``x`` in ``H(t)`` along ``V(t)`` and in ``V(t)`` along ``H(t)``."""
    H, V = splitting.basis(t)
    B = np.hstack([H, V])
    c = np.linalg.solve(B, np.asarray(x, dtype=float))
    p = H.shape[1]
    return H @ c[:p], V @ c[p:]


@dataclass(frozen=True)
class DecayEstimate:
    """Fitted ``r(t) <= C rho^t r(0)`` for the ratio ``|x_v(t)| / |x_h(t)|``.

    ``residual`` is the RMS log-space residual of the fit, which carries one
    offset per phase of the period; ``linear_residual`` is the RMS residual of
    a plain straight-line fit over the same window, reported for comparison.
    """

    ratios: np.ndarray
    rho: float
    C: float
    residual: float
    linear_residual: float
    fit_start: int
    bound_holds: bool


def decay_estimate(system: SwitchingSystem, signal: SwitchingSignal, splitting: FiberSplitting,
                   x0, steps: int) -> DecayEstimate:
    """Estimate the contraction rate of the V-component relative to the H-component.

    The two components are propagated separately and re-projected onto the
    fibers after every step, so ratios far below machine precision are still
    resolved.  The first 10% of steps are excluded from the fit.

    Raises
    ------
    DegenerateStartError
        If ``x0`` has no H-component (e.g. ``x0`` in ``V(0)``).
    """
    if steps < 1:
        raise InvalidInputError("steps must be at least 1")
    x0 = np.asarray(x0, dtype=float).ravel()
    check_admissible(trim_core(system.automaton), signal, steps)
    xh, xv = oblique_parts(splitting, 0, x0)
    scale = np.linalg.norm(xh) + np.linalg.norm(xv)
    if np.linalg.norm(xh) <= SNAP_RTOL * scale:
        raise DegenerateStartError("initial condition has no component along the dominant fiber H(0)")
    if np.linalg.norm(xv) <= SNAP_RTOL * scale:
        xv = np.zeros_like(xv)

    ratios = np.empty(steps + 1)
    ratios[0] = np.linalg.norm(xv) / np.linalg.norm(xh)
    for t in range(steps):
        A = system.modes[signal.label_at(t)]
        xh = oblique_parts(splitting, t + 1, A @ xh)[0]
        xv = oblique_parts(splitting, t + 1, A @ xv)[1]
        # rescale jointly; only the ratio matters
        s = np.linalg.norm(xh)
        if s == 0.0:
            raise NumericalError("dominant component vanished")
        xh, xv = xh / s, xv / s
        ratios[t + 1] = np.linalg.norm(xv)

    fit_start = int(math.ceil(BURN_IN * steps))
    if ratios[0] == 0.0:
        return DecayEstimate(ratios, 0.0, 1.0, 0.0, 0.0, fit_start, bool(np.all(ratios == 0.0)))

    t = np.arange(steps + 1)
    keep = (t >= fit_start) & (ratios > 0)
    tk = t[keep]
    y = np.log(ratios[keep])
    if len(tk) < 2:
        raise NumericalError("too few positive ratios to fit a decay rate")
    T = splitting.period
    line = np.column_stack([np.ones_like(tk, dtype=float), tk])
    coef_line, *_ = np.linalg.lstsq(line, y, rcond=None)
    linear_residual = float(np.sqrt(np.mean((y - line @ coef_line) ** 2)))

    phases = tk % T
    n_phase = len(set(phases.tolist()))
    if T > 1 and len(tk) > T + 1 and n_phase == T:
        # one intercept per phase of the period
        X = np.column_stack([(phases == k).astype(float) for k in range(T)] + [tk])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        offsets, slope = coef[:T], coef[T]
        resid = y - X @ coef
    else:
        offsets, slope = np.array([coef_line[0]]), coef_line[1]
        resid = y - line @ coef_line
    rho = float(math.exp(slope))
    C = float(math.exp(np.max(offsets)) / ratios[0])
    bound = C * rho ** t * ratios[0]
    bound_holds = bool(np.all(ratios <= bound * (1.0 + 1e-6)))
    return DecayEstimate(ratios, rho, C, float(np.sqrt(np.mean(resid ** 2))), linear_residual, fit_start, bound_holds)


def write_trajectory_csv(path, trajectory: Trajectory, ratios=None) -> None:
    """CSV with header ``t,x1..xn,norm,ratio`` and 17 significant digits."""
    n = trajectory.states.shape[1]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + ["norm", "ratio"])
        for t, x in enumerate(trajectory.states):
            r = "" if ratios is None else format(float(ratios[t]), ".17g")
            w.writerow([t] + [format(float(v), ".17g") for v in x] + [format(float(np.linalg.norm(x)), ".17g"), r])
