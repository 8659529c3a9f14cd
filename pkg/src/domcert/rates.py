"""Dominance rates from automaton-cycle spectra.

Along a closed loop c of the automaton, every solution of the transition
inequalities gives ``B^T P B - P < 0`` for the scaled loop product
``B = Pi_c / prod(gamma_d)``, so the inertia of ``P`` is pinned to the
unit-circle split of ``B``.  Degree-p inertia therefore requires the rate
product of each loop to lie strictly inside the gap
``(|lambda_{p+1}(Pi_c)|, |lambda_p(Pi_c)|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .automata import Cycle, Transition, enumerate_cycles, DEFAULT_MAX_CYCLES
from .errors import InvalidInputError, InvalidRateError, StructureError
from .linalg import CircleSplit, circle_split, spectrum_magnitudes
from .system import SwitchingSystem

# relative slack for strict interval membership
STRICT_RTOL = 1e-9

RateAssignment = dict  # Transition -> gamma


@dataclass(frozen=True)
class CycleSpectrum:
    cycle: Cycle
    product: np.ndarray
    magnitudes: np.ndarray
    interval: tuple[float, float]

    @property
    def empty(self) -> bool:
        lo, hi = self.interval
        return hi <= 0.0 or hi <= lo * (1.0 + STRICT_RTOL)


def cycle_product(system: SwitchingSystem, cycle: Cycle) -> np.ndarray:
    """Ordered product along ``cycle``; later transitions multiply on the left."""
    M = np.eye(system.n)
    for t in cycle.transitions:
        M = system.modes[t.label] @ M
    return M


def _check_degree(system: SwitchingSystem, p: int) -> None:
    if not 1 <= p <= system.n - 1:
        raise InvalidInputError(f"degree p must be in 1..{system.n - 1}, got {p}")


def cycle_spectra(system: SwitchingSystem, p: int, max_cycles: int = DEFAULT_MAX_CYCLES) -> list[CycleSpectrum]:
    _check_degree(system, p)
    out = []
    for c in enumerate_cycles(system.automaton, max_cycles):
        prod = cycle_product(system, c)
        mags = spectrum_magnitudes(prod)
        out.append(CycleSpectrum(c, prod, mags, (float(mags[p]), float(mags[p - 1]))))
    return out


def strictly_inside(value: float, interval: tuple[float, float]) -> bool:
    lo, hi = interval
    return lo * (1.0 + STRICT_RTOL) < value < hi * (1.0 - STRICT_RTOL)


@dataclass(frozen=True)
class CycleRateCheck:
    spectrum: CycleSpectrum
    rate_product: float
    split: CircleSplit
    ok: bool

    @property
    def cycle(self) -> Cycle:
        return self.spectrum.cycle


def _require_rates(system: SwitchingSystem, rates: dict) -> None:
    for t in system.automaton.transitions:
        if t not in rates:
            raise InvalidInputError(f"missing rate for transition {t}")
        g = rates[t]
        if not (isinstance(g, (int, float, np.floating)) and math.isfinite(g) and g > 0):
            raise InvalidRateError(f"rate for {t} must be a positive finite number, got {g!r}")


def validate_rates(system: SwitchingSystem, p: int, rates: dict, max_cycles: int = DEFAULT_MAX_CYCLES) -> list[CycleRateCheck]:
    """Check every elementary cycle's rate product against its spectral gap.

    Each entry also carries the unit-circle split of the rate-scaled loop
    product, which must equal (p, 0, n - p) for a degree-p certificate.
    """
    _require_rates(system, rates)
    report = []
    target = CircleSplit(p, 0, system.n - p)
    for spec in cycle_spectra(system, p, max_cycles):
        prod = math.prod(rates[t] for t in spec.cycle.transitions)
        split = circle_split(spec.product / prod)
        ok = strictly_inside(prod, spec.interval) and split == target
        report.append(CycleRateCheck(spec, prod, split, ok))
    return report


def check_structure(system: SwitchingSystem, max_cycles: int = DEFAULT_MAX_CYCLES) -> None:
    """Every state must lie on a loop or on a path between two loop states."""
    aut = system.automaton
    on_loop = {q for c in enumerate_cycles(aut, max_cycles) for q in c.states}
    succ: dict[str, set[str]] = {q: set() for q in aut.states}
    pred: dict[str, set[str]] = {q: set() for q in aut.states}
    for t in aut.transitions:
        succ[t.src].add(t.dst)
        pred[t.dst].add(t.src)

    def reach(start: set[str], adj) -> set[str]:
        seen = set(start)
        stack = list(start)
        while stack:
            for r in adj[stack.pop()]:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        return seen

    after_loop = reach(on_loop, succ)
    before_loop = reach(on_loop, pred)
    bad = sorted(q for q in aut.states if q not in on_loop and not (q in after_loop and q in before_loop))
    if bad:
        raise StructureError(
            "states not on a loop nor between loops: " + ", ".join(bad), bad
        )


@dataclass(frozen=True)
class RateProposal:
    """Result of :func:`propose_rates`.

    On success ``rates`` maps every transition to its rate and ``slack`` is
    the minimum log-space distance of any loop product to its gap boundary.
    On failure ``rates`` is None and ``binding`` lists the offending cycles.
    """

    rates: dict | None
    slack: float
    spectra: tuple[CycleSpectrum, ...]
    binding: tuple[Cycle, ...] = ()
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.rates is not None


def propose_rates(system: SwitchingSystem, p: int, max_cycles: int = DEFAULT_MAX_CYCLES) -> RateProposal:
    """Choose rates whose loop products sit inside every spectral gap.

    Works in log space with ``g_d = ln gamma_d``: each loop ``c`` requires
    ``ln|lambda_{p+1}| < sum_{d in c} g_d < ln|lambda_p|``.  The first LP
    maximizes the common slack ``s``; among all points achieving it the one
    with least ``||g||_2`` (rates closest to 1) is returned, which makes the
    answer unique.  Transitions on no loop keep rate 1.
    """
    _check_degree(system, p)
    check_structure(system, max_cycles)
    spectra = tuple(cycle_spectra(system, p, max_cycles))
    transitions = list(system.automaton.transitions)
    empty = tuple(s.cycle for s in spectra if s.empty)
    if empty:
        return RateProposal(None, -math.inf, spectra, empty, "empty spectral gap")
    if not spectra:
        return RateProposal({t: 1.0 for t in transitions}, math.inf, spectra)

    on_loop = sorted({t for s in spectra for t in s.cycle.transitions}, key=transitions.index)
    col = {t: i for i, t in enumerate(on_loop)}
    m = len(on_loop)
    rows, lo, hi = [], [], []
    for s in spectra:
        row = np.zeros(m)
        for t in s.cycle.transitions:
            row[col[t]] += 1.0
        rows.append(row)
        lo_mag, hi_mag = s.interval
        hi.append(math.log(hi_mag))
        # a zero lower magnitude leaves the interval open below; cap it
        lo.append(math.log(lo_mag) if lo_mag > 0 else math.log(hi_mag) - 60.0)
    M = np.array(rows)
    lo = np.array(lo)
    hi = np.array(hi)

    # stage 1: maximize s subject to lo + s <= M g <= hi - s
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.vstack([
        np.hstack([-M, np.ones((len(lo), 1))]),
        np.hstack([M, np.ones((len(hi), 1))]),
    ])
    b_ub = np.concatenate([-lo, hi])
    bounds = [(None, None)] * m + [(None, None)]
    lp = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if lp.status != 0:
        return RateProposal(None, -math.inf, spectra, tuple(s.cycle for s in spectra), f"LP failed: {lp.message}")
    slack = float(lp.x[-1])
    if slack <= 0:
        tight = M @ lp.x[:m]
        binding = tuple(
            s.cycle for s, v, l, h in zip(spectra, tight, lo, hi) if min(v - l, h - v) <= slack + 1e-9
        )
        return RateProposal(None, slack, spectra, binding, "loop constraints are inconsistent")

    # stage 2: least-norm g among points keeping the optimal slack
    s_req = slack * (1.0 - 1e-6)
    cons = [{
        "type": "ineq",
        "fun": lambda g: np.concatenate([M @ g - lo - s_req, hi - s_req - M @ g]),
        "jac": lambda g: np.vstack([M, -M]),
    }]
    res = minimize(
        lambda g: float(g @ g), lp.x[:m], jac=lambda g: 2.0 * g,
        constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500},
    )
    g = res.x if res.success and np.all(M @ res.x - lo >= slack * 0.5) and np.all(hi - M @ res.x >= slack * 0.5) else lp.x[:m]
    rates = {t: 1.0 for t in transitions}
    for t, i in col.items():
        rates[t] = float(math.exp(g[i]))
    achieved = float(min(np.min(M @ g - lo), np.min(hi - M @ g)))
    return RateProposal(rates, achieved, spectra)
