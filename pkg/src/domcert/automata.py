"""Constraint automata over the mode alphabet {1..N}.

An automaton is a labeled graph (Q, Sigma, delta); its bi-infinite paths
define the admissible switching signals.  All states are implicitly initial
and final, so the finite behavior of an automaton is its factor language.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import networkx as nx
import numpy as np

from .errors import AdmissibilityError, BudgetError, EmptyLanguageError, InvalidInputError

DEFAULT_MAX_CYCLES = 10_000


class Transition(NamedTuple):
    src: str
    label: int
    dst: str

    def __str__(self):
        return f"{self.src} -{self.label}-> {self.dst}"


@dataclass(frozen=True)
class Automaton:
    states: tuple[str, ...]
    alphabet_size: int
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        states = tuple(str(q) for q in self.states)
        if len(set(states)) != len(states):
            raise InvalidInputError("duplicate state identifiers")
        if not isinstance(self.alphabet_size, (int, np.integer)) or self.alphabet_size < 1:
            raise InvalidInputError("alphabet_size must be a positive integer")
        known = set(states)
        trans = []
        for t in self.transitions:
            src, label, dst = t
            t = Transition(str(src), int(label), str(dst))
            if t.src not in known or t.dst not in known:
                raise InvalidInputError(f"transition {t} references an undeclared state")
            if not 1 <= t.label <= self.alphabet_size:
                raise InvalidInputError(f"transition {t} has label outside 1..{self.alphabet_size}")
            trans.append(t)
        if len(set(trans)) != len(trans):
            raise InvalidInputError("duplicate transitions")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transitions", tuple(trans))

    def successors(self, states: Iterable[str], label: int) -> frozenset[str]:
        """States reachable from ``states`` by one ``label`` transition."""
        src = set(states)
        return frozenset(t.dst for t in self.transitions if t.label == label and t.src in src)

    def outgoing(self, q: str) -> list[Transition]:
        return [t for t in self.transitions if t.src == q]

    def is_empty(self) -> bool:
        return not self.states


@dataclass(frozen=True)
class SwitchingSignal:
    labels: tuple[int, ...]
    kind: str = "finite"
    states: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.labels:
            raise InvalidInputError("switching signal must be non-empty")
        if self.kind not in ("finite", "periodic"):
            raise InvalidInputError(f"unknown signal kind {self.kind!r}")
        object.__setattr__(self, "labels", tuple(int(s) for s in self.labels))

    def label_at(self, t: int) -> int:
        if self.kind == "periodic":
            return self.labels[t % len(self.labels)]
        return self.labels[t]

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class Cycle:
    """Elementary closed path, rotated to start at its smallest state."""

    transitions: tuple[Transition, ...]

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(t.src for t in self.transitions)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(t.label for t in self.transitions)

    def __len__(self):
        return len(self.transitions)

    def __str__(self):
        parts = [self.transitions[0].src]
        for t in self.transitions:
            parts.append(f"-{t.label}-> {t.dst}")
        return " ".join(parts)


def trim_core(aut: Automaton) -> Automaton:
    """Restrict to the states that lie on some bi-infinite path.

    States without a predecessor or without a successor are removed
    repeatedly until a fixpoint.

    Raises
    ------
    EmptyLanguageError
        If nothing survives.
    """
    alive = set(aut.states)
    trans = set(aut.transitions)
    while True:
        has_in = {t.dst for t in trans}
        has_out = {t.src for t in trans}
        keep = alive & has_in & has_out
        if keep == alive:
            break
        alive = keep
        trans = {t for t in trans if t.src in alive and t.dst in alive}
    if not alive:
        raise EmptyLanguageError("automaton admits no bi-infinite word (empty core)")
    return Automaton(
        states=tuple(q for q in aut.states if q in alive),
        alphabet_size=aut.alphabet_size,
        transitions=tuple(t for t in aut.transitions if t in trans),
    )


class PathCompleteResult(NamedTuple):
    complete: bool
    counterexample: tuple[int, ...] | None = None


def path_complete_check(language: Automaton, candidate: Automaton) -> PathCompleteResult:
    """Decide whether every finite word of ``language`` is a path label in ``candidate``.

    Breadth-first search over the product of ``language`` with the subset
    construction of ``candidate`` (started from all candidate states).  The
    first product node whose candidate subset is empty yields a shortest
    counterexample word.
    """
    if language.alphabet_size != candidate.alphabet_size:
        raise InvalidInputError(
            f"alphabet mismatch: {language.alphabet_size} vs {candidate.alphabet_size} labels"
        )
    start = frozenset(candidate.states)
    queue = deque()
    parent: dict[tuple[str, frozenset], tuple | None] = {}
    for q in sorted(language.states):
        node = (q, start)
        if node not in parent:
            parent[node] = None
            queue.append(node)
    out = {q: sorted(language.outgoing(q), key=lambda t: (t.label, t.dst)) for q in language.states}
    while queue:
        node = queue.popleft()
        q, subset = node
        for t in out[q]:
            nxt_subset = candidate.successors(subset, t.label)
            if not nxt_subset:
                word = [t.label]
                cur = node
                while parent[cur] is not None:
                    prev, label = parent[cur]
                    word.append(label)
                    cur = prev
                return PathCompleteResult(False, tuple(reversed(word)))
            nxt = (t.dst, nxt_subset)
            if nxt not in parent:
                parent[nxt] = (node, t.label)
                queue.append(nxt)
    return PathCompleteResult(True)


def _canonical_rotation(cycle: Sequence[Transition]) -> tuple[Transition, ...]:
    k = min(range(len(cycle)), key=lambda i: cycle[i].src)
    return tuple(cycle[k:]) + tuple(cycle[:k])


def enumerate_cycles(aut: Automaton, max_cycles: int = DEFAULT_MAX_CYCLES) -> list[Cycle]:
    """All elementary cycles of ``aut``, each once up to rotation.

    Parallel transitions with different labels give distinct cycles.  The
    result is ordered by (length, state sequence, label sequence).

    Raises
    ------
    BudgetError
        If more than ``max_cycles`` cycles exist.
    """
    g = nx.DiGraph()
    g.add_nodes_from(aut.states)
    edges: dict[tuple[str, str], list[Transition]] = {}
    for t in aut.transitions:
        edges.setdefault((t.src, t.dst), []).append(t)
        g.add_edge(t.src, t.dst)
    for v in edges.values():
        v.sort(key=lambda t: t.label)

    found: list[Cycle] = []
    for node_cycle in nx.simple_cycles(g):
        choices = [edges[(a, node_cycle[(i + 1) % len(node_cycle)])] for i, a in enumerate(node_cycle)]
        stack = [()]
        for options in choices:
            stack = [prefix + (t,) for prefix in stack for t in options]
        for combo in stack:
            found.append(Cycle(_canonical_rotation(combo)))
            if len(found) > max_cycles:
                raise BudgetError(f"cycle budget exceeded: more than {max_cycles} elementary cycles")
    found.sort(key=lambda c: (len(c), c.states, c.labels))
    return found


def generate_signal(aut: Automaton, length: int, seed: int | None = None) -> SwitchingSignal:
    """Uniformly random admissible walk of ``length`` transitions.

    The start state is uniform over the states, each step is uniform over the
    outgoing transitions.  The returned signal carries the visited states
    ``q_0 .. q_length`` as its witness path.
    """
    if length < 1:
        raise InvalidInputError("signal length must be at least 1")
    core = trim_core(aut)
    rng = np.random.default_rng(seed)
    states = sorted(core.states)
    out = {q: sorted(core.outgoing(q), key=lambda t: (t.label, t.dst)) for q in states}
    q = states[rng.integers(len(states))]
    path = [q]
    labels = []
    for _ in range(length):
        t = out[q][rng.integers(len(out[q]))]
        labels.append(t.label)
        q = t.dst
        path.append(q)
    return SwitchingSignal(tuple(labels), "finite", tuple(path))


def check_admissible(aut: Automaton, signal: SwitchingSignal, steps: int | None = None) -> None:
    """Forward state-set simulation of ``signal`` through ``aut``.

    For a periodic signal the block is replayed ``|Q| + 1`` times so that the
    wrap-around constraints are exercised as well.

    Raises
    ------
    AdmissibilityError
        Naming the first position at which no path survives.
    """
    if signal.kind == "periodic":
        horizon = len(signal) * (len(aut.states) + 1)
        if steps is not None:
            horizon = max(horizon, steps)
    else:
        horizon = len(signal) if steps is None else steps
        if horizon > len(signal):
            raise InvalidInputError(f"finite signal has {len(signal)} labels, {horizon} steps requested")
    for t in range(horizon):
        label = signal.label_at(t)
        if not 1 <= label <= aut.alphabet_size:
            raise AdmissibilityError(f"label {label} at position {t} is outside the alphabet", t)
    current = frozenset(aut.states)
    for t in range(horizon):
        label = signal.label_at(t)
        current = aut.successors(current, label)
        if not current:
            pos = t % len(signal) if signal.kind == "periodic" else t
            raise AdmissibilityError(
                f"signal is inadmissible at position {pos} (label {label})", pos
            )
