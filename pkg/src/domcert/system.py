"""Switching systems and the system description file.

File layout (YAML or JSON)::

    n: 2
    modes:
      "1": [[1, 0.9], [0, 0.1]]
      "2": [["1/10", 0], [0.9, 1]]
    automaton:
      states: [a, b]
      transitions: [[a, 1, b], [b, 2, a]]
    language:            # optional, same shape as automaton
      ...

Matrix entries may be numbers or fraction literals such as ``"1/8"``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from .automata import Automaton, Transition
from .errors import InvalidInputError, ParseError

SYSTEM_KEYS = ("n", "modes", "automaton", "language")
AUTOMATON_KEYS = ("states", "transitions")


@dataclass(frozen=True)
class SwitchingSystem:
    """Mode matrices ``{A_sigma}`` constrained by an automaton."""

    modes: dict[int, np.ndarray]
    automaton: Automaton
    language: Automaton | None = None
    fingerprint: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.modes:
            raise InvalidInputError("system needs at least one mode")
        labels = sorted(self.modes)
        if labels != list(range(1, len(labels) + 1)):
            raise InvalidInputError(f"mode labels must be contiguous 1..N, got {labels}")
        mats = {}
        n = None
        for k in labels:
            A = np.array(self.modes[k], dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise InvalidInputError(f"mode {k} is not a square matrix")
            if not np.all(np.isfinite(A)):
                raise InvalidInputError(f"mode {k} has non-finite entries")
            if n is None:
                n = A.shape[0]
            elif A.shape[0] != n:
                raise InvalidInputError(f"mode {k} has dimension {A.shape[0]}, expected {n}")
            A.setflags(write=False)
            mats[k] = A
        object.__setattr__(self, "modes", mats)
        for aut in (self.automaton, self.language):
            if aut is not None and aut.alphabet_size != len(mats):
                raise InvalidInputError(
                    f"automaton alphabet has {aut.alphabet_size} labels but system has {len(mats)} modes"
                )

    @property
    def n(self) -> int:
        return next(iter(self.modes.values())).shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def with_automaton(self, automaton: Automaton) -> "SwitchingSystem":
        return SwitchingSystem(self.modes, automaton, self.language, self.fingerprint)


def parse_scalar(value, field_name: str) -> Fraction:
    """Exact rational value of a number or fraction literal."""
    if isinstance(value, bool):
        raise ParseError(f"boolean is not a number: {value!r}", field=field_name)
    try:
        if isinstance(value, float):
            if not np.isfinite(value):
                raise ValueError
            return Fraction(repr(value))
        if isinstance(value, (int, str)):
            return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        pass
    raise ParseError(f"not a number or fraction literal: {value!r}", field=field_name)


def fraction_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def load_structured(text: str, what: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ParseError(f"malformed {what}: {getattr(exc, 'problem', exc)}", line=line) from exc


def _parse_automaton(raw, n_modes: int, where: str) -> tuple[Automaton, dict]:
    if not isinstance(raw, dict):
        raise ParseError("automaton must be a mapping", field=where)
    unknown = set(raw) - set(AUTOMATON_KEYS)
    if unknown:
        raise ParseError(f"unknown key {sorted(unknown)[0]!r}", field=where)
    for key in AUTOMATON_KEYS:
        if key not in raw:
            raise ParseError("missing key", field=f"{where}.{key}")
    states = raw["states"]
    if not isinstance(states, list):
        raise ParseError("states must be a list", field=f"{where}.states")
    states = [str(q) for q in states]
    trans = []
    for i, t in enumerate(raw["transitions"] or []):
        if not isinstance(t, (list, tuple)) or len(t) != 3:
            raise ParseError("transition must be [from, label, to]", field=f"{where}.transitions[{i}]")
        try:
            label = int(t[1])
        except (TypeError, ValueError):
            raise ParseError(f"bad label {t[1]!r}", field=f"{where}.transitions[{i}]") from None
        trans.append(Transition(str(t[0]), label, str(t[2])))
    try:
        aut = Automaton(tuple(states), n_modes, tuple(trans))
    except InvalidInputError as exc:
        raise ParseError(str(exc), field=where) from exc
    canon = {
        "states": sorted(states),
        "transitions": sorted([t.src, t.label, t.dst] for t in trans),
    }
    return aut, canon


def parse_system(text: str) -> SwitchingSystem:
    """Parse a system description and attach its canonical fingerprint."""
    raw = load_structured(text, "system file")
    if not isinstance(raw, dict):
        raise ParseError("system file must be a mapping at top level")
    unknown = set(raw) - set(SYSTEM_KEYS)
    if unknown:
        raise ParseError(f"unknown key {sorted(unknown)[0]!r}", field=sorted(unknown)[0])
    for key in ("n", "modes", "automaton"):
        if key not in raw:
            raise ParseError("missing key", field=key)
    try:
        n = int(raw["n"])
    except (TypeError, ValueError):
        raise ParseError("n must be an integer", field="n") from None
    if n < 1:
        raise ParseError("n must be positive", field="n")
    if not isinstance(raw["modes"], dict) or not raw["modes"]:
        raise ParseError("modes must be a non-empty mapping", field="modes")

    modes: dict[int, np.ndarray] = {}
    canon_modes: dict[str, list] = {}
    for key, rows in raw["modes"].items():
        where = f"modes.{key}"
        try:
            label = int(key)
        except (TypeError, ValueError):
            raise ParseError("mode label must be an integer", field=where) from None
        if not isinstance(rows, list) or len(rows) != n or any(
            not isinstance(r, list) or len(r) != n for r in rows
        ):
            raise ParseError(f"mode matrix must be {n}x{n}", field=where)
        exact = [[parse_scalar(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
        modes[label] = np.array([[float(v) for v in r] for r in exact])
        canon_modes[str(label)] = [[fraction_str(v) for v in r] for r in exact]
    n_modes = len(modes)
    if sorted(modes) != list(range(1, n_modes + 1)):
        raise ParseError(f"mode labels must be contiguous 1..N, got {sorted(modes)}", field="modes")

    automaton, canon_aut = _parse_automaton(raw["automaton"], n_modes, "automaton")
    canon = {"n": n, "modes": canon_modes, "automaton": canon_aut}
    language = None
    if raw.get("language") is not None:
        language, canon["language"] = _parse_automaton(raw["language"], n_modes, "language")

    return SwitchingSystem(modes, automaton, language, fingerprint_of(canon))


def fingerprint_of(canon: dict) -> str:
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_system(path) -> SwitchingSystem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read system file {path}: {exc}") from exc
    return parse_system(text)


def parse_automaton_file(text: str) -> Automaton:
    """Standalone automaton file: ``{alphabet_size, states, transitions}``.

    A full system file is also accepted, in which case its ``automaton``
    section is used.
    """
    raw = load_structured(text, "automaton file")
    if not isinstance(raw, dict):
        raise ParseError("automaton file must be a mapping")
    if "automaton" in raw:
        return parse_system(text).automaton
    raw = dict(raw)
    if "alphabet_size" not in raw:
        raise ParseError("missing key", field="alphabet_size")
    try:
        size = int(raw.pop("alphabet_size"))
    except (TypeError, ValueError):
        raise ParseError("alphabet_size must be an integer", field="alphabet_size") from None
    return _parse_automaton(raw, size, "automaton")[0]


def load_automaton(path) -> Automaton:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read automaton file {path}: {exc}") from exc
    return parse_automaton_file(text)
