"""Re-checkable dominance certificates.

A certificate binds to the canonical fingerprint of a system file and
carries the degree ``p``, margin ``epsilon``, per-transition rates and one
symmetric form per automaton state.  Validation recomputes everything from
the system; nothing stored in the certificate is trusted beyond its data.

File format (UTF-8 JSON, keys in this order, unknown keys rejected)::

    {"version": 1, "system_fingerprint": "<hex>", "p": 1, "epsilon": "0.01",
     "rates": [{"from": "a", "label": 1, "to": "b", "gamma": "0.25"}, ...],
     "P": {"a": ["-1", "0", "0", "8"], ...},
     "meta": {...}}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .automata import Transition, trim_core
from .errors import InvalidInputError, ParseError, StaleCertificateError
from .linalg import Inertia, inertia
from .system import SwitchingSystem, load_structured, parse_scalar

FORMAT_VERSION = 1
CERT_KEYS = ("version", "system_fingerprint", "p", "epsilon", "rates", "P", "meta")
RATE_KEYS = ("from", "label", "to", "gamma")


def fmt(x: float) -> str:
    """Decimal string with 17 significant digits (exact double round-trip)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Certificate:
    system_fingerprint: str
    p: int
    epsilon: float
    rates: dict  # Transition -> gamma
    forms: dict  # state -> symmetric ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidInputError(f"certificate epsilon must be positive, got {self.epsilon}")

    @classmethod
    def from_outcome(cls, system: SwitchingSystem, p: int, rates: dict, epsilon: float, outcome) -> "Certificate":
        if not outcome.feasible:
            raise InvalidInputError("cannot build a certificate from a not-found outcome")
        meta = {
            "solver_iterations": outcome.iterations,
            "achieved_margin": fmt(outcome.margin),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        return cls(system.fingerprint, p, float(epsilon), dict(rates), dict(outcome.forms), meta)


def serialize(cert: Certificate) -> bytes:
    doc = {
        "version": FORMAT_VERSION,
        "system_fingerprint": cert.system_fingerprint,
        "p": int(cert.p),
        "epsilon": fmt(cert.epsilon),
        "rates": [
            {"from": t.src, "label": t.label, "to": t.dst, "gamma": fmt(g)}
            for t, g in cert.rates.items()
        ],
        "P": {q: [fmt(v) for v in np.asarray(P, dtype=float).ravel()] for q, P in cert.forms.items()},
        "meta": cert.meta,
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _number(value, where: str) -> float:
    if isinstance(value, (int, float, str)) and not isinstance(value, bool):
        return float(parse_scalar(value, where))
    raise ParseError(f"expected a decimal value, got {value!r}", field=where)


def deserialize(data: bytes | str) -> Certificate:
    """Parse a certificate file.

    Raises
    ------
    ParseError
        On malformed JSON (with line number), missing or unknown fields, or
        badly shaped matrices.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed certificate: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ParseError("certificate must be a JSON object")
    for key in doc:
        if key not in CERT_KEYS:
            raise ParseError(f"unknown field {key!r}", field=key)
    for key in CERT_KEYS:
        if key not in doc:
            raise ParseError("missing field", field=key)
    if doc["version"] != FORMAT_VERSION:
        raise ParseError(f"unsupported version {doc['version']!r}", field="version")
    fp = doc["system_fingerprint"]
    if not isinstance(fp, str) or not fp or any(c not in "0123456789abcdef" for c in fp):
        raise ParseError("fingerprint must be a lowercase hex string", field="system_fingerprint")
    p = doc["p"]
    if not isinstance(p, int) or isinstance(p, bool) or p < 0:
        raise ParseError("p must be a non-negative integer", field="p")
    eps = _number(doc["epsilon"], "epsilon")

    if not isinstance(doc["rates"], list):
        raise ParseError("rates must be an array", field="rates")
    rates = {}
    for i, entry in enumerate(doc["rates"]):
        where = f"rates[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("rate entry must be an object", field=where)
        for key in entry:
            if key not in RATE_KEYS:
                raise ParseError(f"unknown field {key!r}", field=f"{where}.{key}")
        for key in RATE_KEYS:
            if key not in entry:
                raise ParseError("missing field", field=f"{where}.{key}")
        label = entry["label"]
        if not isinstance(label, int) or isinstance(label, bool):
            raise ParseError("label must be an integer", field=f"{where}.label")
        t = Transition(str(entry["from"]), label, str(entry["to"]))
        if t in rates:
            raise ParseError(f"duplicate rate for {t}", field=where)
        rates[t] = _number(entry["gamma"], f"{where}.gamma")

    if not isinstance(doc["P"], dict):
        raise ParseError("P must be an object mapping state to matrix", field="P")
    forms = {}
    for q, flat in doc["P"].items():
        where = f"P.{q}"
        if not isinstance(flat, list) or not flat:
            raise ParseError("matrix must be a non-empty array", field=where)
        n = math.isqrt(len(flat))
        if n * n != len(flat):
            raise ParseError(f"{len(flat)} entries do not form a square matrix", field=where)
        forms[str(q)] = np.array([_number(v, f"{where}[{i}]") for i, v in enumerate(flat)]).reshape(n, n)
    if not isinstance(doc["meta"], dict):
        raise ParseError("meta must be an object", field="meta")
    try:
        return Certificate(fp, p, eps, rates, forms, doc["meta"])
    except InvalidInputError as exc:
        raise ParseError(str(exc), field="epsilon") from exc


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class TransitionCheck:
    transition: Transition
    gamma: float
    max_eigenvalue: float
    ok: bool


@dataclass(frozen=True)
class StateCheck:
    state: str
    inertia: Inertia | None
    ok: bool


@dataclass(frozen=True)
class OrderingCheck:
    transition: Transition
    nu_src: int
    nu_dst: int
    ok: bool


@dataclass(frozen=True)
class ValidationReport:
    transitions: tuple[TransitionCheck, ...]
    states: tuple[StateCheck, ...]
    ordering: tuple[OrderingCheck, ...]
    rates_positive: bool
    problems: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return (
            not self.problems
            and self.rates_positive
            and all(c.ok for c in self.transitions)
            and all(c.ok for c in self.states)
            and all(c.ok for c in self.ordering)
        )

    def failures(self) -> list[str]:
        out = list(self.problems)
        if not self.rates_positive:
            out.append("non-positive rate")
        out += [f"transition {c.transition}: max eigenvalue {c.max_eigenvalue:.6g} > -epsilon"
                for c in self.transitions if not c.ok]
        out += [f"state {c.state}: inertia {tuple(c.inertia) if c.inertia else None}"
                for c in self.states if not c.ok]
        out += [f"transition {c.transition}: nu ordering {c.nu_src} > {c.nu_dst}"
                for c in self.ordering if not c.ok]
        return out

    def summary(self) -> str:
        lines = []
        for c in self.transitions:
            lines.append(f"  {str(c.transition):<16} gamma={c.gamma:<10.6g} lambda_max={c.max_eigenvalue:<12.6g} "
                         f"{'ok' if c.ok else 'FAIL'}")
        for c in self.states:
            inert = tuple(c.inertia) if c.inertia else None
            lines.append(f"  state {c.state:<10} inertia={inert} {'ok' if c.ok else 'FAIL'}")
        bad_order = [c for c in self.ordering if not c.ok]
        lines.append(f"  nu ordering: {'ok' if not bad_order else f'{len(bad_order)} violation(s)'}")
        lines.append(f"verdict: {'VALID' if self.valid else 'INVALID'}")
        return "\n".join(lines)


def inertia_tol(P: np.ndarray) -> float:
    return 1e-7 * (1.0 + float(np.linalg.norm(P)))


def validate(system: SwitchingSystem, cert: Certificate) -> ValidationReport:
    """Independently re-check a certificate against ``system``.

    Checks every transition residual against ``-epsilon I``, the inertia of
    each form, the negative-count ordering along transitions and rate
    positivity.  The automaton is trimmed to its bi-infinite core first.

    Raises
    ------
    StaleCertificateError
        If the certificate was issued for a different system file.
    """
    if cert.system_fingerprint != system.fingerprint:
        raise StaleCertificateError(
            "certificate fingerprint does not match the system file "
            f"({cert.system_fingerprint[:12]}... vs {system.fingerprint[:12]}...)"
        )
    aut = trim_core(system.automaton)
    n = system.n
    problems = []
    known = set(aut.transitions)
    for t in cert.rates:
        if t not in known:
            problems.append(f"rate given for unknown transition {t}")
    for q in cert.forms:
        if q not in aut.states:
            problems.append(f"form given for unknown state {q}")

    forms = {}
    states = []
    target = Inertia(cert.p, 0, n - cert.p)
    for q in aut.states:
        P = cert.forms.get(q)
        if P is None:
            problems.append(f"missing form for state {q}")
            states.append(StateCheck(q, None, False))
            continue
        P = np.asarray(P, dtype=float)
        if P.shape != (n, n) or not np.all(np.isfinite(P)):
            problems.append(f"form for state {q} is not a finite {n}x{n} matrix")
            states.append(StateCheck(q, None, False))
            continue
        if np.linalg.norm(P - P.T) > 1e-12 * (1.0 + np.linalg.norm(P)):
            problems.append(f"form for state {q} is not symmetric")
        P = 0.5 * (P + P.T)
        forms[q] = P
        inert = inertia(P, inertia_tol(P))
        states.append(StateCheck(q, inert, inert == target))

    rates_positive = all(math.isfinite(g) and g > 0 for g in cert.rates.values())
    checks = []
    ordering = []
    for t in aut.transitions:
        g = cert.rates.get(t)
        if g is None:
            problems.append(f"missing rate for transition {t}")
            continue
        if t.src not in forms or t.dst not in forms:
            continue
        A = system.modes[t.label]
        R = A.T @ forms[t.dst] @ A - g * g * forms[t.src]
        lam = float(np.linalg.eigvalsh(0.5 * (R + R.T))[-1])
        checks.append(TransitionCheck(t, g, lam, g > 0 and lam <= -cert.epsilon))
        nu_src = inertia(forms[t.src], inertia_tol(forms[t.src])).neg
        nu_dst = inertia(forms[t.dst], inertia_tol(forms[t.dst])).neg
        ordering.append(OrderingCheck(t, nu_src, nu_dst, nu_src <= nu_dst))
    return ValidationReport(tuple(checks), tuple(states), tuple(ordering), rates_positive, tuple(problems))


def parse_rates_file(text: str) -> dict:
    """Rates file: a list of ``{from, label, to, gamma}`` (optionally under ``rates``).

    ``gamma`` accepts decimals and fraction literals.
    """
    raw = load_structured(text, "rates file")
    if isinstance(raw, dict) and set(raw) == {"rates"}:
        raw = raw["rates"]
    if not isinstance(raw, list):
        raise ParseError("rates file must be a list of {from, label, to, gamma}")
    rates = {}
    for i, entry in enumerate(raw):
        where = f"rates[{i}]"
        if not isinstance(entry, dict) or set(entry) != set(RATE_KEYS):
            raise ParseError("entry must have exactly from, label, to, gamma", field=where)
        try:
            label = int(entry["label"])
        except (TypeError, ValueError):
            raise ParseError("label must be an integer", field=f"{where}.label") from None
        t = Transition(str(entry["from"]), label, str(entry["to"]))
        rates[t] = float(parse_scalar(entry["gamma"], f"{where}.gamma"))
    return rates
