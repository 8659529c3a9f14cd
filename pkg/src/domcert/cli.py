"""Command-line front end.

Exit codes: 0 success, 1 input or usage error, 2 analysis negative
(no certificate found, empty rate gap, invalid certificate content,
counterexample to path-completeness).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .automata import SwitchingSignal, path_complete_check, trim_core
from .certificate import Certificate, deserialize, parse_rates_file, serialize, validate
from .errors import DomcertError, StaleCertificateError
from .feasibility import DEFAULT_EPSILON, DEFAULT_MAX_ITERS, DEFAULT_RADIUS, assemble, solve
from .rates import cycle_spectra, propose_rates, validate_rates
from .simulate import (
    decay_estimate,
    periodic_splitting,
    projective_distance,
    simulate,
    write_trajectory_csv,
)
from .system import load_automaton, load_system

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2

log = logging.getLogger("domcert")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get("DOMCERT_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"DOMCERT_SEED must be an integer, got {raw!r}") from None


def _fmt_interval(iv) -> str:
    return f"({iv[0]:.10g}, {iv[1]:.10g})"


def _load_core(path):
    system = load_system(path)
    return system, system.with_automaton(trim_core(system.automaton))


def cmd_analyze(args) -> int:
    system, core = _load_core(args.system)
    print(f"system: n={system.n}, {system.n_modes} modes, "
          f"{len(core.automaton.states)} states / {len(core.automaton.transitions)} transitions in core")
    if system.language is not None:
        verdict = path_complete_check(trim_core(system.language), core.automaton)
        if not verdict.complete:
            word = " ".join(map(str, verdict.counterexample))
            print(f"automaton is not path-complete for the language; counterexample: {word}")
            return EXIT_NEGATIVE
        print("automaton is path-complete for the language")

    if args.rates == "auto":
        proposal = propose_rates(core, args.p)
        if not proposal.feasible:
            print(f"no admissible rates for p={args.p}: {proposal.reason}")
            for spec in proposal.spectra:
                if spec.cycle in proposal.binding:
                    print(f"  cycle {spec.cycle}: magnitudes {np.round(spec.magnitudes, 10).tolist()}, "
                          f"gap {_fmt_interval(spec.interval)}")
            return EXIT_NEGATIVE
        rates = proposal.rates
        print(f"rates: proposed automatically (log-space slack {proposal.slack:.4g})")
    else:
        rates = parse_rates_file(Path(args.rates).read_text(encoding="utf-8"))
        print(f"rates: read from {args.rates}")
    report = validate_rates(core, args.p, rates)
    bad = [r for r in report if not r.ok]
    for r in bad:
        print(f"  cycle {r.cycle}: rate product {r.rate_product:.6g} not in gap "
              f"{_fmt_interval(r.spectrum.interval)} (split {tuple(r.split)})")
    if bad:
        print(f"rates are inadmissible for p={args.p}")
        return EXIT_NEGATIVE
    for t in core.automaton.transitions:
        print(f"  {str(t):<16} gamma = {rates[t]:.10g}")

    problem = assemble(core, args.p, rates, args.epsilon, args.radius)
    outcome = solve(problem, args.max_iters, args.seed)
    if not outcome.feasible:
        print(f"not found after {outcome.iterations} iterations "
              f"(log-volume {outcome.log_volume:.4g}); most violated: {outcome.worst} "
              f"lambda_max = {outcome.worst_value:.6g}")
        return EXIT_NEGATIVE
    cert = Certificate.from_outcome(system, args.p, rates, args.epsilon, outcome)
    check = validate(system, cert)
    print(f"solver: feasible after {outcome.iterations} iterations, margin {outcome.margin:.6g}")
    print(check.summary())
    if not check.valid:
        for line in check.failures():
            print(f"  {line}")
        return EXIT_NEGATIVE
    out = Path(args.out) if args.out else Path(Path(args.system).stem + ".cert.json")
    out.write_bytes(serialize(cert))
    print(f"certificate written to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    system = load_system(args.system)
    cert = deserialize(Path(args.certificate).read_bytes())
    report = validate(system, cert)
    print(report.summary())
    for line in report.failures():
        print(f"  {line}")
    return EXIT_OK if report.valid else EXIT_INPUT


def cmd_rates(args) -> int:
    _, core = _load_core(args.system)
    spectra = cycle_spectra(core, args.p)
    print(f"{len(spectra)} elementary cycle(s), degree p={args.p}")
    for spec in spectra:
        mags = ", ".join(f"{m:.10g}" for m in spec.magnitudes)
        state = "EMPTY" if spec.empty else "ok"
        print(f"  {str(spec.cycle):<28} |lambda| = ({mags})  interval {_fmt_interval(spec.interval)} {state}")
    proposal = propose_rates(core, args.p)
    if not proposal.feasible:
        print(f"no admissible rates: {proposal.reason}")
        return EXIT_NEGATIVE
    print(f"proposed rates (log-space slack {proposal.slack:.4g}):")
    for t in core.automaton.transitions:
        print(f"  {str(t):<16} gamma = {proposal.rates[t]:.10g}")
    return EXIT_OK


def _parse_signal(spec: str) -> SwitchingSignal:
    kind, _, body = spec.partition(":")
    if kind == "periodic":
        text = body
    elif kind == "file":
        try:
            text = Path(body).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read signal file: {exc}") from None
    else:
        raise UsageError(f"signal must be 'periodic:<labels>' or 'file:<path>', got {spec!r}")
    try:
        labels = tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise UsageError(f"signal labels must be integers: {text!r}") from None
    if not labels:
        raise UsageError("empty signal")
    return SwitchingSignal(labels, "periodic" if kind == "periodic" else "finite")


def _parse_vector(text: str, n: int) -> np.ndarray:
    try:
        v = np.array([float(tok) for tok in text.split(",")])
    except ValueError:
        raise UsageError(f"--x0 must be comma-separated numbers, got {text!r}") from None
    if v.shape[0] != n:
        raise UsageError(f"--x0 has {v.shape[0]} entries, system dimension is {n}")
    return v


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    signal = _parse_signal(args.signal)
    x0s = [_parse_vector(s, system.n) for s in args.x0] if args.x0 else []
    if not x0s:
        rng = np.random.default_rng(args.seed)
        x0s = [rng.standard_normal(system.n) for _ in range(args.count)]

    splitting = None
    if args.certificate:
        cert = deserialize(Path(args.certificate).read_bytes())
        report = validate(system, cert)
        if not report.valid:
            print("warning: certificate does not validate; decay estimates are not backed by it")
        if signal.kind == "periodic":
            splitting = periodic_splitting(system, signal, cert.p)
            print(f"period {splitting.period}, monodromy |lambda| = "
                  f"{', '.join(f'{m:.6g}' for m in splitting.magnitudes)}, "
                  f"fiber invariance residual {splitting.invariance_residual:.3g}")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    finals = []
    for k, x0 in enumerate(x0s):
        traj = simulate(system, signal, x0, args.steps)
        ratios = None
        if splitting is not None:
            est = decay_estimate(system, signal, splitting, x0, args.steps)
            ratios = est.ratios
            print(f"trajectory {k}: rho_hat = {est.rho:.6g}, C_hat = {est.C:.6g}, "
                  f"fit residual = {est.residual:.3g} (straight line {est.linear_residual:.3g}), "
                  f"bound {'holds' if est.bound_holds else 'violated'}")
        path = out_dir / f"trajectory_{k}.csv"
        write_trajectory_csv(path, traj, ratios)
        finals.append(traj.states[-1])
        print(f"trajectory {k}: final normalized state "
              f"{np.array2string(traj.normalized()[-1], precision=10)} -> {path}")
    if len(finals) > 1 and all(np.linalg.norm(x) > 0 for x in finals):
        spread = max(projective_distance(a, b) for i, a in enumerate(finals) for b in finals[i + 1:])
        print(f"max pairwise projective distance at t={args.steps}: {spread:.3g}")
    return EXIT_OK


def cmd_pathcomplete(args) -> int:
    language = trim_core(load_automaton(args.language))
    candidate = trim_core(load_automaton(args.automaton))
    result = path_complete_check(language, candidate)
    if result.complete:
        print("complete")
        return EXIT_OK
    print("counterexample: " + " ".join(map(str, result.counterexample)))
    return EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="domcert", description="Path-complete p-dominance of constrained switching systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="search for a dominance certificate")
    p.add_argument("--system", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--rates", default="auto", help="'auto' or a rates file")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--radius", type=float, default=DEFAULT_RADIUS)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check", help="validate a certificate against a system")
    p.add_argument("--system", required=True)
    p.add_argument("--certificate", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rates", help="cycle spectra, gap intervals and proposed rates")
    p.add_argument("--system", required=True)
    p.add_argument("--p", type=int, required=True)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", help="write trajectory CSV files")
    p.add_argument("--system", required=True)
    p.add_argument("--signal", required=True, help="periodic:<labels> or file:<path>")
    p.add_argument("--x0", action="append", help="comma-separated initial state (repeatable)")
    p.add_argument("--count", type=int, default=5, help="random initial states when --x0 is absent")
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--certificate")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pathcomplete", help="check path-completeness of an automaton for a language")
    p.add_argument("--language", required=True)
    p.add_argument("--automaton", required=True)
    p.set_defaults(func=cmd_pathcomplete)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
    except UsageError as exc:
        print(f"domcert: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"domcert: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StaleCertificateError as exc:
        print(f"domcert: stale certificate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomcertError, OSError) as exc:
        print(f"domcert: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
