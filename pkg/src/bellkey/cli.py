"""Command-line front end.

Exit codes: 0 success or pass, 1 verification failure, 2 usage error.
Angles accept pi-rational literals such as ``pi/3``, ``3pi/4``, ``-pi/2``,
``pi/2-0.01`` or ``2*pi/3`` as well as plain decimal radians.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import boundary, figures, protocol, rates, reduction, sos
from .bell_family import (
    BellParameters,
    family_coefficients,
    local_bound_bruteforce,
    local_bound_formula,
    quantum_bound,
    selftest_condition,
)
from .errors import BellKeyError, NotCertifiedError, NotOnBoundaryError
from .strategy import behaviour_from_correlators, behaviour_from_strategy, target_strategy

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<pi>pi|π)|(?P<op>[-+*/()]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse angle {text!r} at position {pos}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


def parse_angle(text) -> float:
    """Evaluate an angle literal: numbers, ``pi``, + - * /, parentheses.

    Juxtaposition multiplies, so ``3pi/4`` reads as ``3*pi/4``.
    """
    if isinstance(text, (int, float)):
        return float(text)
    tokens = _tokenize(str(text))
    if not tokens:
        raise ValueError("empty angle")
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, None)

    def take():
        nonlocal pos
        pos += 1
        return tokens[pos - 1]

    def expr():
        value = term()
        while peek()[1] in ("+", "-"):
            op = take()[1]
            value = value + term() if op == "+" else value - term()
        return value

    def term():
        value = factor()
        while True:
            kind, tok = peek()
            if tok in ("*", "/"):
                take()
                rhs = factor()
                value = value * rhs if tok == "*" else value / rhs
            elif kind in ("num", "pi") or tok == "(":
                value = value * factor()
            else:
                return value

    def factor():
        kind, tok = peek()
        if tok in ("+", "-"):
            take()
            return factor() if tok == "+" else -factor()
        if kind == "num":
            take()
            return float(tok)
        if kind == "pi":
            take()
            return math.pi
        if tok == "(":
            take()
            value = expr()
            if peek()[1] != ")":
                raise ValueError("unbalanced parentheses")
            take()
            return value
        raise ValueError(f"unexpected token {tok!r}")

    try:
        value = expr()
    except ZeroDivisionError:
        raise ValueError(f"division by zero in {text!r}") from None
    if pos != len(tokens):
        raise ValueError(f"trailing input in angle {text!r}")
    if not math.isfinite(value):
        raise ValueError(f"angle {text!r} is not finite")
    return value


def _angle_type(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_config(path) -> dict:
    """Flat key/value TOML file; nested tables are rejected."""
    import tomli

    with open(path, "rb") as fh:
        data = tomli.load(fh)
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ValueError(f"config key {key!r}: only flat scalar values are supported")
    return {k.replace("-", "_"): v for k, v in data.items()}


# --- output helpers -----------------------------------------------------------


@contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _fmt(x) -> str:
    return "none" if x is None else f"{x:.12g}"


def _params(args) -> BellParameters:
    return BellParameters(args.theta, args.phi, args.omega)


# --- subcommands ----------------------------------------------------------------


def cmd_bound(args) -> int:
    p = _params(args)
    coeffs = family_coefficients(*p)
    print(f"params        {_fmt(p.theta)} {_fmt(p.phi)} {_fmt(p.omega)}")
    print("coefficients  " + " ".join(_fmt(c) for c in coeffs))
    print(f"local_formula {_fmt(local_bound_formula(p))}")
    print(f"local_brute   {_fmt(local_bound_bruteforce(coeffs))}")
    print(f"quantum       {_fmt(quantum_bound(p))}")
    print(f"condition     {str(selftest_condition(p)).lower()}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    result = figures.sweep(figures.SweepSpec(args.figure, args.resolution))
    with _output(args.out) as fh:
        result.write_csv(fh)
    log = sys.stderr if args.out in (None, "-") else sys.stdout
    for lm in result.landmarks:
        verdict = "pass" if lm.passed else "FAIL"
        print(
            f"landmark {lm.name}: expected {_fmt(lm.expected)} found {_fmt(lm.found)} "
            f"at ({_fmt(lm.found_location[0])}, {_fmt(lm.found_location[1])}) {verdict}",
            file=log,
        )
    return EXIT_OK if result.passed else EXIT_FAIL


def _search_config(args) -> reduction.SearchConfig:
    return reduction.SearchConfig(
        resolution=args.resolution,
        n_refine=args.n_refine,
        step_floor=args.step_floor,
        max_evals=args.budget,
        seed=args.seed,
        starts=args.starts,
    )


def cmd_verify_sos(args) -> int:
    p = _params(args)
    tol = 1e-12 if args.tolerance is None else args.tolerance
    cert = sos.build_certificate(p, require_selftest=not args.allow_non_selftest)
    rng = np.random.default_rng(args.seed)
    residual = sos.verify_operator_identity(cert, args.trials, rng, plane=args.plane)
    r0, r1 = sos.residuals_at_strategy(cert, target_strategy(p))
    ok = residual <= tol
    print(f"weights       c0={_fmt(cert.c0)} c1={_fmt(cert.c1)}")
    print(f"identity      max residual {residual:.3e} over {args.trials} trials ({'pass' if ok else 'FAIL'})")
    print(f"target        |R0 psi|={r0:.3e} |R1 psi|={r1:.3e}")
    if selftest_condition(p):
        ok &= max(r0, r1) <= 1e-10
    if args.oracle or args.probe:
        cfg = _search_config(args)
        value, rs = reduction.maximize_reduced(p, cfg)
        print(f"oracle        best {_fmt(value)} vs |eta_Q| {_fmt(abs(quantum_bound(p)))}")
        ok &= abs(value) <= abs(quantum_bound(p)) + 1e-9
        if args.probe:
            rep = reduction.uniqueness_probe(p, starts=max(cfg.starts, 64), seed=args.seed)
            print(f"probe         {rep.n_converged}/{len(rep.runs)} converged, {len(rep.violations)} violations")
            for v in rep.violations:
                print(f"  {v}")
            ok &= rep.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_rates(args) -> int:
    p = _params(args)
    rep = rates.RateReport.at(p)
    print(f"selftested     {str(rep.selftested).lower()}")
    print(f"reconciliation {_fmt(rep.reconciliation)}")
    print(f"key_rate       {_fmt(rep.key_rate)}")
    print(f"global_rate    {_fmt(rep.global_rate)}")
    print(f"chsh_max       {_fmt(rep.chsh_max)}")
    try:
        kc = rates.key_rate_from_correlators(p)
        gc = rates.global_rate_from_correlators(p)
    except NotCertifiedError:
        kc = gc = None
    print(f"key_rate_corr  {_fmt(kc)}")
    print(f"global_corr    {_fmt(gc)}")
    return EXIT_OK


def _point(args) -> np.ndarray:
    if args.point is None or len(args.point) != 4:
        raise argparse.ArgumentTypeError("expected four correlators c00 c01 c10 c11")
    return np.array(args.point, dtype=float)


def cmd_boundary(args) -> int:
    tol = boundary.SATURATION_TOL if args.tolerance is None else args.tolerance
    if args.input:
        points = boundary.read_points(args.input)
    else:
        points = _point(args)[None]
    rows = boundary.classify_rows(points, tol)
    with _output(args.out) as fh:
        boundary.write_classification(rows, fh)
    return EXIT_OK


def cmd_tangent(args) -> int:
    tol = 1e-10 if args.tolerance is None else args.tolerance
    try:
        res = boundary.tangent_from_boundary(_point(args))
    except NotOnBoundaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    t, p, w = res.params
    print(f"params        {_fmt(t)} {_fmt(p)} {_fmt(w)}")
    print("functional    " + " ".join(_fmt(c) for c in res.functional.coefficients))
    print(f"quantum       {_fmt(res.quantum_bound)}")
    print(f"condition     {res.condition}")
    print(f"relabelling   {' . '.join(res.relabelling) or 'identity'}")
    print(f"degenerate    {str(res.degenerate).lower()}")
    print(f"check         {res.check:.3e}")
    return EXIT_OK if abs(res.check) <= tol else EXIT_FAIL


def cmd_simulate(args) -> int:
    p = _params(args)
    cfg = protocol.ProtocolConfig(args.rounds, args.q, p, args.threshold, args.seed)
    if args.behaviour == "honest":
        beh = behaviour_from_strategy(target_strategy(p))
    else:
        beh = behaviour_from_correlators([1.0, 1.0, 1.0, 1.0])
    report = protocol.simulate(beh, cfg)
    with _output(args.out) as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.tallies:
        with open(args.tallies, "w", newline="") as fh:
            protocol.write_tallies_csv(report, fh)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    rep = rates.proposition_report(args.prop, args.grid)
    if args.out:
        with _output(args.out) as fh:
            rep.write_csv(fh)
    failed = [r for r in rep.rows if not r.passed]
    # the eps sweep of props 3 and 5 leaves the CHSH line on purpose
    chsh = [r.chsh_max for r in rep.rows if r.note != "eps-sweep"]
    print(f"proposition {args.prop}: {len(rep.rows)} rows, {len(failed)} failed")
    print(f"chsh range   [{_fmt(min(chsh))}, {_fmt(max(chsh))}]")
    for key in sorted(rep.summary):
        print(f"{key:<22} {rep.summary[key]}")
    print("verdict      " + ("pass" if rep.passed else "FAIL"))
    return EXIT_OK if rep.passed else EXIT_FAIL


# --- parser -----------------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser) -> None:
    for name in ("theta", "phi", "omega"):
        p.add_argument(f"--{name}", type=_angle_type, required=True, help="angle, e.g. pi/3 or 1.047")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for random draws")
    common.add_argument("--tolerance", type=float, default=None, help="override the command's check tolerance")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--config", default=None, help="flat TOML file supplying defaults for any flag")

    parser = argparse.ArgumentParser(
        prog="bellkey",
        description="Bell functionals, self-tests and key rates for the three-parameter correlator family.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="local and quantum bounds, condition verdict")
    _add_params(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser(
        "sweep",
        parents=[common],
        help="figure grid as CSV",
        description="CSV columns: axis1, axis2, chsh_max, condition_flag, rate. "
        "Figure 1: axes (theta, phi), omega = pi, flag = self-test condition, rate = global randomness. "
        "Figure 2: axes (theta, omega), phi = pi/2, flag = Wang criterion, rate = key rate from correlators.",
    )
    p.add_argument("--figure", type=int, choices=(1, 2), required=True)
    p.add_argument("--resolution", type=int, default=241)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-sos", parents=[common], help="check the sum-of-squares certificate")
    _add_params(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--plane", choices=("XY", "ZX", "bloch"), default="bloch")
    p.add_argument("--allow-non-selftest", action="store_true", help="build the decomposition even if the condition fails")
    p.add_argument("--oracle", action="store_true", help="also run the reduced-strategy maximizer")
    p.add_argument("--probe", action="store_true", help="also run the uniqueness probe")
    p.add_argument("--resolution", type=int, default=reduction.SearchConfig.resolution)
    p.add_argument("--n-refine", type=int, default=reduction.SearchConfig.n_refine)
    p.add_argument("--step-floor", type=float, default=reduction.SearchConfig.step_floor)
    p.add_argument("--budget", type=int, default=reduction.SearchConfig.max_evals)
    p.add_argument("--starts", type=int, default=reduction.SearchConfig.starts)
    p.set_defaults(func=cmd_verify_sos)

    p = sub.add_parser("rates", parents=[common], help="key and randomness rates at a point")
    _add_params(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser(
        "boundary",
        parents=[common],
        help="classify correlator points",
        description="CSV columns: c00, c01, c10, c11, status, saturated, wang. "
        "Saturated conditions are written as ij+ or ij- separated by semicolons.",
    )
    p.add_argument("point", nargs="*", type=float, help="c00 c01 c10 c11")
    p.add_argument("--input", default=None, help="CSV of correlator rows (batch mode)")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("tangent", parents=[common], help="tangent family member at a boundary point")
    p.add_argument("point", nargs=4, type=float, help="c00 c01 c10 c11")
    p.set_defaults(func=cmd_tangent)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo spot-checking protocol (JSON report)")
    _add_params(p)
    p.add_argument("--rounds", type=int, default=1_000_000)
    p.add_argument("--q", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=None, help="abort threshold (default |eta_Q| - 5 stderr)")
    p.add_argument("--behaviour", choices=("honest", "local"), default="honest")
    p.add_argument("--tallies", default=None, help="write test tallies CSV (x, y, a, b, count)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "reproduce",
        parents=[common],
        help="check a proposition sweep",
        description="With --out, CSV columns: theta, phi, omega, condition, key_rate, global_rate, chsh_max, pass. "
        "Rates are empty where the point is not certified.",
    )
    p.add_argument("prop", type=int, choices=(2, 3, 4, 5, 6))
    p.add_argument("--grid", type=int, default=100)
    p.set_defaults(func=cmd_reproduce)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        values = load_config(known.config)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, subparser in sub_action.choices.items():
        dests = {a.dest for a in subparser._actions}
        unknown = set(values) - dests
        if unknown and name in argv:
            parser.error(f"unknown config keys for {name}: {sorted(unknown)}")
        relevant = {k: v for k, v in values.items() if k in dests}
        for action in subparser._actions:
            if action.dest in relevant:
                action.required = False
        subparser.set_defaults(**relevant)


_ANGLE_FLAGS = ("--theta", "--phi", "--omega")


def _glue_negative_angles(argv: list[str]) -> list[str]:
    """Rewrite ``--theta -pi/2`` as ``--theta=-pi/2``.

    argparse takes a value starting with '-' for an option unless it looks
    like a plain number, which rules out literals such as ``-pi/2``.
    """
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _ANGLE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _glue_negative_angles(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    for name in ("theta", "phi", "omega"):
        if hasattr(args, name) and not isinstance(getattr(args, name), float):
            try:
                setattr(args, name, parse_angle(getattr(args, name)))
            except ValueError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_USAGE
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BellKeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        # invalid values that argparse cannot see (resolution 1, rounds 0, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
