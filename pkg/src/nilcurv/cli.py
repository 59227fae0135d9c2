"""``nilcurv`` command line: verify, check, suite."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import battery, families
from .polycore import ParseError, VarTable
from .tensorcalc import MetricError, NonConstantDeterminantError, parse_metric_text

FAMILIES = ("szabo", "osserman", "pointwise-szabo", "pointwise-osserman", "gf")


class UsageError(Exception):
    pass


def parse_point(text: Optional[str]) -> Optional[dict[str, Fraction]]:
    """``"x=0,u=1/2"`` -> ``{"x": 0, "u": 1/2}``."""
    if text is None:
        return None
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"bad point binding {part!r}")
        try:
            out[name.strip()] = Fraction(value.strip())
        except ValueError:
            raise UsageError(f"bad rational {value!r} in --point") from None
    return out


def _complete_point(point, coords):
    if point is None:
        return None
    unknown = set(point) - set(coords)
    if unknown:
        raise UsageError(f"--point names unknown coordinates {sorted(unknown)}")
    missing = [c for c in coords if c not in point]
    if missing:
        raise UsageError(f"--point must bind every coordinate; missing {missing}")
    return {c: point[c] for c in coords}


def read_xi(path: str) -> list[list[Fraction]]:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([Fraction(t) for t in line.replace(",", " ").split()])
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad matrix entry") from None
    return rows


def _gf_metric(f_text: str, xi_path: str):
    xi = read_xi(xi_path)
    nu = len(xi)
    table = VarTable.of(tuple(f"u{a}" for a in range(1, nu + 1)))
    try:
        f = table.parse(f_text)
    except ParseError as exc:
        raise UsageError(f"--f: {exc}") from None
    return families.make_gf(f, xi)


def render_text(report: dict) -> str:
    req = report["request"]
    met = report["metric"]
    nil = report["nilpotency"]
    lines = []
    if req["command"] == "verify":
        lines.append(f"verify family={req['family']} n={req['n']} operator={req['operator']}")
    else:
        lines.append(f"check {req['source']} operator={req['operator']}")
    if req.get("point"):
        lines.append("point: " + ", ".join(f"{k}={v}" for k, v in req["point"].items()))
    lines.append(f"metric: dim {met['dim']}, coords ({', '.join(met['coords'])}), "
                 f"signature ({met['signature'][0]},{met['signature'][1]}), det {met['determinant']}")
    if nil["nilpotent"]:
        lines.append(f"nilpotent of order {nil['order']}")
        if nil["witness_found"]:
            w = ", ".join(f"{k}={v}" for k, v in nil["witness"].items())
            lines.append(f"witness for nonzero power {nil['generically_nonzero_power']}: {w}")
        else:
            lines.append("witness not found within budget")
    else:
        sup = ", ".join(f"A^{k}:{c}" for k, c in nil["power_support"])
        lines.append(f"not nilpotent (nonzero entries per power: {sup})")
    lines.append("ranks: " + " ".join(str(r["rank"]) for r in nil["rank_profile"]))
    ch = report["characteristic"]
    lines.append("power traces: " + ("all zero" if ch["passed"] else f"nonzero at power {ch['first_failing_power']}"))
    bad = [k for k, v in report["invariants"].items() if not v]
    lines.append("invariants: " + ("all hold" if not bad else "FAILED " + ", ".join(bad)))
    if "claim" in report:
        c = report["claim"]
        verdict = {True: "holds", False: "FAILS", None: "n/a"}[c["holds"]]
        lines.append(f"claim: {c['statement']} -> {verdict}")
    lines.append(f"status: {report['status']}")
    return "\n".join(lines) + "\n"


def emit(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    return render_text(report)


def cmd_verify(args) -> int:
    if args.family == "gf":
        if not args.f or not args.xi:
            raise UsageError("--family gf needs --f and --xi")
        metric = _gf_metric(args.f, args.xi)
        n = None
    else:
        if args.n is None or args.n < 2:
            raise UsageError("--n must be an integer >= 2")
        metric = None
        n = args.n
    if metric is None:
        metric = families.build_family(families.FamilySpec(battery._family_kind(args.family), n))
    point = _complete_point(parse_point(args.point), metric.coords)
    report, code = battery.verify(args.family, n, args.operator, point, args.seed, metric=metric)
    sys.stdout.write(emit(report, args.format))
    return code


def cmd_check(args) -> int:
    path = Path(args.metric_file)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        metric = parse_metric_text(text, name=path.name)
    except NonConstantDeterminantError as exc:
        raise UsageError(f"{path}: rejected, determinant is not constant: det = {exc.determinant}") from None
    except (ParseError, MetricError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    point = _complete_point(parse_point(args.point), metric.coords)
    report, code = battery.check(metric, args.operator, point, args.seed, source=path.name)
    sys.stdout.write(emit(report, args.format))
    return code


def cmd_suite(args) -> int:
    if args.n_max < 2:
        raise UsageError("--n-max must be >= 2")
    rows = battery.run_suite(args.n_max, args.seed)
    if args.format == "json":
        doc = {
            "schema": "nilcurv.suite/1",
            "n_max": args.n_max,
            "seed": args.seed,
            "rows": [{"claim": r.claim, "passed": r.passed, "detail": r.detail} for r in rows],
            "status": "pass" if all(r.passed for r in rows) else "fail",
        }
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        width = max(len(r.claim) for r in rows)
        for r in rows:
            sys.stdout.write(f"{r.claim:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}\n")
        failed = [r.claim for r in rows if not r.passed]
        sys.stdout.write("all claims hold\n" if not failed else f"failing: {', '.join(failed)}\n")
    return battery.EXIT_OK if all(r.passed for r in rows) else battery.EXIT_CLAIM


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nilcurv", description="Exact nilpotent curvature operator checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("verify", help="check a family's claimed nilpotency order and signature")
    v.add_argument("--family", required=True, choices=FAMILIES)
    v.add_argument("--n", type=int)
    v.add_argument("--operator", default=None, choices=battery.OPERATOR_KINDS)
    v.add_argument("--point")
    v.add_argument("--f", help="g(X,X) in u1..u_nu (gf family)")
    v.add_argument("--xi", help="file with the constant matrix Xi (gf family)")
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("check", help="analyze a metric file")
    c.add_argument("metric_file")
    c.add_argument("--operator", default="szabo", choices=battery.OPERATOR_KINDS)
    c.add_argument("--point")
    common(c)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("suite", help="run the full claim battery")
    s.add_argument("--n-max", type=int, default=5)
    s.add_argument("--seed", type=int, default=families.DEFAULT_SEED)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_suite)
    return parser


_DEFAULT_OPERATOR = {
    "szabo": "szabo",
    "pointwise-szabo": "szabo",
    "osserman": "jacobi",
    "pointwise-osserman": "jacobi",
    "gf": "ricci",
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return battery.EXIT_USAGE if exc.code else battery.EXIT_OK
    if args.command == "verify" and args.operator is None:
        args.operator = _DEFAULT_OPERATOR[args.family]
    try:
        return args.func(args)
    except (UsageError, MetricError, ParseError) as exc:
        sys.stderr.write(f"nilcurv: error: {exc}\n")
        return battery.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
