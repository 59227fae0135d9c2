"""Invariant battery, claim table, report assembly and the full suite."""
from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import families
from .operators import (
    OperatorMatrix,
    adjointness_defect,
    annihilates_direction,
    characteristic_checks,
    directions,
    higher_order_jacobi,
    homogeneity_holds,
    jacobi_operator,
    jacobi_trace_matches_ricci,
    nilpotency_order,
    orthonormal_jacobi_check,
    rank_at_point,
    ricci_operator,
    skew_curvature_operator,
    szabo_operator,
)
from .polycore import Polynomial, VarTable
from .tensorcalc import (
    MetricSpec,
    TensorField,
    bianchi_second_defects,
    curvature,
    mat_mul,
    metric_covariant_derivative,
    riemann_symmetry_defects,
    signature,
)

OPERATOR_KINDS = ("szabo", "jacobi", "skew", "higher-jacobi", "ricci")
SCHEMA = "nilcurv.report/1"


def build_operator(m: MetricSpec, kind: str) -> OperatorMatrix:
    if kind == "szabo":
        return szabo_operator(m, directions(m)[0])
    if kind == "jacobi":
        return jacobi_operator(m, directions(m)[0])
    if kind == "skew":
        f1, f2 = directions(m, 2)
        return skew_curvature_operator(m, f1, f2)
    if kind == "higher-jacobi":
        a, b = directions(m, 2)
        return higher_order_jacobi(m, [a, b], [1, -1])
    if kind == "ricci":
        return ricci_operator(m)
    raise ValueError(f"unknown operator kind {kind!r}")


# ------------------------------------------------------------------ invariants
def metric_invariants(m: MetricSpec) -> dict[str, bool]:
    cv = curvature(m)
    n = m.dim
    prod = mat_mul(m.g, m.ginv)
    ident = all(prod[i][j] == (1 if i == j else 0) for i in range(n) for j in range(n))
    rdefects = riemann_symmetry_defects(cv.riemann)
    out = {
        "inverse_identity": ident,
        "metric_compatibility": metric_covariant_derivative(m, cv.christoffel_second).is_zero(),
        "christoffel_symmetric": all(
            cv.christoffel_second[i, j, k] == cv.christoffel_second[j, i, k]
            for (i, j, k) in cv.christoffel_second.comps
        ),
    }
    for name in ("antisym12", "antisym34", "pair", "bianchi1"):
        out[f"riemann_{name}"] = not any(d.startswith(name) for d in rdefects)
    out["bianchi2"] = not bianchi_second_defects(cv.nabla_riemann)
    out["ricci_symmetric"] = all(cv.ricci[i, j] == cv.ricci[j, i] for (i, j) in cv.ricci.comps)
    return out


def operator_invariants(m: MetricSpec, op: OperatorMatrix) -> dict[str, bool]:
    out: dict[str, bool] = {}
    kind = op.kind
    if kind in ("szabo", "jacobi", "higher-jacobi", "ricci"):
        out["self_adjoint"] = adjointness_defect(op).is_zero()
    if kind == "skew":
        out["skew_adjoint"] = adjointness_defect(op, skew=True).is_zero()
    if kind in ("szabo", "jacobi"):
        n = m.dim
        xi = _direction_of(op)
        out["annihilates_direction"] = annihilates_direction(op, xi)
        out["homogeneity"] = homogeneity_holds(op, 3 if kind == "szabo" else 2)
    if kind == "jacobi":
        out["trace_is_ricci"] = jacobi_trace_matches_ricci(m, directions(m)[0])
    if kind == "skew":
        out["homogeneity"] = homogeneity_holds(op, 2)
    if kind == "higher-jacobi":
        out["homogeneity"] = homogeneity_holds(op, 2)
    return out


def _direction_of(op: OperatorMatrix):
    from .operators import DirectionVector

    return DirectionVector(op.direction_vars, op.table)


# --------------------------------------------------------------------- claims
@dataclass
class Claim:
    statement: str
    expected_order: Optional[int] = None
    max_order: Optional[int] = None
    expected_signature: Optional[tuple[int, int]] = None

    def holds(self, order: Optional[int], sig: tuple[int, int]) -> Optional[bool]:
        if self.expected_order is None and self.max_order is None and self.expected_signature is None:
            return None
        ok = True
        if self.expected_order is not None:
            ok &= order == self.expected_order
        if self.max_order is not None:
            ok &= order is not None and order <= self.max_order
        if self.expected_signature is not None:
            ok &= tuple(sig) == tuple(self.expected_signature)
        return ok


def family_claim(family: str, n: Optional[int], op_kind: str, point: Optional[dict], coords=()) -> Claim:
    """What the source asserts for this (family, operator, point) combination."""
    sig = families.claimed_signature(n) if n is not None and family != "gf" else None
    if op_kind == "ricci":
        return Claim("Ricci operator squares to zero on g_f metrics", max_order=2, expected_signature=sig)
    if family == "szabo" and op_kind == "szabo":
        return Claim(f"Szabo nilpotent of order {n}", expected_order=n, expected_signature=sig)
    if family == "osserman" and op_kind == "jacobi":
        return Claim(f"Osserman nilpotent of order {n}", expected_order=n, expected_signature=sig)
    if family == "osserman" and op_kind == "skew":
        k = 2 if n == 2 else 3
        return Claim(f"Ivanov-Petrova nilpotent of order {k}", expected_order=k, expected_signature=sig)
    if family == "osserman" and op_kind == "higher-jacobi":
        return Claim(f"higher order Jacobi J(pi)^{n} = 0", max_order=n, expected_signature=sig)
    if (family, op_kind) in (("pointwise-szabo", "szabo"), ("pointwise-osserman", "jacobi")):
        if point is None:
            return Claim(f"nilpotent of order {n} at generic points", expected_order=n, expected_signature=sig)
        vals = [point.get(c) for c in coords]
        if all(v == 0 for v in vals):
            return Claim("operator vanishes at the origin", expected_order=1, expected_signature=sig)
        if all(v == 1 for v in vals):
            return Claim(f"nilpotent of order {n} at the all-ones point", expected_order=n, expected_signature=sig)
        return Claim(f"nilpotent of order at most {n}", max_order=n, expected_signature=sig)
    return Claim("no claim for this combination", expected_signature=sig)


# --------------------------------------------------------------------- reports
def _q(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def metric_summary(m: MetricSpec) -> dict:
    p, q = signature(m)
    return {
        "dim": m.dim,
        "coords": list(m.coords),
        "signature": [p, q],
        "determinant": _q(m.det),
        "entries": {
            f"g[{i}][{j}]": str(m.g[i][j]) for i in range(m.dim) for j in range(i, m.dim) if m.g[i][j]
        },
    }


def analyze(m: MetricSpec, op_kind: str, point: Optional[dict] = None, seed: int = 0) -> dict:
    """Operator, nilpotency, characteristic checks and invariants for one metric."""
    op = build_operator(m, op_kind)
    rep = nilpotency_order(op, point, seed=seed)
    char = characteristic_checks(op.substitute(rep.at_point) if rep.at_point else op)
    inv = metric_invariants(m)
    inv.update(operator_invariants(m, op))
    consistent = (not rep.nilpotent or char.passed) and all(inv.values())
    return {
        "metric": metric_summary(m),
        "operator": {"kind": op.kind, "direction_vars": list(op.direction_vars)},
        "nilpotency": {
            "nilpotent": rep.nilpotent,
            "order": rep.order,
            "generically_nonzero_power": rep.generically_nonzero_power,
            "witness_found": rep.witness_found,
            "witness": None if rep.witness is None else {k: _q(v) for k, v in rep.witness.items()},
            "rank_profile": [
                {"point": {k: _q(v) for k, v in pt.items()}, "rank": r} for pt, r in rep.rank_profile
            ],
            "power_support": [list(x) for x in rep.power_support],
            "at_point": None if rep.at_point is None else {k: _q(v) for k, v in rep.at_point.items()},
            "seed": rep.seed,
        },
        "characteristic": {"passed": char.passed, "first_failing_power": char.first_failing_power},
        "invariants": dict(sorted(inv.items())),
        "consistent": consistent,
    }


EXIT_OK, EXIT_CLAIM, EXIT_USAGE, EXIT_INCONSISTENT = 0, 1, 2, 3


def verify(family: str, n: Optional[int], op_kind: str, point=None, seed: int = 0, metric: MetricSpec | None = None):
    """Build, analyze and judge one family claim; returns ``(report, exit_code)``."""
    t0 = time.perf_counter()
    if metric is None:
        metric = families.build_family(families.FamilySpec(_family_kind(family), n))
    body = analyze(metric, op_kind, point, seed)
    claim = family_claim(family, n, op_kind, point, metric.coords)
    holds = claim.holds(body["nilpotency"]["order"], tuple(body["metric"]["signature"]))
    report = {
        "schema": SCHEMA,
        "request": {
            "command": "verify",
            "family": family,
            "n": n,
            "operator": op_kind,
            "point": None if point is None else {k: _q(v) for k, v in point.items()},
            "seed": seed,
        },
        **body,
        "claim": {
            "statement": claim.statement,
            "expected_order": claim.expected_order,
            "max_order": claim.max_order,
            "expected_signature": None if claim.expected_signature is None else list(claim.expected_signature),
            "holds": holds,
        },
    }
    if not body["consistent"]:
        code = EXIT_INCONSISTENT
    elif holds is False:
        code = EXIT_CLAIM
    else:
        code = EXIT_OK
    report["status"] = "pass" if code == EXIT_OK else "fail"
    report["timing"] = {"seconds": round(time.perf_counter() - t0, 4)}
    return report, code


def _family_kind(family: str) -> str:
    return "general-gf" if family == "gf" else family


def check(metric: MetricSpec, op_kind: str, point=None, seed: int = 0, source: str = ""):
    t0 = time.perf_counter()
    body = analyze(metric, op_kind, point, seed)
    report = {
        "schema": SCHEMA,
        "request": {
            "command": "check",
            "source": source,
            "operator": op_kind,
            "point": None if point is None else {k: _q(v) for k, v in point.items()},
            "seed": seed,
        },
        **body,
    }
    code = EXIT_OK if body["consistent"] else EXIT_INCONSISTENT
    report["status"] = "pass" if code == EXIT_OK else "fail"
    report["timing"] = {"seconds": round(time.perf_counter() - t0, 4)}
    return report, code


# ------------------------------------------------------------ g_f closed forms
def random_gf(rng: random.Random, nu: int, max_degree: int = 4, terms: int = 5):
    """Random polynomial ``f`` in ``u1..u_nu`` and unimodular symmetric ``Xi``."""
    u_names = tuple(f"u{a}" for a in range(1, nu + 1))
    table = VarTable.of(u_names)
    f = table.zero()
    for _ in range(terms):
        e = [0] * nu
        for _ in range(rng.randint(0, max_degree)):
            e[rng.randrange(nu)] += 1
        f = f + Polynomial(table, {tuple(e): Fraction(rng.randint(-5, 5), rng.randint(1, 3))})
    # Xi = P^T D P with P unit upper triangular, D = diag(+-1)
    p = [[1 if i == j else (rng.randint(-2, 2) if j > i else 0) for j in range(nu)] for i in range(nu)]
    d = [rng.choice((-1, 1)) for _ in range(nu)]
    xi = [[sum(p[k][i] * d[k] * p[k][j] for k in range(nu)) for j in range(nu)] for i in range(nu)]
    return f, xi


def gf_closed_forms(m: MetricSpec, f_names: tuple[str, ...]) -> tuple[TensorField, TensorField]:
    """R and nabla R of a g_f metric from derivatives of ``f = g(X,X)`` alone."""
    f = m.g[0][0]
    n = m.dim
    half = Fraction(-1, 2)
    r, dr = {}, {}
    us = [(m.coords.index(a), a) for a in f_names]
    for ia, a in us:
        fa = f.diff(a)
        for ib, b in us:
            v = fa.diff(b).scale(half)
            if v:
                for sign, idx in ((1, (0, ia, ib, 0)), (1, (ia, 0, 0, ib)), (-1, (0, ia, 0, ib)), (-1, (ia, 0, ib, 0))):
                    r[idx] = v.scale(sign)
            for ic, c in us:
                w = v.diff(c)
                if w:
                    for sign, idx in ((1, (0, ia, ib, 0)), (1, (ia, 0, 0, ib)), (-1, (0, ia, 0, ib)), (-1, (ia, 0, ib, 0))):
                        dr[idx + (ic,)] = w.scale(sign)
    return TensorField(n, 4, m.table, r), TensorField(n, 5, m.table, dr)


# ----------------------------------------------------------------------- suite
@dataclass
class Row:
    claim: str
    passed: bool
    detail: str = ""


def _order(m: MetricSpec, kind: str, point=None) -> Optional[int]:
    return nilpotency_order(build_operator(m, kind), point).order


def suite_rows(n_max: int, seed: int = families.DEFAULT_SEED) -> list[tuple[str, Callable[[], Row]]]:
    """Ordered claim battery; each entry is ``(name, thunk)``."""
    rows: list[tuple[str, Callable[[], Row]]] = []

    def gf_row():
        rng = random.Random(seed)
        for k in range(5):
            f, xi = random_gf(rng, 1 + k % 3)
            m = families.make_gf(f, xi)
            oracle_r, oracle_dr = gf_closed_forms(m, f.table.names)
            cv = curvature(m)
            if cv.riemann != oracle_r or cv.nabla_riemann != oracle_dr:
                return Row("gf-closed-forms", False, f"sample {k}: f = {f}")
        return Row("gf-closed-forms", True, "5 random (f, Xi)")

    rows.append(("gf-closed-forms", gf_row))

    def order_row(label, make, kind, n, expected):
        def run():
            m = make(n)
            o = _order(m, kind)
            sig = signature(m)
            want_sig = families.claimed_signature(n)
            ok = o == expected and sig == want_sig
            return Row(label, ok, f"order {o} (want {expected}), signature {sig} (want {want_sig})")

        return run

    for n in range(2, n_max + 1):
        rows.append((f"szabo-order-{n}", order_row(f"szabo-order-{n}", lambda k: families.make_szabo_metric(k), "szabo", n, n)))
    for n in range(2, n_max + 1):
        rows.append((f"osserman-order-{n}", order_row(f"osserman-order-{n}", lambda k: families.make_osserman_metric(k), "jacobi", n, n)))
    for n in range(2, n_max + 1):
        rows.append((f"ivanov-petrova-{n}", order_row(f"ivanov-petrova-{n}", lambda k: families.make_osserman_metric(k), "skew", n, 2 if n == 2 else 3)))

    def ricci_row():
        ok = True
        for n in range(2, n_max + 1):
            for m in (families.make_szabo_metric(n), families.make_osserman_metric(n)):
                rho_hat = ricci_operator(m)
                ok &= rho_hat.power(2).is_zero()
                ok &= jacobi_trace_matches_ricci(m, directions(m)[0])
        rng = random.Random(seed)
        for k in range(3):
            f, xi = random_gf(rng, 1 + k % 3)
            m = families.make_gf(f, xi)
            ok &= ricci_operator(m).power(2).is_zero()
            ok &= curvature(m).ricci == _ricci_closed_form(m, f.table.names)
        return Row("ricci-square-zero", ok, "rho_hat^2 = 0, trace J = rho, closed form")

    rows.append(("ricci-square-zero", ricci_row))

    def pointwise_row():
        details = []
        ok = True
        for kind, op in (("szabo", "szabo"), ("osserman", "jacobi")):
            for n in range(2, min(n_max, 3) + 1):
                m = families.make_pointwise_variant(kind, n)
                o0 = _order(m, op, {c: 0 for c in m.coords})
                o1 = _order(m, op, {c: 1 for c in m.coords})
                ok &= o0 == 1 and o1 == n
                details.append(f"{kind}{n}:{o0}/{o1}")
        return Row("pointwise-variants", ok, " ".join(details))

    rows.append(("pointwise-variants", pointwise_row))

    def hoj_row():
        ok = True
        downgraded = []
        for n in range(2, min(n_max, 5) + 1):
            m = families.make_osserman_metric(n)
            vecs = directions(m, 3)
            for signs in ((1,), (1, -1), (1, 1), (1, 1, -1), (1, -1, -1)):
                op = higher_order_jacobi(m, vecs[: len(signs)], signs)
                if not op.power(n).is_zero():
                    p, q = signature(m)
                    r = sum(1 for s in signs if s == 1)
                    s_ = len(signs) - r
                    if r <= q and s_ <= p and orthonormal_jacobi_check(m, r, s_, n, seed=seed):
                        downgraded.append(f"n={n} {signs}")
                    else:
                        ok = False
        detail = "formal identity" if not downgraded else "downgraded to orthonormal sampling: " + ", ".join(downgraded)
        return Row("higher-order-jacobi", ok, detail)

    rows.append(("higher-order-jacobi", hoj_row))

    def span_row():
        parts = []
        ok = True
        for mdim, kind in ((2, "curvature"), (3, "curvature"), (4, "curvature"), (2, "covariant"), (3, "covariant")):
            sc = families.span_dimension_check(mdim, 40, seed, kind)
            ok &= sc.passed
            parts.append(f"{kind[0]}{mdim}:{sc.observed}/{sc.expected}")
        return Row("generator-span", ok, " ".join(parts))

    rows.append(("generator-span", span_row))

    def battery_row():
        bad = []
        for n in range(2, min(n_max, 6) + 1):
            for fam, m in (("szabo", families.make_szabo_metric(n)), ("osserman", families.make_osserman_metric(n))):
                inv = metric_invariants(m)
                for kind in ("szabo", "jacobi", "skew"):
                    op = build_operator(m, kind)
                    inv.update({f"{kind}:{k}": v for k, v in operator_invariants(m, op).items()})
                    inv[f"{kind}:power_traces"] = characteristic_checks(op).passed
                bad += [f"{fam}{n}:{k}" for k, v in inv.items() if not v]
        return Row("invariant-battery", not bad, ", ".join(bad) or "all identities exact")

    rows.append(("invariant-battery", battery_row))

    def jordan_row():
        m = families.make_szabo_metric(2)
        op = build_operator(m, "szabo")
        xi = op.direction_vars
        r0 = rank_at_point(op, dict(zip(xi, (1, 0, 0, 0))))
        r1 = rank_at_point(op, dict(zip(xi, (0, 1, 0, 0))))
        return Row("non-jordan", (r0, r1) == (0, 1), f"ranks {r0}, {r1}")

    rows.append(("non-jordan", jordan_row))

    def flat_row():
        m = families.direct_sum_flat(families.make_szabo_metric(2), 1, 1)
        sig = signature(m)
        o = _order(m, "szabo")
        return Row("flat-product", sig == (3, 3) and o == 2, f"signature {sig}, order {o}")

    rows.append(("flat-product", flat_row))
    return rows


def _ricci_closed_form(m: MetricSpec, u_names) -> TensorField:
    """``rho(e_0, e_0) = -1/2 sum Xi^{ab} d_a d_b f``, all other entries zero."""
    f = m.g[0][0]
    idx = [m.coords.index(a) for a in u_names]
    total = m.table.zero()
    for ia, a in zip(idx, u_names):
        for ib, b in zip(idx, u_names):
            # Xi^{ab} is the (a, b) block of the inverse metric
            c = m.ginv[ia][ib]
            if c:
                total = total + c * f.diff(a).diff(b)
    return TensorField(m.dim, 2, m.table, {(0, 0): total.scale(Fraction(-1, 2))})


def run_suite(n_max: int, seed: int = families.DEFAULT_SEED) -> list[Row]:
    out = []
    for name, thunk in suite_rows(n_max, seed):
        try:
            row = thunk()
        except Exception as exc:  # a crashing row is a failing row
            row = Row(name, False, f"error: {exc!r}")
        out.append(row)
    return out
