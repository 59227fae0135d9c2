"""Metric families with nilpotent curvature operators, and algebraic tensors.

All families are of the form ``g(X,X) = f``, ``g(X,Y) = 1``, ``g(U_a,U_b) = Xi_ab``
on coordinates ``(x, u_1..u_nu, y)``; see :func:`make_gf`. Coordinate order
within each family follows the printed frames, e.g.
``(x, t, u2..u_{l+1}, v2..v_{l+1}, y)`` for the odd Szabo family.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .polycore import Polynomial, VarTable
from .tensorcalc import MetricError, MetricSpec, TensorField, signature

__all__ = [
    "FamilySpec",
    "SymmetricForm",
    "SpanCheck",
    "FAMILY_KINDS",
    "make_gf",
    "make_szabo_metric",
    "make_osserman_metric",
    "make_pointwise_variant",
    "build_family",
    "claimed_signature",
    "make_RL",
    "make_nablaRLS",
    "direct_sum_flat",
    "span_dimension_check",
    "curvature_constraint_dimension",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 20021105
FAMILY_KINDS = ("szabo", "osserman", "pointwise-szabo", "pointwise-osserman", "general-gf")


def claimed_signature(n: int) -> tuple[int, int]:
    """Signature of the order-``n`` families: balanced for even ``n``, almost balanced for odd."""
    p = n // 2
    return (p + 1, p + 1) if n % 2 == 0 else (p + 1, p + 2)


# ------------------------------------------------------------------- g_f
def make_gf(f: Polynomial, xi: Sequence[Sequence], name: str = "gf", u_names: Sequence[str] | None = None) -> MetricSpec:
    """``g(X,X) = f(u)``, ``g(X,Y) = 1``, ``g(U_a,U_b) = xi[a][b]`` on ``(x, u..., y)``."""
    if u_names is None:
        u_names = tuple(nm for nm in f.table.names if nm not in ("x", "y"))
    u_names = tuple(u_names)
    for bad in ("x", "y"):
        if bad in f.table and bad in f.variables():
            raise MetricError(f"f must not depend on {bad}")
    used = set(f.variables())
    if not used <= set(u_names):
        raise MetricError(f"f uses variables outside {u_names}: {sorted(used - set(u_names))}")
    nu = len(u_names)
    if len(xi) != nu or any(len(r) != nu for r in xi):
        raise MetricError(f"Xi must be {nu}x{nu}")
    xi = [[Fraction(v) for v in r] for r in xi]
    for a in range(nu):
        for b in range(nu):
            if xi[a][b] != xi[b][a]:
                raise MetricError("Xi must be symmetric")
    coords = ("x",) + u_names + ("y",)
    table = VarTable.of(coords)
    pos = [table.index(nm) for nm in f.table.names]
    terms = {}
    for e, c in f.terms.items():
        new = [0] * len(table)
        for i, k in enumerate(e):
            if k:
                new[pos[i]] = k
        terms[tuple(new)] = c
    ff = Polynomial(table, terms)
    entries = {(0, 0): ff, (0, nu + 1): 1}
    for a in range(nu):
        for b in range(a, nu):
            if xi[a][b]:
                entries[a + 1, b + 1] = xi[a][b]
    try:
        return MetricSpec.from_entries(coords, entries, name=name)
    except MetricError as exc:
        raise MetricError(f"Xi is singular or inadmissible: {exc}") from None


def _hyperbolic_xi(t_count: int, pairs: int) -> list[list[int]]:
    """``g(T,T) = 1`` block followed by ``g(U_a, V_b) = delta_ab`` pairs (U's first)."""
    nu = t_count + 2 * pairs
    xi = [[0] * nu for _ in range(nu)]
    for i in range(t_count):
        xi[i][i] = 1
    for a in range(pairs):
        i, j = t_count + a, t_count + pairs + a
        xi[i][j] = xi[j][i] = 1
    return xi


def _family_frame(n: int) -> tuple[tuple[str, ...], list[list[int]], str]:
    """u-coordinate names and Xi for order ``n``; third item is the case tag."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if n == 2:
        return ("u", "v"), _hyperbolic_xi(0, 1), "n2"
    if n == 3:
        return ("t", "u", "v"), _hyperbolic_xi(1, 1), "n3"
    if n % 2 == 1:
        l = (n - 1) // 2
        us = tuple(f"u{a}" for a in range(2, l + 2))
        vs = tuple(f"v{a}" for a in range(2, l + 2))
        return ("t",) + us + vs, _hyperbolic_xi(1, l), "odd"
    l = (n - 2) // 2
    us = tuple(f"u{a}" for a in range(1, l + 2))
    vs = tuple(f"v{a}" for a in range(1, l + 2))
    return us + vs, _hyperbolic_xi(0, l + 1), "even"


def _szabo_f(n: int, deg: int) -> str:
    """Text of ``f`` for the Szabo family; ``deg`` 2 is the printed cubic case, 3 the pointwise one."""
    k = deg
    if n == 2:
        return f"-1/3*u^{k + 1}"
    if n == 3:
        return f"-t*u^{k}"
    if n % 2 == 1:
        l = (n - 1) // 2
        parts = [f"-t*u2^{k}"] + [f"-(u{a}+v{a})*u{a + 1}^{k}" for a in range(2, l + 1)]
        return " ".join(parts)
    l = (n - 2) // 2
    parts = [f"-(u{a}+v{a})*u{a + 1}^{k}" for a in range(1, l + 1)] + [f"-1/3*u1^{k + 1}"]
    return " ".join(parts)


def _osserman_f(n: int, deg: int) -> str:
    """``deg`` 1 is the printed quadratic case, 2 the pointwise cubic one."""
    k = deg
    if n == 2:
        return f"-u^{k + 1}"
    if n == 3:
        return f"-2*t*u^{k} - u^{k + 1}"
    if n % 2 == 1:
        l = (n - 1) // 2
        parts = [f"-2*t*u2^{k} - u2^{k + 1}"] + [
            f"-(2*(u{a}+v{a})*u{a + 1}^{k} + u{a + 1}^{k + 1})" for a in range(2, l + 1)
        ]
        return " ".join(parts)
    l = (n - 2) // 2
    parts = [f"-(2*(u{a}+v{a})*u{a + 1}^{k} + u{a + 1}^{k + 1})" for a in range(1, l + 1)]
    parts.append(f"-u1^{k + 1}")
    return " ".join(parts)


def _build(n: int, ftext: str, name: str) -> MetricSpec:
    u_names, xi, _ = _family_frame(n)
    table = VarTable.of(("x",) + u_names + ("y",))
    return make_gf(table.parse(ftext), xi, name=name, u_names=u_names)


def make_szabo_metric(n: int) -> MetricSpec:
    """Metric on ``R^{n+2}`` whose Szabo operator is nilpotent of order ``n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return _build(n, _szabo_f(n, 2), f"szabo-{n}")


def make_osserman_metric(n: int) -> MetricSpec:
    """Metric on ``R^{n+2}`` whose Jacobi operator is nilpotent of order ``n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return _build(n, _osserman_f(n, 1), f"osserman-{n}")


def make_pointwise_variant(kind: str, n: int) -> MetricSpec:
    """Degree-raised family: order ``n`` at generic points, curvature (or its
    derivative) vanishing at the origin."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if kind == "szabo":
        return _build(n, _szabo_f(n, 3), f"pointwise-szabo-{n}")
    if kind == "osserman":
        return _build(n, _osserman_f(n, 2), f"pointwise-osserman-{n}")
    raise ValueError(f"unknown pointwise kind {kind!r}")


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    n: Optional[int] = None
    f: Optional[Polynomial] = None
    xi: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "general-gf":
            if self.f is None or self.xi is None:
                raise ValueError("general-gf needs f and xi")
        elif self.n is None or self.n < 2:
            raise ValueError("n must be >= 2")


def build_family(spec: FamilySpec) -> MetricSpec:
    if spec.kind == "szabo":
        return make_szabo_metric(spec.n)
    if spec.kind == "osserman":
        return make_osserman_metric(spec.n)
    if spec.kind == "pointwise-szabo":
        return make_pointwise_variant("szabo", spec.n)
    if spec.kind == "pointwise-osserman":
        return make_pointwise_variant("osserman", spec.n)
    return make_gf(spec.f, spec.xi)


# ------------------------------------------------------------ flat product
def direct_sum_flat(m: MetricSpec, extra_minus: int, extra_plus: int) -> MetricSpec:
    """Isometric product with a flat factor of signature ``(extra_minus, extra_plus)``."""
    if extra_minus < 0 or extra_plus < 0:
        raise ValueError("counts must be nonnegative")
    k = extra_minus + extra_plus
    if k == 0:
        return m
    table = m.table
    new = []
    for i in range(k):
        nm = table.fresh(f"w{i}")
        table = table.extend([nm], table.roles[0])
        new.append(nm)
    n = m.dim
    zero = table.zero()
    g = [[zero] * (n + k) for _ in range(n + k)]
    for i in range(n):
        for j in range(n):
            g[i][j] = m.g[i][j].lift(table)
    for i in range(k):
        g[n + i][n + i] = table.const(-1 if i < extra_minus else 1)
    return MetricSpec(
        m.coords + tuple(new),
        tuple(map(tuple, g)),
        m.base_point + (Fraction(0),) * k,
        table,
        f"{m.name}+flat({extra_minus},{extra_plus})",
    )


# ------------------------------------------------------- algebraic tensors
_CONST = VarTable((), ())


@dataclass(frozen=True)
class SymmetricForm:
    """Totally symmetric rank-2 or rank-3 array of rationals."""

    dim: int
    values: dict

    def __post_init__(self):
        vals = {tuple(k): Fraction(v) for k, v in self.values.items() if v}
        ranks = {len(k) for k in vals}
        if len(ranks) > 1:
            raise ValueError("mixed ranks")
        for k, v in vals.items():
            if any(not 0 <= i < self.dim for i in k):
                raise IndexError(f"index {k} out of range")
            for perm in set(itertools.permutations(k)):
                if vals.get(perm, Fraction(0)) != v:
                    raise ValueError(f"form is not symmetric at {k}")
        object.__setattr__(self, "values", vals)

    @property
    def rank(self) -> Optional[int]:
        return len(next(iter(self.values))) if self.values else None

    def __call__(self, *idx) -> Fraction:
        return self.values.get(idx, Fraction(0))

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence]) -> "SymmetricForm":
        n = len(rows)
        return cls(n, {(i, j): rows[i][j] for i in range(n) for j in range(n)})

    @classmethod
    def random(cls, dim: int, rank: int, rng: random.Random, lo: int = -3, hi: int = 3) -> "SymmetricForm":
        vals = {}
        for k in itertools.combinations_with_replacement(range(dim), rank):
            v = rng.randint(lo, hi)
            for perm in set(itertools.permutations(k)):
                vals[perm] = v
        return cls(dim, vals)


def _check_rank(form: SymmetricForm, rank: int, what: str):
    if form.rank not in (None, rank):
        raise ValueError(f"{what} must have rank {rank}")


def make_RL(L: SymmetricForm) -> TensorField:
    """``R_L(x1,x2,x3,x4) = L(x1,x4) L(x2,x3) - L(x1,x3) L(x2,x4)``."""
    _check_rank(L, 2, "L")
    n = L.dim
    comps = {}
    for i, j, k, l in itertools.product(range(n), repeat=4):
        v = L(i, l) * L(j, k) - L(i, k) * L(j, l)
        if v:
            comps[i, j, k, l] = _CONST.const(v)
    return TensorField(n, 4, _CONST, comps, ("co",) * 4, ("riemann",))


def make_nablaRLS(L: SymmetricForm, S: SymmetricForm) -> TensorField:
    """``S(x1,x4,x5)L(x2,x3) + L(x1,x4)S(x2,x3,x5) - S(x1,x3,x5)L(x2,x4) - L(x1,x3)S(x2,x4,x5)``."""
    _check_rank(L, 2, "L")
    _check_rank(S, 3, "S")
    if L.dim != S.dim:
        raise ValueError("L and S dimensions differ")
    n = L.dim
    comps = {}
    for a, b, c, d, e in itertools.product(range(n), repeat=5):
        v = (
            S(a, d, e) * L(b, c)
            + L(a, d) * S(b, c, e)
            - S(a, c, e) * L(b, d)
            - L(a, c) * S(b, d, e)
        )
        if v:
            comps[a, b, c, d, e] = _CONST.const(v)
    return TensorField(n, 5, _CONST, comps, ("co",) * 5, ("riemann", "bianchi2"))


# --------------------------------------------------------------- span checks
def _sparse_rank(rows: list[dict[int, Fraction]]) -> int:
    pivots: dict[int, dict[int, Fraction]] = {}
    for row in rows:
        row = {k: Fraction(v) for k, v in row.items() if v}
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                pivots[lead] = row
                break
            f = row[lead] / piv[lead]
            for k, v in piv.items():
                nv = row.get(k, Fraction(0)) - f * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
    return len(pivots)


def _curvature_constraints(m: int, rank: int) -> list[dict[int, int]]:
    def col(idx):
        c = 0
        for i in idx:
            c = c * m + i
        return c

    rows = []

    def four_slot(tail):
        for i, j, k, l in itertools.product(range(m), repeat=4):
            t = (i, j, k, l)
            rows.append(_combine([(t, 1), ((j, i, k, l), 1)], tail, col))
            rows.append(_combine([(t, 1), ((i, j, l, k), 1)], tail, col))
            rows.append(_combine([(t, 1), ((k, l, i, j), -1)], tail, col))
            rows.append(_combine([(t, 1), ((j, k, i, l), 1), ((k, i, j, l), 1)], tail, col))

    if rank == 4:
        four_slot(())
    else:
        for p in range(m):
            four_slot((p,))
        for i, j, k, l, q in itertools.product(range(m), repeat=5):
            rows.append(
                _combine([((i, j, k, l, q), 1), ((i, j, l, q, k), 1), ((i, j, q, k, l), 1)], (), col)
            )
    return [r for r in rows if r]


def _combine(terms, tail, col):
    row: dict[int, int] = {}
    for idx, s in terms:
        c = col(idx + tail)
        row[c] = row.get(c, 0) + s
    return {k: v for k, v in row.items() if v}


def curvature_constraint_dimension(m: int, rank: int = 4) -> int:
    """Dimension of the solution space of the curvature symmetry system.

    ``rank`` 4: antisymmetries, pair symmetry, first Bianchi. ``rank`` 5:
    those in the first four slots plus the second Bianchi identity.
    """
    if rank not in (4, 5):
        raise ValueError("rank must be 4 or 5")
    return m ** rank - _sparse_rank(_curvature_constraints(m, rank))


@dataclass
class SpanCheck:
    kind: str
    m: int
    count: int
    seed: int
    observed: int
    expected: int
    samples_in_space: bool

    @property
    def passed(self) -> bool:
        return self.samples_in_space and self.observed == self.expected

    @property
    def verdict(self) -> str:
        if self.passed:
            return "pass"
        if not self.samples_in_space:
            return "fail"
        return "insufficient" if self.observed < self.expected else "fail"


def _flatten(t: TensorField) -> dict[int, Fraction]:
    out = {}
    for idx, v in t.comps.items():
        c = 0
        for i in idx:
            c = c * t.dim + i
        out[c] = v.constant_value()
    return out


def _satisfies(row_constraints, vec: dict[int, Fraction]) -> bool:
    return all(sum(s * vec.get(c, 0) for c, s in r.items()) == 0 for r in row_constraints)


def span_dimension_check(m: int, count: int = 40, seed: int = DEFAULT_SEED, kind: str = "curvature") -> SpanCheck:
    """Compare the span of random ``R_L`` (or ``nabla R_{L,S}``) with the constraint space.

    ``kind`` is ``"curvature"`` or ``"covariant"``.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    rank = 4 if kind == "curvature" else 5
    if kind not in ("curvature", "covariant"):
        raise ValueError(f"unknown kind {kind!r}")
    constraints = _curvature_constraints(m, rank)
    expected = m ** rank - _sparse_rank(constraints)
    rng = random.Random(seed)
    vecs = []
    for _ in range(count):
        L = SymmetricForm.random(m, 2, rng)
        if rank == 4:
            t = make_RL(L)
        else:
            t = make_nablaRLS(L, SymmetricForm.random(m, 3, rng))
        vecs.append(_flatten(t))
    in_space = all(_satisfies(constraints, v) for v in vecs)
    observed = _sparse_rank([dict(v) for v in vecs])
    return SpanCheck(kind, m, count, seed, observed, expected, in_space)
