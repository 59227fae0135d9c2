"""Curvature operators with formal direction variables.

Matrices act on column vectors in the coordinate frame: ``entries[m][j]``
is the ``e_m`` coefficient of ``A e_j``. An operator defined by a bilinear
form ``g(A y, z) = B(y, z)`` is obtained by raising the second slot,
``A e_j = sum_{z,m} B(e_j, e_z) g^{zm} e_m``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .polycore import Polynomial, Role, VarTable
from .tensorcalc import MetricSpec, TensorField, curvature, mat_mul, signature

__all__ = [
    "DirectionVector",
    "directions",
    "OperatorMatrix",
    "NilpotencyReport",
    "CharacteristicVerdict",
    "szabo_operator",
    "jacobi_operator",
    "skew_curvature_operator",
    "higher_order_jacobi",
    "ricci_operator",
    "nilpotency_order",
    "characteristic_checks",
    "rank_at_point",
    "rational_rank",
    "adjointness_defect",
    "annihilates_direction",
    "homogeneity_holds",
    "jacobi_trace_matches_ricci",
    "orthonormal_jacobi_check",
    "WITNESS_BUDGET",
]

WITNESS_BUDGET = 10_000
_SMALL = (-2, -1, 0, 1, 2)
_STEMS = ("xi", "eta", "zeta", "kappa", "lam", "mu")


@dataclass(frozen=True)
class DirectionVector:
    """Formal tangent vector ``sum_i names[i] * e_i`` over ``table``."""

    names: tuple[str, ...]
    table: VarTable

    def components(self) -> list[Polynomial]:
        return [self.table.var(n) for n in self.names]

    def bind(self, values: Sequence) -> dict[str, Fraction]:
        if len(values) != len(self.names):
            raise ValueError("wrong number of components")
        return {n: Fraction(v) for n, v in zip(self.names, values)}


def directions(m: MetricSpec, count: int = 1, table: VarTable | None = None) -> list[DirectionVector]:
    """``count`` variable-disjoint formal vectors over one shared extended table."""
    table = table or m.table
    groups = []
    for k in range(count):
        stem = _STEMS[k] if k < len(_STEMS) else f"w{k}"
        names = []
        for i in range(m.dim):
            name = table.fresh(f"{stem}{i}")
            names.append(name)
            table = table.extend([name], Role.DIRECTION)
        groups.append(tuple(names))
    return [DirectionVector(names, table) for names in groups]


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: tuple[tuple[Polynomial, ...], ...]
    kind: str
    metric: MetricSpec
    direction_vars: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def table(self) -> VarTable:
        return self.entries[0][0].table

    def __getitem__(self, mj):
        m, j = mj
        return self.entries[m][j]

    def column(self, j: int) -> list[Polynomial]:
        """Coefficients of ``A e_j``."""
        return [row[j] for row in self.entries]

    def is_zero(self) -> bool:
        return not any(e for row in self.entries for e in row)

    def __eq__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def _new(self, entries, kind=None) -> "OperatorMatrix":
        return OperatorMatrix(
            tuple(tuple(r) for r in entries), kind or self.kind, self.metric, self.direction_vars
        )

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._new(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)]
        )

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._new(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)]
        )

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._new(mat_mul(self.entries, other.entries))

    def scale(self, c) -> "OperatorMatrix":
        return self._new([[e * c for e in row] for row in self.entries])

    def power(self, k: int) -> "OperatorMatrix":
        if k == 0:
            t = self.table
            return self._new([[t.one() if i == j else t.zero() for j in range(self.dim)] for i in range(self.dim)])
        out = self
        for _ in range(k - 1):
            out = out @ self
        return out

    def powers(self, upto: int):
        """Yield ``(k, A^k)`` for ``k = 1..upto``."""
        p = self
        yield 1, p
        for k in range(2, upto + 1):
            p = p @ self
            yield k, p

    def trace(self) -> Polynomial:
        t = self.table.zero()
        for i in range(self.dim):
            t = t + self.entries[i][i]
        return t

    def apply(self, vec: Sequence[Polynomial]) -> list[Polynomial]:
        zero = self.table.zero()
        out = []
        for row in self.entries:
            acc = zero
            for a, v in zip(row, vec):
                if a and v:
                    acc = acc + a * v
            out.append(acc)
        return out

    def substitute(self, bindings) -> "OperatorMatrix":
        return self._new([[e.substitute(bindings) for e in row] for row in self.entries])

    def evaluate(self, values: Mapping[str, Fraction]) -> list[list[Fraction]]:
        return [[e.evaluate(values) for e in row] for row in self.entries]

    def variables(self) -> tuple[str, ...]:
        used = set()
        for row in self.entries:
            for e in row:
                used.update(e.variables())
        return tuple(n for n in self.table.names if n in used)

    def render(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.entries]


# ----------------------------------------------------------- construction
def _lift_ginv(m: MetricSpec, table: VarTable):
    return [[e.lift(table) for e in row] for row in m.ginv]


def _raise_form(m: MetricSpec, form: dict[tuple[int, int], Polynomial], table: VarTable):
    """``A e_j = sum_z B(e_j, e_z) e^z`` with ``e^z = sum_m g^{zm} e_m``."""
    n = m.dim
    ginv = _lift_ginv(m, table)
    zero = table.zero()
    entries = [[zero] * n for _ in range(n)]
    for (j, z), b in form.items():
        if not b:
            continue
        for mm in range(n):
            gzm = ginv[z][mm]
            if gzm:
                entries[mm][j] = entries[mm][j] + b * gzm
    return entries


def _accumulate(form, key, value):
    cur = form.get(key)
    form[key] = value if cur is None else cur + value


def _check_direction(m: MetricSpec, xi: DirectionVector):
    if len(xi.names) != m.dim:
        raise ValueError(f"direction vector has {len(xi.names)} components, metric dim is {m.dim}")
    if not m.table.is_prefix_of(xi.table):
        raise ValueError("direction vector table does not extend the metric table")


def szabo_operator(m: MetricSpec, xi: DirectionVector) -> OperatorMatrix:
    """``g(S(xi) y, z) = nabla R(y, xi, xi, z; xi)``."""
    _check_direction(m, xi)
    table = xi.table
    x = xi.components()
    form: dict = {}
    for (j, k, l, z, p), v in curvature(m).nabla_riemann.comps.items():
        _accumulate(form, (j, z), v.lift(table) * x[k] * x[l] * x[p])
    return OperatorMatrix(
        tuple(map(tuple, _raise_form(m, form, table))), "szabo", m, xi.names
    )


def jacobi_operator(m: MetricSpec, xi: DirectionVector) -> OperatorMatrix:
    """``g(J(xi) y, z) = R(y, xi, xi, z)``."""
    _check_direction(m, xi)
    table = xi.table
    x = xi.components()
    form: dict = {}
    for (j, k, l, z), v in curvature(m).riemann.comps.items():
        _accumulate(form, (j, z), v.lift(table) * x[k] * x[l])
    return OperatorMatrix(
        tuple(map(tuple, _raise_form(m, form, table))), "jacobi", m, xi.names
    )


def skew_curvature_operator(m: MetricSpec, f1: DirectionVector, f2: DirectionVector) -> OperatorMatrix:
    """``g(R(pi) y, z) = R(f1, f2, y, z)`` for the plane spanned by ``f1, f2``."""
    _check_direction(m, f1)
    _check_direction(m, f2)
    if f1.table != f2.table:
        raise ValueError("generators must live over the same table")
    if set(f1.names) & set(f2.names):
        raise ValueError("generators must use disjoint variables")
    table = f1.table
    a, b = f1.components(), f2.components()
    form: dict = {}
    for (i, k, j, z), v in curvature(m).riemann.comps.items():
        _accumulate(form, (j, z), v.lift(table) * a[i] * b[k])
    return OperatorMatrix(
        tuple(map(tuple, _raise_form(m, form, table))), "skew", m, f1.names + f2.names
    )


def higher_order_jacobi(
    m: MetricSpec, vectors: Sequence[DirectionVector], signs: Sequence[int], table: VarTable | None = None
) -> OperatorMatrix:
    """Signed sum ``sum_i signs[i] * J(vectors[i])``."""
    if len(vectors) != len(signs):
        raise ValueError("vectors and signs differ in length")
    if any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    seen: set = set()
    for v in vectors:
        if seen & set(v.names):
            raise ValueError("vectors must be pairwise variable-disjoint")
        seen.update(v.names)
    if vectors:
        table = vectors[0].table
        if any(v.table != table for v in vectors):
            raise ValueError("vectors must share one table")
    table = table or m.table
    n = m.dim
    zero = table.zero()
    total = OperatorMatrix(tuple((zero,) * n for _ in range(n)), "higher-jacobi", m, tuple(seen))
    for v, s in zip(vectors, signs):
        j = jacobi_operator(m, v)
        total = total + j if s == 1 else total - j
    names = tuple(nm for v in vectors for nm in v.names)
    return OperatorMatrix(total.entries, "higher-jacobi", m, names)


def ricci_operator(m: MetricSpec, table: VarTable | None = None) -> OperatorMatrix:
    """``rho_hat`` with ``g(rho_hat y, z) = rho(y, z)``."""
    table = table or m.table
    form = {k: v.lift(table) for k, v in curvature(m).ricci.comps.items()}
    return OperatorMatrix(tuple(map(tuple, _raise_form(m, form, table))), "ricci", m, ())


# ------------------------------------------------------------ exact linear algebra
def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    a = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(a)) if a[r][c] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][c]
        for r in range(rank + 1, len(a)):
            f = a[r][c] / p
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


def rank_at_point(op: OperatorMatrix, bindings: Mapping[str, Fraction]) -> int:
    missing = [v for v in op.variables() if v not in bindings]
    if missing:
        raise ValueError(f"incomplete bindings, missing {missing}")
    return rational_rank(op.evaluate(bindings))


# ------------------------------------------------------------------ reports
@dataclass
class NilpotencyReport:
    kind: str
    dim: int
    signature: tuple[int, int]
    nilpotent: bool
    order: Optional[int]
    witness: Optional[dict[str, Fraction]] = None
    witness_found: bool = False
    rank_profile: list[tuple[dict[str, Fraction], int]] = field(default_factory=list)
    power_support: list[tuple[int, int]] = field(default_factory=list)
    at_point: Optional[dict[str, Fraction]] = None
    seed: int = 0

    @property
    def generically_nonzero_power(self) -> Optional[int]:
        return None if self.order is None else self.order - 1


@dataclass
class CharacteristicVerdict:
    passed: bool
    first_failing_power: Optional[int]
    failing_trace: Optional[str] = None


def _witness_candidates(names: Sequence[str], seed: int, budget: int):
    count = 0
    for combo in itertools.product(_SMALL, repeat=len(names)):
        if count >= budget:
            return
        count += 1
        yield dict(zip(names, map(Fraction, combo)))
    rng = random.Random(seed)
    while count < budget:
        count += 1
        yield {n: Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for n in names}


def _find_witness(power: OperatorMatrix, free: Sequence[str], seed: int, budget: int):
    nonzero = [e for row in power.entries for e in row if e]
    if not nonzero:
        return None
    used = [n for n in free if n in set(power.variables())]
    rest = {n: Fraction(0) for n in free if n not in used}
    for cand in _witness_candidates(used, seed, budget):
        if any(e.evaluate(cand) for e in nonzero):
            cand.update(rest)
            return {n: cand[n] for n in free}
    return None


def nilpotency_order(
    op: OperatorMatrix,
    at_point: Optional[Mapping[str, Fraction]] = None,
    seed: int = 0,
    budget: int = WITNESS_BUDGET,
) -> NilpotencyReport:
    """Minimal ``n`` with ``op^n == 0`` as a polynomial matrix.

    With ``at_point`` every coordinate is fixed first and only direction
    variables stay formal. A non-nilpotent operator (``op^dim != 0``) is
    reported with ``nilpotent=False`` and the nonzero-entry counts of each
    power as the certificate.
    """
    n = op.dim
    if any(len(r) != n for r in op.entries):
        raise ValueError("operator matrix is not square")
    m = op.metric
    point = None
    if at_point is not None:
        point = {k: Fraction(v) for k, v in at_point.items()}
        missing = [c for c in m.coords if c not in point]
        if missing:
            raise ValueError(f"point does not bind coordinates {missing}")
        op = op.substitute(point)
    sig = signature(m)
    free = [v for v in op.table.names if point is None or v not in point]

    support = []
    order = None
    prev = op.power(0)
    if op.is_zero():
        order = 1
        support.append((1, 0))
    else:
        for k, pk in op.powers(n):
            cnt = sum(1 for row in pk.entries for e in row if e)
            support.append((k, cnt))
            if cnt == 0:
                order = k
                break
            prev = pk
    report = NilpotencyReport(
        kind=op.kind,
        dim=n,
        signature=sig,
        nilpotent=order is not None,
        order=order,
        power_support=support,
        at_point=point,
        seed=seed,
    )
    if order is None:
        return report
    witness = _find_witness(prev, free, seed, budget) if order > 1 else {v: Fraction(0) for v in free}
    report.witness = witness
    report.witness_found = witness is not None
    report.rank_profile = _rank_profile(op, free, witness)
    return report


def _rank_profile(op: OperatorMatrix, free: Sequence[str], witness):
    samples = []
    if witness is not None:
        samples.append(dict(witness))
    samples.append({v: Fraction(1) for v in free})
    if len(op.direction_vars) == op.dim:
        base = {v: (witness or {}).get(v, Fraction(0)) for v in free if v not in op.direction_vars}
        for i in range(op.dim):
            s = dict(base)
            s.update({d: Fraction(int(k == i)) for k, d in enumerate(op.direction_vars)})
            samples.append(s)
    out = []
    for s in samples:
        vals = {v: s.get(v, Fraction(0)) for v in free}
        out.append((vals, rational_rank(op.evaluate(vals))))
    return out


def characteristic_checks(op: OperatorMatrix) -> CharacteristicVerdict:
    """``trace(op^k) == 0`` for ``k = 1..dim`` (char. poly ``lambda^dim`` in char 0)."""
    for k, pk in op.powers(op.dim):
        t = pk.trace()
        if t:
            return CharacteristicVerdict(False, k, str(t))
        if pk.is_zero():
            break
    return CharacteristicVerdict(True, None)


# ---------------------------------------------------------------- identities
def adjointness_defect(op: OperatorMatrix, skew: bool = False) -> Polynomial:
    """``g(Av, w) -/+ g(Aw, v)`` as a polynomial in two fresh formal vectors."""
    m = op.metric
    vt = op.table
    vnames, wnames = [], []
    for stem, bucket in (("v", vnames), ("w", wnames)):
        for i in range(m.dim):
            name = vt.fresh(f"adj_{stem}{i}")
            bucket.append(name)
            vt = vt.extend([name], Role.AUXILIARY)
    lifted = [[e.lift(vt) for e in row] for row in op.entries]
    g = [[e.lift(vt) for e in row] for row in m.g]
    v = [vt.var(x) for x in vnames]
    w = [vt.var(x) for x in wnames]

    def apply(vec):
        return [sum((row[j] * vec[j] for j in range(m.dim) if row[j]), vt.zero()) for row in lifted]

    def inner(a, b):
        acc = vt.zero()
        for i in range(m.dim):
            if not a[i]:
                continue
            for j in range(m.dim):
                if g[i][j] and b[j]:
                    acc = acc + a[i] * g[i][j] * b[j]
        return acc

    left = inner(apply(v), w)
    right = inner(apply(w), v)
    return left + right if skew else left - right


def annihilates_direction(op: OperatorMatrix, xi: DirectionVector) -> bool:
    return not any(op.apply(xi.components()))


def homogeneity_holds(op: OperatorMatrix, degree: int) -> bool:
    """Scaling every direction variable by a fresh ``c`` scales ``op`` by ``c**degree``."""
    t = op.table
    c_name = t.fresh("hom_c")
    big = t.extend([c_name], Role.AUXILIARY)
    c = big.var(c_name)
    lifted = [[e.lift(big) for e in row] for row in op.entries]
    bindings = {d: c * big.var(d) for d in op.direction_vars}
    factor = c ** degree
    for row in lifted:
        for e in row:
            if e.substitute(bindings) != e * factor:
                return False
    return True


def jacobi_trace_matches_ricci(m: MetricSpec, xi: DirectionVector) -> bool:
    """``trace J(xi) == rho(xi, xi)``."""
    j = jacobi_operator(m, xi)
    x = xi.components()
    rho = xi.table.zero()
    for (a, b), v in curvature(m).ricci.comps.items():
        rho = rho + v.lift(xi.table) * x[a] * x[b]
    return j.trace() == rho


def orthonormal_jacobi_check(
    m: MetricSpec, r: int, s: int, order: int, samples: int = 5, seed: int = 0
) -> bool:
    """Check ``J(pi)^order == 0`` on sampled nondegenerate ``(r, s)`` subspaces.

    Rational Gram-Schmidt gives an orthogonal basis ``v_i``; for the unit
    vectors ``e_i = v_i / sqrt|g(v_i, v_i)|`` the signed sum collapses to
    ``sum_i J(v_i) / g(v_i, v_i)``, which stays rational.
    """
    rng = random.Random(seed)
    xi = directions(m, 1)[0]
    jac = jacobi_operator(m, xi)
    n = m.dim
    for _ in range(samples):
        point = {c: Fraction(rng.randint(-3, 3)) for c in m.coords}
        gp = m.at_point([point[c] for c in m.coords])

        def ip(a, b):
            return sum(a[i] * gp[i][j] * b[j] for i in range(n) for j in range(n))

        basis: list[tuple[list[Fraction], Fraction]] = []
        want = {1: r, -1: s}
        tries = 0
        while (want[1] or want[-1]) and tries < 500:
            tries += 1
            v = [Fraction(rng.randint(-3, 3)) for _ in range(n)]
            for b, gb in basis:
                f = ip(v, b) / gb
                v = [x - f * y for x, y in zip(v, b)]
            gv = ip(v, v)
            if gv == 0:
                continue
            sign = 1 if gv > 0 else -1
            if want[sign]:
                want[sign] -= 1
                basis.append((v, gv))
        if want[1] or want[-1]:
            raise RuntimeError("could not sample a subspace of the requested signature")
        total = [[Fraction(0)] * n for _ in range(n)]
        for v, gv in basis:
            vals = dict(point)
            vals.update(xi.bind(v))
            jv = jac.evaluate(vals)
            total = [[t + x / gv for t, x in zip(tr, jr)] for tr, jr in zip(total, jv)]
        p = total
        for _ in range(order - 1):
            p = [[sum(p[i][k] * total[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        if any(x for row in p for x in row):
            return False
    return True
