"""Metrics on coordinate space and their curvature.

Everything here is computed in one polynomial ring: metrics are required to
have a nonzero *constant* determinant, so the inverse metric is polynomial.

Index conventions (coordinate frame ``e_i = d/dx_i``)::

    Gamma_{ijk}   = g(nabla_{e_i} e_j, e_k)
    Gamma_{ij}^k  = sum_l g^{kl} Gamma_{ijl}
    R_{ijkl}      = g(R(e_i, e_j) e_k, e_l),  R(x, y) = [nabla_x, nabla_y] - nabla_[x, y]
    R_{ijkl;n}    = (nabla_{e_n} R)(e_i, e_j, e_k, e_l)
    rho_{ij}      = sum_{kl} g^{kl} R_{iklj}
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

from .polycore import ParseError, Polynomial, Role, VarTable

__all__ = [
    "MetricError",
    "DegenerateMetricError",
    "NonConstantDeterminantError",
    "MetricSpec",
    "TensorField",
    "inverse_metric",
    "determinant",
    "signature",
    "congruence_signature",
    "christoffel_first",
    "christoffel_second",
    "riemann",
    "riemann_shortcut",
    "covariant_derivative_riemann",
    "ricci_tensor",
    "metric_covariant_derivative",
    "riemann_symmetry_defects",
    "bianchi_second_defects",
    "parse_metric_text",
    "format_metric",
    "mat_mul",
    "Curvature",
    "curvature",
]


class MetricError(ValueError):
    pass


class DegenerateMetricError(MetricError):
    pass


class NonConstantDeterminantError(MetricError):
    def __init__(self, det: Polynomial):
        super().__init__(f"metric determinant is not constant: det = {det}")
        self.determinant = det


Matrix = tuple[tuple[Polynomial, ...], ...]


def mat_mul(a: Sequence[Sequence[Polynomial]], b: Sequence[Sequence[Polynomial]]) -> list[list[Polynomial]]:
    """Product of square polynomial matrices, skipping zero entries."""
    n = len(a)
    m = len(b[0])
    zero = a[0][0].table.zero()
    cols = [[(k, b[k][j]) for k in range(len(b)) if b[k][j]] for j in range(m)]
    out = []
    for i in range(n):
        row_a = a[i]
        row = []
        for j in range(m):
            acc = zero
            for k, bkj in cols[j]:
                aik = row_a[k]
                if aik:
                    acc = acc + aik * bkj
            row.append(acc)
        out.append(row)
    return out


def _faddeev_leverrier(a: Matrix) -> tuple[Polynomial, list[list[Polynomial]], Polynomial]:
    """Characteristic-polynomial recursion; returns ``(det, M_n, c_0)``.

    ``a^{-1} = -M_n / c_0``. Only ring operations and division by integers
    are used, so every intermediate stays polynomial.
    """
    n = len(a)
    table = a[0][0].table
    zero = table.zero()
    c = table.one()
    am = [[zero] * n for _ in range(n)]
    m = am
    for k in range(1, n + 1):
        m = [[am[i][j] + c if i == j else am[i][j] for j in range(n)] for i in range(n)]
        am = mat_mul(a, m)
        tr = zero
        for i in range(n):
            tr = tr + am[i][i]
        c = tr.scale(Fraction(-1, k))
    det = c if n % 2 == 0 else -c
    return det, m, c


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """A symmetric polynomial metric with nonzero constant determinant."""

    coords: tuple[str, ...]
    g: Matrix
    base_point: tuple[Fraction, ...] = None
    table: VarTable = field(default=None)
    name: str = ""

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        n = len(coords)
        if n == 0:
            raise MetricError("dimension must be positive")
        table = self.table if self.table is not None else VarTable.of(coords)
        if table.with_role(Role.COORDINATE) != coords:
            raise MetricError("coords must match the coordinate variables of the table")
        object.__setattr__(self, "table", table)
        if len(self.g) != n or any(len(row) != n for row in self.g):
            raise MetricError(f"metric must be {n}x{n}")
        g = tuple(
            tuple(e if isinstance(e, Polynomial) else table.const(e) for e in row)
            for row in self.g
        )
        for row in g:
            for e in row:
                if e.table != table:
                    raise MetricError("metric entries use a different variable table")
        for i in range(n):
            for j in range(i + 1, n):
                if g[i][j] != g[j][i]:
                    raise MetricError(f"metric is not symmetric at ({i},{j})")
        object.__setattr__(self, "g", g)
        bp = self.base_point
        bp = (Fraction(0),) * n if bp is None else tuple(Fraction(v) for v in bp)
        if len(bp) != n:
            raise MetricError("base_point has wrong length")
        object.__setattr__(self, "base_point", bp)
        det = self._inverse_data[0]
        if det.is_zero():
            raise DegenerateMetricError("metric determinant is identically zero")
        if not det.is_constant():
            raise NonConstantDeterminantError(det)

    @classmethod
    def from_entries(
        cls,
        coords: Sequence[str],
        entries: Mapping[tuple[int, int], str | Polynomial | int | Fraction],
        name: str = "",
        base_point=None,
    ) -> "MetricSpec":
        """Build from upper-triangle entries; missing entries are zero."""
        table = VarTable.of(coords)
        n = len(table)
        g = [[table.zero()] * n for _ in range(n)]
        for (i, j), v in entries.items():
            if isinstance(v, str):
                v = table.parse(v)
            elif not isinstance(v, Polynomial):
                v = table.const(v)
            g[i][j] = v
            g[j][i] = v
        return cls(tuple(coords), tuple(map(tuple, g)), base_point, table, name)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def _inverse_data(self):
        return _faddeev_leverrier(self.g)

    @property
    def det(self) -> Fraction:
        return self._inverse_data[0].constant_value()

    @cached_property
    def ginv(self) -> Matrix:
        _, m, c0 = self._inverse_data
        s = -1 / c0.constant_value()
        return tuple(tuple(x.scale(s) for x in row) for row in m)

    def at_point(self, point: Sequence) -> tuple[tuple[Fraction, ...], ...]:
        vals = dict(zip(self.coords, point))
        return tuple(tuple(e.evaluate(vals) for e in row) for row in self.g)

    def __eq__(self, other):
        if not isinstance(other, MetricSpec):
            return NotImplemented
        return self.coords == other.coords and self.g == other.g and self.base_point == other.base_point

    def __hash__(self):
        return hash((self.coords, self.g))

    def __repr__(self):
        return f"MetricSpec(name={self.name!r}, coords={self.coords})"


# ----------------------------------------------------------------- tensors
@dataclass(frozen=True, eq=False)
class TensorField:
    """Multi-indexed polynomial array stored sparsely.

    ``comps`` holds only the nonzero components; indexing any in-range
    multi-index returns a polynomial (zero when absent).
    """

    dim: int
    rank: int
    table: VarTable
    comps: Mapping[tuple[int, ...], Polynomial]
    variance: tuple[str, ...] = ()
    symmetries: tuple[str, ...] = ()

    def __post_init__(self):
        clean = {}
        for idx, v in self.comps.items():
            idx = tuple(idx)
            if len(idx) != self.rank or any(not 0 <= k < self.dim for k in idx):
                raise IndexError(f"index {idx} out of range")
            if v:
                clean[idx] = v
        object.__setattr__(self, "comps", clean)
        if not self.variance:
            object.__setattr__(self, "variance", ("co",) * self.rank)

    def __getitem__(self, idx) -> Polynomial:
        if not isinstance(idx, tuple):
            idx = (idx,)
        if len(idx) != self.rank or any(not 0 <= k < self.dim for k in idx):
            raise IndexError(f"index {idx} out of range")
        v = self.comps.get(idx)
        return v if v is not None else self.table.zero()

    def nonzero(self) -> dict[tuple[int, ...], Polynomial]:
        return dict(sorted(self.comps.items()))

    def is_zero(self) -> bool:
        return not self.comps

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return (self.dim, self.rank, self.table) == (other.dim, other.rank, other.table) and dict(
            self.comps
        ) == dict(other.comps)

    def __hash__(self):
        return hash((self.dim, self.rank, frozenset(self.comps.items())))

    def substitute(self, bindings) -> "TensorField":
        return TensorField(
            self.dim,
            self.rank,
            self.table,
            {k: v.substitute(bindings) for k, v in self.comps.items()},
            self.variance,
            self.symmetries,
        )

    def dense(self) -> list:
        """Nested-list view (``dim**rank`` entries)."""

        def build(prefix):
            if len(prefix) == self.rank:
                return self[prefix]
            return [build(prefix + (k,)) for k in range(self.dim)]

        return build(())


class _Accumulator(dict):
    def add(self, idx, value: Polynomial):
        cur = self.get(idx)
        self[idx] = value if cur is None else cur + value


def inverse_metric(m: MetricSpec) -> TensorField:
    n = m.dim
    comps = {(i, j): m.ginv[i][j] for i in range(n) for j in range(n)}
    return TensorField(n, 2, m.table, comps, ("contra", "contra"), ("sym01",))


def determinant(m: MetricSpec) -> Fraction:
    return m.det


def congruence_signature(a: Sequence[Sequence[Fraction]]) -> tuple[int, int, int]:
    """(negatives, positives, zeros) of a rational symmetric matrix.

    Symmetric Gaussian elimination: each step applies the same row and
    column operation, so the inertia is preserved (Sylvester).
    """
    a = [[Fraction(x) for x in row] for row in a]
    n = len(a)
    neg = pos = 0
    active = list(range(n))
    while active:
        piv = next((i for i in active if a[i][i] != 0), None)
        if piv is None:
            pair = next(
                ((i, j) for i in active for j in active if i < j and a[i][j] != 0), None
            )
            if pair is None:
                break
            i, j = pair
            # e_i -> e_i + e_j makes the diagonal 2 a_ij (nonzero)
            for k in range(n):
                a[i][k] += a[j][k]
            for k in range(n):
                a[k][i] += a[k][j]
            piv = i
        p = a[piv][piv]
        if p > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for r in active:
            f = a[r][piv] / p
            if f:
                for k in range(n):
                    a[r][k] -= f * a[piv][k]
        for r in active:
            a[piv][r] = a[r][piv] = Fraction(0)
    return neg, pos, n - neg - pos


def signature(m: MetricSpec) -> tuple[int, int]:
    """``(p, q)``: counts of negative and positive squares at the base point."""
    neg, pos, zero = congruence_signature(m.at_point(m.base_point))
    if zero:
        raise DegenerateMetricError("metric is degenerate at the base point")
    return neg, pos


def christoffel_first(m: MetricSpec) -> TensorField:
    n = m.dim
    dg = [[[m.g[j][k].diff(c) for k in range(n)] for j in range(n)] for c in m.coords]
    comps = {}
    half = Fraction(1, 2)
    for i, j, k in itertools.product(range(n), repeat=3):
        v = dg[i][j][k] + dg[j][i][k] - dg[k][i][j]
        if v:
            comps[i, j, k] = v.scale(half)
    return TensorField(n, 3, m.table, comps, ("co", "co", "co"), ("sym01",))


def christoffel_second(m: MetricSpec, first: TensorField | None = None) -> TensorField:
    n = m.dim
    first = first or christoffel_first(m)
    ginv = m.ginv
    acc = _Accumulator()
    for (i, j, l), v in first.comps.items():
        for k in range(n):
            gkl = ginv[k][l]
            if gkl:
                acc.add((i, j, k), gkl * v)
    return TensorField(n, 3, m.table, acc, ("co", "co", "contra"), ("sym01",))


def riemann(m: MetricSpec, first=None, second=None) -> TensorField:
    """``R_{ijkl} = d_i G_{jkl} - d_j G_{ikl} - G_{jk}^n G_{iln} + G_{ik}^n G_{jln}``."""
    n = m.dim
    first = first or christoffel_first(m)
    second = second or christoffel_second(m, first)
    acc = _Accumulator()
    for (a, b, c), v in first.comps.items():
        for d, name in enumerate(m.coords):
            dv = v.diff(name)
            if dv:
                acc.add((d, a, b, c), dv)
                acc.add((a, d, b, c), -dv)
    by_last: dict[int, list] = {}
    for (i, l, p), v in first.comps.items():
        by_last.setdefault(p, []).append((i, l, v))
    for (a, k, p), v in second.comps.items():
        for b, l, w in by_last.get(p, ()):
            prod = v * w
            # -G_{ak}^p G_{blp} at (b,a,k,l);  +G_{ak}^p G_{blp} at (a,b,k,l)
            acc.add((b, a, k, l), -prod)
            acc.add((a, b, k, l), prod)
    return TensorField(n, 4, m.table, acc, ("co",) * 4, ("riemann",))


def riemann_shortcut(m: MetricSpec, first=None, second=None) -> TensorField:
    """The textbook-shortcut form ``d_i G_{jkl} - d_j G_{ikl} + G_{inl} G_{jk}^n - G_{jnl} G_{ik}^n``.

    Agrees with :func:`riemann` when the metric is constant along the
    directions the quadratic terms see (e.g. every ``g_f`` family member),
    but is not a tensor in general. Kept for comparison tests.
    """
    n = m.dim
    first = first or christoffel_first(m)
    second = second or christoffel_second(m, first)
    acc = _Accumulator()
    for (a, b, c), v in first.comps.items():
        for d, name in enumerate(m.coords):
            dv = v.diff(name)
            if dv:
                acc.add((d, a, b, c), dv)
                acc.add((a, d, b, c), -dv)
    by_mid: dict[int, list] = {}
    for (i, p, l), v in first.comps.items():
        by_mid.setdefault(p, []).append((i, l, v))
    for (a, k, p), v in second.comps.items():
        for b, l, w in by_mid.get(p, ()):
            prod = v * w
            acc.add((b, a, k, l), prod)
            acc.add((a, b, k, l), -prod)
    return TensorField(n, 4, m.table, acc, ("co",) * 4)


def _covariant_derivative(m: MetricSpec, t: TensorField, second: TensorField) -> TensorField:
    """Covariant derivative of a fully covariant tensor; new slot appended last."""
    r = t.rank
    acc = _Accumulator()
    for idx, v in t.comps.items():
        for d, name in enumerate(m.coords):
            dv = v.diff(name)
            if dv:
                acc.add(idx + (d,), dv)
    by_slot: list[dict[int, list]] = [{} for _ in range(r)]
    for idx, v in t.comps.items():
        for s in range(r):
            by_slot[s].setdefault(idx[s], []).append((idx, v))
    for (d, a, p), gam in second.comps.items():
        for s in range(r):
            for idx, v in by_slot[s].get(p, ()):
                new = idx[:s] + (a,) + idx[s + 1:] + (d,)
                acc.add(new, -(gam * v))
    return TensorField(m.dim, r + 1, m.table, acc, ("co",) * (r + 1))


def covariant_derivative_riemann(m: MetricSpec, curv: TensorField | None = None, second=None) -> TensorField:
    second = second or christoffel_second(m)
    curv = curv or riemann(m, second=second)
    out = _covariant_derivative(m, curv, second)
    return TensorField(out.dim, 5, out.table, out.comps, out.variance, ("riemann", "bianchi2"))


def metric_covariant_derivative(m: MetricSpec, second: TensorField | None = None) -> TensorField:
    second = second or christoffel_second(m)
    n = m.dim
    g = TensorField(n, 2, m.table, {(i, j): m.g[i][j] for i in range(n) for j in range(n)})
    return _covariant_derivative(m, g, second)


def ricci_tensor(m: MetricSpec, curv: TensorField | None = None) -> TensorField:
    curv = curv or riemann(m)
    ginv = m.ginv
    acc = _Accumulator()
    for (i, k, l, j), v in curv.comps.items():
        gkl = ginv[k][l]
        if gkl:
            acc.add((i, j), gkl * v)
    return TensorField(m.dim, 2, m.table, acc, ("co", "co"), ("sym01",))


# --------------------------------------------------------------- identities
def riemann_symmetry_defects(r: TensorField) -> list[str]:
    """Names of violated algebraic curvature identities (empty if none)."""
    n = r.dim
    bad = []
    checks = {
        "antisym12": lambda i, j, k, l: r[i, j, k, l] + r[j, i, k, l],
        "antisym34": lambda i, j, k, l: r[i, j, k, l] + r[i, j, l, k],
        "pair": lambda i, j, k, l: r[i, j, k, l] - r[k, l, i, j],
        "bianchi1": lambda i, j, k, l: r[i, j, k, l] + r[j, k, i, l] + r[k, i, j, l],
    }
    support = {i for idx in r.comps for i in idx}
    rng = sorted(support) if support else []
    for name, f in checks.items():
        for idx in itertools.product(rng, repeat=4):
            if f(*idx):
                bad.append(f"{name}{idx}")
                break
    return bad


def bianchi_second_defects(dr: TensorField) -> list[str]:
    """Curvature symmetries in the first four slots plus the second Bianchi identity."""
    n = dr.dim
    bad = []
    support = sorted({i for idx in dr.comps for i in idx})
    for p in support:
        sub = TensorField(
            n, 4, dr.table, {idx[:4]: v for idx, v in dr.comps.items() if idx[4] == p}
        )
        for d in riemann_symmetry_defects(sub):
            bad.append(f"{d};{p}")
    for i, j, k, l, q in itertools.product(support, repeat=5):
        if dr[i, j, k, l, q] + dr[i, j, l, q, k] + dr[i, j, q, k, l]:
            bad.append(f"bianchi2{(i, j, k, l, q)}")
            break
    return bad


# ------------------------------------------------------------ text format
def parse_metric_text(text: str, name: str = "") -> MetricSpec:
    """Parse the line-oriented metric format.

    ::

        # comment
        dim = 4
        coords = x,u,v,y
        g[0][0] = -1/3*u^3
        g[0][3] = 1
        g[1][2] = 1
    """
    dim = None
    coords = None
    entries: dict[tuple[int, int], tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "dim":
            try:
                dim = int(value)
            except ValueError:
                raise ParseError(f"line {lineno}: dim must be an integer") from None
            if dim <= 0:
                raise ParseError(f"line {lineno}: dim must be positive")
        elif key == "coords":
            coords = tuple(c.strip() for c in value.split(","))
        elif key.startswith("g["):
            try:
                i_s, j_s = key[2:].rstrip("]").split("][")
                i, j = int(i_s), int(j_s)
            except ValueError:
                raise ParseError(f"line {lineno}: malformed entry key {key!r}") from None
            if i > j:
                raise ParseError(f"line {lineno}: entries must satisfy i <= j")
            if (i, j) in entries:
                raise ParseError(f"line {lineno}: duplicate entry g[{i}][{j}]")
            entries[i, j] = (value, lineno)
        else:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
    if dim is None or coords is None:
        raise ParseError("missing 'dim' or 'coords' line")
    if len(coords) != dim:
        raise ParseError(f"coords lists {len(coords)} names but dim = {dim}")
    try:
        table = VarTable.of(coords)
    except ValueError as exc:
        raise ParseError(f"bad coords: {exc}") from None
    parsed = {}
    for (i, j), (value, lineno) in entries.items():
        if j >= dim:
            raise ParseError(f"line {lineno}: index out of range for dim {dim}")
        try:
            parsed[i, j] = table.parse(value)
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return MetricSpec.from_entries(coords, parsed, name=name)


def format_metric(m: MetricSpec) -> str:
    lines = [f"dim = {m.dim}", f"coords = {','.join(m.coords)}"]
    for i in range(m.dim):
        for j in range(i, m.dim):
            if m.g[i][j]:
                lines.append(f"g[{i}][{j}] = {m.g[i][j]}")
    return "\n".join(lines) + "\n"


class Curvature:
    """Lazily computed curvature data of one metric, shared between operators."""

    def __init__(self, metric: MetricSpec):
        self.metric = metric

    @cached_property
    def christoffel_first(self) -> TensorField:
        return christoffel_first(self.metric)

    @cached_property
    def christoffel_second(self) -> TensorField:
        return christoffel_second(self.metric, self.christoffel_first)

    @cached_property
    def riemann(self) -> TensorField:
        return riemann(self.metric, self.christoffel_first, self.christoffel_second)

    @cached_property
    def nabla_riemann(self) -> TensorField:
        return covariant_derivative_riemann(self.metric, self.riemann, self.christoffel_second)

    @cached_property
    def ricci(self) -> TensorField:
        return ricci_tensor(self.metric, self.riemann)


@lru_cache(maxsize=64)
def curvature(m: MetricSpec) -> Curvature:
    return Curvature(m)
