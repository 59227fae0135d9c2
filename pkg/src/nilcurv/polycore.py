"""Exact sparse multivariate polynomials with rational coefficients.

A :class:`Polynomial` is a map from exponent vectors to nonzero
:class:`fractions.Fraction` coefficients over a fixed :class:`VarTable`.
Values are immutable; every arithmetic result is returned in canonical form
(no zero coefficients stored), so structural equality is mathematical
equality.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "Role",
    "VarTable",
    "Polynomial",
    "ParseError",
    "VarTableMismatch",
    "poly_parse",
    "poly_add",
    "poly_mul",
    "poly_diff",
    "poly_substitute",
    "render",
]

Scalar = Union[int, Fraction]


class Role(str, enum.Enum):
    COORDINATE = "coordinate"
    DIRECTION = "direction-component"
    AUXILIARY = "auxiliary"


class VarTableMismatch(ValueError):
    """Raised when polynomials over different variable tables are combined."""


class ParseError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        super().__init__(message if pos is None else f"{message} at position {pos}")
        self.pos = pos


_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class VarTable:
    """Ordered, duplicate-free list of variable names with roles.

    The order is fixed at creation and defines the monomial order.
    """

    names: tuple[str, ...]
    roles: tuple[Role, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        names = tuple(self.names)
        roles = tuple(Role(r) for r in self.roles)
        if len(names) != len(roles):
            raise ValueError("names and roles differ in length")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        for n in names:
            if not _IDENT.match(n):
                raise ValueError(f"invalid identifier {n!r}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @classmethod
    def of(cls, names: Iterable[str], role: Role = Role.COORDINATE) -> "VarTable":
        names = tuple(names)
        return cls(names, (role,) * len(names))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def with_role(self, role: Role) -> tuple[str, ...]:
        return tuple(n for n, r in zip(self.names, self.roles) if r is role)

    def extend(self, names: Iterable[str], role: Role) -> "VarTable":
        names = tuple(names)
        return VarTable(self.names + names, self.roles + (role,) * len(names))

    def is_prefix_of(self, other: "VarTable") -> bool:
        n = len(self.names)
        return other.names[:n] == self.names and other.roles[:n] == self.roles

    def fresh(self, stem: str) -> str:
        """Return ``stem`` or ``stem_k``, whichever is first not in the table."""
        if stem not in self._index:
            return stem
        k = 1
        while f"{stem}_{k}" in self._index:
            k += 1
        return f"{stem}_{k}"

    # convenience constructors
    def var(self, name: str) -> "Polynomial":
        e = [0] * len(self.names)
        e[self.index(name)] = 1
        return Polynomial(self, {tuple(e): Fraction(1)})

    def const(self, c: Scalar) -> "Polynomial":
        return Polynomial.constant(self, c)

    def zero(self) -> "Polynomial":
        return Polynomial(self, {})

    def one(self) -> "Polynomial":
        return Polynomial.constant(self, 1)

    def parse(self, text: str) -> "Polynomial":
        return poly_parse(text, self)


def _add_exp(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class Polynomial:
    __slots__ = ("table", "terms", "_hash")

    def __init__(self, table: VarTable, terms: Mapping[tuple, Scalar] | None = None):
        self.table = table
        clean: dict[tuple, Fraction] = {}
        if terms:
            n = len(table)
            for e, c in terms.items():
                if c:
                    if len(e) != n:
                        raise ValueError("exponent vector length does not match table")
                    clean[tuple(e)] = c if isinstance(c, Fraction) else Fraction(c)
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, table: VarTable, terms: dict) -> "Polynomial":
        # trusted path: terms already canonical
        p = object.__new__(cls)
        p.table = table
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, table: VarTable, c: Scalar) -> "Polynomial":
        c = Fraction(c)
        if not c:
            return cls._raw(table, {})
        return cls._raw(table, {(0,) * len(table): c})

    # ---------------------------------------------------------------- queries
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> Fraction:
        """Coefficient of the constant monomial."""
        return self.terms.get((0,) * len(self.table), Fraction(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, names: Iterable[str]) -> int:
        idx = [self.table.index(n) for n in names]
        return max((sum(e[i] for i in idx) for e in self.terms), default=-1)

    def variables(self) -> tuple[str, ...]:
        used = [False] * len(self.table)
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used[i] = True
        return tuple(n for n, u in zip(self.table.names, used) if u)

    def is_homogeneous_in(self, names: Iterable[str], degree: int) -> bool:
        idx = [self.table.index(n) for n in names]
        return all(sum(e[i] for i in idx) == degree for e in self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[tuple, Fraction]]:
        return iter(sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True))

    # ------------------------------------------------------------- arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.table is not self.table and other.table != self.table:
                raise VarTableMismatch(
                    f"variable tables differ: {self.table.names} vs {other.table.names}"
                )
            return other
        if isinstance(other, (int, Rational)):
            return Polynomial.constant(self.table, Fraction(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e)
            if s is None:
                out[e] = c
            else:
                s += c
                if s:
                    out[e] = s
                else:
                    del out[e]
        return Polynomial._raw(self.table, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.table, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, Polynomial):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.terms or not other.terms:
            return Polynomial._raw(self.table, {})
        a, b = self.terms, other.terms
        if len(a) < len(b):
            a, b = b, a
        out: dict[tuple, Fraction] = {}
        get = out.get
        for eb, cb in b.items():
            for ea, ca in a.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = get(e)
                out[e] = ca * cb if s is None else s + ca * cb
        return Polynomial._raw(self.table, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def scale(self, c: Scalar) -> "Polynomial":
        c = Fraction(c)
        if not c:
            return Polynomial._raw(self.table, {})
        if c == 1:
            return self
        return Polynomial._raw(self.table, {e: v * c for e, v in self.terms.items()})

    def __truediv__(self, c):
        if isinstance(c, Polynomial):
            if not c.is_constant() or c.is_zero():
                raise ZeroDivisionError("division only by nonzero constants")
            c = c.constant_value()
        return self.scale(1 / Fraction(c))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.constant(self.table, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.table == other.table and self.terms == other.terms
        if isinstance(other, (int, Rational)):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.table.names, frozenset(self.terms.items())))
        return self._hash

    # ----------------------------------------------------------- operations
    def diff(self, name: str) -> "Polynomial":
        i = self.table.index(name)
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                out[e[:i] + (k - 1,) + e[i + 1:]] = c * k
        return Polynomial._raw(self.table, out)

    def lift(self, table: VarTable) -> "Polynomial":
        """Embed into ``table``, which must extend this polynomial's table."""
        if table == self.table:
            return self
        if not self.table.is_prefix_of(table):
            raise VarTableMismatch("target table does not extend the source table")
        pad = (0,) * (len(table) - len(self.table))
        return Polynomial._raw(table, {e + pad: c for e, c in self.terms.items()})

    def restrict(self, table: VarTable) -> "Polynomial":
        """Inverse of :meth:`lift`; fails if a dropped variable is used."""
        if not table.is_prefix_of(self.table):
            raise VarTableMismatch("target table is not a prefix of the source table")
        n = len(table)
        out = {}
        for e, c in self.terms.items():
            if any(e[n:]):
                raise ValueError("polynomial depends on variables outside the target table")
            out[e[:n]] = c
        return Polynomial._raw(table, out)

    def substitute(self, bindings: Mapping[str, Union[Scalar, "Polynomial"]]) -> "Polynomial":
        """Simultaneous substitution; unbound variables survive."""
        if not bindings:
            return self
        slots = []
        for name, value in bindings.items():
            i = self.table.index(name)
            if isinstance(value, Polynomial):
                if value.table != self.table:
                    raise VarTableMismatch("binding lives over a different table")
            else:
                value = Fraction(value)
            slots.append((i, value))
        bound = {i for i, _ in slots}
        all_scalar = all(not isinstance(v, Polynomial) for _, v in slots)
        powers: dict[tuple[int, int], object] = {}

        def power(i, v, k):
            key = (i, k)
            r = powers.get(key)
            if r is None:
                r = v ** k
                powers[key] = r
            return r

        if all_scalar:
            out: dict[tuple, Fraction] = {}
            for e, c in self.terms.items():
                coef = c
                for i, v in slots:
                    k = e[i]
                    if k:
                        coef *= power(i, v, k)
                        if not coef:
                            break
                if not coef:
                    continue
                rest = tuple(0 if j in bound else k for j, k in enumerate(e))
                s = out.get(rest)
                out[rest] = coef if s is None else s + coef
            return Polynomial._raw(self.table, {e: c for e, c in out.items() if c})

        result = Polynomial._raw(self.table, {})
        for e, c in self.terms.items():
            rest = tuple(0 if j in bound else k for j, k in enumerate(e))
            term = Polynomial._raw(self.table, {rest: c})
            for i, v in slots:
                k = e[i]
                if k:
                    pv = power(i, v, k)
                    term = term * pv if isinstance(pv, Polynomial) else term.scale(pv)
            result = result + term
        return result

    def evaluate(self, values: Mapping[str, Scalar]) -> Fraction:
        """Full evaluation to a rational; every used variable must be bound."""
        idx = []
        for i, n in enumerate(self.table.names):
            if n in values:
                idx.append((i, Fraction(values[n])))
        bound = {i for i, _ in idx}
        total = Fraction(0)
        for e, c in self.terms.items():
            for j, k in enumerate(e):
                if k and j not in bound:
                    raise ValueError(f"variable {self.table.names[j]!r} is not bound")
            v = c
            for i, x in idx:
                k = e[i]
                if k:
                    v *= x ** k
            total += v
        return total

    # ----------------------------------------------------------- rendering
    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Polynomial({render(self)!r})"


def _grlex_key(e: tuple) -> tuple:
    return (sum(e), e)


# ---------------------------------------------------------------- functional API
def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    if p.table != q.table:
        raise VarTableMismatch("variable tables differ")
    return p + q


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    if p.table != q.table:
        raise VarTableMismatch("variable tables differ")
    return p * q


def poly_diff(p: Polynomial, var: str) -> Polynomial:
    return p.diff(var)


def poly_substitute(p: Polynomial, bindings: Mapping[str, Union[Scalar, Polynomial]]) -> Polynomial:
    return p.substitute(bindings)


def _fmt_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def render(p: Polynomial) -> str:
    """Deterministic text form, terms in descending graded-lex order.

    The output is accepted by :func:`poly_parse` and parses back to ``p``.
    """
    if not p.terms:
        return "0"
    names = p.table.names
    pieces = []
    for e, c in p:
        mono = "*".join(
            names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
        )
        mag = abs(c)
        if not mono:
            body = _fmt_rational(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_fmt_rational(mag)}*{mono}"
        if not pieces:
            pieces.append(("-" if c < 0 else "") + body)
        else:
            pieces.append(("- " if c < 0 else "+ ") + body)
    return " ".join(pieces)


# --------------------------------------------------------------------- parser
_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, table: VarTable):
        self.toks = _tokenize(text)
        self.i = 0
        self.table = table

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Polynomial:
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return p

    def expr(self) -> Polynomial:
        acc = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                acc = acc + rhs if val == "+" else acc - rhs
            else:
                return acc

    def term(self) -> Polynomial:
        acc = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.factor()
            else:
                return acc

    def factor(self) -> Polynomial:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            # unary minus binds looser than '^': -u^2 == -(u^2)
            self.take()
            return -self.factor()
        b = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "int":
                raise ParseError("exponent must be a nonnegative integer literal", pos)
            return b ** int(val)
        return b

    def base(self) -> Polynomial:
        kind, val, pos = self.take()
        if kind == "int":
            num = int(val)
            k2, v2, _ = self.peek()
            if k2 == "op" and v2 == "/":
                self.take()
                k3, v3, p3 = self.take()
                if k3 != "int":
                    raise ParseError("expected unsigned integer denominator", p3)
                den = int(v3)
                if den == 0:
                    raise ParseError("zero denominator", p3)
                return Polynomial.constant(self.table, Fraction(num, den))
            return Polynomial.constant(self.table, num)
        if kind == "ident":
            if val not in self.table:
                raise ParseError(f"unknown identifier {val!r}", pos)
            return self.table.var(val)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "op" and val == "-":
            return -self.base()
        raise ParseError(f"unexpected token {val or 'end of input'!r}", pos)


def poly_parse(text: str, vars: VarTable) -> Polynomial:
    """Parse ``text`` into a canonical polynomial over ``vars``.

    Grammar::

        expr     := term (('+'|'-') term)*
        term     := factor ('*' factor)*
        factor   := '-' factor | base ('^' uint)?
        base     := rational | identifier | '(' expr ')'
        rational := uint ('/' uint)?
    """
    return _Parser(text, vars).parse()
