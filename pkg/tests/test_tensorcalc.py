import itertools
import random

import pytest
from hypothesis import given, strategies as st

from nilcurv.families import make_gf
from nilcurv.polycore import ParseError, Polynomial, VarTable
from nilcurv.tensorcalc import (
    DegenerateMetricError,
    MetricError,
    MetricSpec,
    NonConstantDeterminantError,
    bianchi_second_defects,
    christoffel_first,
    christoffel_second,
    congruence_signature,
    covariant_derivative_riemann,
    format_metric,
    inverse_metric,
    mat_mul,
    metric_covariant_derivative,
    parse_metric_text,
    ricci_tensor,
    riemann,
    riemann_shortcut,
    riemann_symmetry_defects,
    signature,
)

from conftest import U, V, X, Y


def _z2_orbit(x, a, b, y, value):
    """Index/value pairs obtained from R(x,a,b,y) by the two antisymmetries."""
    return {(x, a, b, y): value, (a, x, y, b): value, (a, x, b, y): -value, (x, a, y, b): -value}


def _identity(n):
    return MetricSpec.from_entries(tuple(f"c{i}" for i in range(n)), {(i, i): 1 for i in range(n)})


# ----------------------------------------------------------------- inverse
def test_inverse_g2_is_dual_basis(g2):
    # dual basis {Y, V, U, X - fY} read as rows of the inverse metric
    f = g2.g[X][X]
    t = g2.table
    dual = [
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [t.one(), t.zero(), t.zero(), -f],
    ]
    ginv = inverse_metric(g2)
    for i, j in itertools.product(range(4), repeat=2):
        assert ginv[i, j] == dual[i][j]
    assert ginv[Y, Y] == t.parse("1/3*u^3")
    assert ginv.variance == ("contra", "contra")


@pytest.mark.parametrize("n", [1, 3, 5])
def test_inverse_identity_metric(n):
    m = _identity(n)
    assert all(m.ginv[i][j] == int(i == j) for i in range(n) for j in range(n))


def test_nonconstant_determinant_rejected():
    with pytest.raises(NonConstantDeterminantError) as exc:
        MetricSpec.from_entries(("u", "w"), {(0, 0): "u", (1, 1): 1})
    assert str(exc.value.determinant) == "u"


def test_degenerate_rejected():
    with pytest.raises(DegenerateMetricError):
        MetricSpec.from_entries(("u", "w"), {(0, 0): 1, (0, 1): 1, (1, 1): 1})


def test_asymmetric_rejected():
    t = VarTable.of(("a", "b"))
    with pytest.raises(MetricError):
        MetricSpec(("a", "b"), ((t.one(), t.var("a")), (t.zero(), t.one())), table=t)


def test_g_times_ginv_is_identity(g3):
    prod = mat_mul(g3.g, g3.ginv)
    assert all(prod[i][j] == int(i == j) for i in range(5) for j in range(5))


# --------------------------------------------------------------- signature
def test_signature_examples(g2, g3):
    assert signature(g2) == (2, 2)
    assert signature(g3) == (2, 3)
    m = MetricSpec.from_entries(("a", "b"), {(0, 0): 1, (1, 1): -1})
    assert signature(m) == (1, 1)


def test_congruence_handles_zero_diagonal():
    assert congruence_signature([[0, 1], [1, 0]]) == (1, 1, 0)
    assert congruence_signature([[0, 0], [0, 0]]) == (0, 0, 2)
    assert congruence_signature([[2, 1, 0], [1, 2, 0], [0, 0, -3]]) == (1, 2, 0)


@given(st.lists(st.integers(-3, 3), min_size=9, max_size=9), st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=3))
def test_congruence_signature_sylvester(pvals, d):
    # P^T D P has the inertia of D whenever P is invertible
    p = [pvals[0:3], pvals[3:6], pvals[6:9]]
    det = (
        p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[2][1])
        - p[0][1] * (p[1][0] * p[2][2] - p[1][2] * p[2][0])
        + p[0][2] * (p[1][0] * p[2][1] - p[1][1] * p[2][0])
    )
    if det == 0:
        return
    a = [[sum(p[k][i] * d[k] * p[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    assert congruence_signature(a) == (d.count(-1), d.count(1), 0)


# -------------------------------------------------------------- christoffel
def test_christoffel_first_g2(g2):
    gam = christoffel_first(g2)
    t = g2.table
    assert gam[U, X, X] == t.parse("-1/2*u^2")
    assert gam[X, U, X] == t.parse("-1/2*u^2")
    assert gam[X, X, U] == t.parse("1/2*u^2")
    assert set(gam.comps) == {(U, X, X), (X, U, X), (X, X, U)}


def test_christoffel_first_g3(g3):
    # frame (x, t, u, v, y); f = -t u^2 so d_t f = -u^2 and d_u f = -2 t u
    gam = christoffel_first(g3)
    t = g3.table
    assert gam[1, 0, 0] == t.parse("-1/2*u^2")
    assert gam[2, 0, 0] == t.parse("-t*u")
    assert gam[0, 0, 1] == t.parse("1/2*u^2")


def test_christoffel_flat_is_zero(flat4):
    assert christoffel_first(flat4).is_zero()
    assert christoffel_second(flat4).is_zero()


def test_christoffel_second_g2(g2):
    gam = christoffel_second(g2)
    t = g2.table
    assert gam[U, X, Y] == t.parse("-1/2*u^2")
    assert gam[X, U, Y] == t.parse("-1/2*u^2")
    assert gam[X, X, V] == t.parse("1/2*u^2")
    assert set(gam.comps) == {(U, X, Y), (X, U, Y), (X, X, V)}


def test_christoffel_second_symmetric_in_lower_slots(g3):
    gam = christoffel_second(g3)
    for i, j, k in itertools.product(range(5), repeat=3):
        assert gam[i, j, k] == gam[j, i, k]


# ----------------------------------------------------------------- riemann
def test_riemann_g2_closed_form(g2):
    t = g2.table
    assert riemann(g2).nonzero() == _z2_orbit(X, U, U, X, t.parse("u"))


def test_riemann_osserman2(gt2):
    assert riemann(gt2).nonzero() == _z2_orbit(X, U, U, X, gt2.table.one())


def test_riemann_flat(flat4):
    assert riemann(flat4).is_zero()


# -------------------------------------------------------- covariant derivative
def test_nabla_riemann_g2(g2):
    one = g2.table.one()
    expect = {k + (U,): v for k, v in _z2_orbit(X, U, U, X, one).items()}
    assert covariant_derivative_riemann(g2).nonzero() == expect


def test_nabla_riemann_g3(g3):
    xx, tt, uu = 0, 1, 2
    one = g3.table.one()
    expect = {}
    expect.update({k + (tt,): v for k, v in _z2_orbit(xx, uu, uu, xx, one).items()})
    expect.update({k + (uu,): v for k, v in _z2_orbit(xx, uu, tt, xx, one).items()})
    expect.update({k + (uu,): v for k, v in _z2_orbit(xx, tt, uu, xx, one).items()})
    dr = covariant_derivative_riemann(g3)
    assert dr[xx, uu, uu, xx, tt] == 1
    assert dr[xx, uu, tt, xx, uu] == 1
    assert dr.nonzero() == expect


def test_nabla_riemann_vanishes_for_quadratic_f(gt2):
    assert covariant_derivative_riemann(gt2).is_zero()


# -------------------------------------------------------------------- ricci
def test_ricci_g2_vanishes(g2):
    assert ricci_tensor(g2).is_zero()


def test_ricci_single_u_variable():
    t = VarTable.of(("u",))
    m = make_gf(t.parse("-u^2"), [[1]])
    rho = ricci_tensor(m)
    assert rho.nonzero() == {(0, 0): m.table.one()}


def test_ricci_flat(flat4):
    assert ricci_tensor(flat4).is_zero()


# ---------------------------------------------------- random metric identities
def _random_metric(seed: int, n: int = 3) -> MetricSpec:
    """``P^T D P`` with ``P`` unit upper triangular over polynomials: det = det D."""
    rng = random.Random(seed)
    coords = tuple(f"c{i}" for i in range(n))
    t = VarTable.of(coords)
    p = [[t.zero()] * n for _ in range(n)]
    for i in range(n):
        p[i][i] = t.one()
        for j in range(i + 1, n):
            e = [0] * n
            e[rng.randrange(n)] = rng.randint(0, 2)
            p[i][j] = Polynomial(t, {tuple(e): rng.randint(-2, 2)})
    d = [rng.choice((-1, 1)) for _ in range(n)]
    g = [[sum((p[k][i] * p[k][j] * d[k] for k in range(n)), t.zero()) for j in range(n)] for i in range(n)]
    return MetricSpec(coords, tuple(map(tuple, g)), table=t)


@pytest.mark.parametrize("seed", range(6))
def test_identities_on_random_metrics(seed):
    m = _random_metric(seed)
    assert all(e == int(i == j) for i, row in enumerate(mat_mul(m.g, m.ginv)) for j, e in enumerate(row))
    assert metric_covariant_derivative(m).is_zero()
    r = riemann(m)
    assert riemann_symmetry_defects(r) == []
    assert bianchi_second_defects(covariant_derivative_riemann(m)) == []
    rho = ricci_tensor(m)
    assert all(rho[i, j] == rho[j, i] for i in range(3) for j in range(3))


def test_literal_shortcut_formula_is_not_a_tensor_in_general():
    m = MetricSpec.from_entries(("a", "b"), {(0, 0): 1, (0, 1): "a*b", (1, 1): "1 + a^2*b^2"})
    assert riemann_symmetry_defects(riemann(m)) == []
    assert riemann_symmetry_defects(riemann_shortcut(m)) != []


def test_literal_shortcut_formula_agrees_on_gf(g2, g3, gt2):
    for m in (g2, g3, gt2):
        assert riemann_shortcut(m) == riemann(m)


# -------------------------------------------------------------- text format
G2_TEXT = """\
# g_2
dim = 4
coords = x,u,v,y
g[0][0] = -1/3*u^3
g[0][3] = 1
g[1][2] = 1
"""


def test_parse_metric_text(g2):
    m = parse_metric_text(G2_TEXT)
    assert m == g2


def test_format_roundtrip(g3):
    assert parse_metric_text(format_metric(g3)) == g3


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("dim = 2\ncoords = a,b\ng[1][0] = 1\n", "line 3: entries must satisfy i <= j"),
        ("dim = 2\ncoords = a\n", "coords lists 1 names"),
        ("dim = 2\ncoords = a,b\ng[0][0] = c\n", "line 3: unknown identifier 'c'"),
        ("dim = 2\ncoords = a,b\nbogus\n", "line 3: expected 'key = value'"),
        ("coords = a,b\n", "missing"),
        ("dim = 2\ncoords = a,b\ng[0][5] = 1\n", "line 3: index out of range"),
    ],
)
def test_parse_metric_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_metric_text(text)


def test_parse_metric_rejects_nonconstant_det():
    with pytest.raises(NonConstantDeterminantError):
        parse_metric_text("dim = 2\ncoords = u,w\ng[0][0] = u\ng[1][1] = 1\n")
