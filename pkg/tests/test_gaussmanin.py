import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from folia import parse_poly
from folia.errors import InputError, NumericError
from folia.forms import DifferentialForm, d_poly
from folia.gaussmanin import (
    BrieskornBasis,
    basis_periods,
    brieskorn_basis,
    brieskorn_reduce,
    gelfand_leray_check,
    period_of_form,
    pf_residual,
    picard_fuchs,
)
from folia.poly import Poly
from folia.ratfunc import RatFrac, UPoly, xp_add, xp_from_fractions, xp_mul, xp_xgcd

X = ("x",)
XY = ("x", "y")


def P(s, vs=XY):
    return parse_poly(s, vs)


def form(a, b):
    return DifferentialForm.one_form([P(a), P(b)])


# ---- Picard-Fuchs connection ---------------------------------------------

def test_pf_cubic_matrix_frozen():
    conn = picard_fuchs(P("x^3 - 3*x", X))
    assert conn.size == 2
    assert conn.entry_strings() == [
        ["(-1/6*t)/(t^2 - 4)", "(1/3)/(t^2 - 4)"],
        ["(-1/3)/(t^2 - 4)", "(1/6*t)/(t^2 - 4)"],
    ]
    cv = sorted(conn.critical_values, key=lambda z: z.real)
    assert abs(cv[0] + 2.0) <= 1e-10 and abs(cv[1] - 2.0) <= 1e-10


def test_pf_cubic_residual():
    conn = picard_fuchs(P("x^3 - 3*x", X))
    assert pf_residual(conn, [0.0, 1.0, 3j]) < 1e-5


def test_pf_quartic_residual():
    conn = picard_fuchs(P("x^4 + x^3 - 4*x", X))
    assert pf_residual(conn, [0.0, 2.0]) < 1e-5


def test_pf_regular_at_noncritical_t():
    conn = picard_fuchs(P("x^5 - 5*x", X))
    assert conn.size == 4
    vals = conn.evaluate(10.0)
    assert vals.shape == (4, 4) and np.all(np.isfinite(vals))
    with pytest.raises(NumericError, match="pole"):
        conn.evaluate(conn.critical_values[0])


def test_pf_quadratic_connection_vanishes():
    # oint dx/y around both branch points of x^2 - 1 + t is 2 pi i for
    # every t, so the 1x1 connection is identically zero
    conn = picard_fuchs(P("x^2 - 1", X))
    assert conn.entry_strings() == [["0"]]


def test_pf_rejections():
    with pytest.raises(InputError, match="non-generic"):
        picard_fuchs(P("x^4 - 2*x^2", X))
    with pytest.raises(InputError):
        picard_fuchs(P("x + 1", X))
    with pytest.raises(InputError):
        picard_fuchs(P("x*y"))


def test_periods_match_quadpack():
    # real oval of y^2 = x^3 - 3x over [-sqrt(3), 0]; QUADPACK handles the
    # inverse-square-root endpoints through the algebraic weight
    s3 = math.sqrt(3.0)
    i0, _ = quad(lambda x: (s3 - x) ** -0.5, -s3, 0.0,
                 weight="alg", wvar=(-0.5, -0.5))
    i1, _ = quad(lambda x: -((s3 - x) ** -0.5), -s3, 0.0,
                 weight="alg", wvar=(-0.5, 0.5))
    per = basis_periods(P("x^3 - 3*x", X), 0.0, pair=0)
    assert abs(per[0] - 2.0 * i0) <= 1e-10
    assert abs(per[1] - 2.0 * i1) <= 1e-10
    assert abs(per[0].imag) <= 1e-12 and abs(per[1].imag) <= 1e-12


# ---- Gelfand-Leray --------------------------------------------------------

def test_gl_identity_three_systems():
    circle = P("1/2*x^2 + 1/2*y^2")
    assert gelfand_leray_check(circle, form("0", "x"),
                               [0.2, 0.5, 0.9]) < 1e-5
    elliptic = P("y^2 - x^3 + 3*x")
    assert gelfand_leray_check(elliptic, form("x*y", "0"),
                               [-1.9, -1.5, -1.0],
                               center=(-1.0, 0.0)) < 1e-5
    cubic = P("1/2*x^2 + 1/2*y^2 - 1/3*x^3")
    assert gelfand_leray_check(cubic, form("-y", "x^2"),
                               [0.02, 0.05, 0.1]) < 1e-5


def test_gl_tight_on_circle():
    circle = P("1/2*x^2 + 1/2*y^2")
    assert gelfand_leray_check(circle, form("0", "x"), [0.3, 0.7]) < 1e-8


def test_gl_exact_form_gives_zero():
    circle = P("1/2*x^2 + 1/2*y^2")
    err = gelfand_leray_check(circle, d_poly(P("x^3*y + x*y^2")), [0.3, 0.7])
    assert err == 0.0


# ---- Brieskorn reduction ---------------------------------------------------

def T(s):
    return parse_poly(s, ("t",))


def test_brieskorn_basis_shapes():
    for m in range(2, 7):
        b = brieskorn_basis(m)
        assert len(b.forms) == m - 1
        assert len(b.labels) == m - 1
    b3 = brieskorn_basis(3)
    assert b3.labels == ("y*dx", "x*y*dx")
    assert str(b3.f) in ("-x^3 + y^2", "y^2 - x^3")


def test_brieskorn_frozen_reductions():
    b = brieskorn_basis(3)
    cases = [
        (form("x^3*y", "0"), ("-2/11*t", "0")),
        (form("y^3", "0"), ("9/11*t", "0")),
        (form("0", "x^2"), ("0", "-2")),
        (form("x*y^3", "-x^2*y"), ("0", "9/13*t")),
    ]
    for w, expect in cases:
        got = brieskorn_reduce(b, w)
        assert tuple(str(q) for q in got) == expect

    b5 = brieskorn_basis(5)
    got = brieskorn_reduce(b5, form("x^7*y", "0"))
    assert tuple(str(q) for q in got) == ("0", "0", "-2/7*t", "0")


def _random_poly(rng, max_deg=4):
    terms = {}
    for _ in range(6):
        i, j = rng.randint(0, max_deg), rng.randint(0, max_deg)
        c = rng.randint(-5, 5)
        if c:
            terms[(i, j)] = terms.get((i, j), 0) + c
    return Poly(XY, terms)


def test_brieskorn_kernel_contains_exact_and_df_multiples():
    rng = random.Random(4)
    b = brieskorn_basis(3)
    df = d_poly(b.f)
    for _ in range(50):
        g = _random_poly(rng)
        assert all(q.is_zero for q in brieskorn_reduce(b, d_poly(g)))
        assert all(q.is_zero for q in brieskorn_reduce(b, df * g))


def test_brieskorn_reduction_is_module_map():
    rng = random.Random(11)
    tmul = Poly(("t",), {(1,): 1})
    for m in (3, 4):
        b = brieskorn_basis(m)
        for _ in range(25):
            w = DifferentialForm.one_form(
                [_random_poly(rng), _random_poly(rng)]
            )
            lifted = brieskorn_reduce(b, w * b.f)
            plain = brieskorn_reduce(b, w)
            assert all((a - tmul * q).is_zero for a, q in zip(lifted, plain))


def test_brieskorn_period_identity():
    # numeric periods on y^2 = x^3 + t must satisfy the reduced identity
    b = brieskorn_basis(3)
    p = P("x^3", X)
    t = 1.0
    per = [period_of_form(p, w, t, pair=0) for w in b.forms]
    for w in [form("x^3*y", "0"), form("y^3", "0"), form("0", "x^2"),
              form("x*y^3", "-x^2*y")]:
        vec = brieskorn_reduce(b, w)
        lhs = period_of_form(p, w, t, pair=0)
        rhs = sum(complex(q.compiled()(t)) * per[a] for a, q in enumerate(vec))
        assert abs(lhs - rhs) <= 1e-6 * max(abs(lhs), abs(rhs), 1.0)


def test_brieskorn_rejections():
    with pytest.raises(InputError):
        brieskorn_basis(1)
    b = brieskorn_basis(3)
    with pytest.raises(InputError):
        brieskorn_reduce(b, DifferentialForm.function(P("x")))
    with pytest.raises(InputError, match="variables"):
        other = DifferentialForm.one_form([parse_poly("u", ("u", "v")),
                                           parse_poly("0", ("u", "v"))])
        brieskorn_reduce(b, other)


# ---- exact rational arithmetic ---------------------------------------------

def _random_upoly(rng, deg):
    return UPoly([Fraction(rng.randint(-6, 6), rng.randint(1, 4))
                  for _ in range(deg + 1)])


def test_upoly_division_property():
    rng = random.Random(7)
    for _ in range(30):
        a = _random_upoly(rng, rng.randint(0, 6))
        b = _random_upoly(rng, rng.randint(0, 4))
        if b.is_zero:
            continue
        q, r = divmod(a, b)
        assert q * b + r == a
        assert r.is_zero or r.degree < b.degree


def test_xp_xgcd_bezout():
    rng = random.Random(9)
    for _ in range(15):
        a = xp_from_fractions([Fraction(rng.randint(-4, 4)) for _ in range(4)])
        b = xp_from_fractions([Fraction(rng.randint(-4, 4)) for _ in range(3)])
        if not a or not b:
            continue
        g, u, v = xp_xgcd(a, b)
        assert xp_add(xp_mul(u, a), xp_mul(v, b)) == g
        assert g and g[-1] == RatFrac.one()


def test_ratfrac_field_identities():
    n = UPoly([1, 2])          # 1 + 2t
    d = UPoly([-4, 0, 1])      # t^2 - 4
    r = RatFrac(n, d)
    assert (r / r) == RatFrac.one()
    assert (r - r).is_zero
    assert r.diff() == RatFrac(n.diff() * d - n * d.diff(), d * d)
    assert r.to_str() == "(2*t + 1)/(t^2 - 4)"
    assert r.eval_exact(Fraction(0)) == Fraction(-1, 4)
    with pytest.raises(ZeroDivisionError):
        r.eval_exact(Fraction(2))
