"""Exterior algebra invariants: d^2 = 0, antisymmetry, Leibniz."""

import random
from fractions import Fraction

import pytest

from folia import InputError, Poly, parse_poly
from folia.forms import DifferentialForm, d_poly, dual_field, pq_form


def _rand_poly(rng, vs, terms=4, deg=3):
    t = {}
    for _ in range(rng.randint(0, terms)):
        exps = tuple(rng.randint(0, deg) for _ in vs)
        t[exps] = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
    return Poly(vs, t)


def _rand_one_form(rng, vs):
    return DifferentialForm.one_form([_rand_poly(rng, vs) for _ in vs])


def test_d_squared_is_zero():
    rng = random.Random(1311)
    for vs in [("x", "y"), ("x1", "x2", "x3")]:
        for _ in range(20):
            f = _rand_poly(rng, vs)
            assert DifferentialForm.function(f).exterior_d().exterior_d().is_zero
            w = _rand_one_form(rng, vs)
            assert w.exterior_d().exterior_d().is_zero


def test_wedge_antisymmetry_and_self_annihilation():
    rng = random.Random(7077)
    vs = ("x1", "x2", "x3")
    for _ in range(20):
        a = _rand_one_form(rng, vs)
        b = _rand_one_form(rng, vs)
        assert a.wedge(b) == -(b.wedge(a))
        assert a.wedge(a).is_zero


def test_d_is_antiderivation_on_function_times_form():
    # d(f w) = df ^ w + f dw for a function f and 1-form w
    rng = random.Random(2024)
    vs = ("x", "y", "z")
    for _ in range(15):
        f = _rand_poly(rng, vs)
        w = _rand_one_form(rng, vs)
        left = (w * f).exterior_d()
        right = d_poly(f).wedge(w) + w.exterior_d() * f
        assert left == right


def test_plane_conventions():
    vs = ("x", "y")
    p = parse_poly("y", vs)       # X = (y, -x): clockwise circles
    q = parse_poly("-x", vs)
    w = pq_form(p, q)
    # omega = P dy - Q dx = y dy + x dx = d((x^2+y^2)/2)
    f = parse_poly("1/2*x^2 + 1/2*y^2", vs)
    assert w == d_poly(f)
    assert dual_field(w) == (p, q)
    # omega annihilates its dual field
    assert w.contract([p, q]).comps == {}


def test_contract_is_alternating_on_two_forms():
    vs = ("x", "y", "z")
    rng = random.Random(99)
    w = _rand_one_form(rng, vs)
    dw = w.exterior_d()
    fld = [_rand_poly(rng, vs) for _ in vs]
    # i_X i_X = 0
    assert dw.contract(fld).contract(fld).is_zero if dw.degree == 2 else True


def test_integrability_obstruction_dimension_three():
    vs = ("x1", "x2", "x3")
    x1 = Poly.variable(vs, "x1")
    x2 = Poly.variable(vs, "x2")
    x3 = Poly.variable(vs, "x3")
    # omega = d(x1 x2 x3) is integrable: omega ^ d omega = 0 (d omega = 0)
    w = d_poly(x1 * x2 * x3)
    assert w.exterior_d().is_zero
    assert w.wedge(w.exterior_d()).is_zero
    # omega = x2 dx1 + dx2 + dx3 is a contact-like form: obstruction nonzero
    one = Poly.constant(vs, 1)
    zero = Poly.zero(vs)
    w2 = DifferentialForm.one_form([x2, one, one])
    obstruction = w2.wedge(w2.exterior_d())
    assert not obstruction.is_zero
    assert obstruction.coeff(0, 1, 2) == -one


def test_degree_bookkeeping_errors():
    vs = ("x", "y")
    w = DifferentialForm.one_form([Poly.variable(vs, "x"), Poly.zero(vs)])
    with pytest.raises(InputError):
        DifferentialForm(vs, 3, {})
    with pytest.raises(InputError):
        w + DifferentialForm.zero(vs, 2)
    with pytest.raises(InputError):
        w * w  # products of forms go through wedge()
    # wedge beyond the dimension collapses to the zero top form
    top = w.wedge(w.exterior_d())
    assert top.is_zero and top.degree == 2
