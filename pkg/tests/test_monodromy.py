import math
import random

import pytest

from folia import parse_poly
from folia.errors import InputError
from folia.monodromy import (
    build_model,
    chain_intersection,
    cycle_at_infinity,
    hermite_basis,
    monodromy_generators,
    orbit_ball,
    orbit_span,
    twist_matrix,
)
from folia.poly import GaussianRational, Poly

X = ("x",)


def P(s):
    return parse_poly(s, X)


def mat_vec(m, v):
    return tuple(sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m)))


def mat_mul(a, b):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def preserves_pairing(m, s):
    n = len(s)
    for i in range(n):
        for j in range(n):
            lhs = sum(m[a][i] * s[a][b] * m[b][j] for a in range(n) for b in range(n))
            if lhs != s[i][j]:
                return False
    return True


def random_real_poly(rng, deg):
    terms = {(deg,): rng.choice([1, 2, -1, 3])}
    for k in range(deg):
        c = rng.randint(-6, 6)
        if c and rng.random() < 0.8:
            terms[(k,)] = c
    return Poly(X, terms)


# ---- the depressed cubic, worked by hand ------------------------------------

def test_cubic_critical_values():
    m = build_model(P("x^3 - 3*x"))
    cv = sorted(m.critical_values, key=lambda z: z.real)
    assert abs(cv[0] - (-2.0)) <= 1e-10
    assert abs(cv[1] - 2.0) <= 1e-10
    assert m.degree == 3
    assert m.lattice.rank == 2
    assert m.base < -3.0


def test_cubic_operators():
    m = build_model(P("x^3 - 3*x"))
    ops = monodromy_generators(m)
    assert [op.delta for op in ops] == [(1, 0), (0, 1)]
    assert ops[0].matrix == ((1, -1), (0, 1))
    assert ops[1].matrix == ((1, 0), (1, 1))
    # product around every critical value is the classical order-6
    # elliptic monodromy at infinity: trace 1
    prod = mat_mul(ops[1].matrix, ops[0].matrix)
    assert prod[0][0] + prod[1][1] == 1
    p6 = ((1, 0), (0, 1))
    for _ in range(6):
        p6 = mat_mul(prod, p6)
    assert p6 == ((1, 0), (0, 1))


def test_cubic_orbit_spans_lattice():
    m = build_model(P("x^3 - 3*x"))
    ops = monodromy_generators(m)
    rep = orbit_span(m, ops, (1, 0))
    assert rep.rank == 2
    assert rep.basis == ((1, 0), (0, 1))


def test_cubic_root_return():
    m = build_model(P("x^3 - 3*x"))
    for op in monodromy_generators(m):
        assert op.root_return_error <= 1e-8


# ---- rejections --------------------------------------------------------------

def test_quadratic_rejected():
    with pytest.raises(InputError, match="rank-1"):
        build_model(P("x^2 - 1"))


def test_repeated_critical_values_rejected():
    # x^4 - 2x^2 hits level -1 at both of x = 1 and x = -1
    with pytest.raises(InputError, match="critical values"):
        build_model(P("x^4 - 2*x^2"))


def test_repeated_critical_points_rejected():
    # derivative 4x^3 has a triple root
    with pytest.raises(InputError, match="critical points"):
        build_model(P("x^4 + 1"))


def test_base_must_sit_left():
    with pytest.raises(InputError, match="left"):
        build_model(P("x^3 - 3*x"), base=0.0)


def test_multivariate_rejected():
    q = parse_poly("x*y", ("x", "y"))
    with pytest.raises(InputError):
        build_model(q)


def test_complex_coefficients_rejected():
    q = Poly(X, {(3,): 1, (1,): GaussianRational(0, 1)})
    with pytest.raises(InputError, match="real"):
        build_model(q)


# ---- algebraic structure ------------------------------------------------------

def test_twist_fixes_its_own_cycle():
    s = chain_intersection(4)
    for delta in [(1, 0, 0, 0), (0, 1, -1, 0), (2, 1, 0, -1)]:
        t = twist_matrix(s, delta)
        assert mat_vec(t, delta) == delta
        assert preserves_pairing(t, s)


def test_operators_preserve_pairing_exactly():
    m = build_model(P("x^4 + x^3 - 4*x"))
    s = m.lattice.intersection
    for op in monodromy_generators(m):
        assert preserves_pairing(op.matrix, s)
        inv = op.inverse()
        assert mat_mul(op.matrix, inv) == tuple(
            tuple(1 if i == j else 0 for j in range(m.lattice.rank))
            for i in range(m.lattice.rank)
        )


def test_operator_is_twist_by_its_cycle():
    m = build_model(P("x^5 - 4*x^3 + x + 1"))
    s = m.lattice.intersection
    for op in monodromy_generators(m):
        assert op.matrix == twist_matrix(s, op.delta)


def test_cycle_at_infinity_even_degree():
    m = build_model(P("x^4 + x^3 - 4*x"))
    v = cycle_at_infinity(m)
    assert v == (1, 0, 1)
    s = m.lattice.intersection
    # lies in the kernel of the pairing, so every twist fixes it
    assert all(sum(s[i][j] * v[j] for j in range(3)) == 0 for i in range(3))
    for op in monodromy_generators(m):
        assert op(v) == v


def test_cycle_at_infinity_odd_degree():
    m = build_model(P("x^3 - 3*x"))
    assert cycle_at_infinity(m) is None


def test_orbit_rank_is_conjugation_invariant():
    m = build_model(P("x^4 + x^3 - 4*x"))
    ops = monodromy_generators(m)
    base_rank = orbit_span(m, ops, (1, 0, 0)).rank
    # push the start vector around by a generator; the reachable span
    # cannot change rank
    for op in ops:
        moved = op((1, 0, 0))
        assert orbit_span(m, ops, moved).rank == base_rank


def test_orbit_ball_contained_in_span():
    m = build_model(P("x^4 + x^3 - 4*x"))
    ops = monodromy_generators(m)
    ball = orbit_ball(ops, (1, 0, 0), word_length=3)
    assert (1, 0, 0) in ball
    rows = hermite_basis([list(v) for v in ball])
    assert len(rows) == orbit_span(m, ops, (1, 0, 0)).rank


def test_hermite_basis_shapes():
    rows = [[2, 4, 0], [1, 2, 0], [0, 0, 3]]
    basis = hermite_basis(rows)
    assert len(basis) == 2
    assert basis[0][0] > 0
    # span membership: (1, 2, 0) reduces to zero against the basis
    assert basis[0] == (1, 2, 0)


def test_orbit_span_rejects_zero_start():
    m = build_model(P("x^3 - 3*x"))
    ops = monodromy_generators(m)
    with pytest.raises(InputError):
        orbit_span(m, ops, (0, 0))


# ---- randomized genericity ----------------------------------------------------

def test_random_generic_orbits_have_full_rank():
    rng = random.Random(731)
    done = 0
    while done < 8:
        deg = rng.randint(3, 7)
        p = random_real_poly(rng, deg)
        try:
            m = build_model(p)
        except InputError:
            continue
        ops = monodromy_generators(m)
        n = m.lattice.rank
        s = m.lattice.intersection
        for op in ops:
            assert preserves_pairing(op.matrix, s)
            assert op.root_return_error <= 1e-8 * (
                1.0 + max(abs(z) for z in m.branch_points)
            )
        start = (1,) + (0,) * (n - 1)
        assert orbit_span(m, ops, start).rank == n
        v = cycle_at_infinity(m)
        if v is not None:
            assert all(op(v) == v for op in ops)
        done += 1
