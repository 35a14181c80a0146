from fractions import Fraction as F

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from divstab.errors import DegenerateInput, DomainError, SchemaError
from divstab.scalars import (PiecewisePoly, first_nonneg_root, fmt, integrate, interpolate, peval, pmul, q,
                             smallest_root)

lam = sp.Symbol("lam")


def quad_curve():
    # 9 - (1 + l)^2 on [0, 2], centred at 0
    return PiecewisePoly([0, 2], [(8, -2, -1)], 0)


def test_q_and_fmt():
    assert q("3/6") == F(1, 2) and q(4) == 4
    assert fmt(F(-3, 6)) == "-1/2" and fmt(F(8, 2)) == "4"
    with pytest.raises(SchemaError):
        q(0.5)
    with pytest.raises(SchemaError):
        q("abc")


def test_integrate_examples_against_sympy():
    assert integrate(PiecewisePoly([0, 5], [(0,)], 0), 0, 5) == 0
    oracle = sp.integrate(9 - (1 + lam) ** 2, (lam, 0, 2))
    assert integrate(quad_curve(), 0, 2) == F(str(oracle)) == F(28, 3)
    f = PiecewisePoly([0, 1], [(1, -2, 1)], 0)
    assert integrate(f, 0, 1) == F(str(sp.integrate((1 - lam) ** 2, (lam, 0, 1)))) == F(1, 3)


def test_integrate_rejects_reversed_bounds():
    with pytest.raises(DomainError):
        integrate(quad_curve(), 2, 1)


def test_first_root_examples():
    assert first_nonneg_root(quad_curve()) == 2
    assert first_nonneg_root(PiecewisePoly([0, 4], [(4, -1)], 0)) == 4
    assert first_nonneg_root(PiecewisePoly.constant(1)) == "none"
    with pytest.raises(DegenerateInput):
        first_nonneg_root(PiecewisePoly([0, 1], [(0, 1)], 1))


def test_irrational_root_is_refused():
    # 2 - l^2 has the root sqrt(2)
    f = PiecewisePoly([0, 2], [(2, 0, -1)], -2)
    with pytest.raises(DomainError):
        first_nonneg_root(f)


def test_continuity_enforced():
    with pytest.raises(DomainError):
        PiecewisePoly([0, 1, 2], [(1,), (2,)], 2)


def test_interpolation_recovers_polynomial():
    p = (F(1), F(-2), F(3, 4))
    xs = [F(k, 3) for k in range(3)]
    assert interpolate(xs, [peval(p, x) for x in xs]) == p


def test_smallest_root_with_multiplicity():
    p = pmul((F(-1), F(1)), (F(-1), F(1)))  # (x - 1)^2
    assert smallest_root(p, F(0), F(3)) == 1


rats = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def pw(draw):
    k = draw(st.integers(1, 4))
    widths = [draw(st.fractions(min_value=F(1, 7), max_value=3, max_denominator=7)) for _ in range(k)]
    bps = [F(0)]
    for w in widths:
        bps.append(bps[-1] + w)
    val = draw(rats)
    pieces = []
    for w in widths:
        c1, c2 = draw(rats), draw(rats)
        pieces.append((val, c1, c2))
        val = val + c1 * w + c2 * w * w
    return PiecewisePoly(bps, pieces, val)


@settings(max_examples=60, deadline=None)
@given(pw(), st.lists(st.fractions(min_value=0, max_value=15, max_denominator=9), min_size=3, max_size=3))
def test_integral_additive(f, pts):
    a, b, c = sorted(pts)
    assert integrate(f, a, c) == integrate(f, a, b) + integrate(f, b, c)


@settings(max_examples=60, deadline=None)
@given(pw(), rats)
def test_integral_scaling(f, s):
    assert integrate(f.scale(s), 0, f.end + 1) == s * integrate(f, 0, f.end + 1)


@settings(max_examples=60, deadline=None)
@given(pw())
def test_left_right_agree_at_breakpoints(f):
    for b in f.breakpoints[1:]:
        assert f.left_limit(b) == f(b)


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=F(1, 9), max_value=9, max_denominator=9),
       st.fractions(min_value=F(1, 9), max_value=9, max_denominator=9))
def test_root_of_shifted_square(a, r):
    # a^2 - (a + l)^2 ... shifted so the root is r: (r + a)^2 - (a + l)^2
    f = PiecewisePoly([0, r], [((r + a) ** 2 - a * a, -2 * a, -1)], 0)
    assert first_nonneg_root(f) == r
