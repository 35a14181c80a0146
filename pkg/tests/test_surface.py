from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from divstab import io as dio
from divstab.errors import ConfigError, DomainError, SchemaError
from divstab.scalars import first_nonneg_root, integrate
from divstab.surface import SurfaceValuation

F1 = dio.load_model("f1")
P2 = dio.load_model("p2")
TWO = dio.load_model("p2_two_points")


def test_zariski_examples():
    H, E = F1.cls([1, 0]), F1.cls([0, 1])
    w = F1.cls([3, -1])
    assert F1.zariski(w) == (w, F1.zero())
    assert F1.zariski(H) == (H, F1.zero())
    assert F1.zariski(H + E) == (H, E)


def test_vol_big_examples():
    assert F1.vol_big(F1.cls([1, 1])) == 1
    assert F1.vol_big(F1.zero()) == 0
    assert F1.vol_big(F1.cls([3, -1])) == 8
    assert F1.vol_big(F1.cls([-1, 0])) == 0


def test_grad_vol_examples():
    w = F1.cls([3, -1])
    assert F1.grad_vol(w, w) == 2 * 8
    assert F1.grad_vol(F1.cls([1, 1]), F1.cls([0, 1])) == 0
    assert P2.grad_vol(P2.cls([F(1, 2)]), P2.cls([-3])) == -3


def test_vol_curve_examples():
    f = F1.vol_curve(F1.cls([3, -1]), SurfaceValuation("", "E"))
    for x in [F(0), F(1, 3), F(1), F(7, 4), F(2)]:
        assert f(x) == 9 - (1 + x) ** 2
    assert first_nonneg_root(f) == 2
    g = P2.vol_curve(P2.cls([1]), SurfaceValuation("", "L"))
    assert [g(x) for x in (0, F(1, 2), 1)] == [1, F(1, 4), 0]
    assert integrate(g, 0, 1) == F(1, 3)


def test_vol_curve_on_blowup_of_a_point():
    # pi^*(3H) - l E stays nef up to l = 3, volume 9 - l^2
    f = P2.vol_curve(P2.cls([3]), SurfaceValuation("pt", "E1"))
    assert f.breakpoints[-1] == 3
    assert all(f(F(k, 4)) == 9 - F(k, 4) ** 2 for k in range(13))


def test_vol_curve_with_chamber_change():
    # (3 - l)H - E stays nef until it reaches the fibre class at l = 2
    f = F1.vol_curve(F1.cls([3, -1]), SurfaceValuation("", "H"))
    assert all(f(F(k, 8)) == (3 - F(k, 8)) ** 2 - 1 for k in range(17))
    assert first_nonneg_root(f) == 2


def test_vol_curve_through_negative_curve_chamber():
    # omega = 3H - E on F1, F = fibre: 3H - (1 + l)E - l(H - E) = (3 - l)H - E ... along F the
    # class (3 - l)H - (1 - l)E hits E negatively once l > 1, and E joins the negative part
    f = F1.vol_curve(F1.cls([3, -1]), SurfaceValuation("", "F"))
    for k in range(9):
        x = F(k, 8)
        assert f(x) == (3 - x) ** 2 - (1 - x) ** 2
    for k in range(8, 25):
        x = F(k, 8)
        assert f(x) == (3 - x) ** 2
    assert first_nonneg_root(f) == 3


def test_log_discrepancies():
    assert F1.log_discrepancy(SurfaceValuation("", "E")) == 1
    assert P2.log_discrepancy(SurfaceValuation("pt", "E1")) == 2
    assert P2.log_discrepancy(SurfaceValuation("pt", "E1", 3)) == 6
    assert P2.log_discrepancy(SurfaceValuation("near", "E2")) == 3
    assert P2.log_discrepancy(SurfaceValuation("two", "E2")) == 2


def test_birational_invariance_of_two_presentations():
    w = P2.cls([3])
    for e in ("E1", "E2"):
        a, b = SurfaceValuation("two", e), SurfaceValuation("two_swapped", e)
        assert P2.log_discrepancy(a) == P2.log_discrepancy(b)
        assert P2.vol_curve(w, a) == P2.vol_curve(w, b)


def test_signature_violation_rejected():
    d = dio.serialize(F1)
    d["gram"] = [["1", "0"], ["0", "1"]]
    with pytest.raises(SchemaError, match="signature"):
        dio.model_from_dict(d)


def test_missing_multiplicity_is_config_error():
    d = dio.serialize(P2)
    d["blowups"] = {"bad": {"steps": [{"name": "E1", "mult": {}}], "extremal": ["E1", "L"]}}
    m = dio.model_from_dict(d)
    with pytest.raises(ConfigError):
        m.log_discrepancy(SurfaceValuation("bad", "E1"))


def test_not_psef_reported():
    with pytest.raises(DomainError, match="pseudoeffective"):
        F1.zariski(F1.cls([-1, 0]))


cls2 = st.tuples(st.fractions(-4, 4, max_denominator=5), st.fractions(-4, 4, max_denominator=5))


@settings(max_examples=80, deadline=None)
@given(cls2, st.fractions(F(1, 5), 5, max_denominator=5))
def test_volume_homogeneity_and_certificate(c, s):
    a = F1.cls(c)
    assert F1.vol_big(s * a) == s * s * F1.vol_big(a)
    try:
        P, N = F1.zariski(a)
    except DomainError:
        return
    assert F1.dot(P, N) == 0 and P + N == a


@settings(max_examples=40, deadline=None)
@given(st.fractions(F(1, 4), 4, max_denominator=4), st.fractions(F(1, 8), F(7, 8), max_denominator=8))
def test_vol_curve_monotone_and_vanishing(a, b):
    w = F1.cls([a + 1, -b]) if b < a + 1 else F1.cls([a + 1, -(a + 1) / 2])
    for d in ("E", "F", "H"):
        f = F1.vol_curve(w, SurfaceValuation("", d))
        T = first_nonneg_root(f)
        assert f(T) == 0 and f(0) == F1.vol_big(w)
        vals = [f(T * k / 10) for k in range(11)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))
