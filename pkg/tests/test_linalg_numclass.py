from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from divstab import linalg
from divstab.errors import DomainError
from divstab.numclass import (is_ample, norm_sup, proportionality, thompson, thompson_distance, thompson_s, trace,
                              volume)


def test_inertia_and_definiteness():
    assert linalg.inertia([[1, 0], [0, -1]]) == (1, 1, 0)
    assert linalg.inertia([[0, 1], [1, -2]]) == (1, 1, 0)
    assert linalg.is_negative_definite([[-2, 1], [1, -2]])
    assert not linalg.is_negative_definite([[-1, 2], [2, -1]])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(-4, 4), min_size=3, max_size=3), min_size=3, max_size=3),
       st.lists(st.integers(-4, 4), min_size=3, max_size=3))
def test_solve_matches_det(A, b):
    x = linalg.solve(A, b)
    if linalg.det(A) == 0:
        assert x is None
    else:
        assert linalg.matvec(linalg.mat(A), x) == [F(v) for v in b]


def test_f1_numclass_examples(load):
    m = load("f1")
    w = m.cls([3, -1])
    assert volume(m, w) == 8
    assert trace(m, w, m.canonical) == -2
    assert norm_sup(m, w, m.canonical) == 1
    assert not is_ample(m, m.cls([1, 0]))  # H is nef, not ample on F1
    assert thompson(m, w, m.cls([2, -1])) == (F(1, 2), 1)
    assert thompson_s(m, w, m.cls([2, -1])) == 2
    assert proportionality(m, w, -m.canonical) == 1


def test_thompson_distance_is_log():
    import math
    assert thompson_distance((F(1, 2), F(1))) == pytest.approx(math.log(2))


def test_mixed_backends_rejected(load):
    a, b = load("f1"), load("f0")
    with pytest.raises(DomainError):
        a.cls([1, 0]) + b.cls([1, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6))
def test_trace_bound(x, y):
    from divstab import io
    m = io.load_model("f1")
    w = m.cls([3, -1])
    th = m.cls([x, y])
    assert abs(trace(m, w, th)) <= 2 * norm_sup(m, w, th)
