import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from divstab import curve as cv
from divstab.errors import DomainError


def sigma_potential(N):
    return cv.PLPotential.build(0, {f"p{i}": cv.RayData([1], [F(-1, N), 0]) for i in range(N)})


def sigma_measure(N):
    return cv.CurveMeasure(tuple((f"p{i}", 1, F(1, N)) for i in range(N)))


P1 = cv.CurveModel(0, 1)


def dirac_potential(d, t0, p="p"):
    # slope -d on [0, t0], normalized so that phi(t0 ord_p) = 0
    return cv.PLPotential.build(d * t0, {p: cv.RayData([t0], [-d, 0])})


@pytest.mark.parametrize("N", [1, 2, 5, 10])
def test_sigma_fixture(N):
    phi = sigma_potential(N)
    assert cv.monge_ampere(P1, phi) == sigma_measure(N)
    assert cv.energy(P1, phi) == F(-1, 2 * N)
    assert cv.grad_energy(P1, phi, -2) == F(-1, N)
    assert cv.measure_energy(P1, sigma_measure(N))[0] == F(1, 2 * N)
    assert cv.entropy(P1, sigma_measure(N)) == 1
    assert cv.i_functional(P1, phi, cv.PLPotential(0)) == F(1, N)
    assert cv.beta(P1, sigma_measure(N)) == 1 - F(1, N)


def test_trivial_potential_and_measure():
    zero = cv.PLPotential(0)
    assert cv.monge_ampere(P1, zero) == cv.TRIVIAL_MEASURE
    assert cv.energy(P1, cv.PLPotential(F(5, 3))) == F(5, 3)
    assert cv.measure_energy(P1, cv.TRIVIAL_MEASURE)[0] == 0
    assert cv.ding(P1, zero) == 0 and cv.mabuchi(P1, zero) == 0


@pytest.mark.parametrize("d,t0", [(1, F(1)), (4, F(3, 2)), (6, F(1, 3))])
def test_dirac_potential(d, t0):
    m = cv.CurveModel(0, d)
    phi = dirac_potential(d, t0)
    assert cv.monge_ampere(m, phi) == cv.dirac("p", t0)
    assert cv.energy(m, phi) == d * t0 / 2
    assert cv.twisted_energy(m, phi, -2) == -2 * t0
    assert cv.measure_energy(m, cv.dirac("p", t0))[0] == t0 * d / 2
    assert cv.mabuchi(m, dirac_potential(d, 1)) == 0


def test_ding_example():
    phi = cv.PLPotential.build(0, {"p": cv.RayData([1], [-1, 0])})
    assert cv.l_functional(P1, phi) == 0
    assert cv.energy(P1, phi) == F(-1, 2)
    assert cv.ding(P1, phi) == F(1, 2)
    assert cv.ding(P1, phi.scaled(3)) == 3 * cv.ding(P1, phi)


def test_ding_requires_subklt():
    m = cv.CurveModel(0, 2, {"p": F(1)})
    with pytest.raises(DomainError, match="subklt"):
        cv.ding(m, cv.PLPotential(0))


def test_invalid_potentials_rejected():
    for rd in (cv.RayData([1], [1, 0]), cv.RayData([1], [-1, -2]), cv.RayData([1], [-1, -1])):
        with pytest.raises(DomainError, match="not omega-psh"):
            cv.monge_ampere(P1, cv.PLPotential.build(0, {"p": rd}))
    with pytest.raises(DomainError):
        cv.monge_ampere(P1, cv.PLPotential.build(0, {"p": cv.RayData([1], [-1, 0]),
                                                     "r": cv.RayData([1], [-1, 0])}))


def test_j_functionals():
    mu = sigma_measure(3)
    _, phi = cv.measure_energy(P1, mu)
    assert cv.j_mu(P1, mu, phi) == 0
    assert cv.i_functional(P1, phi, phi) == 0


POINTS = ["p", "r", "s", "q"]


@st.composite
def model_and_potential(draw):
    seed = draw(st.integers(0, 10 ** 6))
    rng = random.Random(seed)
    m = cv.CurveModel(draw(st.integers(0, 3)), F(draw(st.integers(1, 12)), draw(st.integers(1, 3))),
                      {"p": F(1, 2), "r": F(-1, 3)})
    return m, cv.random_potential(m, rng, POINTS), rng


@settings(max_examples=80, deadline=None)
@given(model_and_potential(), st.fractions(-5, 5, max_denominator=7))
def test_energy_identities(mp, c):
    m, phi, rng = mp
    mu = cv.monge_ampere(m, phi)
    assert sum(a[2] for a in mu.atoms) == 1
    assert cv.energy(m, phi.shifted(c)) == cv.energy(m, phi) + c
    norm, _ = cv.measure_energy(m, mu)
    assert norm == cv.energy(m, phi) - cv.pair(phi, mu)
    assert cv.grad_energy(m, phi, m.V) == norm
    assert cv.grad_energy(m, phi.shifted(c), 3) == cv.grad_energy(m, phi, 3)
    assert cv.mabuchi(m, phi) == cv.beta(m, mu)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6), st.fractions(F(1, 5), 5, max_denominator=5))
def test_measure_energy_homogeneity_and_convexity(seed, s):
    rng = random.Random(seed)
    m = cv.CurveModel(0, F(rng.randint(1, 9), rng.randint(1, 3)))
    mu = cv.random_measure(rng, POINTS)
    norm, phi = cv.measure_energy(m, mu)
    assert cv.monge_ampere(m, phi) == mu
    assert cv.measure_energy(m, mu.pushforward(s))[0] == s * norm
    assert cv.measure_energy(m.with_degree(s * m.V), mu)[0] == s * norm
    upper = sum((mass * cv.measure_energy(m, cv.dirac(p, t) if p else cv.TRIVIAL_MEASURE)[0]
                 for p, t, mass in mu.atoms), F(0))
    assert norm <= upper
    # ||(1 - t) mu_triv + t mu|| <= t^2 ||mu|| ... quadratic decay on curves
    t = F(1, 3)
    mixed = cv.CurveMeasure(tuple((p, tt, t * mm) for p, tt, mm in mu.atoms) + ((None, 0, 1 - t),))
    assert cv.measure_energy(m, mixed)[0] <= t * t * norm * 1 or norm == 0
    psi = cv.random_potential(m, rng, POINTS)
    assert cv.i_functional(m, phi, psi) >= 0
    assert cv.i_functional(m, phi, psi) == cv.i_functional(m, psi, phi)
    assert cv.j_mu(m, mu, psi) >= 0


def test_i_quasi_triangle_fitted_constant():
    # the constant is only known up to a dimensional factor; 1.84 was the sampled
    # maximum over 2000 triples, frozen here with margin as a regression bound
    rng = random.Random(1)
    m = cv.CurveModel(0, 3)
    worst = F(0)
    for _ in range(300):
        a, b, c = (cv.random_potential(m, rng, ["p", "r", "s"]) for _ in range(3))
        rhs = cv.i_functional(m, a, c) + cv.i_functional(m, c, b)
        if rhs:
            worst = max(worst, cv.i_functional(m, a, b) / rhs)
    assert worst <= 4


def test_grad_vol_zero_outside_big_cone(load):
    f1 = load("f1")
    assert f1.grad_vol(f1.cls([-1, 0]), f1.cls([1, 0])) == 0
