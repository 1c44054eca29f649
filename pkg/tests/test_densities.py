import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate

from kedlab.densities import (
    DomainError,
    NodeError,
    UnderflowGuard,
    derivative_nodes,
    grid_dump_csv,
    iterated_derivative,
    log_term_eval,
    make_exponential,
    make_gaussian,
    make_ho1d_ground,
    make_hydrogenic,
    make_periodic_cosine,
    make_poly_exponential,
    normalized_derivative,
    profile_from_id,
    sphere_area,
    term_values,
)
from kedlab.quadrature import default_grid, integrate as grid_integrate
from kedlab.terms import enumerate_terms, make_term
from oracles import fd_iterated_derivative

# Independent closed forms (mpmath) of every catalog density.
CATALOG = [
    (make_hydrogenic(), lambda r: mp.exp(-2 * r) / mp.pi),
    (make_ho1d_ground(), lambda x: mp.exp(-x * x) / mp.sqrt(mp.pi)),
    (make_exponential(1.0, 1), lambda x: mp.exp(-x) / 2),
    (make_exponential(1.3, 2), lambda r: mp.mpf("1.3") ** 2 / (2 * mp.pi) * mp.exp(-mp.mpf("1.3") * r)),
    (make_gaussian(0.7, 3), lambda r: (mp.mpf("0.7") / mp.pi) ** 1.5 * mp.exp(-mp.mpf("0.7") * r * r)),
    (make_gaussian(1.0, 2), lambda r: mp.exp(-r * r) / mp.pi),
    (make_poly_exponential(-0.5, 1.5),
     lambda r: mp.mpf("1.5") ** 2.5 / (4 * mp.pi * mp.gamma(2.5)) * r ** -0.5 * mp.exp(-mp.mpf("1.5") * r)),
    (make_periodic_cosine(1.0, 0.5, 1.0), lambda x: 1 + mp.mpf("0.5") * mp.cos(2 * mp.pi * x)),
]
LOCALIZED = [p for p, _ in CATALOG if p.localized]


def test_hydrogenic_examples():
    h = make_hydrogenic()
    r = 0.75
    rho = math.exp(-2 * r) / math.pi
    assert h.value(r) == pytest.approx(rho, rel=1e-15)
    assert iterated_derivative(h, 1, r) == pytest.approx(-2 * rho, rel=1e-15)
    assert iterated_derivative(h, 2, r) == pytest.approx(4 * rho * (1 - 1 / r), rel=1e-14)


def test_gaussian_second_derivative_at_origin():
    g = make_ho1d_ground()
    # unnormalized exp(-x^2) has second derivative -2 at 0
    assert g.ratio(2, 1e-12) == pytest.approx(-2.0, abs=1e-15)


def test_derivative_domain_errors():
    h = make_hydrogenic()
    with pytest.raises(DomainError):
        iterated_derivative(h, 7, 1.0)
    with pytest.raises(DomainError):
        iterated_derivative(h, 1, 0.0)
    with pytest.raises(DomainError):
        iterated_derivative(h, 1, -1.0)


@pytest.mark.parametrize("profile, rho", CATALOG, ids=lambda x: getattr(x, "profile_id", ""))
def test_deriv_chain_matches_finite_differences(profile, rho):
    rs = [0.1, 0.37, 1.0, 2.9, 6.1, 10.0]
    for k in range(7):
        tol = 1e-8 if k <= 4 else 1e-6
        for r in rs:
            fd = float(fd_iterated_derivative(rho, profile.dim, k, r))
            exact = iterated_derivative(profile, k, r)
            if profile.localized:
                scale = profile.ratio_magnitude(k, r) * profile.value(r)
            else:
                scale = max(abs(exact), profile.rho0 * profile.A * profile.wavenumber ** k)
            assert abs(fd - exact) <= tol * scale, (k, r, fd, exact)


@pytest.mark.parametrize("b", [0.5, 1.0, 2.7])
def test_pure_exponential_1d_chain_is_exact(b):
    p = make_exponential(b, 1)
    xs = np.linspace(0.2, 30, 50)
    for k in range(7):
        assert np.array_equal(np.asarray(p.ratio(k, xs)), np.full(xs.shape, (-b) ** k))


@pytest.mark.parametrize("profile", LOCALIZED, ids=lambda p: p.profile_id)
def test_normalization(profile):
    d = profile.dim
    quad = integrate.quad(lambda r: profile.value(r) * sphere_area(d) * r ** (d - 1),
                          0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    assert profile.norm == 1.0
    assert quad == pytest.approx(1.0, abs=1e-9)
    assert grid_integrate(profile.value, default_grid(profile)) == pytest.approx(1.0, abs=1e-9)


def test_periodic_profile():
    p = make_periodic_cosine(1.0, 0.5, 1.0)
    xs = np.linspace(0, 1, 1001)
    assert np.min(p.value(xs)) == pytest.approx(0.5, abs=1e-12)
    assert p.norm == 1.0
    with pytest.raises(DomainError):
        make_periodic_cosine(1.0, 1.0, 1.0)


def test_normalized_derivative_examples():
    h = make_hydrogenic()
    assert normalized_derivative(h, 1, 1e-12) == pytest.approx(2 * math.pi ** (1 / 3), rel=1e-10)
    r = 3.0
    assert normalized_derivative(h, 1, r) == pytest.approx(2 * math.pi ** (1 / 3) * math.exp(2 * r / 3), rel=1e-13)
    with pytest.raises(DomainError):
        normalized_derivative(h, 0, r)
    g = make_ho1d_ground()
    rho = math.exp(-1) / math.sqrt(math.pi)
    assert normalized_derivative(g, 1, 1.0) == pytest.approx(abs(-2 * rho) / rho ** 2, rel=1e-13)
    assert normalized_derivative(g, 1, 1.0, constants={1: 0.5}) == pytest.approx(1 / rho, rel=1e-13)


def test_log_term_eval_examples():
    h = make_hydrogenic()
    tf, vw = make_term(3), make_term(3, (2,))
    for r in (0.5, 4.0, 25.0):
        assert log_term_eval(tf, h, r) == pytest.approx(5 / 3 * (-2 * r - math.log(math.pi)), rel=1e-14)
        assert log_term_eval(vw, h, r) == pytest.approx(math.log(4) - 2 * r - math.log(math.pi), rel=1e-14)
    with pytest.raises(NodeError) as err:
        log_term_eval(make_term(3, (0, 1)), h, 1.0)
    assert err.value.r == 1.0 and err.value.order == 2


def test_log_term_eval_deep_tail_and_floor():
    h = make_hydrogenic()
    # ln rho = -120 - ln pi: fine in logs, products with rho^-4 would overflow linearly
    term = make_term(3, (0, 0, 0, 0, 0, 1))
    assert math.isfinite(log_term_eval(term, h, 60.0))
    with pytest.raises(UnderflowGuard):
        log_term_eval(term, h, 60.0, floor=-100.0)
    with pytest.raises(DomainError):
        log_term_eval(make_term(1, (2,)), h, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(LOCALIZED), st.integers(0, 20), st.floats(0.2, 8.0))
def test_log_eval_matches_direct_product(profile, index, r):
    terms = enumerate_terms(profile.dim, max_total_order=6)
    term = terms[index % len(terms)]
    assume(term.max_order <= 6)
    rho = profile.value(r)
    direct = rho ** float(term.density_power)
    for k, n in enumerate(term.exponents, 1):
        direct *= abs(iterated_derivative(profile, k, r)) ** n
    assume(direct != 0 and math.isfinite(direct) and 1e-290 < direct < 1e290)
    assume(all(profile.ratio(k, r) != 0 for k, n in enumerate(term.exponents, 1) if n))
    assert math.exp(log_term_eval(term, profile, r)) == pytest.approx(direct, rel=1e-12)
    assert abs(term_values(term, profile, r)) == pytest.approx(direct, rel=1e-12)


def test_derivative_nodes_bracket_roots():
    h = make_hydrogenic()
    (a, b), = derivative_nodes(h, 2, 0.1, 10.0)
    assert a < 1.0 < b
    (a, b), = derivative_nodes(h, 4, 0.1, 10.0)
    assert a < 2.0 < b
    assert derivative_nodes(h, 1, 0.1, 10.0) == []


@pytest.mark.parametrize("pid", [
    "hydrogenic", "ho1d", "exp:b=1.5,D=2", "gauss:a=0.7,D=3", "polyexp:beta=-0.5,b=1.5",
    "cos:rho0=1,A=0.5,L=2",
])
def test_profile_ids_round_trip(pid):
    p = profile_from_id(pid)
    assert p.profile_id == pid
    assert profile_from_id(p.profile_id).profile_id == pid


@pytest.mark.parametrize("pid", ["nope", "exp:b=1", "exp:b=-1,D=3", "gauss:a=1,D=0",
                                 "cos:rho0=1,A=1.2,L=1", "exp:b=x,D=3", "exp:b=1,D=3,z=2"])
def test_profile_ids_rejected(pid):
    with pytest.raises(DomainError):
        profile_from_id(pid)


def test_grid_dump_csv():
    text = grid_dump_csv(make_hydrogenic(), [0.5, 1.0, 2.0])
    lines = text.splitlines()
    assert lines[0] == "r,rho,g1,g2,g3,g4,g5,g6"
    assert len(lines) == 4
    cells = lines[2].split(",")
    assert float(cells[0]) == 1.0 and float(cells[3]) == 0.0


def test_scaled_profile_keeps_shape():
    h = make_hydrogenic()
    s = h.scaled(3.0)
    assert s.value(1.2) == pytest.approx(3 * h.value(1.2), rel=1e-15)
    assert s.ratio(3, 1.2) == h.ratio(3, 1.2)
