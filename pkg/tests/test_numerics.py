import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jcurrents import jet
from jcurrents.errors import ConfigError, NonConvergence
from jcurrents.extrapolate import lsq_limit, polynomial_limit, richardson
from jcurrents.geometry import Box
from jcurrents.quadrature import (QuadratureConfig, gauss_legendre, integrate,
                                  integrate_unbounded, polar_box, polar_map)


def test_gauss_legendre_exact_on_polynomials():
    x, w = gauss_legendre(8)
    assert w.sum() == pytest.approx(2.0)
    assert np.dot(w, x**14) == pytest.approx(2 / 15)


def test_integrate_gaussian_on_cube():
    res = integrate(lambda p: np.exp(-np.sum(p**2, axis=1)), Box.cube(2, 3.0),
                    QuadratureConfig(abs_tol=1e-12, rel_tol=1e-10))
    assert res.real == pytest.approx(math.pi * math.erf(3.0) ** 2, rel=1e-9)


def test_integrate_vector_valued_and_complex():
    f = lambda p: np.stack([p[:, 0] ** 2, np.exp(1j * p[:, 0])], axis=1)
    res = integrate(f, Box((0.0,), (1.0,)))
    assert res.value[0] == pytest.approx(1 / 3)
    assert res.value[1] == pytest.approx((np.exp(1j) - 1) / 1j)


def test_polar_map_jacobian_gives_ball_volume():
    def f(v):
        _, jac = polar_map(v, 4)
        return jac
    res = integrate(f, polar_box(4, 0.5))
    assert res.real == pytest.approx(math.pi**2 / 2 * 0.5**4, rel=1e-8)


def test_integrate_unbounded():
    res = integrate_unbounded(lambda x: np.exp(-np.sum(x**2, axis=-1)), 2)
    assert res.real == pytest.approx(math.pi, rel=1e-6)


def test_nonconvergence_carries_partial_result():
    cfg = QuadratureConfig(max_depth=2, abs_tol=1e-14, rel_tol=1e-14)
    with pytest.raises(NonConvergence) as info:
        integrate(lambda p: 1.0 / np.sqrt(np.abs(p[:, 0]) + 1e-12), Box((-1.0,), (1.0,)), cfg)
    assert info.value.result is not None


def test_thread_count_does_not_change_bits():
    f = lambda p: np.sin(3 * p[:, 0]) * np.exp(p[:, 1]) / (1 + p[:, 0] ** 2)
    vals = {integrate(f, Box.cube(2), QuadratureConfig(threads=t, initial=4)).value
            for t in (1, 4)}
    assert len(vals) == 1


def test_config_validation():
    with pytest.raises(ConfigError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ConfigError):
        QuadratureConfig.from_dict({"bogus": 1})
    assert QuadratureConfig.from_dict({"order": 6}).order == 6


def test_richardson_removes_quadratic_error():
    hs = [0.1, 0.05, 0.025]
    vals = [1.0 + 3 * h**2 - 2 * h**4 for h in hs]
    assert richardson(vals) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_linear_fit_recovers_intercept(a, b):
    xs = np.array([0.4, 0.2, 0.1, 0.05])
    fit = polynomial_limit(xs, a + b * xs, degree=1)
    assert fit.value == pytest.approx(a, abs=1e-9)


def test_lsq_limit_even_basis():
    xs = 0.2 * 2.0 ** -np.arange(6)
    fit = lsq_limit(xs, 0.5 + xs**2 - xs**4, [lambda x: 1.0 + 0 * x, lambda x: x**2,
                                                lambda x: x**4])
    assert fit.value == pytest.approx(0.5, abs=1e-12)
    assert fit.stderr < 1e-10


def test_jet_first_and_second_derivatives():
    (x,), t1 = jet.make_variables([np.array(0.3)])
    y = jet.exp(x) * jet.sin(x)
    assert jet.part(y, t1, 0) == pytest.approx(np.exp(0.3) * (np.sin(0.3) + np.cos(0.3)))
    (u,), t2 = jet.make_variables([np.array(0.7)])
    (v,), t3 = jet.make_variables([u])
    g = jet.log(v * v + 1.0)
    d2 = jet.part(jet.part(g, t3, 0), t2, 0)
    assert d2 == pytest.approx(2 * (1 - 0.49) / (1.49**2))


def test_jet_nested_tags_do_not_confuse():
    # d/dx [x * d/dy (x + y)] = 1
    (x,), tx = jet.make_variables([np.array(2.0)])
    (y,), ty = jet.make_variables([np.array(5.0)])
    inner = jet.part(x + y, ty, 0)
    assert jet.part(x * inner, tx, 0) == pytest.approx(1.0)


def test_jet_det_and_inv():
    (a,), t = jet.make_variables([np.array(1.5)])
    m = [[a, 1.0], [2.0, a * a]]
    assert jet.part(jet.det(m), t, 0) == pytest.approx(3 * 1.5**2)


def test_depth_limited_split_does_not_fake_convergence():
    # radial integrand: once the radial axis is out of depth, splitting the
    # flat angular axis must not certify the radial error
    cfg = QuadratureConfig(order=3, max_depth=1, abs_tol=1e-14, rel_tol=1e-14)
    with pytest.raises(NonConvergence):
        integrate_unbounded(lambda x: (np.sum(x * x, axis=-1) + 1.0) ** -2, 2, cfg)


def test_cubature_matches_scipy_oracle():
    from scipy import integrate as sp

    f = lambda y, x: np.exp(-x * y) * np.cos(3 * x + y) / (1 + x * x)
    ref, _ = sp.dblquad(f, -1, 1, -0.5, 0.7, epsabs=1e-13, epsrel=1e-13)
    res = integrate(lambda p: f(p[:, 1], p[:, 0]), Box((-1.0, -0.5), (1.0, 0.7)),
                    QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11))
    assert res.real == pytest.approx(ref, abs=1e-11)
