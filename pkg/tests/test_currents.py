import math

import numpy as np
import pytest

from jcurrents.algebra import ExteriorValue, dz, dzbar, wedge
from jcurrents.calculus import FormField
from jcurrents.currents import (IntegrationCurrent, ParamChart, SmoothCurrent, d_current,
                                ddbar_current, graph_chart, mass, probe_closed, probe_positive,
                                random_test_forms, tube_limit, tube_mass)
from jcurrents.errors import BidegreeMismatch
from jcurrents.geometry import Box
from jcurrents.janalytic import line_w0, polar_disc_chart
from jcurrents.quadrature import QuadratureConfig, integrate
from jcurrents.structures import adapted_chart, make_standard, make_twisted
from jcurrents.testforms import bump, make_test_form, positive_probe

CFG = QuadratureConfig(abs_tol=1e-11, rel_tol=1e-10)
J = make_standard(2)
SUPPORT = Box.around([0.05, -0.03, 0.02, 0.0], 0.4)


def disc_current(Jx=J):
    plane = graph_chart(lambda t: [0.0 * t[0], 0.0 * t[0]], Box.cube(2, 1.0), 2, "w=0")
    return IntegrationCurrent([plane], Jx)


def area_form():
    return make_test_form(wedge(dz(2, 0), dzbar(2, 0)) * 0.5j, SUPPORT)


def test_integration_current_is_integral_of_bump_on_plane():
    expected = integrate(lambda p: bump([p[:, 0], p[:, 1], 0.0, 0.0], SUPPORT),
                         Box((-0.35, -0.43), (0.45, 0.37)), CFG).real
    assert disc_current()(area_form(), CFG) == pytest.approx(expected, rel=1e-9)


def test_polar_and_graph_parametrizations_agree():
    polar = IntegrationCurrent([polar_disc_chart(1.0)], J)
    psi = area_form()
    # polar cells cut the C^3 edge of the bump obliquely, so accuracy is lower
    assert polar(psi, CFG) == pytest.approx(disc_current()(psi, CFG), rel=1e-6)


def test_dw_terms_pull_back_to_zero():
    psi = make_test_form(wedge(dz(2, 1), dzbar(2, 1)) * 0.5j, SUPPORT)
    assert abs(disc_current()(psi, CFG)) < 1e-14


def test_pairing_degree_mismatch():
    with pytest.raises(BidegreeMismatch):
        disc_current().pair(make_test_form(dz(2, 0), SUPPORT))


def test_mass_of_disc_is_pi_r2():
    ch = adapted_chart(J, np.zeros(4))
    for r in (0.2, 0.4):
        res = mass(disc_current(), r, ch, CFG)
        assert res.value == pytest.approx(math.pi * r * r, rel=1e-6)


def test_integration_current_is_closed_and_positive():
    T = disc_current(make_twisted(0.1))
    forms = random_test_forms(2, 1, SUPPORT, 3, seed=2)
    assert probe_closed(T, forms, CFG, tol=1e-9).passed
    probes = [positive_probe(T.J, SUPPORT, [np.eye(4)[k]]) for k in (0, 1)]
    assert probe_positive(T, probes, CFG).passed
    assert T.check_invariance() < 1e-12


def test_smooth_current_duality_sign():
    # <dT, psi> = (-1)^(k+1) <T, d psi> for a k-form T
    theta = FormField(2, lambda c: ExteriorValue(2, {(0,): c[2] * c[1], (3,): c[0] ** 2}), 1)
    T = SmoothCurrent(theta)
    psi = random_test_forms(2, 2, SUPPORT, 1, seed=5)[0]
    direct = d_current(T)(psi, CFG)
    from jcurrents.currents import DerivedCurrent
    dual = DerivedCurrent(T, "d")(psi, CFG)
    assert direct == pytest.approx(dual, abs=1e-10)


def test_ddbar_of_integration_current_vanishes():
    T = disc_current()
    L = ddbar_current(T)
    assert L.dim == T.dim - 2


class _Line:
    """Distance-like function to {w = 0}."""

    @staticmethod
    def tube_function(c):
        return (c[2] ** 2 + c[3] ** 2) ** 0.5

    tube_box = None


def test_tube_mass_of_smooth_current_shrinks_linearly():
    T = SmoothCurrent(FormField(2, lambda c: (wedge(dz(2, 0), dzbar(2, 0)) * 0.5j).map(lambda v: v + 0 * c[0]), 2),
                      J, (1, 1))
    psi = make_test_form(wedge(dz(2, 1), dzbar(2, 1)) * 0.5j, SUPPORT)
    m1 = tube_mass(T, _Line, 0.1, psi, CFG).value
    m2 = tube_mass(T, _Line, 0.05, psi, CFG).value
    assert abs(m2) < abs(m1) and abs(m2 / m1) == pytest.approx(0.25, rel=0.1)


def test_tube_limit_recovers_support_current():
    A = line_w0()
    T = disc_current() * 2.0
    psi = area_form()
    lim = tube_limit(T, A, psi, cfg=CFG)
    assert lim.value.real == pytest.approx(2 * disc_current()(psi, CFG), rel=1e-6)
