import numpy as np
import pytest

from jcurrents.algebra import dz, dzbar, wedge
from jcurrents.currents import tube_limit
from jcurrents.errors import ValidationRequired
from jcurrents.geometry import Box
from jcurrents.janalytic import (Stratification, area_probe, exp_graph, generic_lelong,
                                 graph_stratum, integration_current, line_w0, probes_on,
                                 validate)
from jcurrents.quadrature import QuadratureConfig
from jcurrents.specs import current
from jcurrents.structures import make_standard, make_twisted
from jcurrents.testforms import make_test_form

CFG = QuadratureConfig(abs_tol=1e-10, rel_tol=1e-8)
RADII = (0.2, 0.1, 0.05)


def area_form(center=(0.05, -0.03, 0.02, 0.0)):
    return make_test_form(wedge(dz(2, 0), dzbar(2, 0)) * 0.5j, Box.around(center, 0.3))


@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_line_validates_on_both_structures(lam):
    A = line_w0()
    rep = validate(A, make_twisted(lam))
    assert rep.passed and A.validated and max(rep.residuals) < 1e-12


def test_current_requires_validation():
    with pytest.raises(ValidationRequired):
        integration_current(line_w0(), make_standard(2))


def test_antiholomorphic_graph_is_rejected():
    # w = conj(z) is totally real for J_st
    s = graph_stratum(lambda t: [t[0], -t[1]], Box.cube(2, 0.5), 2, "w=zbar")
    rep = validate(Stratification([s], 2, name="w=zbar"), make_standard(2), deltas=(0.1,))
    assert not rep.passed and rep.residuals[0] > 0.1


def test_puncture_does_not_change_pairing():
    J = make_standard(2)
    A, B = line_w0(), line_w0(puncture=True)
    validate(A, J), validate(B, J, deltas=(0.1, 0.025))
    psi = area_form()
    a = integration_current(A, J)(psi, CFG)
    b = integration_current(B, J)(psi, CFG)
    assert a == pytest.approx(b, rel=1e-9)


def test_punctured_area_converges():
    B = line_w0(puncture=True)
    pr = area_probe(B.top, np.zeros(4), deltas=(0.1, 0.025, 0.00625))
    assert not pr.diverges
    assert pr.masses[-1] == pytest.approx(0.4530, abs=5e-4)


def test_exp_graph_area_diverges():
    pr = area_probe(exp_graph().top, np.array([1.5, 0.0, 0.0, 0.0]),
                    deltas=(0.1, 0.025, 0.00625))
    assert pr.diverges and all(r > 3.5 for r in pr.ratios)


def test_generic_lelong_of_multiple_line():
    J = make_standard(2)
    A = line_w0()
    T = current({"kind": "integration", "multiplicity": 3.0}, J)
    assert generic_lelong(T, A, radii=RADII, cfg=CFG, count=2) == pytest.approx(3.0, abs=1e-3)


def test_smooth_current_has_no_mass_on_line():
    # tube masses of a smooth current shrink like delta^2, so the limit is 0
    J = make_standard(2)
    T = current({"kind": "smooth_constant", "coefficients": {"0,1": 0.7}}, J)
    psi = make_test_form(wedge(dz(2, 1), dzbar(2, 1)) * 0.5j,
                         Box.around((0.05, -0.03, 0.0, 0.0), 0.3))
    cfg = QuadratureConfig(abs_tol=1e-9, rel_tol=1e-7)
    tl = tube_limit(T, line_w0(), psi, floor=1e-3, cfg=cfg)
    assert abs(tl.value) < 1e-2 * abs(T(psi, cfg))


def test_probes_are_centered_on_stratum():
    A = line_w0()
    for psi in probes_on(A, make_standard(2), count=3, seed=0):
        c = psi.support.center
        assert abs(c[2]) < 1e-12 and abs(c[3]) < 1e-12
        assert psi.bidegree == (1, 1)
