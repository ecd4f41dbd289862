import math

import numpy as np
import pytest

from jcurrents.errors import IntegrandBlowup, MonotoneFitFailure
from jcurrents.lelong import (LelongProfile, fit_monotone_constant, g_from_profile,
                              is_nondecreasing, lelong_number, nu, tau)
from jcurrents.quadrature import QuadratureConfig
from jcurrents.specs import current
from jcurrents.structures import adapted_chart, make_standard, make_twisted

CFG = QuadratureConfig(abs_tol=1e-10, rel_tol=1e-8)
RADII = (0.2, 0.1, 0.05)
DISC = {"kind": "integration"}
SMOOTH = {"kind": "smooth_constant", "coefficients": {"0,1": 0.7, "2,3": 0.3}}


def test_tau_is_unit_ball_volume():
    assert tau(1) == pytest.approx(math.pi)
    assert tau(2) == pytest.approx(math.pi**2 / 2)
    assert tau(0) == 1.0


def test_disc_density_is_one_at_every_radius():
    J = make_standard(2)
    assert nu(current(DISC, J), adapted_chart(J, np.zeros(4)), 0.1, CFG) == \
        pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_lelong_number_of_disc(lam):
    J = make_twisted(lam)
    prof, corr = lelong_number(current(DISC, J), adapted_chart(J, np.zeros(4)), RADII, CFG)
    assert prof.nu0 == pytest.approx(1.0, abs=1e-3)
    assert corr.c >= 0 and corr.frame == 1


def test_smooth_current_has_zero_lelong_number():
    J = make_standard(2)
    prof, _ = lelong_number(current(SMOOTH, J), adapted_chart(J, np.zeros(4)), RADII, CFG)
    # nu(r) is a pure r^2 term, which the quadratic fit removes
    assert abs(prof.nu0) < 1e-8
    assert prof.values[0] > prof.values[-1] > 0


def test_negative_current_is_analyzed_in_minus_frame():
    J = make_standard(2)
    prof, corr = lelong_number(current(DISC, J) * -1.0, adapted_chart(J, np.zeros(4)), RADII, CFG)
    assert prof.nu0 == pytest.approx(-1.0, abs=1e-3)
    assert corr.frame == -1


def test_g_from_linear_profile_matches_closed_form():
    # int_0^r (t^2/r^2 - 1) dt = -2r/3
    assert g_from_profile(lambda t: t, 0.3, 1) == pytest.approx(-0.2, rel=1e-12)


def test_g_blowup_detected():
    with pytest.raises(IntegrandBlowup):
        g_from_profile(lambda t: 1.0, 0.3, 1)


def test_fit_monotone_constant():
    r = np.array([0.4, 0.2, 0.1, 0.05])
    v = 1.0 - r
    assert not is_nondecreasing(r, v, np.zeros(4))
    c = fit_monotone_constant(r, v, np.zeros(4), 2)
    w = (1 + c * r) ** 2 * v
    assert is_nondecreasing(r, w, np.zeros(4)) and 0.5 <= c <= 1.0
    with pytest.raises(MonotoneFitFailure):
        fit_monotone_constant(r, v, np.zeros(4), 2, c_max=0.1)


def test_profile_rejects_unsorted_radii():
    with pytest.raises(ValueError):
        LelongProfile([0.1, 0.2], [1, 1], [0, 0], "z", 1.0, 0.0)
