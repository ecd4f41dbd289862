import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jcurrents.algebra import is_positive_sample
from jcurrents.calculus import exterior_derivative
from jcurrents.geometry import Box
from jcurrents.structures import make_twisted
from jcurrents.testforms import (bump, make_test_form, positive_probe, random_positive_probes,
                                 scalar_test_function, smooth_step)
from jcurrents.algebra import dz

BOX = Box.around([0.1, 0.0, -0.1, 0.05], 0.3)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3))
def test_smooth_step_symmetry(s):
    assert smooth_step(s) + smooth_step(-s) == pytest.approx(1.0)
    assert 0.0 <= smooth_step(s) <= 1.0


def test_bump_center_and_support():
    c = BOX.center
    assert bump(list(c), BOX) == pytest.approx(1.0)
    outside = list(c + np.array([0.31, 0, 0, 0]))
    assert bump(outside, BOX) == 0.0
    assert bump(list(c), BOX, profile="smooth") == pytest.approx(1.0)


def test_test_form_vanishes_with_derivative_at_edge():
    psi = make_test_form(dz(2, 0), BOX)
    edge = BOX.center + np.array([0.3, 0.0, 0.0, 0.0])
    assert psi(edge).max_abs() == 0.0
    assert exterior_derivative(psi.form)(edge).max_abs() < 1e-12


def test_scalar_function_and_sum():
    chi = scalar_test_function(2, BOX, fn=lambda c: 2.0 + 0.0 * c[0])
    assert chi(BOX.center)[()] == pytest.approx(2.0)
    other = scalar_test_function(2, Box.around([0.5, 0, 0, 0], 0.1))
    total = chi + other
    assert total.support.hi[0] == pytest.approx(0.6)


def test_positive_probe_is_positive_on_twisted():
    J = make_twisted(0.1)
    probe = positive_probe(J, BOX, [np.eye(4)[0]])
    assert probe.bidegree == (1, 1)
    for x in np.random.default_rng(0).uniform(-0.15, 0.15, (3, 4)) + BOX.center:
        assert is_positive_sample(probe(x), J(x), m=300).positive


def test_random_probes_are_seeded_and_inside_region():
    J = make_twisted(0.1)
    a = random_positive_probes(J, BOX, 1, 3, seed=4)
    b = random_positive_probes(J, BOX, 1, 3, seed=4)
    assert [p.support for p in a] == [p.support for p in b]
    for p in a:
        assert np.all(np.array(p.support.lo) >= np.array(BOX.lo) - 1e-12)
        assert np.all(np.array(p.support.hi) <= np.array(BOX.hi) + 1e-12)
