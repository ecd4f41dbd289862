import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jcurrents.errors import DomainViolation
from jcurrents.structures import (adapted_chart, from_config, linear_chart, make_standard,
                                  make_twisted, nijenhuis, nijenhuis_norm)


def test_standard_n1_matrix():
    J = make_standard(1)
    assert np.array_equal(J(np.zeros(2)), np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_standard_n2_block_diagonal():
    M = make_standard(2)(np.zeros(4))
    block = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.array_equal(M[:2, :2], block) and np.array_equal(M[2:, 2:], block)
    assert not M[:2, 2:].any() and not M[2:, :2].any()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_twisted_zero_equals_standard(seed):
    x = np.random.default_rng(seed).uniform(-0.9, 0.9, 4)
    assert np.allclose(make_twisted(0.0)(x), make_standard(2)(x), atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.integers(0, 2**32 - 1))
def test_twisted_squares_to_minus_identity(lam, seed):
    J = make_twisted(lam)
    c = J.domain.hi[2]
    x = np.random.default_rng(seed).uniform(-1, 1, 4) * np.array([0.9, 0.9, 0.9 * c, 0.9 * c])
    assert J.square_defect(x) < 1e-12


def test_twisted_spec_point():
    # z = 0.2, w = 0.3 + 0.1i
    assert make_twisted(0.1).square_defect(np.array([0.2, 0.0, 0.3, 0.1])) < 1e-12


def test_domain_violation():
    with pytest.raises(DomainViolation):
        make_twisted(0.5)(np.array([0.0, 0.0, 1.2, 0.0]))


def test_standard_is_integrable():
    rng = np.random.default_rng(0)
    J = make_standard(2)
    for _ in range(5):
        x, X, Y = rng.uniform(-0.5, 0.5, (3, 4))
        assert np.max(np.abs(nijenhuis(J, x, X, Y))) < 1e-10


def fd_nijenhuis(J, x, X, Y, h=1e-5):
    """Central-difference bracket oracle for constant X, Y."""
    def DJ(v):
        return (J(x + h * v) - J(x - h * v)) / (2 * h)

    Jx = J(x)
    JX, JY = Jx @ X, Jx @ Y
    # [U, V] = DV(U) - DU(V) for fields U(x) = J(x) X etc.
    br_JX_JY = DJ(JX) @ Y - DJ(JY) @ X
    br_JX_Y = -DJ(Y) @ X
    br_X_JY = DJ(X) @ Y
    return br_JX_JY - Jx @ br_JX_Y - Jx @ br_X_JY


def test_twisted_nijenhuis_matches_difference_oracle():
    J = make_twisted(0.2)
    x = np.array([0.05, 0.02, 0.1, -0.03])
    X, Y = np.eye(4)[0], np.eye(4)[2]
    N = nijenhuis(J, x, X, Y)
    assert np.linalg.norm(N) > 1e-3
    assert np.allclose(N, fd_nijenhuis(J, x, X, Y), atol=1e-7)


def test_nijenhuis_linear_in_lambda():
    x = np.array([0.05, 0.02, 0.1, -0.03])
    X, Y = np.eye(4)[0], np.eye(4)[2]
    n1 = np.linalg.norm(nijenhuis(make_twisted(0.1), x, X, Y))
    n2 = np.linalg.norm(nijenhuis(make_twisted(0.2), x, X, Y))
    assert n2 / n1 == pytest.approx(2.0, rel=0.05)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nijenhuis_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    J = make_twisted(0.3)
    x, X, Y = rng.uniform(-0.5, 0.5, (3, 4))
    assert np.allclose(nijenhuis(J, x, X, Y), -nijenhuis(J, x, Y, X), atol=1e-12)
    assert np.max(np.abs(nijenhuis(J, x, X, X))) < 1e-12


def test_nijenhuis_norm_positive_for_twisted():
    assert nijenhuis_norm(make_twisted(0.1), np.array([0.1, 0.2, 0.3, 0.1])) > 0
    assert nijenhuis_norm(make_standard(2), np.array([0.1, 0.2, 0.3, 0.1])) < 1e-12


def test_adapted_chart_standard_is_holomorphic():
    J = make_standard(2)
    ch = adapted_chart(J, np.zeros(4))
    rng = np.random.default_rng(1)
    for x in rng.uniform(-0.5, 0.5, (5, 4)):
        assert ch.dbar_residual(J, x) < 1e-12


def test_adapted_chart_twisted_residual_linear_in_distance():
    J = make_twisted(0.1)
    ch = adapted_chart(J, np.zeros(4))
    assert ch.dbar_residual(J, np.zeros(4)) < 1e-12
    rng = np.random.default_rng(2)
    ratios = []
    for _ in range(20):
        x = rng.normal(size=4)
        x *= rng.uniform(0.01, 0.5) / np.linalg.norm(x)
        ratios.append(ch.dbar_residual(J, x) / np.linalg.norm(x))
    # sup of |dbar z|/|x| stays bounded (by lambda up to a constant)
    assert max(ratios) < 0.2


def test_perturbed_chart_keeps_invariants():
    J = make_twisted(0.1)
    base = adapted_chart(J, np.zeros(4))
    pert = base.perturb(np.array([[[0.3, 0.2], [0.2, 0.0]], [[0.1, -0.2], [-0.2, 0.4j]]]))
    assert np.allclose(pert.differential(np.zeros(4)), base.differential(np.zeros(4)))
    assert pert.dbar_residual(J, np.zeros(4)) < 1e-12
    x = np.array([0.1, 0.05, -0.02, 0.03])
    zr = pert.real_values([np.array(v) for v in x])
    assert np.allclose(pert.inverse(np.array(zr, dtype=float)), x, atol=1e-12)


def test_linear_chart_values():
    ch = linear_chart(np.zeros(4), np.array([[1, 1j, 0, 0], [0, 0, 1, 1j]]))
    z = ch(np.array([0.1, 0.2, 0.3, 0.4]))
    assert np.allclose(z, [0.1 + 0.2j, 0.3 + 0.4j])
    assert ch.abs2([np.array(0.1), np.array(0.2), np.array(0.3), np.array(0.4)]) == \
        pytest.approx(0.3)


def test_from_config():
    assert from_config({"kind": "twisted", "lambda": 0.2}).params["lambda"] == 0.2
    assert from_config({"kind": "standard", "n": 3}).n == 3
    with pytest.raises(ValueError):
        from_config({"kind": "mystery"})
