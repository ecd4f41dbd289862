import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jcurrents.algebra import (ExteriorValue, StronglyPositiveDecomposition, brute_force_wedge,
                               bidegree_of, bidegree_split, dx, dz, dzbar, is_positive_sample,
                               kahler_form, p10_matrix, projector_10, split_with,
                               strongly_positive_form, volume_form, wedge, wedge_power)
from jcurrents.errors import NegativeWeight, NotAlmostComplex
from jcurrents.structures import make_standard, make_twisted


def random_value(rng, n, k, complex_=True):
    coefs = {}
    for K in itertools.combinations(range(2 * n), k):
        c = rng.normal()
        if complex_:
            c = c + 1j * rng.normal()
        coefs[K] = c
    return ExteriorValue(n, coefs)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_dz_wedge_dz_vanishes():
    assert not wedge(dz(1, 0), dz(1, 0)).coefficients


def test_dzbar_wedge_dz_is_2i_area():
    v = wedge(dzbar(1, 0), dz(1, 0))
    assert v[(0, 1)] == pytest.approx(2j)


def test_repeated_decomposable_factor_squares_to_zero():
    rng = np.random.default_rng(0)
    a, b = random_value(rng, 2, 1), random_value(rng, 2, 1)
    form = wedge(a, b) * 1j
    assert wedge(form, form).max_abs() < 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 4), st.integers(0, 4))
def test_wedge_matches_brute_force_shuffles(seed, k, l):
    rng = np.random.default_rng(seed)
    a, b = random_value(rng, 2, k), random_value(rng, 2, l)
    assert (wedge(a, b) - brute_force_wedge(a, b)).max_abs() < 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 3), st.integers(0, 3))
def test_graded_commutativity(seed, k, l):
    rng = np.random.default_rng(seed)
    a, b = random_value(rng, 3, k), random_value(rng, 3, l)
    assert (wedge(a, b) - wedge(b, a) * (-1) ** (k * l)).max_abs() < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_wedge_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_value(rng, 2, k) for k in (1, 1, 2))
    assert (wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).max_abs() < 1e-12


def test_kahler_power_is_volume_multiple():
    # (sum dx_{2j} ^ dx_{2j+1})^2 = 2 vol on R^4
    w = kahler_form(2)
    assert (wedge_power(w, 2) - volume_form(2) * 2.0).max_abs() < 1e-12


def test_standard_projector_maps_dx_to_half_dz():
    P = projector_10(make_standard(1).at([np.zeros(())] * 2)).P10
    assert P @ np.array([1.0, 0.0]) == pytest.approx(np.array([0.5, 0.5j]))


def test_projector_rejects_non_complex_matrix():
    with pytest.raises(NotAlmostComplex):
        projector_10(np.eye(2))


def test_twisted_projector_eigen_residuals():
    J = make_twisted(0.1)(np.array([0.3, 0.0, 0.2, -0.1]))
    P = projector_10(J).P10
    assert np.linalg.matrix_rank(P, tol=1e-8) == 2
    assert np.max(np.abs(P @ P - P)) < 1e-12
    # the image consists of (1,0) covectors: J^T alpha = i alpha
    assert np.max(np.abs(J.T @ P - 1j * P)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(-1, 1))
def test_projector_idempotent_on_twisted_family(seed, lam):
    x = np.random.default_rng(seed).uniform(-0.6, 0.6, 4)
    P = p10_matrix(make_twisted(lam)(x))
    assert np.max(np.abs(P @ P - P)) < 1e-12


def test_pure_bidegrees():
    proj = projector_10(make_standard(1)(np.zeros(2)))
    assert bidegree_of(dz(1, 0), proj) == (1, 0)
    assert bidegree_of(dzbar(1, 0), proj) == (0, 1)
    assert bidegree_of(wedge(dzbar(1, 0), dz(1, 0)), proj) == (1, 1)
    assert bidegree_of(dx(1, 0), proj) is None


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_split_reconstructs_on_twisted(seed, k):
    rng = np.random.default_rng(seed)
    J = make_twisted(0.1)(rng.uniform(-0.5, 0.5, 4))
    v = random_value(rng, 2, k)
    comps = bidegree_split(v, projector_10(J))
    total = ExteriorValue.zero(2)
    for (p, q), c in comps.items():
        assert p + q == k
        total = total + c
    assert (total - v).max_abs() < 1e-12


def test_split_components_are_pure():
    rng = np.random.default_rng(4)
    J = make_twisted(0.1)(np.array([0.1, 0.2, 0.3, 0.1]))
    P = p10_matrix(J)
    comps = split_with(random_value(rng, 2, 2), P)
    for key, c in comps.items():
        assert bidegree_of(c, P) == key


def test_strongly_positive_single_term():
    dec = StronglyPositiveDecomposition(1, ((1.0, (np.array([1.0, 1j]),)),))
    v = strongly_positive_form(dec)
    assert v[(0, 1)] == pytest.approx(2.0)


def test_strongly_positive_top_degree_is_positive_volume():
    a1, a2 = np.array([1, 1j, 0, 0]), np.array([0, 0, 1, 1j])
    dec = StronglyPositiveDecomposition(2, ((1.0, (a1, a2)), (1.0, (a1 + a2, a2))))
    v = strongly_positive_form(dec)
    assert set(v.coefficients) == {(0, 1, 2, 3)}
    assert v.top().real > 0 and abs(v.top().imag) < 1e-12


def test_strongly_positive_empty_and_negative():
    assert not strongly_positive_form(StronglyPositiveDecomposition(2)).coefficients
    with pytest.raises(NegativeWeight):
        strongly_positive_form(StronglyPositiveDecomposition(1, ((-1.0, (np.array([1, 1j]),)),)))


def test_positivity_of_beta1_on_twisted():
    x = np.array([0.2, -0.1, 0.3, 0.2])
    J = make_twisted(0.2)(x)
    P = p10_matrix(J)
    beta = ExteriorValue.zero(2)
    for a in range(4):
        alpha = ExteriorValue.from_covector(2, P[:, a])
        beta = beta + wedge(alpha, alpha.conj()) * 0.5j
    assert is_positive_sample(beta, J, m=2000).positive


def test_negative_form_has_witness():
    J = make_standard(1)(np.zeros(2))
    res = is_positive_sample(wedge(dz(1, 0), dzbar(1, 0)) * -1j, J, m=100)
    assert not res.positive and res.witness is not None


def test_indefinite_hermitian_form_detected():
    J = make_standard(2)(np.zeros(4))
    v = wedge(dz(2, 0), dzbar(2, 1)) * 1j + wedge(dz(2, 1), dzbar(2, 0)) * 1j
    res = is_positive_sample(v, J, m=10_000)
    assert not res.positive
