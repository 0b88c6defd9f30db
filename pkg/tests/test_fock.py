from math import comb, exp, factorial
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resolvent_lab.fock import (DimensionError, FockSpace, WeightVector, coherent_coeffs,
                                coherent_norm_defect, enumerate_basis, evaluate_polynomial,
                                h_half_norm_sq, inner_t, kernel_coeffs, kernel_pairing_tail,
                                monomial_coeffs, norm_t_sq, sigma_t)
from resolvent_lab.quadrature import integrate_gaussian
from resolvent_lab.operators import _basis_values


def test_enumerate_small():
    assert enumerate_basis(1, 2) == [(0,), (1,), (2,)]
    assert enumerate_basis(2, 1) == [(0, 0), (1, 0), (0, 1)]


def test_enumerate_count_matches_brute_force():
    basis = enumerate_basis(3, 4)
    assert len(basis) == 35 == comb(7, 3)
    brute = {a for a in product(range(5), repeat=3) if sum(a) <= 4}
    assert set(basis) == brute
    degs = [sum(a) for a in basis]
    assert degs == sorted(degs)


def test_weight_vector_validation():
    with pytest.raises(ValueError):
        WeightVector((1.0, 0.0))
    with pytest.raises(ValueError):
        WeightVector(())
    assert WeightVector.dyadic(3).t == (0.5, 0.25, 0.125)


def test_inner_examples():
    assert inner_t([1, 0], [1j, 0], (1, 1)) == pytest.approx(-1j)
    assert inner_t([1, 2j], [1, 2j], (1, 2)) == pytest.approx(3)
    with pytest.raises(DimensionError):
        inner_t([1, 0], [1], (1, 1))


def test_sigma_examples():
    assert sigma_t([1, 0], [1j, 0], (1, 1)) == pytest.approx(-1)
    assert sigma_t([1, 0], [1, 0], (2, 1)) == 0.0
    z = np.array([0.3 + 0.1j, -0.7j])
    assert sigma_t(z, z, (1, 0.5)) == 0.0
    assert sigma_t(z, 4 * z, (1, 0.5)) == 0.0


cvec = st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=2, max_size=2)


@given(cvec, cvec)
def test_inner_conjugate_symmetry(z, w):
    t = (1.0, 0.5)
    assert inner_t(z, w, t) == pytest.approx(np.conj(inner_t(w, z, t)), abs=1e-12)
    assert sigma_t(z, w, t) == pytest.approx(-sigma_t(w, z, t), abs=1e-12)


def test_h_half_norm():
    assert h_half_norm_sq([1, 0, 0], (1, 1, 1)) == 1.0
    assert h_half_norm_sq([1, 1], (0.5, 0.25)) == 6.0
    z = [0.2 + 1j, -0.5]
    assert h_half_norm_sq(3j * np.array(z), (0.5, 0.25)) == pytest.approx(9 * h_half_norm_sq(z, (0.5, 0.25)))
    assert h_half_norm_sq(z, (0.5, 0.25)) == pytest.approx(norm_t_sq(z, (0.5, 0.25)))


def test_coherent_examples():
    sp = FockSpace(1, 8)
    k = coherent_coeffs([0], sp)
    assert k[0] == 1 and not np.any(k[1:])
    k = coherent_coeffs([1.0], sp)
    assert np.vdot(k, k).real == pytest.approx(exp(-1) * sum(1 / factorial(j) for j in range(9)))
    assert 1 - np.vdot(k, k).real == pytest.approx(coherent_norm_defect([1.0], sp), rel=1e-10)


@settings(max_examples=25)
@given(cvec)
def test_coherent_norm_formula(w):
    sp = FockSpace(2, 6, WeightVector((1.0, 0.5)))
    k = coherent_coeffs(w, sp)
    expect = exp(-norm_t_sq(w, sp.t)) * sum(
        np.prod([abs(w[j]) ** (2 * a[j]) / (sp.t.t[j] ** a[j] * factorial(a[j])) for j in range(2)])
        for a in sp.basis)
    assert np.vdot(k, k).real == pytest.approx(expect, rel=1e-10, abs=1e-300)
    assert 1 - np.vdot(k, k).real == pytest.approx(coherent_norm_defect(w, sp), abs=1e-12)


def test_gram_matrix_is_identity():
    sp = FockSpace(2, 4, WeightVector((1.0, 0.5)))
    G = np.zeros((sp.dim, sp.dim), dtype=complex)

    def make(a, b):
        return lambda pts: _basis_values(pts, sp)[:, a] * np.conj(_basis_values(pts, sp)[:, b])

    for a in range(sp.dim):
        for b in range(a, sp.dim):
            G[a, b] = integrate_gaussian(make(a, b), sp.t, q=6)
    G = np.triu(G) + np.triu(G, 1).conj().T
    np.testing.assert_allclose(G, np.eye(sp.dim), atol=1e-12)


def test_reproducing_property(rng):
    sp = FockSpace(2, 5, WeightVector((1.0, 0.25)))
    c = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
    w = np.array([0.4 - 0.3j, 0.1 + 0.2j])
    direct = evaluate_polynomial(c, w, sp)
    pairing = np.vdot(kernel_coeffs(w, sp), c)   # <p, K_w>
    assert pairing == pytest.approx(direct, rel=1e-13)
    K = kernel_coeffs(w, sp)
    np.testing.assert_allclose(K, coherent_coeffs(w, sp) * np.exp(0.5 * norm_t_sq(w, sp.t)), rtol=1e-14)
    assert np.allclose(monomial_coeffs(w, sp), K)


def test_kernel_pairing_tail_bound():
    t = WeightVector((1.0,))
    z, w = [0.8 + 0.2j], [0.5 - 0.6j]
    exact = np.exp(inner_t(w, z, t))
    for D in (4, 8, 16):
        sp = FockSpace(1, D, t)
        trunc = np.vdot(kernel_coeffs(w, sp), kernel_coeffs(z, sp))   # sum w^a conj(z)^a / (t^a a!)
        assert abs(trunc - exact) <= kernel_pairing_tail(z, w, sp) * (1 + 1e-12) + 1e-15


def test_space_helpers():
    sp = FockSpace(2, 3)
    assert sp.dim == 10
    assert sp.position((1, 0)) == 1 and sp.position((0, 1)) == 2
    assert list(sp.low_degree(1)) == [0, 1, 2]
    assert sp.with_degree(5).dim == 21
    assert sp == FockSpace(2, 3) and hash(sp) == hash(FockSpace(2, 3))
