"""Eigensystem contract, projections, functional calculus, certificates."""

import numpy as np
import pytest

from hpsig import fixtures
from hpsig.spectral import (NoSpectralGapError, eig_hermitian, functional_calculus,
                            invertibility_certificate, positive_projection,
                            positive_rank)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def test_identity_eigenvalues():
    es = eig_hermitian(np.eye(3))
    assert es.eigenvalues == pytest.approx([1.0, 1.0, 1.0])


def test_diagonal_eigenvalues_sorted():
    es = eig_hermitian(np.diag([5.0, -2.0, 0.0]))
    assert es.eigenvalues == pytest.approx([-2.0, 0.0, 5.0])


def test_random_reconstruction_residual():
    rng = np.random.default_rng(7)
    a = random_hermitian(rng, 50)
    es = eig_hermitian(a)
    norm = np.linalg.norm(a, 2)
    assert es.residual <= 1e-10 * norm
    assert np.linalg.norm(es.vectors.conj().T @ es.vectors - np.eye(50), 2) <= 1e-10


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_deterministic_bytes():
    rng = np.random.default_rng(3)
    a = random_hermitian(rng, 20)
    e1 = eig_hermitian(a)
    e2 = eig_hermitian(a.copy())
    assert e1.eigenvalues.tobytes() == e2.eigenvalues.tobytes()
    assert e1.vectors.tobytes() == e2.vectors.tobytes()


def test_positive_projection_scalars():
    assert positive_projection(np.array([[1.0]])) == pytest.approx(np.array([[1.0]]))
    p = positive_projection(np.diag([3.0, -1.0]))
    assert p == pytest.approx(np.diag([1.0, 0.0]))


def test_positive_projection_needs_gap():
    with pytest.raises(NoSpectralGapError):
        positive_projection(np.diag([0.0, 1.0]))


def test_positive_projection_on_harmonic_model():
    # 3-dimensional model: (D+S) has eigenvalues {1, -1, 1}, (D-S) the negatives
    c = fixtures.cp2_model()
    assert positive_rank(c.b_plus_on()) == 2
    assert positive_rank(c.b_minus_on()) == 1


def test_projection_properties():
    rng = np.random.default_rng(11)
    a = random_hermitian(rng, 16) + 3 * np.eye(16)  # comfortably gapped? not nec.
    vals = np.linalg.eigvalsh(a)
    if np.abs(vals).min() < 1e-6:
        a = a + 2 * np.eye(16)
    p = positive_projection(a)
    assert np.linalg.norm(p @ p - p, 2) <= 1e-10
    assert np.linalg.norm(p - p.conj().T, 2) <= 1e-10


def test_complement_projections_sum_to_identity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = random_hermitian(rng, 12)
        if np.abs(np.linalg.eigvalsh(a)).min() < 1e-3:
            continue
        assert positive_projection(a) + positive_projection(-a) == pytest.approx(np.eye(12))
        assert positive_rank(a) + positive_rank(-a) == 12


def test_functional_calculus_trivial_values():
    z = np.zeros((3, 3))
    assert functional_calculus(z, "x/sqrt(1+x^2)") == pytest.approx(z)
    assert functional_calculus(z, "1/sqrt(1+x^2)") == pytest.approx(np.eye(3))
    a = np.diag([3.0, -4.0])
    assert functional_calculus(a, "sign_power", 1.0) == pytest.approx(np.diag([1.0, -1.0]))


def test_functional_calculus_algebraic_identity():
    rng = np.random.default_rng(13)
    for _ in range(10):
        a = random_hermitian(rng, 15)
        f = functional_calculus(a, "1/sqrt(1+x^2)")
        g = functional_calculus(a, "x/sqrt(1+x^2)")
        assert np.linalg.norm(f @ f + g @ g - np.eye(15), 2) <= 1e-12 * 15
        # commutes with a, and g(a) a is positive semidefinite
        assert np.linalg.norm(g @ a - a @ g, 2) <= 1e-10 * max(1, np.linalg.norm(a, 2))
        assert np.linalg.eigvalsh(g @ a).min() >= -1e-10


def test_power_functions_demand_gap():
    with pytest.raises(NoSpectralGapError):
        functional_calculus(np.diag([0.0, 2.0]), "sign_power", 0.5)
    # abs_power is defined without a gap
    out = functional_calculus(np.diag([0.0, 2.0]), "abs_power", 2.0)
    assert out == pytest.approx(np.diag([0.0, 4.0]))


def test_invertibility_certificate_basics():
    cert = invertibility_certificate(np.eye(4))
    assert cert.passed and cert.min_singular == pytest.approx(1.0)
    cert = invertibility_certificate(np.diag([1.0, 0.0]))
    assert not cert.passed and cert.min_singular == pytest.approx(0.0)


def test_invertibility_certificate_on_sphere_model():
    c = fixtures.sphere_model()
    cert = invertibility_certificate(c.b_minus_on())
    assert cert.passed and cert.min_singular == pytest.approx(1.0)
