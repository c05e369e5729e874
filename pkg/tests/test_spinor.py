import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fokkerlab.minkowski import dot
from fokkerlab.spinor import (
    I4, I16, anticommutator, dirac_adjoint, dirac_hamiltonian, evolution_closed_form,
    evolution_operator, gamma_matrices, slash, two_particle_gammas, two_particle_hamiltonian,
)
from scipy.linalg import expm

vec = arrays(np.float64, 4, elements=st.floats(-3, 3))


def test_gamma_hermiticity():
    g = gamma_matrices()
    assert np.array_equal(g[0], g[0].conj().T)
    for k in range(1, 4):
        assert np.array_equal(g[k], -g[k].conj().T)


def test_two_particle_slots_commute():
    g1, g2 = two_particle_gammas()
    for a in g1:
        for b in g2:
            assert np.array_equal(a @ b, b @ a)
    assert np.array_equal(anticommutator(g1[0], g1[0]), 2 * I16)


@given(vec)
def test_slash_squares_to_p2(p):
    P = slash(p)
    assert np.allclose(P @ P, dot(p, p) * I4, atol=1e-12)
    assert np.allclose(slash(p, 1) @ slash(p, 1), dot(p, p) * I16, atol=1e-12)


def test_slash_rejects_unknown_slot():
    with pytest.raises(ValueError):
        slash(np.ones(4), 3)


@settings(max_examples=50)
@given(vec, st.floats(0.2, 2.0), st.floats(0.0, 3.0))
def test_evolution_is_dirac_unitary(p, m, S):
    T = evolution_operator(p, m, S)
    assert np.allclose(dirac_adjoint(T) @ T, I4, atol=1e-9 * max(1.0, np.abs(T).max() ** 2))


def test_evolution_examples():
    assert np.allclose(evolution_operator(np.array([1.0, 0, 0, 0]), 1.0, 0.0), I4)
    assert np.allclose(evolution_operator(np.array([1.0, 0, 0, 0]), 1.0, np.pi), I4, atol=1e-13)
    # null momentum hits the series branch of the closed form
    p = np.array([1.0, 1.0, 0, 0])
    assert np.allclose(evolution_closed_form(p, 1.0, 0.7),
                       expm(-1j * dirac_hamiltonian(p, 1.0) * 0.7), atol=1e-13)
    with pytest.raises(ValueError):
        evolution_operator(p, 1.0, -1.0)
    with pytest.raises(ValueError):
        dirac_hamiltonian(p, 0.0)


def test_two_particle_hamiltonian_is_a_kronecker_sum():
    p1, p2 = np.array([1.0, 0.2, 0, 0]), np.array([0.8, 0, -0.1, 0.3])
    H = two_particle_hamiltonian(p1, 1.0, p2, 1.5)
    ref = np.kron(dirac_hamiltonian(p1, 1.0), I4) + np.kron(I4, dirac_hamiltonian(p2, 1.5))
    assert np.allclose(H, ref)
