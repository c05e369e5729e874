"""Dirac matrices, two-particle operators and the bi-spinor evolution operator.

Dirac representation: gamma^0 = diag(1, 1, -1, -1), gamma^i has the Pauli
block sigma^i above the diagonal and -sigma^i below it.  Operators are plain
complex ``numpy`` arrays (4x4 for one particle, 16x16 for two).
"""
import numpy as np
from scipy.linalg import expm

from .minkowski import HBAR, dot, lower

ETA = np.diag([1, -1, -1, -1])
I4 = np.eye(4, dtype=complex)
I16 = np.eye(16, dtype=complex)

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def gamma_matrices():
    """(gamma^0, gamma^1, gamma^2, gamma^3); entries are exact small integers / i."""
    g0 = np.diag([1, 1, -1, -1]).astype(complex)
    gs = []
    zero = np.zeros((2, 2), dtype=complex)
    for s in _PAULI:
        gs.append(np.block([[zero, s], [-s, zero]]))
    return (g0, *gs)


_GAMMA = np.array(gamma_matrices())


def two_particle_gammas():
    """gamma_1^mu = gamma^mu (x) E_4 and gamma_2^mu = E_4 (x) gamma^mu."""
    g1 = np.array([np.kron(g, I4) for g in _GAMMA])
    g2 = np.array([np.kron(I4, g) for g in _GAMMA])
    return g1, g2


_GAMMA_1, _GAMMA_2 = two_particle_gammas()


def anticommutator(a, b):
    return a @ b + b @ a


def slash(p, which="single"):
    """gamma^mu p_mu = gamma^0 p^0 - gamma . p for ``which`` in {"single", 1, 2}."""
    pl = lower(p)
    if which == "single":
        gam = _GAMMA
    elif which == 1:
        gam = _GAMMA_1
    elif which == 2:
        gam = _GAMMA_2
    else:
        raise ValueError("which must be 'single', 1 or 2")
    return np.tensordot(pl, gam, axes=(0, 0))


def dirac_adjoint(op):
    """gamma^0 op^dagger gamma^0 (4x4)."""
    g0 = _GAMMA[0]
    return g0 @ op.conj().T @ g0


def dirac_hamiltonian(p, m):
    """H = m gamma.p - m^2 (the m^2 term times the identity)."""
    if not m > 0:
        raise ValueError("mass must be positive")
    return m * slash(p) - m * m * I4


def _cos_sinc(z):
    """cos(sqrt z) and sin(sqrt z)/sqrt z as entire functions of real z."""
    if abs(z) < 1e-8:
        return 1.0 - z / 2.0 + z * z / 24.0, 1.0 - z / 6.0 + z * z / 120.0
    if z > 0:
        r = np.sqrt(z)
        return np.cos(r), np.sin(r) / r
    r = np.sqrt(-z)
    return np.cosh(r), np.sinh(r) / r


def evolution_closed_form(p, m, S, hbar=HBAR):
    """exp(-i H S / hbar) from slash(p)^2 = p^2: a phase times cos/sin of m|p|S/hbar.

    Spacelike p switches to hyperbolic functions; near-null p uses the series.
    """
    a = m * S / hbar
    c, sc = _cos_sinc(a * a * dot(p, p))
    phase = np.exp(1j * m * m * S / hbar)
    return phase * (c * I4 - 1j * a * sc * slash(p))


def evolution_operator(p, m, S, hbar=HBAR, check=True):
    """exp(-(i/hbar) H S) by scaling-and-squaring, cross-checked against the closed form."""
    if S < 0:
        raise ValueError("proper time S must be non-negative")
    T = expm(-1j / hbar * dirac_hamiltonian(p, m) * S)
    if check:
        ref = evolution_closed_form(p, m, S, hbar)
        err = np.max(np.abs(T - ref))
        if err > 1e-10 * max(1.0, np.max(np.abs(ref))):
            raise ArithmeticError("matrix exponential disagrees with closed form by %.3g" % err)
    return T


def two_particle_hamiltonian(p1, m1, p2, m2):
    """H_1 (x) E + E (x) H_2 built from the two-particle gammas (16x16)."""
    return (m1 * slash(p1, 1) - m1 * m1 * I16) + (m2 * slash(p2, 2) - m2 * m2 * I16)


__all__ = [
    "ETA", "I4", "I16", "gamma_matrices", "two_particle_gammas", "slash",
    "dirac_hamiltonian", "dirac_adjoint", "evolution_operator",
    "evolution_closed_form", "anticommutator", "two_particle_hamiltonian",
]
