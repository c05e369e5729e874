"""Proper-time propagators for the two-particle bi-spinor system.

Pieces: the matrix Gaussian identity over momenta, free lattice kernels,
the zeroth-order Kronecker product, first-order corrections from the
interaction momenta and the proper-time fixing of ``P_eps``.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import expm, expm_frechet

from .action import DELTA_CUT, w_functional_nodes
from .canonical import r_terms
from .errors import NoShellReturn, SingularA
from .minkowski import HBAR
from .spinor import I4, dirac_hamiltonian, evolution_operator, slash
from .worldline import ShiftField, midpoints, node_proper_times, total_proper_time

TOL_DET = 1e-12


@dataclass(frozen=True, eq=False)
class PropagatorResult:
    value: np.ndarray
    order: int
    S1: float
    S2: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "order": self.order,
            "S1": self.S1,
            "S2": self.S2,
            "real": self.value.real.tolist(),
            "imag": self.value.imag.tolist(),
            "diagnostics": self.diagnostics,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        value = np.array(d["real"]) + 1j * np.array(d["imag"])
        return cls(value, d["order"], d["S1"], d["S2"], d["diagnostics"])


# -- Gaussian identity ---------------------------------------------------------

def gaussian_matrix_integral(A, gammas, hbar=HBAR, tol=TOL_DET):
    """int d^n p exp[-(i/hbar)(A_ab p_a p_b + p_a G_a)] for commuting-slot operators G_a.

    Prefactor (pi hbar)^(n/2) e^(-i n pi/4) / sqrt(det A) (A positive), times
    exp[(i/4 hbar) A^-1_ab G_a G_b] with the operator product symmetrized.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T):
        raise ValueError("A must be a real symmetric square matrix")
    if len(gammas) != n:
        raise ValueError("need one operator per Gaussian variable")
    det = np.linalg.det(A)
    scale = max(1.0, np.max(np.abs(A))) ** n
    if abs(det) < tol * scale:
        raise SingularA("det A = %.3g is below tolerance" % det)
    if np.any(np.linalg.eigvalsh(A) <= 0):
        raise ValueError("A must be positive definite")
    G = [np.atleast_2d(np.asarray(g, dtype=complex)) for g in gammas]
    Ainv = np.linalg.inv(A)
    expo = np.zeros_like(G[0])
    for a in range(n):
        for b in range(n):
            expo = expo + Ainv[a, b] * 0.5 * (G[a] @ G[b] + G[b] @ G[a])
    pref = (np.pi * hbar) ** (n / 2) * np.exp(-1j * n * np.pi / 4) / np.sqrt(det)
    return pref * expm(1j / (4 * hbar) * expo)


def _neville_zero(x, y):
    """Polynomial through (x_j, y_j) evaluated at 0."""
    y = list(y)
    n = len(x)
    for k in range(1, n):
        for j in range(n - k):
            y[j] = (x[j + k] * y[j] - x[j] * y[j + 1]) / (x[j + k] - x[j])
    return y[0]


def damped_gaussian_quadrature(A, c, hbar=HBAR, levels=6, chunk=2000):
    """Scalar Gaussian integral by real-axis trapezoid with damping exp(-eta |p|^2).

    The damped integral is analytic in eta; values at eta_0 2^-j are
    extrapolated to eta = 0 with Neville's scheme.  Returns (value, table).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = A.shape[0]
    if n not in (1, 2):
        raise ValueError("quadrature oracle handles n = 1 or 2")
    lam = np.linalg.eigvalsh(A)
    a_min, a_max = lam[0] / hbar, lam[-1] / hbar
    etas = 0.25 * a_min * 0.5 ** np.arange(levels)
    shift = np.max(np.abs(c)) / (2 * hbar * a_min)
    values = []
    for eta in etas:
        L = np.sqrt(37.0 / eta) + shift
        h = np.pi * np.sqrt(eta) / (np.sqrt(37.0) * (a_max + eta))
        M = int(np.ceil(L / h))
        p = h * np.arange(-M, M + 1)
        if n == 1:
            expo = -(1j / hbar) * (A[0, 0] * p * p + c[0] * p) - eta * p * p
            values.append(h * np.sum(np.exp(expo)))
            continue
        total = 0.0
        q = p[None, :]
        for start in range(0, p.size, chunk):
            r = p[start:start + chunk, None]
            expo = (-(1j / hbar) * (A[0, 0] * r * r + 2 * A[0, 1] * r * q + A[1, 1] * q * q
                                     + c[0] * r + c[1] * q) - eta * (r * r + q * q))
            total += np.sum(np.exp(expo))
        values.append(h * h * total)
    return _neville_zero(etas, values), list(zip(etas, values))


# -- free and zeroth-order kernels ----------------------------------------------

def free_propagator_lattice(m, p, S, steps, hbar=HBAR):
    """Ordered product of ``steps`` slices exp(-(i/hbar) H(p) dS) at fixed momentum."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if S < 0:
        raise ValueError("proper time S must be non-negative")
    step = expm(-1j / hbar * dirac_hamiltonian(p, m) * (S / steps))
    out = I4.copy()
    for _ in range(int(steps)):
        out = step @ out
    return out


def zeroth_order_propagator(m1, m2, p1, p2, S1, S2, hbar=HBAR):
    """Product of free single-particle kernels, T1 (x) T2."""
    T1 = evolution_operator(p1, m1, S1, hbar)
    T2 = evolution_operator(p2, m2, S2, hbar)
    return PropagatorResult(np.kron(T1, T2), 0, float(S1), float(S2),
                            {"factor_1": "evolution_operator", "factor_2": "evolution_operator"})


# -- first order ----------------------------------------------------------------

def interaction_momenta(w1, w2, p1, p2, delta_cut=DELTA_CUT, include_self=False):
    """R_1, R_2 at the cell midpoints of each worldline for constant momenta.

    The partner field is N_b p_b (eps = 0, mu = 0 on the reduced shell).
    Without ``include_self`` only the partner sums enter, which keeps R
    linear in each particle's charge.
    """
    out = []
    for own, partner, po, pp in ((w1, w2, p1, p2), (w2, w1, p2, p1)):
        Fo = own.lapse[:, None] * np.asarray(po, dtype=float)[None, :]
        Fp = partner.lapse[:, None] * np.asarray(pp, dtype=float)[None, :]
        if not include_self:
            Fo = np.zeros_like(Fo)
        tau_mid = 0.5 * (own.tau[:-1] + own.tau[1:])
        s = node_proper_times(own)
        s_mid = s[:-1] + 0.5 * own.h * (0.75 * own.lapse[:-1] + 0.25 * own.lapse[1:])
        out.append(r_terms(own, partner, ShiftField.zeros(own.K), ShiftField.zeros(partner.K),
                           Fo, Fp, X=midpoints(own), tau=tau_mid, s=s_mid,
                           eps_at=np.zeros(own.K - 1), delta_cut=delta_cut))
    return out[0], out[1]


def _slices(w, S):
    s = node_proper_times(w)
    return np.diff(s) * (S / s[-1])


def _ordered(m, p, R, ds, hbar):
    """Exact chronological product and its exact first-order term in R."""
    H0 = dirac_hamiltonian(p, m)
    U = I4.copy()
    D = np.zeros((4, 4), dtype=complex)
    for Rc, dsc in zip(R, ds):
        X = -1j / hbar * H0 * dsc
        E = 1j / hbar * m * slash(Rc) * dsc
        F, L = expm_frechet(X, E)
        D = F @ D + L @ U
        U = F @ U
    return U, D


def _full_product(m, p, R, ds, hbar):
    U = I4.copy()
    for Rc, dsc in zip(R, ds):
        U = expm(-1j / hbar * dirac_hamiltonian(np.asarray(p) - Rc, m) * dsc) @ U
    return U


def first_order_propagator(m1, m2, p1, p2, S1, S2, profiles, w1, w2, hbar=HBAR,
                           insert_on=(1, 2), delta_cut=DELTA_CUT, full=False):
    """Order-one correction T1' (x) T2 + T1 (x) T2' from one R insertion.

    Time slices are the worldline cells rescaled to total proper times
    ``S1``/``S2``; each slice generator is m gamma.(p - R) - m^2 with R at
    the cell midpoint and later slices multiply from the left.  With
    ``full=True`` the exact ordered product including R is also returned in
    the diagnostics (as the key ``full``) for remainder studies.
    """
    e1, e2 = profiles
    w1, w2 = w1.with_charge(e1), w2.with_charge(e2)
    R1, R2 = interaction_momenta(w1, w2, p1, p2, delta_cut)
    T1, D1 = _ordered(m1, p1, R1, _slices(w1, S1), hbar)
    T2, D2 = _ordered(m2, p2, R2, _slices(w2, S2), hbar)
    value = np.zeros((16, 16), dtype=complex)
    if 1 in insert_on:
        value += np.kron(D1, T2)
    if 2 in insert_on:
        value += np.kron(T1, D2)
    diag = {
        "slices_1": int(w1.K - 1), "slices_2": int(w2.K - 1),
        "max_R1": float(np.abs(R1).max()), "max_R2": float(np.abs(R2).max()),
        "insert_on": list(insert_on),
        "lambda_dependence": "none on the constraint surface",
    }
    result = PropagatorResult(value, 1, float(S1), float(S2), diag)
    if not full:
        return result
    U1 = _full_product(m1, p1, R1, _slices(w1, S1), hbar)
    U2 = _full_product(m2, p2, R2, _slices(w2, S2), hbar)
    return result, np.kron(U1, U2)


# -- proper-time fixing ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProperTimeFix:
    S1: float
    S2: float
    s1: np.ndarray
    P1: np.ndarray
    s2: np.ndarray
    P2: np.ndarray
    residual1: float
    residual2: float


def _shell_return(s, P, shell, window, tol, own_S):
    lo, hi = window
    inside = (s >= lo) & (s <= hi)
    if not np.any(inside):
        raise NoShellReturn("search window [%g, %g] holds no grid points" % (lo, hi))
    dev = P - shell
    idx = np.flatnonzero(inside)
    if np.all(np.abs(dev[idx]) <= tol):
        return min(own_S, hi), float(np.max(np.abs(dev[idx])))
    for a, b in zip(idx[:-1], idx[1:]):
        if abs(dev[a]) <= tol:
            return float(s[a]), float(abs(dev[a]))
        if dev[a] * dev[b] < 0:
            t = dev[a] / (dev[a] - dev[b])
            return float(s[a] + t * (s[b] - s[a])), 0.0
    if abs(dev[idx[-1]]) <= tol:
        return float(s[idx[-1]]), float(abs(dev[idx[-1]]))
    raise NoShellReturn("P_eps does not return to m^2/2 within [%g, %g]" % (lo, hi))


def proper_time_fixing(profile1, profile2, w1, w2, eps1=None, eps2=None,
                       lambda3=0.0, lambda4=0.0, windows=None, tol_shell=None,
                       delta_cut=DELTA_CUT):
    """Integrate dP_eps/ds = -mu W - lambda from P_eps = m^2/2 along each worldline.

    ``W`` is the proper-time form of the interaction functional (its
    parameter form divided by the lapse).  ``S`` is where ``P_eps`` first
    returns to ``m^2/2`` inside the search window.  The default window runs
    from the last node where ``mu W`` is nonzero to the end of the worldline;
    if ``P_eps`` sits on the shell throughout it, the worldline's own proper
    time is returned.
    """
    w1, w2 = w1.with_charge(profile1), w2.with_charge(profile2)
    eps1 = ShiftField.zeros(w1.K) if eps1 is None else eps1
    eps2 = ShiftField.zeros(w2.K) if eps2 is None else eps2
    out = []
    for which, w, eps, lam in ((1, w1, eps1, lambda3), (2, w2, eps2, lambda4)):
        s = node_proper_times(w)
        S = s[-1]
        W = w_functional_nodes(w1, w2, which, delta_cut) / w.lapse
        drive = -eps.velocity(w) * W
        shell = 0.5 * w.mass ** 2
        P = shell + cumulative_trapezoid(drive - lam, s, initial=0.0)
        tol = 1e-8 * w.mass ** 2 if tol_shell is None else tol_shell
        if windows is None:
            active = np.flatnonzero(drive != 0.0)
            # the initial node is on shell by construction and never counts
            window = (s[active[-1]] if active.size else s[1], S)
        else:
            window = windows[which - 1]
        Sa, res = _shell_return(s, P, shell, window, tol, S)
        out.append((Sa, s, P, res))
    (S1, s1, P1, r1), (S2, s2, P2, r2) = out
    return ProperTimeFix(S1, S2, s1, P1, s2, P2, r1, r2)


__all__ = [
    "PropagatorResult", "gaussian_matrix_integral", "damped_gaussian_quadrature",
    "free_propagator_lattice", "zeroth_order_propagator", "first_order_propagator",
    "interaction_momenta", "proper_time_fixing", "ProperTimeFix",
]
