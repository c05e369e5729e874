"""Generalized canonical structure of the modified action.

Everything lives on the nodes of the two worldlines.  Velocities are
proper-time derivatives ``u = (dx/dtau) / N`` and ``mu = (d eps/dtau) / N``.
Interaction momenta ``R`` are lightcone sums of a partner vector field; the
field is either the partner velocity (momenta from velocities) or the partner
momentum divided by ``1 + mu`` (perturbative inversion).
"""
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .action import DELTA_CUT, _charge_modification, _pairs, fokker_action
from .errors import NoContraction, SpacelikeMomentum
from .lightcone import crossings, interpolate_nodal
from .minkowski import dot
from .spinor import I16, slash
from .worldline import (
    ShiftField, clock, node_proper_times, total_proper_time, velocities,
)


@dataclass(frozen=True, eq=False)
class CanonicalState:
    w1: object
    w2: object
    p1: np.ndarray
    p2: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    P_eps1: np.ndarray
    P_eps2: np.ndarray
    eps1: ShiftField
    eps2: ShiftField
    mu1: np.ndarray
    mu2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    lambda4: np.ndarray

    def __post_init__(self):
        K1, K2 = self.w1.K, self.w2.K
        for name, K in (("p1", K1), ("R1", K1), ("P_eps1", K1), ("mu1", K1), ("eta1", K1),
                        ("lambda1", K1), ("lambda3", K1), ("p2", K2), ("R2", K2),
                        ("P_eps2", K2), ("mu2", K2), ("eta2", K2), ("lambda2", K2),
                        ("lambda4", K2)):
            if np.shape(getattr(self, name))[0] != K:
                raise ValueError("%s has the wrong grid length" % name)
        if self.eps1.K != K1 or self.eps2.K != K2:
            raise ValueError("shift fields do not match the worldline grids")

    @property
    def S1(self):
        return total_proper_time(self.w1)

    @property
    def S2(self):
        return total_proper_time(self.w2)

    def replace(self, **changes):
        return replace(self, **changes)


def node_weights(w):
    """Trapezoid weights in proper time on the nodes of ``w``."""
    ds = 0.5 * w.h * (w.lapse[:-1] + w.lapse[1:])
    out = np.zeros(w.K)
    out[:-1] += 0.5 * ds
    out[1:] += 0.5 * ds
    return out


def proper_velocities(w):
    return velocities(w) / w.lapse[:, None]


def _vector_sums(X, wb, field, eps_b, lo=None, hi=None, s_nodes=None):
    """Per-row sums of e_b F w and (eps_b de_b/ds) F w over roots on ``wb``."""
    M = X.shape[0]
    out_e = np.zeros((M, 4))
    out_d = np.zeros((M, 4))
    if wb.charge_profile.is_off:
        return out_e, out_d
    cr = crossings(X, wb, lo, hi)
    if len(cr) == 0:
        return out_e, out_d
    s = clock(wb, cr.cell, cr.t, s_nodes)
    F = interpolate_nodal(field, cr, wb.h) * cr.weight[:, None]
    e = wb.charge_profile(s)
    de = wb.charge_profile.derivative(s) * interpolate_nodal(eps_b, cr, wb.h)
    np.add.at(out_e, cr.row, e[:, None] * F)
    np.add.at(out_d, cr.row, de[:, None] * F)
    return out_e, out_d


def r_terms(own, partner, eps_own, eps_partner, field_own, field_partner,
            X=None, tau=None, s=None, eps_at=None, delta_cut=DELTA_CUT):
    """Interaction momentum R of ``own`` at evaluation points (default: its nodes).

    ``field_*`` are nodal tau-velocity-like vector fields of each worldline.
    The self term carries the ``e + 2 eps de/ds`` prefactor, the cross term
    ``e + eps de/ds``, plus ``e`` times the partner's ``eps de/ds`` sum.
    """
    if X is None:
        X, tau = own.points, own.tau
        s = node_proper_times(own)
        eps_at = eps_own.values
    half = delta_cut * own.h
    self_e, _ = _vector_sums(X, own, field_own, eps_own.values, tau - half, tau + half)
    cross_e, cross_d = _vector_sums(X, partner, field_partner, eps_partner.values)
    e = own.charge_profile(s)
    de = own.charge_profile.derivative(s)
    return ((e + 2.0 * eps_at * de)[:, None] * self_e
            + (e + eps_at * de)[:, None] * cross_e
            + e[:, None] * cross_d)


def momenta_from_velocities(w1, w2, eps1, eps2, delta_cut=DELTA_CUT):
    """Canonical momenta p = u (1 + mu) + R and P_eps = u^2 / 2 on both grids."""
    V1, V2 = velocities(w1), velocities(w2)
    u1, u2 = V1 / w1.lapse[:, None], V2 / w2.lapse[:, None]
    mu1, mu2 = eps1.velocity(w1), eps2.velocity(w2)
    R1 = r_terms(w1, w2, eps1, eps2, V1, V2, delta_cut=delta_cut)
    R2 = r_terms(w2, w1, eps2, eps1, V2, V1, delta_cut=delta_cut)
    z1, z2 = np.zeros(w1.K), np.zeros(w2.K)
    return CanonicalState(
        w1=w1, w2=w2,
        p1=u1 * (1 + mu1)[:, None] + R1, p2=u2 * (1 + mu2)[:, None] + R2,
        R1=R1, R2=R2,
        P_eps1=0.5 * dot(u1, u1), P_eps2=0.5 * dot(u2, u2),
        eps1=eps1, eps2=eps2, mu1=mu1, mu2=mu2,
        eta1=eps1.values.copy(), eta2=eps2.values.copy(),
        lambda1=z1, lambda2=z2, lambda3=z1.copy(), lambda4=z2.copy(),
    )


def r_from_momenta(state, v1, v2, delta_cut=DELTA_CUT):
    """R[p1, p2]: partner velocities replaced by v / (1 + mu) (v = current estimate)."""
    w1, w2 = state.w1, state.w2
    F1 = w1.lapse[:, None] * v1 / (1 + state.mu1)[:, None]
    F2 = w2.lapse[:, None] * v2 / (1 + state.mu2)[:, None]
    R1 = r_terms(w1, w2, state.eps1, state.eps2, F1, F2, delta_cut=delta_cut)
    R2 = r_terms(w2, w1, state.eps2, state.eps1, F2, F1, delta_cut=delta_cut)
    return R1, R2


class VelocityEstimate(NamedTuple):
    v1: np.ndarray  # estimate of u_1 (1 + mu_1)
    v2: np.ndarray
    truncation: float  # size of the second Picard correction, nan if not computed


def invert_momenta_first_order(state, diagnose=True, delta_cut=DELTA_CUT):
    """u (1 + mu) = p - R[p] to first order in the charges.

    One Picard step seeded with R = 0.  With ``diagnose`` a second step
    estimates the truncation error and ``NoContraction`` is raised when it
    moves further than the first.
    """
    p1, p2 = state.p1, state.p2
    R1, R2 = r_from_momenta(state, p1, p2, delta_cut)
    v1, v2 = p1 - R1, p2 - R2
    if not diagnose:
        return VelocityEstimate(v1, v2, float("nan"))
    first = max(np.abs(R1).max(), np.abs(R2).max())
    S1, S2 = r_from_momenta(state, v1, v2, delta_cut)
    second = max(np.abs(S1 - R1).max(), np.abs(S2 - R2).max())
    if second > first:
        raise NoContraction("second Picard step (%.3g) exceeds the first (%.3g)"
                            % (second, first))
    return VelocityEstimate(v1, v2, float(second))


def _shell_norm(p, R):
    q = p - R
    qq = dot(q, q)
    if np.any(qq <= 0):
        raise SpacelikeMomentum("(p - R)^2 <= 0 at %d node(s)" % int(np.sum(qq <= 0)))
    return np.sqrt(qq)


def epsilon_velocities(state):
    """mu = -1 + sqrt((p - R)^2) / sqrt(2 P_eps) for both particles."""
    out = []
    for p, R, P in ((state.p1, state.R1, state.P_eps1), (state.p2, state.R2, state.P_eps2)):
        if np.any(P <= 0):
            raise SpacelikeMomentum("P_eps must be positive")
        out.append(-1.0 + _shell_norm(p, R) / np.sqrt(2.0 * P))
    return tuple(out)


def constraints(state):
    """(phi_1, phi_2, phi_3, phi_4) on the nodes."""
    q1, q2 = state.p1 - state.R1, state.p2 - state.R2
    phi1 = 2.0 * state.P_eps1 * (1 + state.mu1) ** 2 - dot(q1, q1)
    phi2 = 2.0 * state.P_eps2 * (1 + state.mu2) ** 2 - dot(q2, q2)
    return phi1, phi2, state.eps1.values - state.eta1, state.eps2.values - state.eta2


def interaction_terms(state, delta_cut=DELTA_CUT):
    """I_int plus the int eps (de/ds) W terms, from the worldline geometry."""
    pairs = _pairs(state.w1, state.w2, delta_cut)
    base = fokker_action(state.w1, state.w2, pairs=pairs)
    return base.interaction + _charge_modification(pairs, state.eps1.values, state.eps2.values)


def generalized_hamiltonian(state, spinor=False, delta_cut=DELTA_CUT):
    """Generalized Hamiltonian; with ``spinor=True`` the square roots become gamma.(p - R)."""
    w1, w2 = state.w1, state.w2
    om1, om2 = node_weights(w1), node_weights(w2)
    const = (interaction_terms(state, delta_cut)
             - 0.5 * w1.mass ** 2 * state.S1 - 0.5 * w2.mass ** 2 * state.S2)
    if not spinor:
        body = 0.0
        for om, p, R, P in ((om1, state.p1, state.R1, state.P_eps1),
                            (om2, state.p2, state.R2, state.P_eps2)):
            body += np.sum(om * (-P + np.sqrt(2.0 * P) * _shell_norm(p, R)))
        return float(body + const)
    H = (const - np.sum(om1 * state.P_eps1) - np.sum(om2 * state.P_eps2)) * I16
    for which, om, p, R, P in ((1, om1, state.p1, state.R1, state.P_eps1),
                               (2, om2, state.p2, state.R2, state.P_eps2)):
        q = np.sum((om * np.sqrt(2.0 * P))[:, None] * (p - R), axis=0)
        H = H + slash(q, which)
    return H


def legendre_sum(state):
    """sum over particles of int (p . u + P_eps mu) ds."""
    total = 0.0
    for w, p, P, mu in ((state.w1, state.p1, state.P_eps1, state.mu1),
                        (state.w2, state.p2, state.P_eps2, state.mu2)):
        u = proper_velocities(w)
        total += np.sum(node_weights(w) * (dot(p, u) + P * mu))
    return float(total)


def canonical_action(state, delta_cut=DELTA_CUT):
    """Legendre form minus the Hamiltonian plus the multiplier terms lambda_i phi_i."""
    phi1, phi2, phi3, phi4 = constraints(state)
    om1, om2 = node_weights(state.w1), node_weights(state.w2)
    multipliers = (np.sum(om1 * state.lambda1 * phi1) + np.sum(om2 * state.lambda2 * phi2)
                   + np.sum(om1 * state.lambda3 * phi3) + np.sum(om2 * state.lambda4 * phi4))
    return legendre_sum(state) - generalized_hamiltonian(state, delta_cut=delta_cut) + float(multipliers)


_STATE_COLUMNS = ("tau s x0 x1 x2 x3 N p0 p1 p2 p3 R0 R1 R2 R3 P_eps eps mu eta "
                  "lambda_shell lambda_shift")


def save_canonical_state(path, state, which):
    """One particle's canonical data as a whitespace table (worldline table family)."""
    if which == 1:
        w, p, R, P, e, mu, eta, la, lb = (state.w1, state.p1, state.R1, state.P_eps1,
                                           state.eps1, state.mu1, state.eta1,
                                           state.lambda1, state.lambda3)
    else:
        w, p, R, P, e, mu, eta, la, lb = (state.w2, state.p2, state.R2, state.P_eps2,
                                           state.eps2, state.mu2, state.eta2,
                                           state.lambda2, state.lambda4)
    table = np.column_stack([w.tau, node_proper_times(w), w.points, w.lapse, p, R, P,
                             e.values, mu, eta, la, lb])
    np.savetxt(path, table, fmt="%.17g", header=_STATE_COLUMNS)


__all__ = [
    "CanonicalState", "momenta_from_velocities", "invert_momenta_first_order",
    "epsilon_velocities", "constraints", "generalized_hamiltonian", "canonical_action",
    "legendre_sum", "node_weights", "proper_velocities", "r_terms", "r_from_momenta", "save_canonical_state",
    "VelocityEstimate",
]
