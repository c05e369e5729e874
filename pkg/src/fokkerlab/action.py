"""Fokker action, interaction functionals W_1, W_2 and the modified action.

All parameter integrals use the midpoint rule on the uniform grid: the outer
integral of each double integral samples cell midpoints, the inner integral
is reduced exactly to lightcone roots of the partner's interpolant.  The
cross term is the average of the two orderings (outer over particle 1, outer
over particle 2), which makes the discrete action exactly symmetric under
relabeling.
"""
from dataclasses import asdict, dataclass, fields

import numpy as np

from .lightcone import crossings, interpolate_nodal
from .minkowski import dot
from .worldline import (
    ShiftField, chord_velocities, clock, locate, midpoints, node_proper_times,
)

DELTA_CUT = 2  # self-interaction exclusion half-width, in grid cells


@dataclass(frozen=True)
class ActionBreakdown:
    kinetic_1: float
    kinetic_2: float
    interaction_cross: float
    interaction_self_1: float
    interaction_self_2: float
    modification: float = 0.0

    @property
    def interaction(self):
        return self.interaction_cross + self.interaction_self_1 + self.interaction_self_2

    @property
    def total(self):
        return (self.kinetic_1 + self.kinetic_2 + self.interaction + self.modification)

    @classmethod
    def csv_header(cls):
        return ",".join([f.name for f in fields(cls)] + ["total"])

    def csv_row(self):
        vals = list(asdict(self).values()) + [self.total]
        return ",".join(repr(float(v)) for v in vals)


class Pair:
    """Lightcone geometry of one ordered term: outer midpoints of ``wa``, roots on ``wb``."""

    def __init__(self, wa, wb, self_term=False, delta_cut=DELTA_CUT):
        self.wa, self.wb = wa, wb
        self.self_term = self_term
        self.h = wa.h
        self.X = midpoints(wa)
        self.da = chord_velocities(wa)
        self.db = chord_velocities(wb)
        if self_term:
            tau_mid = wa.tau[:-1] + 0.5 * wa.h
            half = delta_cut * wa.h
            self.cr = crossings(self.X, wb, tau_mid - half, tau_mid + half)
        else:
            self.cr = crossings(self.X, wb)
        cr = self.cr
        self.G = dot(self.da[cr.row], self.db[cr.cell])
        self.w = cr.weight
        cells = np.arange(wa.K - 1)
        self.s_mid = clock(wa, cells, np.full(wa.K - 1, 0.5 * wa.h))
        self.s_root = clock(wb, cr.cell, cr.t, node_proper_times(wb))

    def outer_clock_shift(self, shift):
        shift = np.asarray(shift, dtype=float)
        return 0.5 * (shift[:-1] + shift[1:])

    def inner_clock_shift(self, shift):
        return interpolate_nodal(shift, self.cr, self.wb.h)

    def charges(self, shift_a=None, shift_b=None):
        """(q_a at outer midpoints, q_b at roots), optionally with shifted clocks."""
        sa, sb = self.s_mid, self.s_root
        if shift_a is not None:
            sa = sa + self.outer_clock_shift(shift_a)
        if shift_b is not None:
            sb = sb + self.inner_clock_shift(shift_b)
        return self.wa.charge_profile(sa), self.wb.charge_profile(sb)

    def charge_variations(self, eps_a, eps_b):
        """First-order charge changes eps * de/ds at outer midpoints and roots."""
        da = self.outer_clock_shift(eps_a) * self.wa.charge_profile.derivative(self.s_mid)
        db = self.inner_clock_shift(eps_b) * self.wb.charge_profile.derivative(self.s_root)
        return da, db

    def bilinear(self, qa, qb):
        """sum_c h qa_c sum_roots qb w (x_a' . x_b')."""
        if len(self.cr) == 0:
            return 0.0
        return float(self.h * np.sum(qa[self.cr.row] * qb * self.G * self.w))


def _pairs(w1, w2, delta_cut):
    return {
        "12": Pair(w1, w2, False, delta_cut),
        "21": Pair(w2, w1, False, delta_cut),
        "11": Pair(w1, w1, True, delta_cut),
        "22": Pair(w2, w2, True, delta_cut),
    }


def kinetic(w, lapse=None):
    N = w.lapse if lapse is None else lapse
    Nm = 0.5 * (N[:-1] + N[1:])
    d = chord_velocities(w)
    return float(w.h * np.sum(0.5 * (dot(d, d) / Nm + w.mass ** 2 * Nm)))


def _interaction(pairs, shift1=None, shift2=None):
    shifts = {"1": shift1, "2": shift2}

    def term(key):
        p = pairs[key]
        qa, qb = p.charges(shifts[key[0]], shifts[key[1]])
        return p.bilinear(qa, qb)

    cross = 0.5 * (term("12") + term("21"))
    return cross, 0.5 * term("11"), 0.5 * term("22")


def _charge_modification(pairs, eps1, eps2):
    """Exact linearization of the interaction in the charge clocks, s -> s + eps."""
    eps = {"1": eps1, "2": eps2}
    total = 0.0
    for key in ("12", "21", "11", "22"):
        p = pairs[key]
        qa, qb = p.charges()
        dqa, dqb = p.charge_variations(eps[key[0]], eps[key[1]])
        total += 0.5 * (p.bilinear(dqa, qb) + p.bilinear(qa, dqb))
    return total


def _kinetic_modification(w, eps):
    """1/2 int (x'^2 / N)(eps' / N) dtau with eps' averaged onto the cells."""
    Nm = 0.5 * (w.lapse[:-1] + w.lapse[1:])
    de = eps.tau_derivative()
    de_mid = 0.5 * (de[:-1] + de[1:])
    d = chord_velocities(w)
    return float(w.h * np.sum(0.5 * dot(d, d) * de_mid / Nm ** 2))


def fokker_action(w1, w2, delta_cut=DELTA_CUT, clock_shift=None, pairs=None):
    """Discretized two-particle Fokker action.

    ``clock_shift=(eps1, eps2)`` evaluates the charges at ``s + eps`` (nodal
    arrays, linearly interpolated); used to probe the charge-clock variation.
    """
    if pairs is None:
        pairs = _pairs(w1, w2, delta_cut)
    shift1, shift2 = clock_shift if clock_shift is not None else (None, None)
    cross, self1, self2 = _interaction(pairs, shift1, shift2)
    return ActionBreakdown(kinetic(w1), kinetic(w2), cross, self1, self2)


def modified_action(w1, w2, eps1, eps2, delta_cut=DELTA_CUT):
    """Fokker action plus its first variation under proper-time shifts.

    The added terms are the kinetic corrections with ``N -> N - eps'`` and
    the charge-derivative terms ``int eps (de/ds) W dtau`` for each particle.
    """
    pairs = _pairs(w1, w2, delta_cut)
    base = fokker_action(w1, w2, pairs=pairs)
    mod = (_kinetic_modification(w1, eps1) + _kinetic_modification(w2, eps2)
           + _charge_modification(pairs, eps1.values, eps2.values))
    return ActionBreakdown(base.kinetic_1, base.kinetic_2, base.interaction_cross,
                           base.interaction_self_1, base.interaction_self_2, mod)


def shifted_action(w1, w2, eps1, eps2, delta_cut=DELTA_CUT):
    """Fokker action with lapse ``N - eps'`` in the kinetic terms and charges read at ``s + eps``.

    Its difference from ``fokker_action`` is the exact finite change whose
    linear part ``modified_action`` supplies.
    """
    pairs = _pairs(w1, w2, delta_cut)
    cross, self1, self2 = _interaction(pairs, eps1.values, eps2.values)
    k1 = kinetic(w1, w1.lapse - eps1.tau_derivative())
    k2 = kinetic(w2, w2.lapse - eps2.tau_derivative())
    return ActionBreakdown(k1, k2, cross, self1, self2)


def charge_modification(w1, w2, eps1, eps2, delta_cut=DELTA_CUT):
    """Only the ``int eps (de/ds) W`` part of the modification."""
    return _charge_modification(_pairs(w1, w2, delta_cut), eps1.values, eps2.values)


def point_state(w, tau):
    """Interpolated position and cell (chord) velocity at parameter ``tau``."""
    j, t = locate(w, tau)
    d = chord_velocities(w)[j]
    return w.points[j] + t * d, d


def w_functional_at(x, v, tau, own, partner, delta_cut=DELTA_CUT):
    """W at a point: self lightcone sum on ``own`` plus cross sum on ``partner``."""
    half = delta_cut * own.h
    total = 0.0
    for wb, excl in ((own, (tau - half, tau + half)), (partner, None)):
        if wb.charge_profile.is_off:
            continue
        if excl is None:
            cr = crossings(x, wb)
        else:
            cr = crossings(x, wb, [excl[0]], [excl[1]])
        if len(cr) == 0:
            continue
        q = wb.charge_profile(clock(wb, cr.cell, cr.t))
        vel = chord_velocities(wb)[cr.cell]
        total += float(np.sum(q * cr.weight * dot(v, vel)))
    return total


def w_functionals(w1, w2, tau, which, delta_cut=DELTA_CUT):
    """W_1(tau) (``which=1``) or W_2(tau) (``which=2``)."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    own, partner = (w1, w2) if which == 1 else (w2, w1)
    x, v = point_state(own, tau)
    return w_functional_at(x, v, tau, own, partner, delta_cut)


def w_functional_nodes(w1, w2, which, delta_cut=DELTA_CUT):
    """W evaluated at every node of particle ``which`` (nodal central velocities)."""
    from .worldline import velocities

    own, partner = (w1, w2) if which == 1 else (w2, w1)
    V = velocities(own)
    out = np.zeros(own.K)
    half = delta_cut * own.h
    for wb, self_term in ((own, True), (partner, False)):
        if wb.charge_profile.is_off:
            continue
        if self_term:
            cr = crossings(own.points, wb, own.tau - half, own.tau + half)
        else:
            cr = crossings(own.points, wb)
        if len(cr) == 0:
            continue
        q = wb.charge_profile(clock(wb, cr.cell, cr.t))
        vel = chord_velocities(wb)[cr.cell]
        np.add.at(out, cr.row, q * cr.weight * dot(V[cr.row], vel))
    return out


__all__ = [
    "ActionBreakdown", "fokker_action", "modified_action", "shifted_action", "w_functionals",
    "w_functional_nodes", "charge_modification", "kinetic", "ShiftField",
]
