"""Reduction of the lightcone kernel delta(s^2) to sums over crossing roots.

For an evaluation point ``x`` and a partner worldline ``y(tau)``,

    int dtau g(tau) delta((x - y(tau))^2) = sum_roots g(tau*) / |f'(tau*)|,

with ``f(tau) = (x - y(tau))^2``.  The partner is the piecewise-linear
interpolant of its nodes, so on each cell ``f`` is an exact quadratic in the
in-cell offset and the bracketed roots are obtained in closed form.
"""
from dataclasses import dataclass

import numpy as np

from .errors import GrazingRoot
from .minkowski import dot
from .worldline import chord_velocities, clock, node_proper_times

TOL_GRAZE = 1e-8


@dataclass(frozen=True)
class LightconeCrossing:
    tau_root: float
    weight: float
    kind: str  # "retarded" or "advanced"


@dataclass
class Crossings:
    """Flat arrays describing every root found for a batch of evaluation points."""

    row: np.ndarray
    cell: np.ndarray
    t: np.ndarray
    tau: np.ndarray
    slope: np.ndarray  # signed d f / d tau at the root
    u: np.ndarray      # x - y(tau*), shape (n, 4)

    @property
    def weight(self):
        return 1.0 / np.abs(self.slope)

    def __len__(self):
        return self.row.size


def _pick_root(a, b, c, h):
    """Root of a t^2 + b t + c inside [0, h] (one is known to exist)."""
    disc = np.maximum(b * b - 4.0 * a * c, 0.0)
    sq = np.sqrt(disc)
    q = -0.5 * (b + np.where(b >= 0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(a != 0, q / a, np.inf)
        r2 = np.where(q != 0, c / q, np.inf)
    d1 = np.maximum(-r1, r1 - h)
    d2 = np.maximum(-r2, r2 - h)
    t = np.where(d1 <= d2, r1, r2)
    t = np.clip(t, 0.0, h)
    # one Newton polish on the exact quadratic
    fp = 2.0 * a * t + b
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(fp != 0, (a * t * t + b * t + c) / fp, 0.0)
    return np.clip(t - step, 0.0, h)


def crossings(X, partner, exclude_lo=None, exclude_hi=None, tol_graze=TOL_GRAZE):
    """All lightcone roots of ``partner`` seen from each row of ``X`` (shape (M, 4)).

    Roots with ``exclude_lo[i] < tau* < exclude_hi[i]`` are dropped and cells
    lying entirely inside that window are never examined.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = partner.points
    d = chord_velocities(partner)
    h = partner.h
    K = partner.K
    D = X[:, None, :] - Y[None, :, :]
    f = dot(D, D)
    fa, fb = f[:, :-1], f[:, 1:]
    a = np.broadcast_to(dot(d, d), fa.shape)
    b = -2.0 * dot(D[:, :-1, :], d[None, :, :])
    c = fa

    tau_nodes = np.linspace(0.0, 1.0, K)
    active = np.ones(fa.shape, dtype=bool)
    if exclude_lo is not None:
        lo = np.broadcast_to(np.asarray(exclude_lo, dtype=float), (X.shape[0],))[:, None]
        hi = np.broadcast_to(np.asarray(exclude_hi, dtype=float), (X.shape[0],))[:, None]
        inside = (tau_nodes[None, :-1] >= lo) & (tau_nodes[None, 1:] <= hi)
        active &= ~inside

    single = active & (fa * fb < 0)
    at_node = active & (fa == 0)
    last_node = np.zeros_like(active)
    last_node[:, -1] = active[:, -1] & (fb[:, -1] == 0)
    # two roots in one cell without a sign change at the nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        tv = np.where(a != 0, -b / (2.0 * a), -1.0)
        fv = c + b * tv + a * tv * tv
    double = (active & (fa * fb > 0) & (tv > 0) & (tv < h) & (np.sign(fv) != np.sign(fa)))

    rows, cells, ts = [], [], []
    ri, ci = np.nonzero(single)
    rows.append(ri)
    cells.append(ci)
    ts.append(_pick_root(a[ri, ci], b[ri, ci], c[ri, ci], h))
    ri, ci = np.nonzero(at_node)
    rows.append(ri)
    cells.append(ci)
    ts.append(np.zeros(ri.size))
    ri, ci = np.nonzero(last_node)
    rows.append(ri)
    cells.append(ci)
    ts.append(np.full(ri.size, h))
    # a root exactly on a node can share its cell with a second, interior root
    with np.errstate(divide="ignore", invalid="ignore"):
        other_a = np.where(a != 0, -b / a, -1.0)
        other_b = np.where(a != 0, c / (a * h), -1.0)
    for mask, other in ((active & (fa == 0), other_a),
                        (active & (fb == 0) & (fa != 0), other_b)):
        ri, ci = np.nonzero(mask & (other > 0) & (other < h))
        rows.append(ri)
        cells.append(ci)
        ts.append(other[ri, ci])
    ri, ci = np.nonzero(double)
    if ri.size:
        aa, bb, cc = a[ri, ci], b[ri, ci], c[ri, ci]
        sq = np.sqrt(np.maximum(bb * bb - 4 * aa * cc, 0.0))
        for sgn in (-1.0, 1.0):
            rows.append(ri)
            cells.append(ci)
            ts.append(np.clip((-bb + sgn * sq) / (2 * aa), 0.0, h))

    row = np.concatenate(rows)
    cell = np.concatenate(cells)
    t = np.concatenate(ts)
    order = np.lexsort((t, cell, row))
    row, cell, t = row[order], cell[order], t[order]
    tau = tau_nodes[cell] + t

    if exclude_lo is not None and row.size:
        keep = ~((tau > lo[row, 0]) & (tau < hi[row, 0]))
        row, cell, t, tau = row[keep], cell[keep], t[keep], tau[keep]

    u = X[row] - (Y[cell] + t[:, None] * d[cell])
    slope = -2.0 * dot(u, d[cell])
    if row.size:
        span = np.ptp(f, axis=1)[row]
        bad = np.abs(slope) < tol_graze * np.maximum(span, np.finfo(float).tiny)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise GrazingRoot(
                "tangential lightcone contact at tau*=%.6g (|f'|=%.3g)"
                % (tau[k], abs(slope[k])))
    return Crossings(row, cell, t, tau, slope, u)


def find_crossings(x, partner, exclude=None):
    """Lightcone crossings of ``partner`` as seen from the single point ``x``."""
    if exclude is None:
        cr = crossings(x, partner)
    else:
        cr = crossings(x, partner, [exclude[0]], [exclude[1]])
    y0 = np.asarray(x, dtype=float)[0] - cr.u[:, 0]
    kinds = np.where(np.asarray(x, dtype=float)[0] - y0 > 0, "retarded", "advanced")
    return [LightconeCrossing(float(tau), float(wt), str(kd))
            for tau, wt, kd in zip(cr.tau, cr.weight, kinds)]


def partner_charge(partner, cr, s_nodes=None):
    """Partner charge e(s(tau*)) at every root."""
    return partner.charge_profile(clock(partner, cr.cell, cr.t, s_nodes))


def interpolate_nodal(values, cr, h):
    """Linear interpolation of a nodal array at the roots."""
    values = np.asarray(values)
    frac = cr.t / h
    lo = values[cr.cell]
    hi = values[cr.cell + 1]
    if values.ndim > 1:
        frac = frac[:, None]
    return lo + frac * (hi - lo)


def lightcone_sum(x, v, partner, integrand_kind="scalar", exclude=None,
                  charge=None, field=None):
    """Sum over lightcone roots of ``weight * q(tau*) * integrand``.

    ``integrand_kind`` is ``"scalar"`` (``v . y'(tau*)``) or ``"vector"``
    (``y'(tau*)`` itself, or the nodal ``field`` interpolated at the root).
    ``charge`` overrides the partner charge: a nodal array, interpolated
    linearly, or a callable ``charge(partner, crossings)``.
    """
    if exclude is None:
        cr = crossings(x, partner)
    else:
        cr = crossings(x, partner, [exclude[0]], [exclude[1]])
    if charge is None:
        q = partner_charge(partner, cr)
    elif callable(charge):
        q = charge(partner, cr)
    else:
        q = interpolate_nodal(charge, cr, partner.h)
    if field is not None:
        vec = interpolate_nodal(field, cr, partner.h)
    else:
        vec = chord_velocities(partner)[cr.cell]
    qw = q * cr.weight
    if integrand_kind == "scalar":
        return float(np.sum(qw * dot(np.asarray(v, dtype=float), vec)))
    if integrand_kind == "vector":
        return np.sum(qw[:, None] * vec, axis=0) if len(cr) else np.zeros(4)
    raise ValueError("integrand_kind must be 'scalar' or 'vector'")


__all__ = [
    "LightconeCrossing", "Crossings", "crossings", "find_crossings",
    "lightcone_sum", "partner_charge", "interpolate_nodal", "node_proper_times",
]
