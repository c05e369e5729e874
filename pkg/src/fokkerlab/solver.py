"""Stationary worldlines of the discretized Fokker action.

The Minkowski action is a saddle, so stationarity is posed as the root
problem grad I = 0 and solved by Gauss-Newton on ||grad I||^2.  Interior
node coordinates are the unknowns; the lapse is held at the constant
stationary value ``N = L / m`` (``L`` the Minkowski length of the polygon),
which removes the reparametrization null directions.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .action import DELTA_CUT, ActionBreakdown, Pair, _pairs, fokker_action
from .errors import MaxIterations
from .minkowski import dot, lower
from .worldline import chord_velocities, lapse_at

log = logging.getLogger(__name__)

_PAIR_COEF = {"12": 0.5, "21": 0.5, "11": 0.5, "22": 0.5}


@dataclass
class ActionGradient:
    """dI/dx and dI/dN of both particles at the interior nodes."""

    x1: np.ndarray
    N1: np.ndarray
    x2: np.ndarray
    N2: np.ndarray

    def ravel(self):
        return np.concatenate([self.x1.ravel(), self.N1, self.x2.ravel(), self.N2])


def _clock_adjoint(K, h, cells, t, g):
    """Gradient of sum_i g_i s(cell_i, t_i) with respect to the nodal lapse."""
    out = np.zeros(K)
    if cells.size == 0:
        return out
    Gj = np.bincount(cells, weights=g, minlength=K)
    s_ge = np.cumsum(Gj[::-1])[::-1]
    s_gt = np.append(s_ge[1:], 0.0)
    out += 0.5 * h * s_gt
    out[1:] += 0.5 * h * s_ge[1:]
    np.add.at(out, cells, g * (t - 0.5 * t * t / h))
    np.add.at(out, cells + 1, g * (0.5 * t * t / h))
    return out


def _kinetic_gradient(w):
    Nm = 0.5 * (w.lapse[:-1] + w.lapse[1:])
    d = chord_velocities(w)
    gx = np.zeros_like(w.points)
    flux = lower(d) / Nm[:, None]
    gx[:-1] -= flux
    gx[1:] += flux
    gN = np.zeros(w.K)
    cellN = 0.5 * w.h * 0.5 * (-dot(d, d) / Nm ** 2 + w.mass ** 2)
    gN[:-1] += cellN
    gN[1:] += cellN
    return gx, gN


def _pair_gradient(p, coef, gxa, gNa, gxb, gNb):
    cr = p.cr
    if len(cr) == 0:
        return
    wa, wb, h = p.wa, p.wb, p.h
    row, cell, t = cr.row, cr.cell, cr.t
    pa, pb = wa.charge_profile, wb.charge_profile
    qa = pa(p.s_mid)[row]
    dqa = pa.derivative(p.s_mid)[row]
    qb = pb(p.s_root)
    dqb = pb.derivative(p.s_root)
    Nb = lapse_at(wb, cell, t)
    da, db, u = p.da[row], p.db[cell], cr.u
    fp = cr.slope
    A = 1.0 / np.abs(fp)
    G = p.G
    ud = dot(u, db)
    eu, edb, eda = lower(u), lower(db), lower(da)
    tc = t[:, None]

    # implicit root motion from f(t*) = 0
    dt_dX = eu / ud[:, None]
    dt_dy = -dt_dX
    dt_ddb = -tc * dt_dX
    dbdb = dot(db, db)[:, None]
    dfp_dX = -2.0 * (edb - dbdb * dt_dX)
    dfp_dy = -2.0 * (-edb - dbdb * dt_dy)
    dfp_ddb = -2.0 * (eu - tc * edb - dbdb * dt_ddb)

    base = coef * h * qa
    c_root = (base * G * A * dqb * Nb)[:, None]   # via q_b(t*)
    c_slope = (base * qb * G * (-A / fp))[:, None]  # via 1/|f'|
    PX = c_root * dt_dX + c_slope * dfp_dX
    Pda = (base * qb * A)[:, None] * edb
    Py = c_root * dt_dy + c_slope * dfp_dy
    Pdb = c_root * dt_ddb + (base * qb * A)[:, None] * eda + c_slope * dfp_ddb

    np.add.at(gxa, row, 0.5 * PX - Pda / h)
    np.add.at(gxa, row + 1, 0.5 * PX + Pda / h)
    np.add.at(gxb, cell, Py - Pdb / h)
    np.add.at(gxb, cell + 1, Pdb / h)

    # lapse enters only through the charge clocks
    g_outer = coef * h * dqa * qb * G * A
    gNa += _clock_adjoint(wa.K, h, row, np.full(row.size, 0.5 * h), g_outer)
    g_inner = coef * h * qa * dqb * G * A
    gNb += _clock_adjoint(wb.K, wb.h, cell, t, g_inner)


def full_gradient(w1, w2, delta_cut=DELTA_CUT, pairs=None):
    """Gradient with respect to all nodes: (gx1, gN1, gx2, gN2)."""
    gx1, gN1 = _kinetic_gradient(w1)
    gx2, gN2 = _kinetic_gradient(w2)
    if pairs is None:
        pairs = _pairs(w1, w2, delta_cut)
    bufs = {"1": (gx1, gN1), "2": (gx2, gN2)}
    for key, p in pairs.items():
        gxa, gNa = bufs[key[0]]
        gxb, gNb = bufs[key[1]]
        _pair_gradient(p, _PAIR_COEF[key], gxa, gNa, gxb, gNb)
    return gx1, gN1, gx2, gN2


def action_gradient(w1, w2, delta_cut=DELTA_CUT):
    """Analytic gradient of ``fokker_action`` at the interior nodes (endpoints held fixed)."""
    gx1, gN1, gx2, gN2 = full_gradient(w1, w2, delta_cut)
    return ActionGradient(gx1[1:-1], gN1[1:-1], gx2[1:-1], gN2[1:-1])


@dataclass
class SolverOptions:
    tol_grad: float = 1e-8       # relative to the action scale
    max_iter: int = 500
    max_step: float = 0.25       # step-norm cap, relative to the worldline extent
    fd_step: float = 1e-7
    delta_cut: float = DELTA_CUT
    raise_on_failure: bool = False


@dataclass
class StationaryReport:
    worldlines: tuple
    gradient_norm: float
    iterations: int
    action: ActionBreakdown
    converged: bool
    lapse_gradient_norm: float = 0.0
    tol: float = 0.0
    history: list = field(default_factory=list)

    @classmethod
    def csv_header(cls):
        return "converged,iterations,gradient_norm,lapse_gradient_norm,tol," + \
            ActionBreakdown.csv_header()

    def csv_row(self):
        return ",".join([str(int(self.converged)), str(self.iterations),
                         repr(self.gradient_norm), repr(self.lapse_gradient_norm),
                         repr(self.tol), self.action.csv_row()])


def _polygon_length(points):
    d = np.diff(points, axis=0)
    s2 = dot(d, d)
    if np.any(s2 <= 0):
        raise ValueError("gauge fixing needs a timelike polygon")
    return float(np.sum(np.sqrt(s2)))


def gauge_fixed(w):
    """Same points with the constant stationary lapse ``N = L / m``."""
    N = _polygon_length(w.points) / w.mass
    return w.replace(lapse=np.full(w.K, N))


class _Problem:
    def __init__(self, w1, w2, delta_cut):
        self.w1, self.w2 = w1, w2
        self.delta_cut = delta_cut
        self.n1 = 4 * (w1.K - 2)

    def unpack(self, z):
        p1 = self.w1.points.copy()
        p2 = self.w2.points.copy()
        p1[1:-1] = z[:self.n1].reshape(-1, 4)
        p2[1:-1] = z[self.n1:].reshape(-1, 4)
        return gauge_fixed(self.w1.replace(points=p1)), gauge_fixed(self.w2.replace(points=p2))

    def pack(self, w1, w2):
        return np.concatenate([w1.points[1:-1].ravel(), w2.points[1:-1].ravel()])

    def residual(self, z):
        w1, w2 = self.unpack(z)
        gx1, _, gx2, _ = full_gradient(w1, w2, self.delta_cut)
        return np.concatenate([gx1[1:-1].ravel(), gx2[1:-1].ravel()])

    def jacobian(self, z, r0, step):
        n = z.size
        J = np.empty((n, n))
        for i in range(n):
            zi = z.copy()
            zi[i] += step
            J[:, i] = (self.residual(zi) - r0) / step
        return 0.5 * (J + J.T)


def find_stationary(w1_init, w2_init, opts=None):
    """Drive the interior-node gradient to zero from the given initial guess."""
    opts = opts or SolverOptions()
    prob = _Problem(w1_init, w2_init, opts.delta_cut)
    z = prob.pack(w1_init, w2_init)
    w1, w2 = prob.unpack(z)
    extent = max(np.ptp(w1_init.points, axis=0).max(), np.ptp(w2_init.points, axis=0).max())
    scale = w1.mass * _polygon_length(w1.points) + w2.mass * _polygon_length(w2.points)
    tol = opts.tol_grad * scale
    r = prob.residual(z)
    rnorm = float(np.linalg.norm(r))
    history = [rnorm]
    it = 0
    while rnorm > tol and it < opts.max_iter:
        it += 1
        J = prob.jacobian(z, r, opts.fd_step * extent)
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        snorm = np.linalg.norm(step)
        cap = opts.max_step * extent
        if snorm > cap:
            step *= cap / snorm
        alpha = 1.0
        while True:
            z_new = z + alpha * step
            try:
                r_new = prob.residual(z_new)
                ok = np.linalg.norm(r_new) ** 2 <= (1.0 - 1e-4 * alpha) * rnorm ** 2
            except ValueError:
                ok = False
            if ok or alpha < 1e-8:
                break
            alpha *= 0.5
        if not ok:
            log.warning("line search stalled at iteration %d (|g|=%.3e)", it, rnorm)
            break
        z, r = z_new, r_new
        rnorm = float(np.linalg.norm(r))
        history.append(rnorm)
        log.debug("iteration %d: |g| = %.3e, alpha = %.3g", it, rnorm, alpha)

    w1, w2 = prob.unpack(z)
    _, gN1, _, gN2 = full_gradient(w1, w2, opts.delta_cut)
    report = StationaryReport(
        worldlines=(w1, w2),
        gradient_norm=rnorm,
        iterations=it,
        action=fokker_action(w1, w2, opts.delta_cut),
        converged=rnorm <= tol,
        lapse_gradient_norm=float(np.linalg.norm(np.concatenate([gN1[1:-1], gN2[1:-1]]))),
        tol=tol,
        history=history,
    )
    if not report.converged and opts.raise_on_failure:
        raise MaxIterations("no stationary point after %d iterations" % it, report)
    return report


__all__ = ["ActionGradient", "action_gradient", "find_stationary", "SolverOptions",
           "StationaryReport", "gauge_fixed", "full_gradient", "Pair"]
