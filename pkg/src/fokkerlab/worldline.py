"""Discretized worldlines, lapse, proper time, charge switching and shifts.

A worldline is sampled at ``K`` uniform parameter values ``tau_k = k/(K-1)``.
Between nodes the trajectory and the lapse are linear, so every quantity
evaluated off-grid (lightcone roots, charges, proper time) refers to that
piecewise-linear interpolant.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import FoldOverError


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_prime(u):
    return 6.0 * u * (1.0 - u)


@dataclass(frozen=True)
class SwitchingProfile:
    """Charge as a C^1 function of proper time.

    ``e(s)`` is zero outside ``(s_on, s_off)``, equal to ``e_max`` on
    ``[s_on + ramp, s_off - ramp]`` and joined by cubic smoothsteps.
    Infinite ``s_on``/``s_off`` give a charge that is never switched.
    """

    e_max: float
    s_on: float = -np.inf
    s_off: float = np.inf
    ramp: float = 1.0

    def __post_init__(self):
        if not self.s_on < self.s_off:
            raise ValueError("need s_on < s_off")
        if not (self.ramp > 0 and np.isfinite(self.ramp)):
            raise ValueError("ramp width must be positive and finite")

    @classmethod
    def constant(cls, e):
        return cls(float(e))

    @classmethod
    def off(cls):
        return cls(0.0)

    def scaled(self, factor):
        return SwitchingProfile(self.e_max * factor, self.s_on, self.s_off, self.ramp)

    def _phases(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(invalid="ignore"):
            u_on = np.clip((s - self.s_on) / self.ramp, 0.0, 1.0)
            u_off = np.clip((self.s_off - s) / self.ramp, 0.0, 1.0)
        return u_on, u_off

    def __call__(self, s):
        u_on, u_off = self._phases(s)
        return self.e_max * _smoothstep(u_on) * _smoothstep(u_off)

    def derivative(self, s):
        """Analytic de/ds."""
        u_on, u_off = self._phases(s)
        return (self.e_max / self.ramp) * (
            _smoothstep_prime(u_on) * _smoothstep(u_off)
            - _smoothstep(u_on) * _smoothstep_prime(u_off)
        )

    @property
    def is_off(self):
        return self.e_max == 0.0


@dataclass(frozen=True, eq=False)
class Worldline:
    points: np.ndarray
    lapse: np.ndarray
    mass: float
    charge_profile: SwitchingProfile = field(default_factory=SwitchingProfile.off)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        lapse = np.array(self.lapse, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValueError("points must have shape (K, 4)")
        if pts.shape[0] < 3:
            raise ValueError("a worldline needs K >= 3 samples")
        if lapse.shape != (pts.shape[0],):
            raise ValueError("lapse must have one sample per point")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(lapse))):
            raise ValueError("worldline data must be finite")
        if np.any(lapse <= 0):
            raise ValueError("lapse must be strictly positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        pts.flags.writeable = False
        lapse.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "lapse", lapse)
        object.__setattr__(self, "mass", float(self.mass))

    @property
    def K(self):
        return self.points.shape[0]

    @property
    def h(self):
        return 1.0 / (self.K - 1)

    @property
    def tau(self):
        return np.linspace(0.0, 1.0, self.K)

    def replace(self, **changes):
        kw = dict(points=self.points, lapse=self.lapse, mass=self.mass,
                  charge_profile=self.charge_profile)
        kw.update(changes)
        return Worldline(**kw)

    def with_charge(self, profile):
        return self.replace(charge_profile=profile)

    @classmethod
    def straight(cls, start, end, K, mass, charge_profile=None, lapse=None):
        """Uniformly parametrized straight segment.

        The default lapse is the stationary one, ``N = |end - start| / m``.
        """
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        tau = np.linspace(0.0, 1.0, K)
        pts = start + tau[:, None] * (end - start)
        if lapse is None:
            d = end - start
            length2 = d[0] ** 2 - d[1:] @ d[1:]
            if length2 <= 0:
                raise ValueError("default lapse needs a timelike segment")
            lapse = np.full(K, np.sqrt(length2) / mass)
        return cls(pts, np.broadcast_to(lapse, (K,)),
                   mass, charge_profile or SwitchingProfile.off())


@dataclass(frozen=True, eq=False)
class ShiftField:
    """Proper-time shifts ``eps_k`` on the worldline grid, pinned at both ends."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("shift field needs a 1-d array with >= 3 samples")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("shift field must vanish at both endpoints")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, K):
        return cls(np.zeros(K))

    @classmethod
    def from_function(cls, fn, K):
        tau = np.linspace(0.0, 1.0, K)
        v = np.asarray(fn(tau), dtype=float).copy()
        v[0] = v[-1] = 0.0
        return cls(v)

    @property
    def K(self):
        return self.values.size

    def __neg__(self):
        return ShiftField(-self.values)

    def scaled(self, factor):
        return ShiftField(self.values * factor)

    def tau_derivative(self):
        """d eps / d tau at the nodes.

        First-order one-sided differences at the ends make the trapezoid sum
        of the derivative telescope to ``eps[-1] - eps[0] = 0`` exactly.
        """
        return np.gradient(self.values, 1.0 / (self.K - 1), edge_order=1)

    def velocity(self, w):
        """mu = d eps / d s on the nodes of ``w``."""
        _check_grid(w, self)
        return self.tau_derivative() / w.lapse

    # alias used by the canonical constraints phi_3, phi_4
    @property
    def eta(self):
        return self.values


def _check_grid(w, eps):
    if eps.K != w.K:
        raise ValueError("shift field and worldline grids differ (%d vs %d)"
                         % (eps.K, w.K))


def locate(w, tau):
    """Cell index and in-cell offset ``t = tau - tau_j`` for parameter values."""
    tau = np.asarray(tau, dtype=float)
    h = w.h
    j = np.clip(np.floor(tau / h).astype(int), 0, w.K - 2)
    return j, tau - j * h


def node_proper_times(w):
    """Proper time at every node (trapezoid of the piecewise-linear lapse)."""
    N = w.lapse
    return np.concatenate(([0.0], np.cumsum(0.5 * w.h * (N[:-1] + N[1:]))))


def clock(w, cells, t, s_nodes=None):
    """Proper time at in-cell locations ``(cells, t)``; exact for linear N."""
    N = w.lapse
    if s_nodes is None:
        s_nodes = node_proper_times(w)
    dN = N[cells + 1] - N[cells]
    return s_nodes[cells] + t * N[cells] + 0.5 * t * t * dN / w.h


def lapse_at(w, cells, t):
    N = w.lapse
    return N[cells] + t * (N[cells + 1] - N[cells]) / w.h


def proper_time(w, tau):
    tau_arr = np.asarray(tau, dtype=float)
    if np.any((tau_arr < 0.0) | (tau_arr > 1.0)):
        raise ValueError("tau must lie in [0, 1]")
    j, t = locate(w, tau_arr)
    s = clock(w, j, t)
    return float(s) if np.ndim(s) == 0 else s


def total_proper_time(w):
    return float(node_proper_times(w)[-1])


def velocities(w):
    """d x / d tau at every node: central differences, one-sided second order at the ends."""
    return np.gradient(w.points, w.h, axis=0, edge_order=2)


def velocity(w, k):
    if not 0 <= k < w.K:
        raise IndexError("node index %d out of range" % k)
    return velocities(w)[k]


def chord_velocities(w):
    """d x / d tau of the linear interpolant on each cell, shape (K-1, 4)."""
    return np.diff(w.points, axis=0) / w.h


def midpoints(w):
    return 0.5 * (w.points[:-1] + w.points[1:])


def reparametrize(w, eps):
    """Shift the parametrization by ``eps`` to first order.

    The lapse becomes ``N - d eps/d tau`` and the points are resampled at
    ``tau - eps/N`` (cubic-spline interpolation), which keeps the proper time
    of every material point fixed to first order in ``eps``.
    """
    _check_grid(w, eps)
    new_lapse = w.lapse - eps.tau_derivative()
    if np.any(new_lapse <= 0):
        raise FoldOverError("reparametrized lapse is not positive")
    tau = w.tau
    src = tau - eps.values / w.lapse
    if np.any(np.diff(src) <= 0) or src[0] < 0 or src[-1] > 1:
        raise FoldOverError("reparametrized grid is not monotone")
    spline = CubicSpline(tau, w.points, axis=0)
    pts = spline(src)
    pts[0], pts[-1] = w.points[0], w.points[-1]
    return w.replace(points=pts, lapse=new_lapse)


_TABLE_HEADER = "tau x0 x1 x2 x3 N"


def save_worldline(path, w, extra_header=""):
    table = np.column_stack([w.tau, w.points, w.lapse])
    header = _TABLE_HEADER
    if extra_header:
        header = extra_header.rstrip("\n") + "\n" + header
    np.savetxt(path, table, fmt="%.17g", header=header)


def load_worldline(path, mass, charge_profile=None):
    table = np.loadtxt(path, ndmin=2)
    if table.shape[1] != 6:
        raise ValueError("worldline table needs 6 columns (%s)" % _TABLE_HEADER)
    K = table.shape[0]
    if not np.allclose(table[:, 0], np.linspace(0.0, 1.0, K), atol=1e-12):
        raise ValueError("worldline table must use the uniform tau grid")
    return Worldline(table[:, 1:5], table[:, 5], mass,
                     charge_profile or SwitchingProfile.off())
