"""Four-vector algebra in flat spacetime, signature (+, -, -, -), c = 1.

Four-vectors are plain ``numpy`` arrays whose last axis has length 4, so
every function here broadcasts over leading axes.
"""
import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])

HBAR = 1.0


def four_vector(x0, x1=0.0, x2=0.0, x3=0.0):
    """Build a validated four-vector; raises ``ValueError`` on NaN/Inf."""
    v = np.array([x0, x1, x2, x3], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("four-vector components must be finite: %r" % (v,))
    return v


def dot(a, b):
    """Minkowski scalar product a0 b0 - a.b, broadcast over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a * b * _SIGNS, axis=-1)


def lower(a):
    """Covariant components a_mu = eta_{mu nu} a^nu."""
    return np.asarray(a, dtype=float) * _SIGNS


def interval_sq(a, b):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return dot(d, d)
