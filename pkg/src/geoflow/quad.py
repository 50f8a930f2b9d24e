"""Adaptive quadrature, path segments, and 1-form line integrals.

The Gauss-Kronrod rule is applied to integrand values that may be jets or
complex scalars; adaptivity decides on the plain value part, so parameter
derivatives propagate exactly through the node sums.
"""

from __future__ import annotations

import numpy as np

from . import jets as jm

__all__ = ["QuadratureError", "PathSegment", "adaptive_quad", "line_integral",
           "closedness_residual", "gauss_legendre"]


class QuadratureError(RuntimeError):
    """Raised when the requested tolerance cannot be certified."""

    def __init__(self, message, partial=None, estimate=None):
        super().__init__(message)
        self.partial = partial
        self.estimate = estimate


# Gauss-Kronrod 7-15 nodes/weights on [-1, 1].
_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_KRONROD_T = np.concatenate([-_XGK[:-1], _XGK[::-1]])        # 15 ascending nodes
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_IDX = [1, 3, 5, 7, 9, 11, 13]                          # G7 nodes inside
_GAUSS_W = np.concatenate([_WG[:-1], _WG[::-1]])


def _segment_rule(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = [f(mid + half * t) for t in _KRONROD_T]
    k = None
    for w, v in zip(_KRONROD_W, vals):
        term = v * (w * half)
        k = term if k is None else k + term
    g = None
    for w, i in zip(_GAUSS_W, _GAUSS_IDX):
        term = vals[i] * (w * half)
        g = term if g is None else g + term
    err = float(np.max(np.abs(np.asarray(jm.value_of(k)) - np.asarray(jm.value_of(g)))))
    return k, err


def adaptive_quad(f, a, b, tol=1e-10, max_depth=24):
    """Integrate f over [a, b] adaptively; returns (integral, error_estimate).

    f maps a float parameter to a scalar, vector, complex value, or jet.
    """
    if b < a:
        val, err = adaptive_quad(f, b, a, tol=tol, max_depth=max_depth)
        return -val, err
    total = None
    total_err = 0.0
    span = max(abs(b - a), 1e-300)
    stack = [(float(a), float(b), 0)]
    while stack:
        lo, hi, depth = stack.pop()
        val, err = _segment_rule(f, lo, hi)
        if err <= tol * (hi - lo) / span:
            total = val if total is None else total + val
            total_err += err
            continue
        if depth >= max_depth:
            partial = val if total is None else total + val
            raise QuadratureError(
                f"quadrature failed to converge after {max_depth} bisections",
                partial=jm.value_of(partial), estimate=err)
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid, depth + 1))
        stack.append((mid, hi, depth + 1))
    return total, total_err


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


class PathSegment:
    """Path between chart points; straight by default, optional bend waypoint.

    ``bend`` adds a quadratic Bezier deviation, giving a homotopic alternative
    for path-independence checks.
    """

    def __init__(self, start, end, bend=None):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.bend = None if bend is None else np.asarray(bend, dtype=float)

    def point(self, t):
        s = self.start + (self.end - self.start) * t
        if self.bend is not None:
            s = s + self.bend * (4.0 * t * (1.0 - t))
        return s

    def velocity(self, t):
        v = self.end - self.start
        if self.bend is not None:
            v = v + self.bend * (4.0 - 8.0 * t)
        return v


def line_integral(one_form, path, tol=1e-10):
    """Integral of a covector field along a path.

    ``one_form(x)`` returns the components (omega_1 .. omega_n) at x; the
    pullback uses the path velocity.  Returns (value, error_estimate).
    """

    def pullback(t):
        x = path.point(t)
        w = one_form(x)
        v = path.velocity(t)
        acc = None
        for i in range(len(v)):
            term = w[..., i] * v[i]
            acc = term if acc is None else acc + term
        return acc

    return adaptive_quad(pullback, 0.0, 1.0, tol=tol)


def closedness_residual(one_form, point):
    """max_ij |d_i w_j - d_j w_i| at a point, via jets."""
    _, jac = jm.value_and_jacobian(one_form, np.asarray(point, dtype=float))
    return float(np.max(np.abs(jac - np.swapaxes(jac, -1, -2))))
