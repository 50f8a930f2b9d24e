"""Adaptive Dormand-Prince 5(4) integrator with dense output."""

from __future__ import annotations

import numpy as np

__all__ = ["OdeError", "StiffnessError", "DomainExitError", "Trajectory", "ode_solve"]


class OdeError(RuntimeError):
    pass


class StiffnessError(OdeError):
    def __init__(self, t):
        super().__init__(f"step size underflow at t={t:.6g}; system too stiff")
        self.t = t


class DomainExitError(OdeError):
    def __init__(self, t, state):
        super().__init__(f"state left the chart domain at t={t:.6g}")
        self.t = t
        self.state = state


# Dormand-Prince coefficients.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
# Dense-output polynomial coefficients (Shampine's interpolant).
_D = np.array([
    -12715105075.0 / 11282082432.0, 0.0, 87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0,
])


class Trajectory:
    """Dense ODE solution on [t0, t1]; callable at arbitrary times."""

    def __init__(self, ts, ys, fs, coeffs):
        self.ts = np.asarray(ts)
        self.ys = np.asarray(ys)
        self._fs = np.asarray(fs)
        self._coeffs = coeffs  # per-step dense coefficients (5, dim)

    @property
    def t0(self):
        return float(self.ts[0])

    @property
    def t1(self):
        return float(self.ts[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.empty(tt.shape + self.ys.shape[1:], dtype=self.ys.dtype)
        idx = np.searchsorted(self.ts, tt, side="right") - 1
        idx = np.clip(idx, 0, len(self.ts) - 2)
        for k, (ti, i) in enumerate(zip(tt, idx)):
            h = self.ts[i + 1] - self.ts[i]
            theta = (ti - self.ts[i]) / h
            c = self._coeffs[i]
            # Horner in theta
            acc = c[-1]
            for layer in c[-2::-1]:
                acc = acc * theta + layer
            out[k] = acc
        return out[0] if scalar else out

    def sample(self, n):
        ts = np.linspace(self.t0, self.t1, n)
        return ts, self(ts)


def _dense_coeffs(y0, y1, f0, f1, ks, h):
    """Quartic Hermite-type interpolant coefficients for one step."""
    ydiff = y1 - y0
    bspl = h * f0 - ydiff
    cont = np.empty((5,) + y0.shape, dtype=y0.dtype)
    cont[0] = y0
    cont[1] = ydiff
    cont[2] = bspl
    cont[3] = ydiff - h * f1 - bspl
    cont[4] = h * np.tensordot(_D, ks, axes=1)
    # p(th) = c0 + c1 th + c2 th(1-th) + c3 th^2 (1-th) + c4 th^2 (1-th)^2,
    # expanded to the power basis for fast Horner evaluation

    p0 = cont[0]
    p1 = cont[1] + cont[2]
    p2 = -cont[2] + cont[3] + cont[4]
    p3 = -cont[3] - 2.0 * cont[4]
    p4 = cont[4]
    return np.stack([p0, p1, p2, p3, p4])


def ode_solve(field, y0, t_span, tol=1e-10, max_steps=1_000_000,
              domain_check=None, h0=None):
    """Integrate y' = field(t, y) over t_span with local error <= tol per step.

    Returns a dense :class:`Trajectory`.  ``domain_check(y) -> bool`` guards
    the chart domain; leaving it raises :class:`DomainExitError`.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    if span == 0.0:
        return Trajectory([t0, t0], [y, y], [field(t0, y)] * 2,
                          [np.stack([y, 0 * y, 0 * y, 0 * y, 0 * y])])
    f = np.asarray(field(t0, y), dtype=float)
    h = h0 if h0 is not None else span * 1e-3
    h = min(h, span)
    hmin = span * 1e-14
    ts, ys, fs, coeffs = [t0], [y.copy()], [f.copy()], []
    t = t0
    ks = np.empty((7,) + y.shape)
    for _ in range(max_steps):
        if (t - t1) * direction >= 0:
            break
        h = min(h, abs(t1 - t))
        if h < hmin:
            raise StiffnessError(t)
        hs = direction * h
        ks[0] = f
        for i in range(1, 7):
            yi = y + hs * sum(a * ks[j] for j, a in enumerate(_A[i]))
            ks[i] = field(t + _C[i] * hs, yi)
        y5 = y + hs * np.tensordot(_B5, ks, axes=1)
        y4 = y + hs * np.tensordot(_B4, ks, axes=1)
        scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y5)))
        err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            f_new = ks[6]  # FSAL
            if domain_check is not None and not domain_check(y5):
                raise DomainExitError(t + hs, y5)
            coeffs.append(_dense_coeffs(y, y5, ks[0], f_new, ks, hs))
            t = t + hs
            y = y5
            f = f_new.copy()
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else 5.0
        else:
            h *= max(0.1, 0.9 * err ** -0.2)
    else:
        raise OdeError("maximum step count exceeded")
    return Trajectory(ts, ys, fs, coeffs)
