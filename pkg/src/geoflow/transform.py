"""Generating function of the orbit-adapted canonical transformation.

S(x; q, pi', J) = q.pi' + integral over a path from the identity to x of
f_a(x~ . q, pi'; lambda(J)) sigma^a(x~).  The integrand is a closed 1-form
for the polarized catalog models, so the value is path independent inside
the simply connected chart.  The constant term anchors S so that x = e is
the identity transformation.

Sign conventions are resolved empirically and recorded: with the certified
frame and bracket conventions the relations are

    p = dS/dx,  pi = dS/dq,  q' = +dS/dpi',  tau = dS/dJ,
    dp ^ dx = dq ^ dpi + dpi' ^ dq' + dJ ^ dtau,

with (q, pi) matched to the right momentum map and (q', pi') to the left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as jm
from .quad import adaptive_quad, PathSegment
from .momentum import mu_r, mu_l
from .orbits import UnsupportedOrbitError, RegularityError

__all__ = ["GeneratingFunction", "CanonicalPoint", "forward_transform",
           "lemma1_residuals", "symplectic_check", "reconstruct_p",
           "DomainError"]

LEMMA1_QPRIME_SIGN = +1.0  # resolved: q' = + dS/dpi' (recorded in reports)


class DomainError(RuntimeError):
    pass


@dataclass
class CanonicalPoint:
    q: np.ndarray
    pi: np.ndarray
    qp: np.ndarray    # q'
    pip: np.ndarray   # pi'
    J: np.ndarray
    tau: np.ndarray | None

    def as_dict(self):
        return {"q": np.asarray(self.q).tolist(), "pi": np.asarray(self.pi).tolist(),
                "q_prime": np.asarray(self.qp).tolist(),
                "pi_prime": np.asarray(self.pip).tolist(),
                "J": np.asarray(self.J).tolist(),
                "tau": None if self.tau is None else np.asarray(self.tau).tolist()}


class GeneratingFunction:
    """Evaluator for S and its derivatives on a polarized orbit model."""

    def __init__(self, chart, orbit, quad_tol=1e-11):
        if orbit.m > 0 and orbit.point_map_coord is None:
            raise UnsupportedOrbitError(
                f"{orbit.name}: generating function needs a polarized point map")
        self.chart = chart
        self.orbit = orbit
        self.quad_tol = quad_tol

    def one_form(self, q, pip, J):
        """The closed integrand: x~ -> components f_a(x~ q, pi'; lam) sigma^a_i(x~)."""
        orbit = self.orbit
        chart = self.chart
        n = chart.dim

        def omega(xt):
            if orbit.m > 0:
                fvals = orbit.f(_shift_q(orbit, xt, q), pip, J)
            else:
                fvals = orbit.f(q, pip, J)
            sig = chart.sigma_matrix(xt)
            comps = []
            for i in range(n):
                acc = None
                for a in range(n):
                    term = fvals[..., a] * sig[..., a, i]
                    acc = term if acc is None else acc + term
                comps.append(acc)
            return jm.stack(comps)

        return omega

    def eval(self, x, q, pip, J, path=None):
        """S at (x; q, pi'; J); jet arguments propagate through the quadrature."""
        chart = self.chart
        omega = self.one_form(q, pip, J)
        if path is None:
            for t in (0.25, 0.5, 0.75, 1.0):
                if not chart.contains(np.asarray(jm.value_of(x), dtype=float) * t):
                    raise DomainError(f"{chart.name}: straight path to x leaves the chart")

            def integrand(t):
                xt = x * t
                w = omega(xt)
                acc = None
                for i in range(chart.dim):
                    term = w[..., i] * x[..., i]
                    acc = term if acc is None else acc + term
                return acc

            val, _ = adaptive_quad(integrand, 0.0, 1.0, tol=self.quad_tol)
        else:
            for t in np.linspace(0.0, 1.0, 9):
                if not chart.contains(path.point(t)):
                    raise DomainError(f"{chart.name}: path leaves the chart")

            def integrand(t):
                xt = path.point(t)
                v = path.velocity(t)
                w = omega(xt)
                acc = None
                for i in range(chart.dim):
                    term = w[..., i] * v[..., i]
                    acc = term if acc is None else acc + term
                return acc

            val, _ = adaptive_quad(integrand, 0.0, 1.0, tol=self.quad_tol)
        anchor = None
        if self.orbit.m > 0:
            for a in range(self.orbit.m):
                term = q[..., a] * pip[..., a]
                anchor = term if anchor is None else anchor + term
            val = val + anchor
        return val


def _shift_q(orbit, xt, q):
    """Point map applied componentwise, keeping jet structure."""
    return jm.stack([q[..., a] + xt[..., orbit.point_map_coord] for a in range(orbit.m)])


def lemma1_residuals(gen, x, q, pip, J):
    """Residual pair for the generating relations at one argument tuple.

    Returns (|dS/dq - pi|, |dS/dpi' - q'|) where (q', pi') is the coadjoint
    image of (q, pi) under x and pi is solved from the correspondence.
    """
    chart, orbit = gen.chart, gen.orbit
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    pip = np.asarray(pip, dtype=float)
    J = np.asarray(J, dtype=float)
    m = orbit.m

    qprime = q + x[orbit.point_map_coord] if m else q
    # pi from Ad*_{x^-1} f(q', pi') = f(q, pi)
    fqp = np.asarray(jm.value_of(orbit.f(qprime, pip, J)))
    back = chart.adstar_matrix(chart.inverse(x)) @ fqp
    q_check, pi = orbit.solve_qpi(back, J)
    if np.max(np.abs(np.asarray(jm.value_of(q_check)) - q)) > 1e-8:
        raise RegularityError("coadjoint correspondence failed to return the base point")

    dS_dq = jm.value_of(jm.value_and_jacobian(
        lambda qq: gen.eval(x, qq, pip, J), q)[1])
    dS_dpip = jm.value_of(jm.value_and_jacobian(
        lambda pp: gen.eval(x, q, pp, J), pip)[1])
    r1 = float(np.max(np.abs(dS_dq - np.asarray(jm.value_of(pi)))))
    r2 = float(np.max(np.abs(LEMMA1_QPRIME_SIGN * dS_dpip - qprime)))
    return r1, r2


def forward_transform(chart, orbit, x, p, with_tau=True):
    """Full canonical image (q, pi, q', pi', J, tau) of a phase point."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    mr = mu_r(chart, x, p)
    ml = mu_l(chart, x, p)
    J = np.asarray(jm.value_of(orbit.casimir_values(mr)))
    q, pi = orbit.solve_qpi(mr, J)
    qp, pip = orbit.solve_qpi(ml, J)
    q, pi = np.atleast_1d(np.asarray(jm.value_of(q))), np.atleast_1d(np.asarray(jm.value_of(pi)))
    qp, pip = np.atleast_1d(np.asarray(jm.value_of(qp))), np.atleast_1d(np.asarray(jm.value_of(pip)))
    tau = None
    if with_tau and orbit.r > 0 and (orbit.m == 0 or orbit.point_map_coord is not None):
        gen = GeneratingFunction(chart, orbit)
        tau = jm.value_of(jm.value_and_jacobian(
            lambda JJ: gen.eval(x, q, pip, JJ), J)[1])
        tau = np.asarray(tau).reshape(orbit.r)
    return CanonicalPoint(q=q, pi=pi, qp=qp, pip=pip, J=J, tau=tau)


def reconstruct_p(chart, orbit, x, cp):
    """p_i = f_a(x.q, pi'; lambda(J)) sigma^a_i(x), the first relation of the
    implicit transformation; used as a round-trip oracle."""
    if orbit.m:
        s = cp.q + x[orbit.point_map_coord]
    else:
        s = cp.q
    fv = np.asarray(jm.value_of(orbit.f(s, cp.pip, cp.J)))
    sig = chart.sigma_matrix(np.asarray(x, dtype=float))
    return np.einsum("a,ai->i", fv, sig)


def _jet_wrap_const(arg, r):
    """Lift a (possibly jet) argument to carry a zero J-direction block."""
    if isinstance(arg, jm.Jet):
        return jm.Jet(arg, jm._zeros_extend(arg, r))
    arg = np.asarray(arg)
    return jm.Jet(arg, np.zeros(arg.shape + (r,)))


def _jet_wrap_J(J_arg, r):
    """Lift the J argument with an identity J-direction block."""
    if isinstance(J_arg, jm.Jet):
        return jm.Jet(J_arg, jm.Jet(_eye_like_jet(J_arg, r), _zeros_for(J_arg.dot, r)))
    J_arg = np.asarray(J_arg)
    return jm.Jet(J_arg, np.broadcast_to(np.eye(r), J_arg.shape + (r,)).copy())


def _eye_like_jet(J_arg, r):
    base = np.asarray(jm.value_of(J_arg))
    return np.broadcast_to(np.eye(r), base.shape + (r,)).copy()


def _zeros_for(dot, r):
    if isinstance(dot, jm.Jet):
        return jm.Jet(_zeros_for(dot.val, r), _zeros_for(dot.dot, r))
    dot = np.asarray(dot)
    return np.zeros(dot.shape + (r,))


def symplectic_check(chart, orbit, x, p, tol=1e-5):
    """Residual of M^T W_new M = W_old for the full transform Jacobian.

    The three conjugate-pair orientations of W_new are resolved empirically
    (the best sign pattern is reported); W_old is the canonical form on
    (x, p) ordered coordinates.
    """
    n = chart.dim
    m, r = orbit.m, orbit.r
    gen = GeneratingFunction(chart, orbit)

    def full_map(z):
        xx, pp = z[..., :n], z[..., n:]
        mr = mu_r(chart, xx, pp)
        ml = mu_l(chart, xx, pp)
        J = orbit.casimir_values(mr)
        comps = []
        if m:
            q, pi = orbit.solve_qpi(mr, J)
            qp, pip = orbit.solve_qpi(ml, J)
            comps += [q[..., a] for a in range(m)]
            comps += [pi[..., a] for a in range(m)]
            comps += [qp[..., a] for a in range(m)]
            comps += [pip[..., a] for a in range(m)]
        else:
            q = np.zeros(0)
            pip = np.zeros(0)
        if r:
            # tau = dS/dJ with J carrying an extra direction block
            xw = _jet_wrap_const(xx, r)
            qw = _jet_wrap_const(q, r) if m else np.zeros(0)
            pw = _jet_wrap_const(pip, r) if m else np.zeros(0)
            Jw = _jet_wrap_J(J, r)
            Sw = gen.eval(xw, qw, pw, Jw)
            tau = Sw.dot  # dS/dJ block; components along the J-direction axis
            comps += [jm.take_dir(tau, mu) for mu in range(r)]
            comps += [J[..., mu] for mu in range(r)]
        return jm.stack(comps)

    z0 = np.concatenate([np.asarray(x, dtype=float), np.asarray(p, dtype=float)])
    _, M = jm.value_and_jacobian(full_map, z0)

    W_old = np.zeros((2 * n, 2 * n))
    W_old[:n, n:] = -np.eye(n)
    W_old[n:, :n] = np.eye(n)

    best = None
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            for s3 in (1.0, -1.0):
                W_new = np.zeros((2 * n, 2 * n))
                for a in range(m):
                    _set_pair(W_new, a, m + a, s1)
                for a in range(m):
                    _set_pair(W_new, 2 * m + a, 3 * m + a, s2)
                for mu in range(r):
                    _set_pair(W_new, 4 * m + mu, 4 * m + r + mu, s3)
                res = float(np.max(np.abs(M.T @ W_new @ M - W_old)))
                if best is None or res < best[0]:
                    best = (res, (int(s1), int(s2), int(s3)))
    residual, signs = best
    return {"group": chart.name, "residual": residual,
            "pair_orientations": {"q_pi": signs[0], "qp_pip": signs[1], "tau_J": signs[2]},
            "passed": bool(residual < tol)}


def _set_pair(W, i, j, s):
    W[i, j] = s
    W[j, i] = -s
