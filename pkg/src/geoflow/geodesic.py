"""Right-invariant geodesic flows: direct, reduced, and quadrature routes.

The direct flow integrates Hamilton's equations for
H = (1/2) G^{ab} eta_a^cl eta_b^cl on T*G; its conserved quantities are the
left-frame momenta (the Killing constants).  The reduced flow integrates the
orbit variables (q', pi') under H~ = (1/2) G^{ab} f_a f_b with (q, pi, J)
frozen, plus dtau/dt = dH~/dJ.  The printed reduced system has a
non-canonical sign for dpi'/dt; the canonical sign is used after the
cross-check against the direct flow (see reduced_sign_report).
"""

from __future__ import annotations

import numpy as np

from . import jets as jm
from .ode import ode_solve
from .quad import adaptive_quad
from .momentum import mu_r, mu_l
from .transform import forward_transform

__all__ = ["InvariantMetric", "hamiltonian", "integrate_direct",
           "reduced_hamiltonian", "integrate_reduced", "quadrature_solution",
           "trajectory_invariants", "compare_direct_reduced",
           "reduced_sign_report", "TurningPointError"]


class TurningPointError(RuntimeError):
    def __init__(self, location):
        super().__init__(f"turning point of the reduced motion near q' = {location:.6g}")
        self.location = location


class InvariantMetric:
    """Constant symmetric nondegenerate matrix on the frame indices."""

    def __init__(self, G):
        G = np.asarray(G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("metric must be a square matrix")
        if np.max(np.abs(G - G.T)) > 1e-12:
            raise ValueError("metric must be symmetric")
        det = np.linalg.det(G)
        if abs(det) < 1e-12:
            raise ValueError("metric must be non-degenerate")
        self.G = G
        self.G_inv = np.linalg.inv(G)
        eigs = np.linalg.eigvalsh(G)
        self.signature = (int(np.sum(eigs > 0)), int(np.sum(eigs < 0)))

    @property
    def dim(self):
        return self.G.shape[0]

    def __repr__(self):
        return f"InvariantMetric(signature={self.signature})"


def hamiltonian(chart, metric, x, p):
    """H = (1/2) G^{ab} eta_a^cl eta_b^cl, batched."""
    ml = mu_l(chart, x, p)
    if isinstance(ml, jm.Jet):
        acc = None
        for a in range(chart.dim):
            for b in range(chart.dim):
                if metric.G_inv[a, b] == 0.0:
                    continue
                term = (0.5 * metric.G_inv[a, b]) * (ml[..., a] * ml[..., b])
                acc = term if acc is None else acc + term
        return acc
    return 0.5 * np.einsum("ab,...a,...b->...", metric.G_inv, ml, ml)


def _hamilton_rhs(chart, metric):
    """Fast Hamilton right-hand side from one frame-jet per evaluation."""
    n = chart.dim
    Gi = metric.G_inv

    def frame_flat(x):
        E = chart.eta_matrix(x)
        return jm.stack([E[..., i, a] for i in range(n) for a in range(n)])

    def rhs(t, y):
        x, p = y[:n], y[n:]
        flat, dflat = jm.value_and_jacobian(frame_flat, x)
        eta = flat.reshape(n, n)
        deta = dflat.reshape(n, n, n)          # [i, a, k] = d_k eta_a^i
        ginv = np.einsum("ab,ia,jb->ij", Gi, eta, eta)
        dginv = (np.einsum("ab,iak,jb->ijk", Gi, deta, eta)
                 + np.einsum("ab,ia,jbk->ijk", Gi, eta, deta))
        xdot = ginv @ p
        pdot = -0.5 * np.einsum("jki,j,k->i", dginv, p, p)
        return np.concatenate([xdot, pdot])

    return rhs


def integrate_direct(chart, metric, x0, p0, T, tol=1e-10, enforce_domain=True):
    """Dense trajectory of the direct geodesic flow in (x, p)."""
    n = chart.dim
    y0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(p0, dtype=float)])
    check = (lambda y: chart.contains(y[:n])) if enforce_domain else None
    return ode_solve(_hamilton_rhs(chart, metric), y0, (0.0, T), tol=tol,
                     domain_check=check)


def trajectory_invariants(chart, metric, traj, n_samples=200):
    """Relative drifts of the energy and all Killing constants along a run."""
    n = chart.dim
    ts, ys = traj.sample(n_samples)
    xs, ps = ys[:, :n], ys[:, n:]
    H = hamiltonian(chart, metric, xs, ps)
    killing = mu_r(chart, xs, ps)
    H_scale = max(abs(float(H[0])), 1e-12)
    drifts = {"energy": float(np.max(np.abs(H - H[0])) / H_scale)}
    k_scale = max(float(np.max(np.abs(killing[0]))), 1e-12)
    drifts["killing"] = float(np.max(np.abs(killing - killing[0])) / k_scale)
    return drifts


def reduced_hamiltonian(orbit, metric, qp, pip, J):
    """H~ = (1/2) G^{ab} f_a(q', pi'; lambda(J)) f_b(q', pi'; lambda(J))."""
    fv = orbit.f(qp, pip, J)
    Gi = metric.G_inv
    n = orbit.chart.dim
    if isinstance(fv, jm.Jet):
        acc = None
        for a in range(n):
            for b in range(n):
                if Gi[a, b] == 0.0:
                    continue
                term = (0.5 * Gi[a, b]) * (fv[..., a] * fv[..., b])
                acc = term if acc is None else acc + term
        return acc
    return 0.5 * np.einsum("ab,...a,...b->...", Gi, fv, fv)


def integrate_reduced(orbit, metric, cp, T, tol=1e-10, pi_prime_sign=-1.0):
    """Integrate the reduced system: canonical flow of H~ in (q', pi'),
    dtau/dt = dH~/dJ, with (q, pi, J) frozen.

    ``pi_prime_sign`` multiplies dH~/dq' in the pi' equation; the canonical
    value is -1, and +1 reproduces the printed variant for the sign report.
    """
    m, r = orbit.m, orbit.r
    J = np.asarray(cp.J, dtype=float)
    track_tau = cp.tau is not None and r > 0

    def rhs(t, y):
        qp, pip = y[:m], y[m:2 * m]
        z = np.concatenate([qp, pip])

        def ham(w):
            return reduced_hamiltonian(orbit, metric, w[..., :m], w[..., m:], J)

        _, dH = jm.value_and_jacobian(ham, z)
        qdot = dH[m:]
        pdot = pi_prime_sign * dH[:m]
        if track_tau:
            _, dHJ = jm.value_and_jacobian(
                lambda JJ: reduced_hamiltonian(orbit, metric, qp, pip, JJ), J)
            return np.concatenate([qdot, pdot, dHJ])
        return np.concatenate([qdot, pdot])

    y0 = np.concatenate([cp.qp, cp.pip] + ([cp.tau] if track_tau else []))
    return ode_solve(rhs, y0, (0.0, T), tol=tol)


def compare_direct_reduced(chart, orbit, metric, x0, p0, T, tol=1e-10,
                           n_samples=120):
    """Sup deviation of momentum-map components between the two routes.

    The direct trajectory's left momenta mu_l(x(t), p(t)) are compared with
    f(q'(t), pi'(t); lambda(J)) from the reduced flow.
    """
    n = chart.dim
    direct = integrate_direct(chart, metric, x0, p0, T, tol=tol)
    cp = forward_transform(chart, orbit, x0, p0,
                           with_tau=(orbit.point_map_coord is not None or orbit.m == 0))
    reduced = integrate_reduced(orbit, metric, cp, T, tol=tol)
    ts = np.linspace(0.0, T, n_samples)
    ys = direct(ts)
    ml = mu_l(chart, ys[:, :n], ys[:, n:])
    zr = reduced(ts)
    m = orbit.m
    fs = np.stack([np.asarray(jm.value_of(
        orbit.f(zr[k, :m], zr[k, m:2 * m], cp.J))) for k in range(len(ts))])
    dev = float(np.max(np.abs(ml - fs)))
    return {"group": chart.name, "T": T, "deviation": dev, "samples": n_samples}


def reduced_sign_report(chart, orbit, metric, x0, p0, T=1.0, tol=1e-10):
    """Cross-check the printed and canonical signs of the reduced system."""
    n = chart.dim
    direct = integrate_direct(chart, metric, x0, p0, T, tol=tol)
    cp = forward_transform(chart, orbit, x0, p0,
                           with_tau=(orbit.point_map_coord is not None or orbit.m == 0))
    ts = np.linspace(0.0, T, 40)
    ys = direct(ts)
    ml = mu_l(chart, ys[:, :n], ys[:, n:])
    m = orbit.m
    out = {}
    for label, sign in (("canonical", -1.0), ("printed", +1.0)):
        red = integrate_reduced(orbit, metric, cp, T, tol=tol, pi_prime_sign=sign)
        zr = red(ts)
        fs = np.stack([np.asarray(jm.value_of(
            orbit.f(zr[k, :m], zr[k, m:2 * m], cp.J))) for k in range(len(ts))])
        out[label] = float(np.max(np.abs(ml - fs)))
    out["resolved"] = "canonical" if out["canonical"] <= out["printed"] else "printed"
    return out


def _dH_dpip(orbit, metric, qp, pip, J):
    z = np.concatenate([np.atleast_1d(qp), np.atleast_1d(pip)])
    m = orbit.m

    def ham(w):
        return reduced_hamiltonian(orbit, metric, w[..., :m], w[..., m:], J)

    _, dH = jm.value_and_jacobian(ham, z)
    return float(dH[m])


def solve_pi_on_shell(orbit, metric, qp, E, J, pi_ref):
    """pi'(q') on the energy shell H~ = E, on the branch through pi_ref."""
    if orbit.pi_linear:
        X, chi = orbit.xa_chi(np.atleast_1d(qp), J)
        Gi = metric.G_inv
        Xv = np.asarray(jm.value_of(X[0]))  # m = 1
        cv = np.asarray(jm.value_of(chi))
        A = 0.5 * float(Xv @ Gi @ Xv)
        B = float(Xv @ Gi @ cv)
        C = 0.5 * float(cv @ Gi @ cv)
        if abs(A) < 1e-14:
            if abs(B) < 1e-14:
                raise TurningPointError(float(np.atleast_1d(qp)[0]))
            return (E - C) / B
        disc = B * B - 4.0 * A * (C - E)
        if disc < 0.0:
            raise TurningPointError(float(np.atleast_1d(qp)[0]))
        root = np.sqrt(disc)
        cands = ((-B + root) / (2 * A), (-B - root) / (2 * A))
        return min(cands, key=lambda c: abs(c - pi_ref))
    # general branch: damped Newton from the reference value
    pi = float(pi_ref)
    target = float(E)
    for _ in range(60):
        z = np.concatenate([np.atleast_1d(qp), [pi]])
        m = orbit.m

        def ham(w):
            return reduced_hamiltonian(orbit, metric, w[..., :m], w[..., m:], J)

        val, dH = jm.value_and_jacobian(ham, z)
        err = float(val) - target
        if abs(err) < 1e-13:
            return pi
        slope = float(dH[m])
        if abs(slope) < 1e-12:
            raise TurningPointError(float(np.atleast_1d(qp)[0]))
        step = -err / slope
        while abs(step) > 0.5 * (1.0 + abs(pi)):
            step *= 0.5
        pi += step
    raise RuntimeError("on-shell solve did not converge")


def quadrature_solution(orbit, metric, cp, q_targets, tol=1e-11):
    """Times t(q') on a monotone branch:  t = int dq' / (dH~/dpi').

    ``q_targets`` are visited from cp.qp[0]; a turning point inside the
    requested range raises :class:`TurningPointError` with its location.
    Only one-dimensional reduced systems are supported (m = 1); for m = 0 an
    empty result is returned (the motion is linear in tau alone).
    """
    if orbit.m == 0:
        return {"applicable": False, "times": [], "note": "reduced motion is trivial"}
    if orbit.m != 1:
        raise ValueError("quadrature route needs a one-dimensional reduced system")
    J = np.asarray(cp.J, dtype=float)
    E = float(np.asarray(jm.value_of(
        reduced_hamiltonian(orbit, metric, cp.qp, cp.pip, J))))
    q0 = float(cp.qp[0])
    pi0 = float(cp.pip[0])

    # continuation table over the requested span doubles as a turning-point scan
    lo = min([q0] + [float(qt) for qt in q_targets])
    hi = max([q0] + [float(qt) for qt in q_targets])
    grid = np.linspace(lo, hi, 201)
    start = int(np.argmin(np.abs(grid - q0)))
    table_pi = np.empty_like(grid)
    pi_ref = pi0
    for g in range(start, len(grid)):
        pi_ref = solve_pi_on_shell(orbit, metric, [grid[g]], E, J, pi_ref)
        table_pi[g] = pi_ref
    pi_ref = pi0
    for g in range(start, -1, -1):
        pi_ref = solve_pi_on_shell(orbit, metric, [grid[g]], E, J, pi_ref)
        table_pi[g] = pi_ref
    speeds = np.asarray([_dH_dpip(orbit, metric, [grid[g]], [table_pi[g]], J)
                         for g in range(len(grid))])
    if np.any(np.abs(speeds) < 1e-10) or np.any(np.sign(speeds) != np.sign(speeds[0])):
        idx = int(np.argmin(np.abs(speeds)))
        raise TurningPointError(float(grid[idx]))

    def _nearest_pi(qv):
        return float(np.interp(qv, grid, table_pi))

    def dt_dq(qv):
        pi = solve_pi_on_shell(orbit, metric, [qv], E, J, _nearest_pi(qv))
        return 1.0 / _dH_dpip(orbit, metric, [qv], [pi], J)

    times = []
    for qt in q_targets:
        val, _ = adaptive_quad(dt_dq, q0, float(qt), tol=tol)
        times.append(float(val))
    return {"applicable": True, "times": times, "energy": E}
