"""Invariant wave operator, scalar curvature, and exact-solution synthesis.

The wave operator is taken in the invariant-frame form

    H psi = [ G^{ab} eta_a eta_b + G^{ab} C_b eta_a + m^2 + zeta R ] psi,

whose trace term (the Koszul contraction of the frame connection) is active
only on non-unimodular charts; the printed index placement of that term is
ambiguous, so the resolved form above is certified against the coordinate
Laplace-Beltrami assembly.  R is always computed, never supplied, and is
checked to be constant over the chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as jm
from .ode import ode_solve
from .orbits import UnsupportedOrbitError
from .quad import gauss_legendre
from .lrep import parity_ops, jet_d

__all__ = ["KGParams", "ChartDefectError", "NonUnimodularError",
           "scalar_curvature", "curvature_fd_oracle", "kg_apply",
           "kg_coordinate_apply", "kg_operator", "reduced_kg",
           "solve_reduced_ode", "synthesize_solution", "plane_wave"]

TRACE_TERM_SIGN = +1.0  # resolved against the coordinate oracle on aff1


class ChartDefectError(RuntimeError):
    pass


class NonUnimodularError(RuntimeError):
    pass


@dataclass(frozen=True)
class KGParams:
    mass: float
    zeta: float = 0.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")


def _metric_lower_fn(chart, metric):
    """x -> g_ij(x), the inverse of G^{ab} eta_a^i eta_b^j, jet-capable."""
    n = chart.dim
    Gi = metric.G_inv

    def g_lower(x):
        E = chart.eta_matrix(x)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = None
                for a in range(n):
                    for b in range(n):
                        if Gi[a, b] == 0.0:
                            continue
                        term = Gi[a, b] * (E[..., i, a] * E[..., j, b])
                        acc = term if acc is None else acc + term
                row.append(acc)
            rows.append(row)
        return jm.mat_inv(jm.matrix(rows), n=n) if isinstance(E, jm.Jet) \
            else np.linalg.inv(np.einsum("ab,...ia,...jb->...ij", Gi, E, E))

    return g_lower


def _curvature_from_derivatives(g, dg, d2g):
    """Scalar curvature from g_ij and its first two derivative stacks.

    dg[i,j,k] = d_k g_ij, d2g[i,j,k,l] = d_l d_k g_ij.
    """
    ginv = np.linalg.inv(g)
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    gam = 0.5 * np.einsum("kl,ijl->kij", ginv, _sym_combo(dg))
    # derivative of Gamma: d_m Gamma^k_ij
    dginv = -np.einsum("ka,abm,bl->klm", ginv, dg, ginv)
    dcombo = _sym_combo_d(d2g)
    dgam = (0.5 * np.einsum("klm,ijl->kijm", dginv, _sym_combo(dg))
            + 0.5 * np.einsum("kl,ijlm->kijm", ginv, dcombo))
    # Ricci: R_ij = d_k Gamma^k_ij - d_j Gamma^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
    ric = (np.einsum("kijk->ij", dgam)
           - np.einsum("kikj->ij", dgam)
           + np.einsum("kkl,lij->ij", gam, gam)
           - np.einsum("kjl,lik->ij", gam, gam))
    return float(np.einsum("ij,ij->", ginv, ric))


def _sym_combo(dg):
    """c_ijl = d_i g_jl + d_j g_il - d_l g_ij from dg[i,j,k] = d_k g_ij."""
    return (np.einsum("jli->ijl", dg) + np.einsum("ilj->ijl", dg)
            - np.einsum("ijl->ijl", dg))


def _sym_combo_d(d2g):
    """d_m of the combination above from d2g[i,j,k,l] = d_l d_k g_ij."""
    return (np.einsum("jlim->ijlm", d2g) + np.einsum("iljm->ijlm", d2g)
            - np.einsum("ijlm->ijlm", d2g))


def scalar_curvature(chart, metric, n_check=20, seed=0, tol_rel=1e-6):
    """Scalar curvature at the identity, with a constancy certificate."""
    g_fn = _metric_lower_fn(chart, metric)
    rng = np.random.default_rng(seed)
    pts = [chart.identity] + list(chart.sample_points(n_check - 1, rng, scale=0.45))
    values = []
    for x in pts:
        g, dg, d2g = _g_jets(g_fn, np.asarray(x, dtype=float), chart.dim)
        values.append(_curvature_from_derivatives(g, dg, d2g))
    values = np.asarray(values)
    R = float(values[0])
    scale = max(1.0, abs(R))
    spread = float(np.max(np.abs(values - R)) / scale)
    if spread > tol_rel:
        raise ChartDefectError(
            f"{chart.name}: scalar curvature varies over the chart "
            f"(relative spread {spread:.3e}); catalog entry is broken")
    return R, spread


def _g_jets(g_fn, x, n):
    out = g_fn(jm.seed(x, 2))
    g = np.asarray(jm.value_of(out))
    if not isinstance(out, jm.Jet):
        return g, np.zeros((n, n, n)), np.zeros((n, n, n, n))
    dg = np.asarray(jm.value_of(out.dot.val))
    d2g = np.asarray(jm.value_of(out.dot.dot))
    return g, dg, d2g


def curvature_fd_oracle(chart, metric, x=None, h=0.02):
    """Independent curvature value from five-point finite differences."""
    g_fn = _metric_lower_fn(chart, metric)
    n = chart.dim
    x = np.zeros(n) if x is None else np.asarray(x, dtype=float)

    def g_at(v):
        return np.asarray(jm.value_of(g_fn(v)))

    coeff1 = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    off1 = np.array([-2.0, -1.0, 1.0, 2.0]) * h
    coeff2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    off2 = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h

    dg = np.zeros((n, n, n))
    for k in range(n):
        acc = 0.0
        for c, o in zip(coeff1, off1):
            xp = x.copy()
            xp[k] += o
            acc = acc + c * g_at(xp)
        dg[:, :, k] = acc
    d2g = np.zeros((n, n, n, n))
    for k in range(n):
        acc = 0.0
        for c, o in zip(coeff2, off2):
            xp = x.copy()
            xp[k] += o
            acc = acc + c * g_at(xp)
        d2g[:, :, k, k] = acc
        for l in range(k + 1, n):
            acc = 0.0
            for ck, ok in zip(coeff1, off1):
                for cl, ol in zip(coeff1, off1):
                    xp = x.copy()
                    xp[k] += ok
                    xp[l] += ol
                    acc = acc + ck * cl * g_at(xp)
            d2g[:, :, k, l] = acc
            d2g[:, :, l, k] = acc
    return _curvature_from_derivatives(g_at(x), dg, d2g)


def kg_apply(chart, metric, params, psi, x, R=None):
    """(H psi)(x) in the invariant-frame form; order-2 jets drive everything."""
    n = chart.dim
    Gi = metric.G_inv
    x = np.asarray(x, dtype=float)
    if R is None:
        R, _ = scalar_curvature(chart, metric, n_check=2)

    def frame_flat(xx):
        E = chart.eta_matrix(xx)
        return jm.stack([E[..., i, a] for i in range(n) for a in range(n)])

    flat, dflat = jm.value_and_jacobian(frame_flat, x)
    eta = flat.reshape(x.shape[:-1] + (n, n))
    deta = dflat.reshape(x.shape[:-1] + (n, n, n))  # [i, a, k] = d_k eta_a^i

    seeded = jm.seed(x, 2)
    out = psi(seeded)
    val = np.asarray(jm.value_of(out.val if isinstance(out, jm.Jet) else out))
    dpsi = np.asarray(jm.value_of(out.dot.val))
    d2psi = np.asarray(jm.value_of(out.dot.dot))

    second = np.einsum("ab,...ia,...jb,...ij->...", Gi, eta, eta, d2psi)
    first = np.einsum("ab,...ia,...jbi,...j->...", Gi, eta, deta, dpsi)
    Ca = chart.trace_vector
    trace = TRACE_TERM_SIGN * np.einsum("ab,b,...ja,...j->...", Gi, Ca, eta, dpsi)
    return second + first + trace + (params.mass ** 2 + params.zeta * R) * val


def kg_coordinate_apply(chart, metric, params, psi, x, R=None):
    """Independent coordinate-form oracle: g^{ij} (d_i d_j - Gamma^k_ij d_k) psi
    plus the same mass/curvature term."""
    n = chart.dim
    x = np.asarray(x, dtype=float)
    if R is None:
        R, _ = scalar_curvature(chart, metric, n_check=2)
    g_fn = _metric_lower_fn(chart, metric)
    g, dg, _ = _g_jets(g_fn, x, n)
    ginv = np.linalg.inv(g)
    gam = 0.5 * np.einsum("kl,ijl->kij", ginv, _sym_combo(dg))
    out = psi(jm.seed(x, 2))
    val = np.asarray(jm.value_of(out.val if isinstance(out, jm.Jet) else out))
    dpsi = np.asarray(jm.value_of(out.dot.val))
    d2psi = np.asarray(jm.value_of(out.dot.dot))
    lap = np.einsum("ij,ij->", ginv, d2psi) - np.einsum("ij,kij,k->", ginv, gam, dpsi)
    return lap + (params.mass ** 2 + params.zeta * R) * val


def reduced_kg(orbit, metric, params, J, ops=None, R=None):
    """Second-order ODE coefficients (c2, c1, c0) of the reduced equation.

    The equation c2(q) u'' + c1(q) u' + c0(q) u = 0 is the transform of
    H psi = 0 onto the orbit coordinate; it is assembled by composing the
    resolved first-order operators, so it matches the synthesis convention.
    Raises :class:`NonUnimodularError` outside the unimodular scope.
    """
    chart = orbit.chart
    if not chart.unimodular:
        raise NonUnimodularError(
            f"{chart.name}: the reduced route requires a unimodular group "
            "(trace vector C_a must vanish)")
    if orbit.lrep_coeffs is None:
        raise UnsupportedOrbitError(f"{orbit.name}: no representation shipped")
    if R is None:
        R, _ = scalar_curvature(chart, metric, n_check=2)
    if ops is None:
        from .lrep import build_lrep
        ops, _ = build_lrep(orbit, J)
    pops = parity_ops(ops)
    n = chart.dim
    Gi = metric.G_inv
    const = params.mass ** 2 + params.zeta * R

    def coeffs(q):
        c2 = 0.0j
        c1 = 0.0j
        c0 = complex(const)
        for a in range(n):
            for b in range(n):
                if Gi[a, b] == 0.0:
                    continue
                aa = complex(np.ravel(np.asarray(jm.value_of(pops[a].a(q))))[0])
                ba = complex(np.ravel(np.asarray(jm.value_of(pops[a].b(q))))[0])
                ab = complex(np.ravel(np.asarray(jm.value_of(pops[b].a(q))))[0])
                bb = complex(np.ravel(np.asarray(jm.value_of(pops[b].b(q))))[0])
                dab = complex(np.ravel(np.asarray(jm.value_of(
                    jet_d(lambda w: pops[b].a(w))(np.asarray(q)))))[0])
                dbb = complex(np.ravel(np.asarray(jm.value_of(
                    jet_d(lambda w: pops[b].b(w))(np.asarray(q)))))[0])
                w = Gi[a, b]
                c2 += w * aa * ab
                c1 += w * (aa * dab + aa * bb + ba * ab)
                c0 += w * (aa * dbb + ba * bb)
        return c2, c1, c0

    return coeffs


def solve_reduced_ode(coeffs, u0, du0, q_span, tol=1e-11):
    """General solution sampler of the reduced ODE as an initial value problem.

    Returns a jet-capable callable u(q) built on the dense trajectory, with
    u'' supplied through the equation itself so second derivatives are exact.
    """

    def rhs(q, y):
        c2, c1, c0 = coeffs(q)
        u = y[0] + 1j * y[1]
        v = y[2] + 1j * y[3]
        upp = -(c1 * v + c0 * u) / c2
        return np.array([v.real, v.imag, upp.real, upp.imag])

    y0 = np.array([complex(u0).real, complex(u0).imag,
                   complex(du0).real, complex(du0).imag])
    lo, hi = q_span
    fwd = ode_solve(rhs, y0, (0.0, hi), tol=tol)
    bwd = ode_solve(rhs, y0, (0.0, lo), tol=tol)

    def u_parts(q):
        q = np.asarray(q, dtype=float)
        out = np.empty(q.shape + (4,))
        mask = q >= 0.0
        if np.any(mask):
            out[mask] = fwd(q[mask])
        if np.any(~mask):
            out[~mask] = bwd(q[~mask])
        return out

    def value(q):
        y = u_parts(q)
        return y[..., 0] + 1j * y[..., 1]

    def deriv(q):
        y = u_parts(q)
        return y[..., 2] + 1j * y[..., 3]

    def second(q):
        y = u_parts(q)
        u = y[..., 0] + 1j * y[..., 1]
        v = y[..., 2] + 1j * y[..., 3]
        c2, c1, c0 = _coeff_arrays(coeffs, q)
        return -(c1 * v + c0 * u) / c2

    def sampler(q):
        return jm.lift_c2([value, deriv, second], q)

    sampler.domain = (lo, hi)
    return sampler


def _coeff_arrays(coeffs, q):
    q = np.atleast_1d(np.asarray(q, dtype=float))
    c2 = np.empty(q.shape, dtype=complex)
    c1 = np.empty(q.shape, dtype=complex)
    c0 = np.empty(q.shape, dtype=complex)
    for idx in np.ndindex(q.shape):
        c2[idx], c1[idx], c0[idx] = coeffs(float(q[idx]))
    if np.ndim(np.asarray(q)) == 0:
        return c2[0], c1[0], c0[0]
    return c2, c1, c0


def synthesize_solution(chart, orbit, metric, params, J, u_hat, weight=None,
                        q_nodes=96, q_box=None):
    """Assemble psi(x) from a reduced solution through the conjugate kernel.

    psi(x) = int exp(-i B(x, q')) u_hat(P_x(q')) w(q') dq'; the result is a
    jet-capable sampler suitable for the wave-operator residual check.
    """
    if orbit.point_map_coord is None:
        raise UnsupportedOrbitError(f"{orbit.name}: synthesis needs a polarized model")
    lo, hi = q_box if q_box is not None else orbit.q_box
    qg, qw = gauss_legendre(q_nodes, lo, hi)
    if weight is None:
        def weight(qp):
            return np.exp(-0.5 * (qp / (0.35 * (hi - lo))) ** 2)
    wvals = weight(qg) * qw
    c = orbit.point_map_coord
    J = np.asarray(J, dtype=float)

    def psi(x):
        acc = None
        for qp, w in zip(qg, wvals):
            qv = _qconst(qp, x)
            B = orbit.phase_B(x, qv, J)
            phase = jm.exp(-1j * B)
            targ = qp + x[..., c]
            term = phase * u_hat(targ) * w
            acc = term if acc is None else acc + term
        return acc

    return psi


def _qconst(qp, x):
    ref = x[..., 0]
    if isinstance(ref, jm.Jet):
        return jm.stack([jm._const_like(np.asarray(qp), ref, 0)])
    return np.asarray(qp) + np.zeros_like(ref)[..., None]


def plane_wave(k):
    """exp(i k . x) as a jet-capable sampler."""
    k = np.asarray(k, dtype=float)

    def psi(x):
        acc = None
        for i in range(k.shape[-1]):
            term = k[i] * x[..., i]
            acc = term if acc is None else acc + term
        return jm.cos(acc) + 1j * jm.sin(acc)

    return psi


def kg_operator(chart, metric, params, R=None):
    """The wave operator as a jet-capable map on samplers.

    Slower than :func:`kg_apply` but composable, which the symmetry check
    [H, xi_a] psi = 0 needs.
    """
    n = chart.dim
    Gi = metric.G_inv
    if R is None:
        R, _ = scalar_curvature(chart, metric, n_check=2)
    Ca = chart.trace_vector
    const = params.mass ** 2 + params.zeta * R

    def H(psi):
        firsts = [jm.field_apply(chart.eta_matrix, b, psi) for b in range(n)]

        def out(x):
            acc = const * psi(x)
            for a in range(n):
                for b in range(n):
                    if Gi[a, b] != 0.0:
                        acc = acc + Gi[a, b] * jm.field_apply(
                            chart.eta_matrix, a, firsts[b])(x)
                w = TRACE_TERM_SIGN * float(Gi[a] @ Ca)
                if w != 0.0:
                    acc = acc + w * firsts[a](x)
            return acc

        return out

    return H
