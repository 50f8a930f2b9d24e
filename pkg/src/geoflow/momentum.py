"""Momentum mappings, Lie-Poisson brackets, and orbit-model validation.

Bracket conventions.  The canonical bracket used everywhere is

    {F, G} = sum_i dF/dx^i dG/dp_i - dF/dp_i dG/dx^i

(and likewise in (q, pi)).  With the chart frame conventions this makes the
momentum functions of the left frame close with -C and those of the right
frame with +C; the empirically certified signs are part of every report
rather than assumed.
"""

from __future__ import annotations

import numpy as np

from . import jets as jm
from .algebra import poisson_tensor, rank_skew

__all__ = ["mu_r", "mu_l", "check_equivariance", "lie_poisson_bracket",
           "canonical_bracket", "momentum_bracket_residuals",
           "validate_transition", "validate_polarization"]


def mu_r(chart, x, p):
    """Right momentum map: components xi_a^i(x) p_i (Killing momenta)."""
    xi = chart.xi_matrix(x)
    return _contract_frame(xi, p, chart.dim)


def mu_l(chart, x, p):
    """Left momentum map: components eta_a^i(x) p_i."""
    eta = chart.eta_matrix(x)
    return _contract_frame(eta, p, chart.dim)


def _contract_frame(E, p, n):
    if not isinstance(E, jm.Jet) and not isinstance(p, jm.Jet):
        return np.einsum("...ia,...i->...a", E, p)
    comps = []
    for a in range(n):
        acc = None
        for i in range(n):
            term = E[..., i, a] * p[..., i]
            acc = term if acc is None else acc + term
        comps.append(acc)
    return jm.stack(comps)


def check_equivariance(chart, x, p):
    """Residual |mu_l(x, p) - Ad*_x mu_r(x, p)| (batched)."""
    mr = mu_r(chart, x, p)
    ml = mu_l(chart, x, p)
    pushed = np.einsum("...ab,...b->...a", chart.adstar_matrix(x), mr)
    return float(np.max(np.abs(ml - pushed)))


def lie_poisson_bracket(alg, phi, psi, f):
    """{phi, psi}_g(f) = C_ab^c f_c dphi/df_a dpsi/df_b via jets."""
    f = np.asarray(f, dtype=float)
    _, dphi = jm.value_and_jacobian(lambda v: phi(v), f)
    _, dpsi = jm.value_and_jacobian(lambda v: psi(v), f)
    B = poisson_tensor(alg, f)
    return float(np.einsum("ab,a,b->", B, dphi, dpsi))


def canonical_bracket(F, G, q, pi):
    """{F, G} in canonical coordinates (q, pi), batched, via jets.

    F, G map (q, pi) -> scalar or vector of components.
    """
    q = np.asarray(q, dtype=float)
    pi = np.asarray(pi, dtype=float)
    m = q.shape[-1]
    z = np.concatenate([q, pi], axis=-1)

    def fz(w):
        return F(w[..., :m], w[..., m:])

    def gz(w):
        return G(w[..., :m], w[..., m:])

    _, dF = jm.value_and_jacobian(fz, z)
    _, dG = jm.value_and_jacobian(gz, z)
    dFq, dFp = dF[..., :m], dF[..., m:]
    dGq, dGp = dG[..., :m], dG[..., m:]
    return (np.einsum("...am,...bm->...ab", dFq, dGp)
            - np.einsum("...am,...bm->...ab", dFp, dGq))


def momentum_bracket_residuals(chart, points, momenta):
    """Homomorphism residuals of both momentum maps under the T*G bracket.

    Returns a dict with the smallest residual over the two sign conventions
    for each map, and the sign that achieved it.
    """
    n = chart.dim
    x = np.asarray(points)
    p = np.asarray(momenta)
    z = np.concatenate([x, p], axis=-1)

    def mur_z(w):
        return mu_r(chart, w[..., :n], w[..., n:])

    def mul_z(w):
        return mu_l(chart, w[..., :n], w[..., n:])

    out = {}
    for label, fn, momentum in (("mu_r", mur_z, None), ("mu_l", mul_z, None)):
        val, jac = jm.value_and_jacobian(fn, z)
        dq, dp = jac[..., :n], jac[..., n:]
        brackets = (np.einsum("...ai,...bi->...ab", dq, dp)
                    - np.einsum("...ai,...bi->...ab", dp, dq))
        target = np.einsum("abc,...c->...ab", chart.algebra.C, val)
        res_plus = float(np.max(np.abs(brackets - target)))
        res_minus = float(np.max(np.abs(brackets + target)))
        if res_plus <= res_minus:
            out[label] = {"residual": res_plus, "sign": "+C"}
        else:
            out[label] = {"residual": res_minus, "sign": "-C"}
    return out


def validate_transition(orbit, samples=200, seed=0):
    """Max residual of {f_a, f_b}_(q,pi) - C_ab^c f_c over random (q, pi, J)."""
    chart = orbit.chart
    rng = np.random.default_rng(seed)
    if orbit.m == 0:
        return {"group": chart.name, "max_residual": 0.0, "passed": True,
                "samples": samples, "note": "zero-dimensional orbits"}
    lo, hi = orbit.q_box
    qs = rng.uniform(max(lo, -2.0), min(hi, 2.0), (samples, orbit.m))
    pis = rng.uniform(-1.5, 1.5, (samples, orbit.m))
    Js = np.stack([orbit.lam_sampler(rng) for _ in range(samples)])
    if orbit.name == "so3":
        # keep |pi| < J so the cylindrical chart stays on the sphere
        pis = 0.8 * Js[..., :1] * rng.uniform(-1.0, 1.0, (samples, 1))

    worst = 0.0
    for k in range(samples):
        J = Js[k]
        br = canonical_bracket(
            lambda q, pi: orbit.f(q, pi, J),
            lambda q, pi: orbit.f(q, pi, J),
            qs[k], pis[k])
        fval = np.asarray(jm.value_of(orbit.f(qs[k], pis[k], J)))
        target = np.einsum("abc,c->ab", chart.algebra.C, fval)
        worst = max(worst, float(np.max(np.abs(br - target))))
    return {"group": chart.name, "max_residual": worst,
            "passed": bool(worst < 1e-8), "samples": samples, "seed": seed}


def validate_polarization(orbit, J_samples=10, seed=0, tol=1e-12):
    """Check both polarization conditions for the shipped subalgebra.

    dim p = n - (orbit dim)/2 and <lambda(J), [p, p]> = 0 at sampled J.
    """
    chart = orbit.chart
    if orbit.polarization is None:
        return {"group": chart.name, "applicable": False, "passed": False,
                "note": "model ships without a real polarization"}
    P = np.asarray(orbit.polarization, dtype=float)
    rng = np.random.default_rng(seed)
    n = chart.dim
    dim_p = P.shape[0]
    ok_dim = True
    ok_pair = True
    worst = 0.0
    for _ in range(J_samples):
        J = orbit.lam_sampler(rng)
        lam = np.asarray(jm.value_of(orbit.lam(J)))
        half_orbit = rank_skew(poisson_tensor(chart.algebra, lam)) // 2
        if dim_p != n - half_orbit:
            ok_dim = False
        for i in range(dim_p):
            for j in range(dim_p):
                br = chart.algebra.bracket(P[i], P[j])
                worst = max(worst, abs(float(np.dot(lam, br))))
    ok_pair = worst <= tol
    return {"group": chart.name, "applicable": True,
            "dim_condition": ok_dim, "isotropy_residual": worst,
            "passed": bool(ok_dim and ok_pair)}
