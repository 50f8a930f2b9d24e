"""First-order orbit representations and structured matrix-element kernels.

The operators l_a = a_a(q) d_q + b_a(q; lambda) ship with the orbit models
and close with the same structure constants as the left frame.  Matrix
elements of the lifted group representation are built from the generating
function: for pi'-linear S the oscillatory integral collapses to a
delta-supported kernel with unit-modulus phase.

Resolved conventions (recorded in every report, see the sign notes in
:mod:`geoflow.transform`): the kernel family composes as a homomorphism,
kernel(x) o kernel(y) = kernel(xy), when read as

    D(x; q, q') = exp(i B(x, q')) |dP_x/dq'|^{1/2} delta(q - P_x(q')),

i.e. the delta support is the graph of the coadjoint point map and the
phase/density ride on the source slot.  Its infinitesimal generators are the
shipped operators conjugated by the parity map q -> -q on Q; both
invariant-field systems hold with that pairing and are checked as such,
alongside the printed pairing for transparency.
"""

from __future__ import annotations

import numpy as np

from . import jets as jm
from .orbits import UnsupportedOrbitError
from .transform import GeneratingFunction

__all__ = ["LambdaRepOperator", "build_lrep", "commutator_residuals",
           "hermiticity_check", "gaussian_battery", "KernelElement",
           "matrix_element_via_S", "matrix_element_pde_residuals",
           "compose_kernels", "kernel_product_residual", "parity_ops", "jet_d"]


def _ones_dir(q):
    if isinstance(q, jm.Jet):
        return jm.Jet(_ones_dir(q.val), jm._zeros_extend(q.dot, 1))
    return np.ones(np.shape(q) + (1,))


def jet_d(f):
    """Derivative of a jet-capable scalar function of one variable."""

    def df(q):
        seeded = jm.Jet(q if isinstance(q, jm.Jet) else np.asarray(q, dtype=float),
                        _ones_dir(q))
        out = f(seeded)
        return jm.take_dir(out.dot, 0)

    return df


class LambdaRepOperator:
    """l phi (q) = a(q) phi'(q) + b(q) phi(q), on one orbit coordinate."""

    def __init__(self, index, a_fn, b_fn, J):
        self.index = index
        self.J = np.asarray(J, dtype=float)
        self._a = a_fn
        self._b = b_fn

    def a(self, q):
        return self._a(_wrap_q(q), self.J)

    def b(self, q):
        return self._b(_wrap_q(q), self.J)

    def apply(self, phi, q):
        """Evaluate (l phi)(q); phi must be jet-capable."""
        return self.a(q) * jet_d(phi)(q) + self.b(q) * phi(q)

    def as_function(self, phi):
        def out(q):
            return self.apply(phi, q)
        return out

    def parity(self):
        """The conjugated operator P l P with (P phi)(q) = phi(-q)."""
        return LambdaRepOperator(
            self.index,
            lambda q, J: -self._a(_neg_q(q), J),
            lambda q, J: self._b(_neg_q(q), J),
            self.J)


def _wrap_q(q):
    """Present a scalar-shaped q as the (..., 1) block the catalog expects."""
    if isinstance(q, jm.Jet):
        return jm.stack([q])
    return np.asarray(q)[..., None]


def _neg_q(q):
    return -q if isinstance(q, jm.Jet) else np.negative(q)


def parity_ops(ops):
    return [op.parity() for op in ops]


def build_lrep(orbit, J):
    """The shipped representation operators at the orbit parameter J.

    A substitution candidate (pi -> -i d_q in the pi-linear transitions,
    times i) is compared against the shipped coefficients; they must agree
    up to componentwise sign/conjugation normalization, which is recorded.
    Only the shipped operators are used downstream.
    """
    if orbit.lrep_coeffs is None:
        raise UnsupportedOrbitError(
            f"{orbit.name}: no representation coefficients shipped")
    a_coeffs, b_coeffs = orbit.lrep_coeffs
    J = np.asarray(J, dtype=float)
    n = orbit.chart.dim
    ops = []
    for a_idx in range(n):
        a_fn = a_coeffs[a_idx] if a_coeffs else (lambda q, JJ: 0.0 * q[..., 0])
        ops.append(LambdaRepOperator(a_idx, _lift_coeff(a_fn), _lift_coeff(b_coeffs[a_idx]), J))

    normalization = None
    if orbit.pi_linear and orbit.m == 1:
        normalization = _candidate_normalization(orbit, ops, J)
    return ops, {"group": orbit.name, "J": J.tolist(),
                 "candidate_normalization": normalization}


def _lift_coeff(fn):
    def wrapped(q, J):
        return fn(q, J)
    return wrapped


def _candidate_normalization(orbit, ops, J):
    """Relation of shipped coefficients to the substitution candidate."""
    qs = np.linspace(-1.3, 1.2, 7)
    out = []
    for a_idx, op in enumerate(ops):
        rels = []
        for qv in qs:
            q = np.array([qv])
            X, chi = orbit.xa_chi(q, J)
            cand_a = X[0][..., a_idx]          # X_a^1 (m = 1)
            cand_b = 1j * chi[..., a_idx]      # i chi_a
            got_a = np.asarray(jm.value_of(op.a(qv)))
            got_b = np.asarray(jm.value_of(op.b(qv)))
            rels.append((complex(np.ravel(got_a)[0]) - complex(np.ravel(cand_a)[0]),
                         complex(np.ravel(got_b)[0]), complex(np.ravel(cand_b)[0])))
        da = max(abs(r[0]) for r in rels)
        b_same = max(abs(r[1] - r[2]) for r in rels)
        b_conj = max(abs(r[1] - np.conj(r[2])) for r in rels)
        b_neg = max(abs(r[1] + r[2]) for r in rels)
        b_negc = max(abs(r[1] + np.conj(r[2])) for r in rels)
        best = min((b_same, "identity"), (b_conj, "conjugate"),
                   (b_neg, "negated"), (b_negc, "negated conjugate"))
        out.append({"operator": a_idx, "derivative_part_matches": bool(da < 1e-10),
                    "scalar_part": best[1], "residual": float(best[0])})
    return out


def commutator_residuals(ops, alg, q_samples, test_functions):
    """sup |([l_a, l_b] - C_ab^c l_c) phi| over the battery and sample points."""
    n = len(ops)
    worst = 0.0
    for phi in test_functions:
        lphi = [ops[b].as_function(phi) for b in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                def comm(q, a=a, b=b):
                    return ops[a].apply(lphi[b], q) - ops[b].apply(lphi[a], q)

                target_ops = alg.C[a, b]

                def target(q, target_ops=target_ops):
                    acc = 0.0
                    for c in range(n):
                        if target_ops[c] != 0.0:
                            acc = acc + target_ops[c] * ops[c].apply(phi, q)
                    return acc

                res = np.abs(np.asarray(jm.value_of(comm(q_samples)))
                             - np.asarray(jm.value_of(target(q_samples))))
                worst = max(worst, float(np.max(res)))
    return worst


def gaussian_battery(count, q_center=0.0, width=1.0, seed=0):
    """Smooth localized test functions with varied scales and phases."""
    rng = np.random.default_rng(seed)
    funcs = []
    for _ in range(count):
        c = q_center + rng.uniform(-1.0, 1.0)
        s = width * rng.uniform(0.6, 1.6)
        k = rng.uniform(-2.0, 2.0)

        def phi(q, c=c, s=s, k=k):
            u = (q - c) / s
            return jm.exp(-0.5 * u * u) * (jm.cos(k * q) + 1j * jm.sin(k * q))

        funcs.append(phi)
    return funcs


def hermiticity_check(orbit, ops, n_funcs=6, n_nodes=240, seed=0,
                      density=None, box=None):
    """Residual of <l phi, psi> + <phi, l psi> under the Q measure.

    Test functions are localized inside the quadrature box; a wrong density
    can be injected for negative controls.
    """
    lo, hi = box if box is not None else orbit.q_box
    from .quad import gauss_legendre
    qs, ws = gauss_legendre(n_nodes, lo, hi)
    w_density = np.ones_like(qs) if density is None else density(qs)
    funcs = gaussian_battery(n_funcs, q_center=0.0, width=1.0, seed=seed)
    worst = 0.0
    for i in range(len(funcs)):
        for j in range(i, len(funcs)):
            phi, psi = funcs[i], funcs[j]
            phi_v = np.asarray(jm.value_of(phi(qs)))
            psi_v = np.asarray(jm.value_of(psi(qs)))
            for op in ops:
                lphi = np.asarray(jm.value_of(op.apply(phi, qs)))
                lpsi = np.asarray(jm.value_of(op.apply(psi, qs)))
                ip1 = np.sum(ws * w_density * np.conj(lphi) * psi_v)
                ip2 = np.sum(ws * w_density * np.conj(phi_v) * lpsi)
                scale = max(1.0, abs(ip1), abs(ip2))
                worst = max(worst, abs(ip1 + ip2) / scale)
    return float(worst)


# ---------------------------------------------------------------------------
# structured matrix elements
# ---------------------------------------------------------------------------

class KernelElement:
    """Delta-supported matrix-element kernel of the lifted representation.

    Fields: the group element, the point map P (source slot), the real phase
    B (source slot), and the density exponent; the kernel reads

        D(x; q, q') = exp(i B(x, q')) |dP/dq'|^{1/2} delta(q - P(x, q')).
    """

    def __init__(self, orbit, x, J, point_map, phase, gen=None):
        self.orbit = orbit
        self.x = np.asarray(x, dtype=float)
        self.J = np.asarray(J, dtype=float)
        self.point_map = point_map      # jet-capable q' -> q
        self.phase = phase              # jet-capable q' -> B(x, q')
        self._gen = gen

    def density(self, q):
        dP = jet_d(self.point_map)(q)
        dP = jm.value_of(dP) if not isinstance(dP, jm.Jet) else dP
        if isinstance(dP, jm.Jet):
            return 1.0 / jm.sqrt(jm.where(jm.value_of(dP) < 0, -dP, dP))
        a = np.abs(np.asarray(dP))
        return 1.0 / np.sqrt(a)

    def unitarity_residual(self, qs):
        """| density^2 * point-map Jacobian - 1 | and | Im B | over samples."""
        dP = np.asarray(jm.value_of(jet_d(self.point_map)(qs)))
        rho = np.asarray(jm.value_of(self.density(qs)))
        res1 = float(np.max(np.abs(rho ** 2 * np.abs(dP) - 1.0)))
        res2 = float(np.max(np.abs(np.imag(np.asarray(jm.value_of(self.phase(qs)))))))
        return max(res1, res2)

    def apply(self, phi, q):
        """(T_x phi)(q) through the structured kernel (scalar-shaped q)."""
        s = self._invert_point(q)
        return (np.exp(1j * np.asarray(jm.value_of(self.phase(s))))
                * np.asarray(jm.value_of(self.density(s))) * phi(s))

    def _invert_point(self, q):
        c = self.orbit.point_map_coord
        return np.asarray(q) - self.x[..., c]

    def dump(self, qs):
        qs = np.asarray(qs, dtype=float)
        return {
            "group": self.orbit.name,
            "x": self.x.tolist(),
            "J": self.J.tolist(),
            "point_map_samples": [[float(q), float(jm.value_of(self.point_map(q)))]
                                  for q in qs],
            "phase_samples": [[float(q), float(np.real(jm.value_of(self.phase(q))))]
                              for q in qs],
            "density": [float(np.real(jm.value_of(self.density(q)))) for q in qs],
        }


def matrix_element_via_S(gen: GeneratingFunction, orbit, x, J, check_tol=1e-8):
    """Collapse the oscillatory matrix-element integral through S.

    S must be linear in the momentum slot (certified here); the result is the
    structured delta kernel, whose point map must match the coadjoint action.
    """
    x = np.asarray(x, dtype=float)
    J = np.asarray(J, dtype=float)
    if orbit.m == 0:
        def phase0(q):
            return gen.eval(x, np.zeros(0), np.zeros(0), J)

        return KernelElement(orbit, x, J, point_map=lambda q: q, phase=phase0, gen=gen)
    if orbit.m != 1:
        raise UnsupportedOrbitError("structured kernels need m <= 1")

    # linearity of S in pi': second derivative must vanish
    q_probe = np.array([0.37])
    for pp in (np.array([0.3]), np.array([-1.1])):
        d2 = jm.hessian(lambda w: gen.eval(x, q_probe, w, J), pp)
        if float(np.max(np.abs(d2))) > check_tol:
            raise UnsupportedOrbitError(
                f"{orbit.name}: generating function is not linear in pi'")

    def A_of(q):
        # dS/dpi' - q at pi' = 0
        qv = _wrap_q(q)
        pip0 = np.zeros(1)
        dS = jm.value_and_jacobian(lambda w: gen.eval(x, qv, w, J), pip0)[1]
        return float(np.ravel(dS)[0]) - float(np.ravel(np.asarray(jm.value_of(qv)))[0])

    def point_map(q):
        if orbit.phase_B is not None:
            return q + x[..., orbit.point_map_coord] + 0.0 * q
        return q + A_of(q)

    def phase(q):
        qv = _wrap_q(q)
        if orbit.phase_B is not None:
            return orbit.phase_B(_xc(x, q), qv, J)
        return gen.eval(x, qv, np.zeros(1), J) - 0.0

    # certify the point map against the catalog coadjoint action, and the
    # closed-form phase against the quadrature route
    for qv in (-0.8, 0.13, 0.9):
        pm = float(jm.value_of(point_map(qv)))
        target = float(qv + x[orbit.point_map_coord])
        if abs(pm - target) > check_tol:
            raise RuntimeError("kernel point map disagrees with the coadjoint action")
        S0 = gen.eval(x, np.array([qv]), np.zeros(1), J)
        if abs(complex(np.ravel(np.asarray(jm.value_of(phase(qv))))[0]) - complex(S0)) > check_tol:
            raise RuntimeError("closed-form kernel phase disagrees with the S quadrature")
    return KernelElement(orbit, x, J, point_map=point_map, phase=phase, gen=gen)


def _xc(x, q):
    """Broadcast the group element against a (possibly jet) q batch."""
    if isinstance(q, jm.Jet):
        comps = [jm._const_like(x[..., i], q, 0) for i in range(x.shape[-1])]
        return jm.stack(comps)
    q = np.asarray(q)
    return np.broadcast_to(x, q.shape + x.shape)


def matrix_element_pde_residuals(chart, orbit, kernel, ops, q_samples,
                                 include_printed=True):
    """Residuals of the invariant-field systems on the structured kernel.

    Resolved pairing (recorded): the left frame pairs with the conjugated
    parity operators on the source slot, the right frame with the parity
    operators on the target slot:

        (xi_a(x)  + conj(l'_a)(q')) D = 0
        (eta_a(x) - l'_a(q))        D = 0,   l' = parity . l . parity

    Each residual combines the delta and delta' coefficients.  The residuals
    of the pairing as printed in the source equations are reported alongside
    when ``include_printed`` is set.
    """
    x = kernel.x
    n = chart.dim
    pops = parity_ops(ops)
    xi = chart.xi_matrix(x)
    eta = chart.eta_matrix(x)

    def F(xx, q):
        # complex log-amplitude iB + log rho; rho == 1 for the catalog's
        # translation point maps (unitarity is certified separately)
        qv = _wrap_q(q)
        if kernel.orbit.phase_B is not None:
            xx_vec = xx if isinstance(xx, jm.Jet) else _xc(np.asarray(xx), q)
            return 1j * kernel.orbit.phase_B(xx_vec, qv, kernel.J)
        return 1j * kernel._gen.eval(xx, qv, np.zeros(1), kernel.J)

    out = {"resolved": {"xi_system": 0.0, "eta_system": 0.0},
           "printed": {"xi_system": 0.0, "eta_system": 0.0}}
    c = orbit.point_map_coord

    for qv in np.atleast_1d(q_samples):
        qv = float(qv)
        # x-gradients of F and P at fixed q'
        _, dF_dx = jm.value_and_jacobian(lambda xx: F(xx, qv), x)
        dP_dx = np.zeros(n)
        dP_dx[c] = 1.0
        # q'-derivatives
        dF_dq = complex(np.ravel(np.asarray(jm.value_of(jet_d(lambda qq: F(x, qq))(qv))))[0])
        dP_dq = 1.0
        Pq = qv + x[c]

        for a in range(n):
            xiF = complex(xi[:, a] @ dF_dx)
            xiP = float(xi[:, a] @ dP_dx)
            etaF = complex(eta[:, a] @ dF_dx)
            etaP = float(eta[:, a] @ dP_dx)
            pa = complex(np.ravel(np.asarray(jm.value_of(pops[a].a(qv))))[0])
            pb = complex(np.ravel(np.asarray(jm.value_of(pops[a].b(qv))))[0])
            pa_t = complex(np.ravel(np.asarray(jm.value_of(pops[a].a(Pq))))[0])
            pb_t = complex(np.ravel(np.asarray(jm.value_of(pops[a].b(Pq))))[0])
            dpa_t = complex(np.ravel(np.asarray(jm.value_of(
                jet_d(lambda qq: pops[a].a(qq))(Pq))))[0])
            # resolved xi system: delta and delta' coefficients
            delta = xiF + np.conj(pa) * dF_dq + np.conj(pb)
            deltap = -xiP - np.conj(pa) * dP_dq
            out["resolved"]["xi_system"] = max(out["resolved"]["xi_system"],
                                               abs(delta) + abs(deltap))
            # resolved eta system
            delta = etaF - (pb_t - dpa_t)
            deltap = -etaP - pa_t
            out["resolved"]["eta_system"] = max(out["resolved"]["eta_system"],
                                                abs(delta) + abs(deltap))
            if include_printed:
                sa = complex(np.ravel(np.asarray(jm.value_of(ops[a].a(Pq))))[0])
                sb = complex(np.ravel(np.asarray(jm.value_of(ops[a].b(Pq))))[0])
                dsa = complex(np.ravel(np.asarray(jm.value_of(
                    jet_d(lambda qq: ops[a].a(qq))(Pq))))[0])
                delta = xiF + (sb - dsa)
                deltap = -xiP + sa
                out["printed"]["xi_system"] = max(out["printed"]["xi_system"],
                                                  abs(delta) + abs(deltap))
                sa_s = complex(np.ravel(np.asarray(jm.value_of(ops[a].a(qv))))[0])
                sb_s = complex(np.ravel(np.asarray(jm.value_of(ops[a].b(qv))))[0])
                delta = etaF + np.conj(sa_s) * dF_dq + np.conj(sb_s)
                deltap = -etaP - np.conj(sa_s) * dP_dq
                out["printed"]["eta_system"] = max(out["printed"]["eta_system"],
                                                   abs(delta) + abs(deltap))
    out["convention"] = {
        "xi_system": "xi_a(x) + conj(parity l_a) acting on the source slot",
        "eta_system": "eta_a(x) - (parity l_a) acting on the target slot",
    }
    return out


def compose_kernels(k1, k2, chart):
    """Structured composition int D1(q, s) D2(s, q') dmu(s)."""
    orbit = k1.orbit

    def point_map(q):
        return k1.point_map(k2.point_map(q))

    def phase(q):
        return k1.phase(k2.point_map(q)) + k2.phase(q)

    xprod = chart.product(k1.x, k2.x)
    return KernelElement(orbit, xprod, k1.J, point_map=point_map, phase=phase)


def kernel_product_residual(chart, orbit, gen, x, y, J, q_samples):
    """Compare kernel(x) o kernel(y) with kernel(xy) and kernel(yx)."""
    kx = matrix_element_via_S(gen, orbit, x, J)
    ky = matrix_element_via_S(gen, orbit, y, J)
    comp = compose_kernels(kx, ky, chart)
    out = {}
    for label, z in (("xy", chart.product(np.asarray(x), np.asarray(y))),
                     ("yx", chart.product(np.asarray(y), np.asarray(x)))):
        kz = matrix_element_via_S(gen, orbit, z, J)
        worst = 0.0
        for qv in np.atleast_1d(q_samples):
            pm = abs(float(jm.value_of(comp.point_map(qv)))
                     - float(jm.value_of(kz.point_map(qv))))
            ph = abs(complex(np.ravel(np.asarray(jm.value_of(comp.phase(qv))))[0])
                     - complex(np.ravel(np.asarray(jm.value_of(kz.phase(qv))))[0]))
            worst = max(worst, pm + ph)
        out[label] = worst
    out["matches"] = "xy" if out["xy"] <= out["yx"] else "yx"
    return out
