"""Desk-scale Fourier analysis/synthesis through the structured kernels.

For the polarized models the matrix-element kernel is delta supported, so
the analysis integral collapses onto the point-map fibers: with the kernel
convention of :mod:`geoflow.lrep`,

    psi_hat(q, q'; J) = int_{x^c = q - q'} exp(i B(x, q')) psi(x) prod dx^i,
    psi(x) = int exp(-i B(x, q')) psi_hat(q' + x^c, q') dq' dmu(J),

where c is the chart coordinate that translates Q.  Everything is evaluated
with tensor Gauss-Legendre grids; the spectral weight dmu(J) ships with the
orbit model and is validated a posteriori by the round trip itself.
"""

from __future__ import annotations

import numpy as np

from . import jets as jm
from .quad import gauss_legendre
from .orbits import UnsupportedOrbitError

__all__ = ["FourierSetup", "abelian_roundtrip", "polarized_roundtrip",
           "intertwining_residuals", "windowed_orthogonality"]


class FourierSetup:
    """Grids and weights for one group's desk-scale transform.

    ``lam_shells`` lists spectral intervals; the weight has a kink at 0, so
    shells never straddle it.  Packets under test should carry their spectral
    mass inside the shells (the resolution of the truncated q' integral fixes
    the smallest usable |lambda|).
    """

    def __init__(self, orbit, x_box, lam_shells, n_x=32, n_q=40, n_lam=16,
                 u_box=(-6.0, 6.0)):
        self.orbit = orbit
        self.x_box = np.asarray(x_box, dtype=float)  # (n, 2) lo/hi per coord
        self.lam_shells = [(float(a), float(b)) for a, b in lam_shells]
        self.n_x = n_x
        self.n_q = n_q
        self.n_lam = n_lam
        self.u_box = u_box

    def lam_grid(self):
        gs, ws = [], []
        for lo, hi in self.lam_shells:
            g, w = gauss_legendre(self.n_lam, lo, hi)
            gs.append(g)
            ws.append(w)
        return np.concatenate(gs), np.concatenate(ws)


def abelian_roundtrip(orbit, psi, L=5.0, lam_max=8.0, n_x=48, n_lam=48,
                      n_eval=9):
    """Classical transform pair on R^n; returns the relative L2 error."""
    n = orbit.chart.dim
    xg, xw = gauss_legendre(n_x, -L, L)
    lg, lw = gauss_legendre(n_lam, -lam_max, lam_max)
    if n == 1:
        psi_x = np.asarray(jm.value_of(psi(xg[:, None])))
        # psi_hat(lam) = int e^{i lam x} psi dx
        phase = np.exp(1j * np.outer(lg, xg))
        psi_hat = phase @ (xw * psi_x)
        # reconstruction on an evaluation grid
        xe = np.linspace(-0.8 * L, 0.8 * L, n_eval)
        rec = (np.exp(-1j * np.outer(xe, lg)) @ (lw * psi_hat)) / (2 * np.pi)
        ref = np.asarray(jm.value_of(psi(xe[:, None])))
        err = np.sqrt(np.sum(np.abs(rec - ref) ** 2) / np.sum(np.abs(ref) ** 2))
        return float(err)
    if n == 2:
        X1, X2 = np.meshgrid(xg, xg, indexing="ij")
        pts = np.stack([X1, X2], axis=-1)
        psi_x = np.asarray(jm.value_of(psi(pts)))
        W = np.outer(xw, xw)
        e1 = np.exp(1j * np.outer(lg, xg))
        psi_hat = np.einsum("ai,bj,ij->ab", e1, e1, W * psi_x)
        xe = np.linspace(-0.7 * L, 0.7 * L, n_eval)
        E1, E2 = np.meshgrid(xe, xe, indexing="ij")
        rec = np.einsum("ia,jb,ab->ij",
                        np.exp(-1j * np.outer(xe, lg)),
                        np.exp(-1j * np.outer(xe, lg)),
                        np.outer(lw, lw) * psi_hat) / (2 * np.pi) ** 2
        ref = np.asarray(jm.value_of(psi(np.stack([E1, E2], axis=-1))))
        err = np.sqrt(np.sum(np.abs(rec - ref) ** 2) / np.sum(np.abs(ref) ** 2))
        return float(err)
    raise ValueError("abelian round trip implemented for n <= 2")


def _fiber_grids(setup):
    orbit = setup.orbit
    n = orbit.chart.dim
    c = orbit.point_map_coord
    fibers = [i for i in range(n) if i != c]
    grids = []
    for i in fibers:
        g, w = gauss_legendre(setup.n_x, setup.x_box[i, 0], setup.x_box[i, 1])
        grids.append((i, g, w))
    return c, fibers, grids


def analyze_on_table(setup, psi, x_c_values):
    """psi_hat(q' + x^c, q'; J) tabulated on (x^c values, q' grid, J grid).

    Returns (q_grid, q_weights, J_grid, J_weights_with_density, table) where
    table[s, j, k] corresponds to (x^c = x_c_values[s], q'_j, J_k).
    """
    orbit = setup.orbit
    if orbit.m != 1 or orbit.point_map_coord is None:
        raise UnsupportedOrbitError(f"{orbit.name}: fiber transform needs a "
                                    "one-dimensional polarized model")
    c, fibers, grids = _fiber_grids(setup)
    (i1, g1, w1), (i2, g2, w2) = grids
    qg, qw = gauss_legendre(setup.n_q, setup.u_box[0], setup.u_box[1])
    lg, lw = setup.lam_grid()
    dens = np.array([float(orbit.spectral_density(np.array([l]))) for l in lg])

    n = orbit.chart.dim
    G1, G2 = np.meshgrid(g1, g2, indexing="ij")
    W12 = np.outer(w1, w2)
    lam_block = lg[:, None, None, None]  # broadcast (K, A, B, r=1)
    table = np.empty((len(x_c_values), len(qg), len(lg)), dtype=complex)
    for s, xc in enumerate(x_c_values):
        # fiber points x with x^c fixed
        pts = np.zeros(G1.shape + (n,))
        pts[..., c] = xc
        pts[..., i1] = G1
        pts[..., i2] = G2
        psi_vals = np.asarray(jm.value_of(psi(pts))) * W12
        for j, qp in enumerate(qg):
            B = np.asarray(jm.value_of(orbit.phase_B(
                pts[None, ...], np.full((1, 1, 1), qp), lam_block)))
            table[s, j, :] = np.einsum("kab,ab->k", np.exp(1j * B), psi_vals)
    return qg, qw, lg, lw * dens, table


def polarized_roundtrip(setup, psi, x_eval, n_report=None):
    """Round trip psi -> psi_hat -> psi on the given evaluation points.

    Returns (relative L2 error, reconstruction, reference).
    """
    orbit = setup.orbit
    c = orbit.point_map_coord
    x_eval = np.asarray(x_eval, dtype=float)
    xc_values = np.unique(x_eval[:, c])
    qg, qw, lg, lwd, table = analyze_on_table(setup, psi, xc_values)
    rec = np.empty(len(x_eval), dtype=complex)
    for idx, x in enumerate(x_eval):
        s = int(np.argmin(np.abs(xc_values - x[c])))
        acc = 0.0 + 0.0j
        for k, lam in enumerate(lg):
            B = np.asarray(jm.value_of(orbit.phase_B(
                np.broadcast_to(x, (len(qg), len(x))), qg[:, None],
                np.full((len(qg), 1), lam))))
            acc += lwd[k] * np.sum(qw * np.exp(-1j * B) * table[s, :, k])
        rec[idx] = acc
    ref = np.asarray(jm.value_of(psi(x_eval))).astype(complex)
    err = float(np.sqrt(np.sum(np.abs(rec - ref) ** 2)
                        / max(np.sum(np.abs(ref) ** 2), 1e-300)))
    return err, rec, ref


def analyze_point(setup, psi, q, qp, J):
    """psi_hat at a single (q, q', J), jet-capable in (q, q')."""
    orbit = setup.orbit
    c, fibers, grids = _fiber_grids(setup)
    (i1, g1, w1), (i2, g2, w2) = grids
    n = orbit.chart.dim
    G1, G2 = np.meshgrid(g1, g2, indexing="ij")
    W12 = np.outer(w1, w2)
    xc = q - qp
    comps = [None] * n
    comps[i1] = G1
    comps[i2] = G2
    comps[c] = xc + 0.0 * G1 if not isinstance(xc, jm.Jet) else _jet_fill(xc, G1)
    pts = jm.stack(comps)
    B = orbit.phase_B(pts, _wrap(qp, G1), np.asarray(J, dtype=float))
    val = jm.exp(1j * B) * psi(pts) * W12
    if isinstance(val, jm.Jet):
        return jm.vsum(val)
    return np.sum(np.asarray(val))


def _jet_fill(xc, G):
    return xc + jm._const_like(np.zeros_like(G), xc, 0)


def _wrap(qp, G):
    if isinstance(qp, jm.Jet):
        return jm.stack([qp + jm._const_like(np.zeros_like(G), qp, 0)])
    return (qp + np.zeros_like(G))[..., None]


def intertwining_residuals(setup, chart, orbit, ops, psi, samples, J):
    """Check the field-to-operator correspondence through the transform.

    Resolved mapping (recorded):  xi_a psi  <->  conj(parity l_a) on the q'
    slot of psi_hat, and eta_a psi <-> -(parity l_a) on the q slot.
    """
    from .lrep import parity_ops, jet_d
    pops = parity_ops(ops)
    n = chart.dim
    worst_xi = 0.0
    worst_eta = 0.0

    def psi_field(which_a, frame):
        def out(pts):
            val, jac = _jet_value_jac(psi, pts)
            E = frame(pts)
            acc = None
            for i in range(n):
                term = E[..., i, which_a] * jac[..., i]
                acc = term if acc is None else acc + term
            return acc
        return out

    for (q, qp) in samples:
        for a in range(n):
            # left fields against the source slot
            lhs = analyze_point(setup, psi_field(a, chart.xi_matrix), q, qp, J)
            op = pops[a]
            dq = jet_d(lambda w: analyze_point(setup, psi, q, w, J))(np.asarray(qp))
            rhs = (np.conj(np.ravel(np.asarray(jm.value_of(op.a(qp))))[0]) * dq
                   + np.conj(np.ravel(np.asarray(jm.value_of(op.b(qp))))[0])
                   * analyze_point(setup, psi, q, qp, J))
            scale = max(1.0, abs(complex(rhs)))
            worst_xi = max(worst_xi, abs(complex(lhs) - complex(rhs)) / scale)
            # right fields against the target slot
            lhs = analyze_point(setup, psi_field(a, chart.eta_matrix), q, qp, J)
            dq = jet_d(lambda w: analyze_point(setup, psi, w, qp, J))(np.asarray(q))
            rhs = -(np.ravel(np.asarray(jm.value_of(op.a(q))))[0] * dq
                    + np.ravel(np.asarray(jm.value_of(op.b(q))))[0]
                    * analyze_point(setup, psi, q, qp, J))
            scale = max(1.0, abs(complex(rhs)))
            worst_eta = max(worst_eta, abs(complex(lhs) - complex(rhs)) / scale)
    return {"xi": float(worst_xi), "eta": float(worst_eta),
            "convention": "xi -> conj(parity l) on q'; eta -> -(parity l) on q"}


def _jet_value_jac(psi, pts):
    """Value and x-gradient of psi at an (..., n) batch."""
    val, jac = jm.value_and_jacobian(lambda xx: psi(xx), np.asarray(pts, dtype=float))
    return val, jac


def windowed_orthogonality(L, lam, lam_ref, n_nodes=400):
    """Windowed kernel overlap on [-L, L] for the translation group (n = 1).

    Equals 2 sin((lam - lam_ref) L)/(lam - lam_ref): a nascent delta whose
    width shrinks like 1/L.
    """
    xg, xw = gauss_legendre(n_nodes, -L, L)
    vals = np.exp(1j * (lam - lam_ref) * xg)
    return complex(np.sum(xw * vals))
