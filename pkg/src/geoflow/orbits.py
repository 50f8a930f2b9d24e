"""Coadjoint-orbit models for the catalog groups.

An orbit model packages a section lambda(J) over the orbit space, Casimir
functions, a polarization (when a real one exists), the transition
functions f_a(q, pi; lambda) to canonical orbit coordinates, and the
first-order representation coefficients on Q.  Shipped data is certified by
the validators in :mod:`geoflow.momentum`; nothing here is trusted blindly.

Conventions certified downstream:

    {f_a, f_b}_(q,pi) = +C_ab^c f_c   with {F,G} = F_q G_pi - F_pi G_q
    point map: Ad*_x f(q, pi) = f(q', pi')  =>  q' = x . q  (left action)
    rep operators l_a = a_a(q) d_q + b_a(q; lambda),  [l_a, l_b] = +C_ab^c l_c
"""

from __future__ import annotations

import numpy as np

from . import jets as jm
from .charts import GroupChart

__all__ = ["OrbitModel", "UnsupportedOrbitError", "RegularityError", "load_orbit_model"]


class UnsupportedOrbitError(RuntimeError):
    pass


class RegularityError(RuntimeError):
    pass


class OrbitModel:
    """Canonical-coordinate model of the regular coadjoint orbits."""

    def __init__(self, chart, r, m, lam_section, casimirs, transitions,
                 pi_linear, polarization=None, solve_qpi=None,
                 lrep_coeffs=None, point_map_coord=None, q_box=None,
                 lam_sampler=None, spectral_density=None, phase_B=None,
                 name=None):
        self.chart = chart
        self.name = name or chart.name
        self.r = r                      # number of orbit-space coordinates J
        self.m = m                      # dim Q, half the orbit dimension
        self.lam_section = lam_section  # J -> lambda in g*
        self.casimirs = casimirs        # f -> J values
        self.transitions = transitions  # (q, pi, J) -> f components (length n)
        self.pi_linear = pi_linear
        self.polarization = polarization  # rows: basis of p in g, or None
        self._solve_qpi = solve_qpi     # (mu, J) -> (q, pi)
        self.lrep_coeffs = lrep_coeffs  # (a_a^alpha(q), b_a(q, J)) callables or None
        self.point_map_coord = point_map_coord  # chart coordinate translating q
        self.q_box = q_box              # default box on Q for quadratures
        self.lam_sampler = lam_sampler  # rng -> regular J sample
        self.spectral_density = spectral_density  # J -> plancherel weight
        # closed-form pi'-free part of the generating function, certified
        # against the quadrature route by the test suite
        self.phase_B = phase_B
        if 2 * m + r != chart.dim:
            raise ValueError("orbit dimension bookkeeping violated: 2m + r != n")

    # -- basic maps ---------------------------------------------------------

    def lam(self, J):
        return self.lam_section(J)

    def casimir_values(self, f):
        return self.casimirs(f)

    def f(self, q, pi, J):
        """Transition functions f_a(q, pi; lambda(J)); q, pi length m."""
        return self.transitions(q, pi, J)

    def solve_qpi(self, mu, J):
        """(q, pi) with f(q, pi; lambda(J)) = mu; catalog closed form."""
        if self._solve_qpi is None:
            raise UnsupportedOrbitError(f"{self.name}: no canonical-coordinate solve")
        return self._solve_qpi(mu, J)

    def point_map(self, x, q):
        """Left action q -> x.q on Q induced by Ad*_x (Lebesgue Q charts)."""
        if self.point_map_coord is None:
            raise UnsupportedOrbitError(f"{self.name}: no polarized point map")
        return q + x[..., self.point_map_coord]

    def xa_chi(self, q, J):
        """Split pi-linear transitions into (X_a^alpha(q), chi_a(q; lambda))."""
        if not self.pi_linear:
            raise UnsupportedOrbitError(f"{self.name}: transitions are not pi-linear")
        zero = np.zeros(self.m)
        chi = self.transitions(q, zero, J)
        cols = []
        for alpha in range(self.m):
            e = np.zeros(self.m)
            e[alpha] = 1.0
            cols.append(self.transitions(q, e, J) - chi)
        return cols, chi

    def __repr__(self):
        return f"OrbitModel({self.name}, r={self.r}, m={self.m})"


# ---------------------------------------------------------------------------
# catalog models
# ---------------------------------------------------------------------------

def _abelian_model(chart):
    n = chart.dim

    def lam_section(J):
        return J

    def casimirs(f):
        return f

    def transitions(q, pi, J):
        return lam_section(J)

    def solve_qpi(mu, J):
        return np.zeros(0), np.zeros(0)

    return OrbitModel(
        chart, r=n, m=0, lam_section=lam_section, casimirs=casimirs,
        transitions=transitions, pi_linear=True,
        polarization=np.eye(n), solve_qpi=solve_qpi,
        lrep_coeffs=([], _abelian_b(n)), point_map_coord=None,
        q_box=(0.0, 0.0),
        lam_sampler=lambda rng: rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n),
        spectral_density=lambda J: 1.0 / (2.0 * np.pi) ** n,
        phase_B=lambda x, q, J: _dotv(J, x, n))


def _abelian_b(n):
    return [lambda q, J, a=a: 1j * J[..., a] for a in range(n)]


def _dotv(J, x, n):
    acc = None
    for i in range(n):
        term = J[..., i] * x[..., i]
        acc = term if acc is None else acc + term
    return acc


def _heisenberg_model(chart):
    # orbits are the planes f3 = lambda3 != 0; Q is the f1 axis direction
    def lam_section(J):
        z = 0.0 * J[..., 0]
        return jm.stack([z, z, J[..., 0]])

    def casimirs(f):
        return jm.stack([f[..., 2]])

    def transitions(q, pi, J):
        lam3 = J[..., 0]
        return jm.stack([pi[..., 0], -lam3 * q[..., 0], lam3 + 0.0 * q[..., 0]])

    def solve_qpi(mu, J):
        lam3 = J[..., 0]
        if np.any(np.abs(np.asarray(jm.value_of(lam3))) < 1e-12):
            raise RegularityError("heisenberg3: orbit through f3 = 0 is non-regular")
        q = jm.stack([-mu[..., 1] / lam3])
        pi = jm.stack([mu[..., 0]])
        return q, pi

    a_coeffs = [lambda q, J: 1.0 + 0.0 * q[..., 0],
                lambda q, J: 0.0 * q[..., 0],
                lambda q, J: 0.0 * q[..., 0]]
    b_coeffs = [lambda q, J: 0.0j * q[..., 0],
                lambda q, J: 1j * J[..., 0] * q[..., 0],
                lambda q, J: 1j * J[..., 0] + 0.0 * q[..., 0]]

    return OrbitModel(
        chart, r=1, m=1, lam_section=lam_section, casimirs=casimirs,
        transitions=transitions, pi_linear=True,
        polarization=np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        solve_qpi=solve_qpi, lrep_coeffs=(a_coeffs, b_coeffs),
        point_map_coord=0, q_box=(-7.0, 7.0),
        lam_sampler=lambda rng: np.array([rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])]),
        spectral_density=lambda J: np.abs(J[..., 0]) / (2.0 * np.pi) ** 2,
        phase_B=lambda x, q, J: J[..., 0] * (x[..., 2] - x[..., 1] * (q[..., 0] + x[..., 0])))


def _euclid2_model(chart):
    # orbits are the cylinders f1^2 + f2^2 = J^2 > 0; Q is the angle circle
    def lam_section(J):
        z = 0.0 * J[..., 0]
        return jm.stack([J[..., 0], z, z])

    def casimirs(f):
        return jm.stack([jm.sqrt(f[..., 0] ** 2 + f[..., 1] ** 2)])

    def transitions(q, pi, J):
        k = J[..., 0]
        return jm.stack([k * jm.cos(q[..., 0]), k * jm.sin(q[..., 0]), pi[..., 0]])

    def solve_qpi(mu, J):
        r2 = np.asarray(jm.value_of(mu[..., 0])) ** 2 + np.asarray(jm.value_of(mu[..., 1])) ** 2
        if np.any(r2 < 1e-20):
            raise RegularityError("euclid2: orbit through f1 = f2 = 0 is non-regular")
        q = jm.stack([jm.atan2(mu[..., 1], mu[..., 0])])
        pi = jm.stack([mu[..., 2]])
        return q, pi

    a_coeffs = [lambda q, J: 0.0 * q[..., 0],
                lambda q, J: 0.0 * q[..., 0],
                lambda q, J: 1.0 + 0.0 * q[..., 0]]
    b_coeffs = [lambda q, J: 1j * J[..., 0] * jm.cos(q[..., 0]),
                lambda q, J: -1j * J[..., 0] * jm.sin(q[..., 0]),
                lambda q, J: 0.0j * q[..., 0]]

    return OrbitModel(
        chart, r=1, m=1, lam_section=lam_section, casimirs=casimirs,
        transitions=transitions, pi_linear=True,
        polarization=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        solve_qpi=solve_qpi, lrep_coeffs=(a_coeffs, b_coeffs),
        point_map_coord=2, q_box=(-7.0, 7.0),
        lam_sampler=lambda rng: np.array([rng.uniform(0.5, 2.0)]),
        spectral_density=lambda J: np.abs(J[..., 0]) / (2.0 * np.pi) ** 2,
        phase_B=lambda x, q, J: J[..., 0] * (x[..., 0] * jm.cos(q[..., 0] + x[..., 2])
                                             + x[..., 1] * jm.sin(q[..., 0] + x[..., 2])))


def _aff1_model(chart):
    # single open orbit f2 > 0 (index 0, no Casimirs); lambda() = (0, 1)
    def lam_section(J):
        return np.array([0.0, 1.0])

    def casimirs(f):
        v = np.asarray(jm.value_of(f))
        return np.zeros(v.shape[:-1] + (0,))

    def transitions(q, pi, J):
        return jm.stack([pi[..., 0], jm.exp(-q[..., 0])])

    def solve_qpi(mu, J):
        m2 = np.asarray(jm.value_of(mu[..., 1]))
        if np.any(m2 <= 1e-14):
            raise RegularityError("aff1: point off the f2 > 0 orbit")
        q = jm.stack([-jm.log(mu[..., 1])])
        pi = jm.stack([mu[..., 0]])
        return q, pi

    a_coeffs = [lambda q, J: 1.0 + 0.0 * q[..., 0],
                lambda q, J: 0.0 * q[..., 0]]
    b_coeffs = [lambda q, J: 0.0j * q[..., 0],
                lambda q, J: 1j * jm.exp(q[..., 0])]

    return OrbitModel(
        chart, r=0, m=1, lam_section=lam_section, casimirs=casimirs,
        transitions=transitions, pi_linear=True,
        polarization=np.array([[0.0, 1.0]]),
        solve_qpi=solve_qpi, lrep_coeffs=(a_coeffs, b_coeffs),
        point_map_coord=0, q_box=(-7.0, 7.0),
        lam_sampler=lambda rng: np.zeros(0),
        spectral_density=None,
        phase_B=lambda x, q, J: x[..., 1] * jm.exp(-(q[..., 0] + x[..., 0])))


def _so3_model(chart):
    # spheres |f| = J > 0 in cylindrical Darboux coordinates (azimuth, f3).
    # No real polarization exists for so(3) (it has no 2-dim subalgebra), so
    # the transitions are not pi-linear and the polarized machinery (point
    # map, generating function, representation coefficients) is unavailable.
    def lam_section(J):
        z = 0.0 * J[..., 0]
        return jm.stack([z, z, J[..., 0]])

    def casimirs(f):
        return jm.stack([jm.sqrt(f[..., 0] ** 2 + f[..., 1] ** 2 + f[..., 2] ** 2)])

    def transitions(q, pi, J):
        s = jm.sqrt(J[..., 0] ** 2 - pi[..., 0] ** 2)
        return jm.stack([s * jm.cos(q[..., 0]), s * jm.sin(q[..., 0]), pi[..., 0]])

    def solve_qpi(mu, J):
        r2 = np.asarray(jm.value_of(mu[..., 0])) ** 2 + np.asarray(jm.value_of(mu[..., 1])) ** 2
        if np.any(r2 < 1e-20):
            raise RegularityError("so3: cylindrical chart is singular at the poles")
        q = jm.stack([jm.atan2(mu[..., 1], mu[..., 0])])
        pi = jm.stack([mu[..., 2]])
        return q, pi

    return OrbitModel(
        chart, r=1, m=1, lam_section=lam_section, casimirs=casimirs,
        transitions=transitions, pi_linear=False,
        polarization=None, solve_qpi=solve_qpi, lrep_coeffs=None,
        point_map_coord=None, q_box=(-np.pi, np.pi),
        lam_sampler=lambda rng: np.array([rng.uniform(0.8, 2.0)]),
        spectral_density=None)


_MODELS = {
    "heisenberg3": _heisenberg_model,
    "euclid2": _euclid2_model,
    "aff1": _aff1_model,
    "so3": _so3_model,
}


def load_orbit_model(chart: GroupChart):
    """Orbit model for an integrable catalog chart.

    Raises :class:`UnsupportedOrbitError` for entries failing the
    half-orbit-dimension criterion (no model is shipped for them).
    """
    if not chart.integrable:
        raise UnsupportedOrbitError(
            f"{chart.name}: half orbit dimension {chart.half_rank} > 1, "
            "no quadrature model is shipped")
    if chart.name.startswith("abelian_"):
        return _abelian_model(chart)
    try:
        return _MODELS[chart.name](chart)
    except KeyError:
        raise UnsupportedOrbitError(f"{chart.name}: no orbit model shipped") from None
