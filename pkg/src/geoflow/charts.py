"""Coordinate charts for the group catalog.

Each chart supplies closed-form coordinate expressions: the group product
and inverse, the left/right invariant frames (as matrices whose columns are
the fields), the right-invariant coframe, the adjoint matrix, and the Haar
density.  Everything is written against the jet-aware helpers so the same
expressions serve plain batched evaluation and differentiation.

Frame conventions enforced by :func:`validate_chart`:

    xi_a  = generator of right translations (left-invariant),  [xi_a, xi_b] = +C_ab^c xi_c
    eta_a = generator of left translations (right-invariant),  [eta_a, eta_b] = -C_ab^c eta_c
    [xi_a, eta_b] = 0,   sigma^a(eta_b) = delta^a_b,   xi_a(e) = eta_a(e) = e_a
"""

from __future__ import annotations

import numpy as np

from . import jets as jm
from .algebra import LieAlgebra, unimodularity, integrability_criterion, index

__all__ = ["GroupChart", "UnknownGroupError", "load_group", "group_names",
           "validate_chart", "coadjoint_orbit_dim", "group_metadata"]

CATALOG_SEED_SAMPLES = 160


class UnknownGroupError(KeyError):
    pass


class GroupChart:
    """Coordinatized Lie group with invariant frames and coadjoint action."""

    def __init__(self, name, algebra, product, inverse, xi_matrix, eta_matrix,
                 ad_matrix, sample_box, domain_box=None, contains=None,
                 sigma_matrix=None, haar_density=None, description=""):
        self.name = name
        self.algebra = algebra
        self.dim = algebra.dim
        self.product = product
        self.inverse = inverse
        self.xi_matrix = xi_matrix
        self.eta_matrix = eta_matrix
        self.ad_matrix = ad_matrix
        # sample_box bounds random sampling; domain_box of None means all of R^n
        self.sample_box = (np.asarray(sample_box[0], dtype=float),
                           np.asarray(sample_box[1], dtype=float))
        self.domain_box = None if domain_box is None else (
            np.asarray(domain_box[0], dtype=float), np.asarray(domain_box[1], dtype=float))
        self._contains = contains
        self._sigma = sigma_matrix
        self._haar = haar_density
        self.description = description
        self.identity = np.zeros(self.dim)
        flag, Ca = unimodularity(algebra)
        self.unimodular = flag
        self.trace_vector = Ca
        self.integrable, self.half_rank = integrability_criterion(
            algebra, samples=CATALOG_SEED_SAMPLES, seed=0)
        self.index = algebra.dim - 2 * self.half_rank

    # -- derived geometric data -------------------------------------------

    def sigma_matrix(self, x):
        """Right-invariant coframe, rows sigma^a_i; inverse of the eta frame."""
        if self._sigma is not None:
            return self._sigma(x)
        return jm.mat_inv(self.eta_matrix(x), n=self.dim)

    def adstar_matrix(self, x):
        """Coadjoint action on component rows: (Ad*_x f)_a = f_b Ad(x^-1)^b_a."""
        return jm.mat_transpose(self.ad_matrix(self.inverse(x)))

    def haar_density(self, x):
        """Right-invariant Haar density |det sigma|."""
        if self._haar is not None:
            return self._haar(x)
        d = jm.mat_det(self.sigma_matrix(x), n=self.dim)
        return jm.where(jm.value_of(d) < 0, -d, d) if isinstance(d, jm.Jet) else np.abs(d)

    def contains(self, x):
        x = np.asarray(jm.value_of(x))
        ok = True
        if self.domain_box is not None:
            lo, hi = self.domain_box
            ok = bool(np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12))
        if ok and self._contains is not None:
            ok = bool(self._contains(x))
        return ok

    def sample_points(self, count, rng, scale=0.6):
        """Random chart points comfortably inside the sampling box."""
        lo, hi = self.sample_box
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo) * scale
        pts = mid + rng.uniform(-1.0, 1.0, (count, self.dim)) * half
        if self._contains is not None:
            for i in range(count):
                while not self._contains(pts[i]):
                    pts[i] = mid + rng.uniform(-1.0, 1.0, self.dim) * half
        return pts

    def __repr__(self):
        return f"GroupChart({self.name}, dim={self.dim})"


# ---------------------------------------------------------------------------
# abelian R^n
# ---------------------------------------------------------------------------

def _make_abelian(n):
    alg = LieAlgebra(name=f"abelian_{n}", dim=n, C=np.zeros((n, n, n)))

    def product(x, y):
        return x + y

    def inverse(x):
        return -x

    def frame(x):
        if isinstance(x, jm.Jet):
            return _eye_like(x, n)
        shape = np.asarray(x).shape[:-1]
        return np.broadcast_to(np.eye(n), shape + (n, n)).copy()

    def ad(x):
        return frame(x)

    return GroupChart(
        name=f"abelian_{n}", algebra=alg, product=product, inverse=inverse,
        xi_matrix=frame, eta_matrix=frame, ad_matrix=ad,
        sample_box=(-4.0 * np.ones(n), 4.0 * np.ones(n)),
        sigma_matrix=frame, haar_density=lambda x: _ones_like_batch(x),
        description="translation group R^n; fields are coordinate derivatives")


def _ones_like_batch(x):
    v = np.asarray(jm.value_of(x))
    return np.ones(v.shape[:-1])


# ---------------------------------------------------------------------------
# Heisenberg group h3: [e1, e2] = e3, second-kind coordinates
#   (a, b, c) . (a', b', c') = (a + a', b + b', c + c' + a b')
# ---------------------------------------------------------------------------

def _make_heisenberg3():
    C = np.zeros((3, 3, 3))
    C[0, 1, 2] = 1.0
    C[1, 0, 2] = -1.0
    alg = LieAlgebra(name="heisenberg3", dim=3, C=C)

    def product(x, y):
        return jm.stack([x[..., 0] + y[..., 0],
                         x[..., 1] + y[..., 1],
                         x[..., 2] + y[..., 2] + x[..., 0] * y[..., 1]])

    def inverse(x):
        return jm.stack([-x[..., 0], -x[..., 1], -x[..., 2] + x[..., 0] * x[..., 1]])

    def xi_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z, z],
                          [z, one, z],
                          [z, x[..., 0], one]])

    def eta_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z, z],
                          [z, one, z],
                          [x[..., 1], z, one]])

    def ad_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z, z],
                          [z, one, z],
                          [-x[..., 1], x[..., 0], one]])

    return GroupChart(
        name="heisenberg3", algebra=alg, product=product, inverse=inverse,
        xi_matrix=xi_matrix, eta_matrix=eta_matrix, ad_matrix=ad_matrix,
        sample_box=(-3.0 * np.ones(3), 3.0 * np.ones(3)),
        haar_density=lambda x: _ones_like_batch(x),
        description="Heisenberg group, polynomial second-kind coordinates")


# ---------------------------------------------------------------------------
# Euclidean group of the plane e(2): basis (P1, P2, J)
#   [J, P1] = P2, [J, P2] = -P1; coordinates (v1, v2, theta)
#   (v, th) . (v', th') = (v + R_th v', th + th')
# ---------------------------------------------------------------------------

def _make_euclid2():
    C = np.zeros((3, 3, 3))
    C[2, 0, 1] = 1.0   # [e3, e1] = e2
    C[0, 2, 1] = -1.0
    C[2, 1, 0] = -1.0  # [e3, e2] = -e1
    C[1, 2, 0] = 1.0
    alg = LieAlgebra(name="euclid2", dim=3, C=C)

    def product(x, y):
        c, s = jm.cos(x[..., 2]), jm.sin(x[..., 2])
        return jm.stack([x[..., 0] + c * y[..., 0] - s * y[..., 1],
                         x[..., 1] + s * y[..., 0] + c * y[..., 1],
                         x[..., 2] + y[..., 2]])

    def inverse(x):
        c, s = jm.cos(x[..., 2]), jm.sin(x[..., 2])
        return jm.stack([-(c * x[..., 0] + s * x[..., 1]),
                         -(-s * x[..., 0] + c * x[..., 1]),
                         -x[..., 2]])

    def xi_matrix(x):
        c, s = jm.cos(x[..., 2]), jm.sin(x[..., 2])
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[c, -s, z],
                          [s, c, z],
                          [z, z, one]])

    def eta_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z, -x[..., 1]],
                          [z, one, x[..., 0]],
                          [z, z, one]])

    def sigma_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z, x[..., 1]],
                          [z, one, -x[..., 0]],
                          [z, z, one]])

    def ad_matrix(x):
        c, s = jm.cos(x[..., 2]), jm.sin(x[..., 2])
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[c, -s, x[..., 1]],
                          [s, c, -x[..., 0]],
                          [z, z, one]])

    return GroupChart(
        name="euclid2", algebra=alg, product=product, inverse=inverse,
        xi_matrix=xi_matrix, eta_matrix=eta_matrix, ad_matrix=ad_matrix,
        sigma_matrix=sigma_matrix,
        sample_box=(np.array([-3.0, -3.0, -1.5]), np.array([3.0, 3.0, 1.5])),
        haar_density=lambda x: _ones_like_batch(x),
        description="planar Euclidean motions, simply connected cover; "
                    "rotation coordinate unwrapped on R")


# ---------------------------------------------------------------------------
# aff(1), the affine line: [e1, e2] = e2 (e1 scaling, e2 translation)
#   (a, b) . (a', b') = (a + a', b + e^a b')
# ---------------------------------------------------------------------------

def _make_aff1():
    C = np.zeros((2, 2, 2))
    C[0, 1, 1] = 1.0
    C[1, 0, 1] = -1.0
    alg = LieAlgebra(name="aff1", dim=2, C=C)

    def product(x, y):
        return jm.stack([x[..., 0] + y[..., 0],
                         x[..., 1] + jm.exp(x[..., 0]) * y[..., 1]])

    def inverse(x):
        return jm.stack([-x[..., 0], -jm.exp(-x[..., 0]) * x[..., 1]])

    def xi_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z],
                          [z, jm.exp(x[..., 0])]])

    def eta_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z],
                          [x[..., 1], one]])

    def sigma_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z],
                          [-x[..., 1], one]])

    def ad_matrix(x):
        z = 0.0 * x[..., 0]
        one = 1.0 + z
        return jm.matrix([[one, z],
                          [-x[..., 1], jm.exp(x[..., 0])]])

    return GroupChart(
        name="aff1", algebra=alg, product=product, inverse=inverse,
        xi_matrix=xi_matrix, eta_matrix=eta_matrix, ad_matrix=ad_matrix,
        sigma_matrix=sigma_matrix,
        sample_box=(np.array([-2.0, -3.0]), np.array([2.0, 3.0])),
        haar_density=lambda x: _ones_like_batch(x),
        description="affine transformations of the line (non-unimodular)")


# ---------------------------------------------------------------------------
# so(3) in rotation-vector (angle-axis) coordinates
# ---------------------------------------------------------------------------

_SO3_EPS = 1e-6


def _series_or(u, series, general_fn):
    """Branch between a Taylor series in u (= theta^2) and the closed form."""
    small = np.asarray(jm.value_of(u)) < _SO3_EPS
    u_safe = jm.where(small, 1.0 + 0.0 * u, u)
    return jm.where(small, series, general_fn(u_safe))


def _f_cosr(u):
    """(1 - cos t)/t^2 as a function of u = t^2."""
    series = 0.5 - u / 24.0 + u * u / 720.0
    return _series_or(u, series, lambda s: (1.0 - jm.cos(jm.sqrt(s))) / s)


def _f_sincr(u):
    """sin t / t as a function of u = t^2."""
    series = 1.0 - u / 6.0 + u * u / 120.0
    return _series_or(u, series, lambda s: jm.sin(jm.sqrt(s)) / jm.sqrt(s))


def _f_cubr(u):
    """(t - sin t)/t^3 as a function of u = t^2."""
    series = 1.0 / 6.0 - u / 120.0 + u * u / 5040.0
    return _series_or(u, series, lambda s: (jm.sqrt(s) - jm.sin(jm.sqrt(s))) / (s * jm.sqrt(s)))


def _f_kappa(u):
    """(1 - (t/2) cot(t/2)) / t^2 as a function of u = t^2."""
    series = 1.0 / 12.0 + u / 720.0 + u * u / 30240.0

    def general(s):
        t = jm.sqrt(s)
        half = 0.5 * t
        return (1.0 - half * jm.cos(half) / jm.sin(half)) / s

    return _series_or(u, series, general)


def _f_halfsincr(u):
    """sin(t/2)/t as a function of u = t^2."""
    series = 0.5 - u / 48.0 + u * u / 3840.0
    return _series_or(u, series, lambda s: jm.sin(0.5 * jm.sqrt(s)) / jm.sqrt(s))


def _cross_matrix(v):
    z = 0.0 * v[..., 0]
    return jm.matrix([[z, -v[..., 2], v[..., 1]],
                      [v[..., 2], z, -v[..., 0]],
                      [-v[..., 1], v[..., 0], z]])


def _mat_add(*ms):
    out = ms[0]
    for m in ms[1:]:
        out = out + m
    return out


def _mat_scale(s, m, n=3):
    rows = [[s * m[..., i, j] for j in range(n)] for i in range(n)]
    return jm.matrix(rows)


def _mat_mul(a, b, n=3):
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = None
            for k in range(n):
                term = a[..., i, k] * b[..., k, j]
                acc = term if acc is None else acc + term
            row.append(acc)
        rows.append(row)
    return jm.matrix(rows)


def _eye_like(v, n):
    z = 0.0 * v[..., 0]
    return jm.matrix([[(1.0 + z) if i == j else z for j in range(n)] for i in range(n)])


def _so3_product(x, y):
    """Rotation-vector composition via quaternions."""
    ux = jm.stack([x[..., i] for i in range(3)])
    uy = jm.stack([y[..., i] for i in range(3)])
    tx = _sq(x)
    ty = _sq(y)
    cx, fx = _half_cos(tx), _f_halfsincr(tx)
    cy, fy = _half_cos(ty), _f_halfsincr(ty)
    # quaternion parts
    vx = [fx * x[..., i] for i in range(3)]
    vy = [fy * y[..., i] for i in range(3)]
    c = cx * cy - (vx[0] * vy[0] + vx[1] * vy[1] + vx[2] * vy[2])
    w = [cx * vy[0] + cy * vx[0] + (vx[1] * vy[2] - vx[2] * vy[1]),
         cx * vy[1] + cy * vx[1] + (vx[2] * vy[0] - vx[0] * vy[2]),
         cx * vy[2] + cy * vx[2] + (vx[0] * vy[1] - vx[1] * vy[0])]
    m2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
    rho = _quat_to_vec_ratio(m2, c)
    return jm.stack([rho * w[0], rho * w[1], rho * w[2]])


def _sq(x):
    return x[..., 0] * x[..., 0] + x[..., 1] * x[..., 1] + x[..., 2] * x[..., 2]


def _half_cos(u):
    """cos(t/2) as a function of u = t^2."""
    series = 1.0 - u / 8.0 + u * u / 384.0
    return _series_or(u, series, lambda s: jm.cos(0.5 * jm.sqrt(s)))


def _quat_to_vec_ratio(m2, c):
    """2 atan2(m, c)/m as a function of m^2 and c (c > 0 in chart)."""
    small = np.asarray(jm.value_of(m2)) < _SO3_EPS
    m2_safe = jm.where(small, 1.0 + 0.0 * m2, m2)
    series = 2.0 / c - 2.0 * m2 / (3.0 * c * c * c) + 2.0 * m2 * m2 / (5.0 * c ** 5)

    def general(s):
        m = jm.sqrt(s)
        return 2.0 * jm.atan2(m, c) / m

    return jm.where(small, series, general(m2_safe))


def _make_so3():
    C = np.zeros((3, 3, 3))
    for a in range(3):
        for b in range(3):
            for c in range(3):
                C[a, b, c] = _levi_civita(a, b, c)
    alg = LieAlgebra(name="so3", dim=3, C=C)

    def product(x, y):
        return _so3_product(x, y)

    def inverse(x):
        return jm.stack([-x[..., 0], -x[..., 1], -x[..., 2]])

    def xi_matrix(x):
        u = _sq(x)
        K = _cross_matrix(x)
        K2 = _mat_mul(K, K)
        return _mat_add(_eye_like(x, 3), _mat_scale(0.5 + 0.0 * u, K), _mat_scale(_f_kappa(u), K2))

    def eta_matrix(x):
        u = _sq(x)
        K = _cross_matrix(x)
        K2 = _mat_mul(K, K)
        return _mat_add(_eye_like(x, 3), _mat_scale(-0.5 + 0.0 * u, K), _mat_scale(_f_kappa(u), K2))

    def sigma_matrix(x):
        u = _sq(x)
        K = _cross_matrix(x)
        K2 = _mat_mul(K, K)
        return _mat_add(_eye_like(x, 3), _mat_scale(_f_cosr(u), K), _mat_scale(_f_cubr(u), K2))

    def ad_matrix(x):
        u = _sq(x)
        K = _cross_matrix(x)
        K2 = _mat_mul(K, K)
        return _mat_add(_eye_like(x, 3), _mat_scale(_f_sincr(u), K), _mat_scale(_f_cosr(u), K2))

    ball = 2.6

    return GroupChart(
        name="so3", algebra=alg, product=product, inverse=inverse,
        xi_matrix=xi_matrix, eta_matrix=eta_matrix, ad_matrix=ad_matrix,
        sigma_matrix=sigma_matrix,
        sample_box=(-0.75 * np.ones(3), 0.75 * np.ones(3)),
        domain_box=(-ball * np.ones(3), ball * np.ones(3)),
        contains=lambda x: float(np.max(np.sum(np.atleast_2d(x) ** 2, axis=-1))) < (0.95 * np.pi) ** 2,
        description="rotation group, rotation-vector chart, |x| < 0.95 pi")


def _levi_civita(a, b, c):
    if {a, b, c} != {0, 1, 2}:
        return 0.0
    return 1.0 if (a, b, c) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1.0


# ---------------------------------------------------------------------------
# so(3) + so(3): block direct sum, non-integrable entry
# ---------------------------------------------------------------------------

def _make_so3_x_so3():
    so3 = _make_so3()
    C = np.zeros((6, 6, 6))
    C[:3, :3, :3] = so3.algebra.C
    C[3:, 3:, 3:] = so3.algebra.C
    alg = LieAlgebra(name="so3_x_so3", dim=6, C=C)

    def split(x):
        return x[..., 0:3], x[..., 3:6]

    def join(a, b):
        return jm.stack([a[..., 0], a[..., 1], a[..., 2], b[..., 0], b[..., 1], b[..., 2]])

    def product(x, y):
        xl, xr = split(x)
        yl, yr = split(y)
        pl, pr = so3.product(xl, yl), so3.product(xr, yr)
        return join(pl, pr)

    def inverse(x):
        xl, xr = split(x)
        return join(so3.inverse(xl), so3.inverse(xr))

    def _block(fn):
        def matrix_fn(x):
            xl, xr = split(x)
            ml, mr = fn(xl), fn(xr)
            z = 0.0 * x[..., 0]
            rows = []
            for i in range(6):
                row = []
                for j in range(6):
                    if i < 3 and j < 3:
                        row.append(ml[..., i, j])
                    elif i >= 3 and j >= 3:
                        row.append(mr[..., i - 3, j - 3])
                    else:
                        row.append(z)
                rows.append(row)
            return jm.matrix(rows)
        return matrix_fn

    ball = 2.6
    return GroupChart(
        name="so3_x_so3", algebra=alg, product=product, inverse=inverse,
        xi_matrix=_block(so3.xi_matrix), eta_matrix=_block(so3.eta_matrix),
        ad_matrix=_block(so3.ad_matrix), sigma_matrix=_block(so3.sigma_matrix),
        sample_box=(-0.75 * np.ones(6), 0.75 * np.ones(6)),
        domain_box=(-ball * np.ones(6), ball * np.ones(6)),
        contains=lambda x: (float(np.max(np.sum(np.atleast_2d(x)[..., :3] ** 2, axis=-1))) < (0.95 * np.pi) ** 2
                            and float(np.max(np.sum(np.atleast_2d(x)[..., 3:] ** 2, axis=-1))) < (0.95 * np.pi) ** 2),
        description="product of two rotation groups; integrability fails")


# ---------------------------------------------------------------------------

_BUILDERS = {
    "heisenberg3": _make_heisenberg3,
    "euclid2": _make_euclid2,
    "aff1": _make_aff1,
    "so3": _make_so3,
    "so3_x_so3": _make_so3_x_so3,
}

_DEFAULT_NAMES = ["abelian_1", "abelian_2", "abelian_3", "heisenberg3",
                  "euclid2", "so3", "aff1", "so3_x_so3"]


def group_names():
    return list(_DEFAULT_NAMES)


def load_group(name):
    """Load a catalog chart by name; abelian_k supported for 1 <= k <= 6."""
    if name in _BUILDERS:
        return _BUILDERS[name]()
    if name.startswith("abelian_"):
        try:
            n = int(name.split("_", 1)[1])
        except ValueError:
            raise UnknownGroupError(name) from None
        if 1 <= n <= 6:
            return _make_abelian(n)
    raise UnknownGroupError(name)


def group_metadata(name):
    chart = load_group(name)
    lo, hi = chart.domain_box if chart.domain_box is not None else chart.sample_box
    box = {"lo": lo.tolist(), "hi": hi.tolist(), "note": chart.description}
    if chart.domain_box is None:
        box["global"] = True
    return {
        "name": chart.name,
        "dim": chart.dim,
        "index": int(chart.index),
        "unimodular": bool(chart.unimodular),
        "integrable": bool(chart.integrable),
        "half_rank": int(chart.half_rank),
        "chart_domain": box,
    }


def coadjoint_orbit_dim(chart, lam):
    """Dimension of the coadjoint orbit through lam (rank of the bivector)."""
    from .algebra import poisson_tensor, rank_skew
    return rank_skew(poisson_tensor(chart.algebra, lam))


# ---------------------------------------------------------------------------
# chart certification
# ---------------------------------------------------------------------------

def _field_commutator_residuals(chart, pts):
    """Residuals of the frame bracket relations at an (N, n) batch of points."""
    n = chart.dim
    C = chart.algebra.C

    def both(x):
        xi = chart.xi_matrix(x)
        eta = chart.eta_matrix(x)
        return jm.stack([xi[..., i, a] for i in range(n) for a in range(n)]
                        + [eta[..., i, a] for i in range(n) for a in range(n)])

    flat, dflat = jm.value_and_jacobian(both, pts)
    N = pts.shape[0]
    xi = flat[..., :n * n].reshape(N, n, n)
    eta = flat[..., n * n:].reshape(N, n, n)
    dxi = dflat[..., :n * n, :].reshape(N, n, n, n)
    deta = dflat[..., n * n:, :].reshape(N, n, n, n)

    def comm(E1, dE1, E2, dE2):
        # [X_a, Y_b]^i = X^j_a d_j Y^i_b - Y^j_b d_j X^i_a
        return (np.einsum("Nja,Nibj->Niab", E1, dE2)
                - np.einsum("Njb,Niaj->Niab", E2, dE1))

    xi_xi = comm(xi, dxi, xi, dxi) - np.einsum("abc,Nic->Niab", C, xi)
    eta_eta = comm(eta, deta, eta, deta) + np.einsum("abc,Nic->Niab", C, eta)
    mixed = comm(xi, dxi, eta, deta)
    return (float(np.max(np.abs(xi_xi))), float(np.max(np.abs(eta_eta))),
            float(np.max(np.abs(mixed))))


def validate_chart(chart, samples=100, seed=0, tol=1e-8):
    """Certify all chart identities at random points; returns a residual report."""
    rng = np.random.default_rng(seed)
    pts = chart.sample_points(samples, rng)
    n = chart.dim
    res = {}

    xi_e = chart.xi_matrix(chart.identity)
    eta_e = chart.eta_matrix(chart.identity)
    res["frame_at_identity"] = float(max(np.max(np.abs(xi_e - np.eye(n))),
                                         np.max(np.abs(eta_e - np.eye(n)))))

    sig = chart.sigma_matrix(pts)
    eta = chart.eta_matrix(pts)
    res["sigma_eta_duality"] = float(np.max(np.abs(
        np.einsum("Nai,Nib->Nab", sig, eta) - np.eye(n))))

    cxx, cee, cxe = _field_commutator_residuals(chart, pts)
    res["xi_commutators"] = cxx
    res["eta_commutators"] = cee
    res["mixed_commutators"] = cxe

    prod_inv = chart.product(pts, chart.inverse(pts))
    res["product_inverse"] = float(np.max(np.abs(prod_inv)))
    e_row = np.broadcast_to(chart.identity, pts.shape)
    res["product_identity"] = float(max(
        np.max(np.abs(chart.product(pts, e_row) - pts)),
        np.max(np.abs(chart.product(e_row, pts) - pts))))

    # pushforward invariance: eta_a(product(y, x)) = d(product)/dy . eta_a(y)
    ys = chart.sample_points(samples, rng)
    prod_yx = chart.product(ys, pts)
    eta_at_prod = chart.eta_matrix(prod_yx)

    def prod_fn(y):
        return chart.product(y, pts)

    _, dprod = jm.value_and_jacobian(prod_fn, ys)
    eta_y = chart.eta_matrix(ys)
    pushed = np.einsum("Nij,Nja->Nia", dprod, eta_y)
    res["eta_pushforward"] = float(np.max(np.abs(eta_at_prod - pushed)))

    # adjoint matrix against the jet of conjugation at the identity
    def conjugation(y):
        return chart.product(chart.product(pts, y), chart.inverse(pts))

    _, ad_jet = jm.value_and_jacobian(conjugation, np.zeros_like(pts))
    res["ad_vs_conjugation_jet"] = float(np.max(np.abs(ad_jet - chart.ad_matrix(pts))))

    # Ad* is the transposed adjoint of the inverse, and Ad is multiplicative
    adstar = chart.adstar_matrix(pts)
    ad_inv = chart.ad_matrix(chart.inverse(pts))
    res["adstar_consistency"] = float(np.max(np.abs(
        adstar - np.swapaxes(ad_inv, -1, -2))))
    ad_x = chart.ad_matrix(pts)
    ad_y = chart.ad_matrix(ys)
    ad_xy = chart.ad_matrix(chart.product(pts, ys))
    res["ad_homomorphism"] = float(np.max(np.abs(
        np.einsum("Nij,Njk->Nik", ad_x, ad_y) - ad_xy)))

    res["haar_min"] = float(np.min(chart.haar_density(pts)))

    checks = {k: v for k, v in res.items() if k != "haar_min"}
    report = {
        "group": chart.name,
        "samples": int(samples),
        "seed": int(seed),
        "tol": tol,
        "residuals": res,
        "max_residual": float(max(checks.values())),
        "passed": bool(max(checks.values()) < tol and res["haar_min"] > 0.0),
    }
    return report
