"""Structure-constant algebra: Jacobi checks, index, unimodularity,
and the half-orbit-dimension integrability classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["LieAlgebra", "InputError", "jacobi_check", "poisson_tensor",
           "rank_skew", "index", "unimodularity", "integrability_criterion",
           "algebra_from_dict", "algebra_from_json"]

RANK_RTOL = 1e-10  # singular values below RANK_RTOL * s_max count as zero


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class LieAlgebra:
    """Lie algebra given by structure constants C[a, b, c] = C_ab^c."""

    name: str
    dim: int
    C: np.ndarray = field(repr=False)

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.shape != (self.dim, self.dim, self.dim):
            raise InputError(
                f"structure constants must have shape {(self.dim,) * 3}, got {C.shape}")
        object.__setattr__(self, "C", C)

    def bracket(self, x, y):
        """[x, y]^c = C_ab^c x^a y^b."""
        return np.einsum("abc,a,b->c", self.C, np.asarray(x), np.asarray(y))


@dataclass
class JacobiReport:
    ok: bool
    max_residual: float
    antisymmetry_residual: float
    violations: list


def jacobi_check(alg: LieAlgebra, tol=1e-12):
    """Check antisymmetry and the Jacobi identity; report violating triples."""
    C = alg.C
    anti = float(np.max(np.abs(C + np.swapaxes(C, 0, 1)))) if alg.dim else 0.0
    # J[a,b,c,e] = C_ab^d C_dc^e + C_bc^d C_da^e + C_ca^d C_db^e
    J = (np.einsum("abd,dce->abce", C, C)
         + np.einsum("bcd,dae->abce", C, C)
         + np.einsum("cad,dbe->abce", C, C))
    max_res = float(np.max(np.abs(J))) if alg.dim else 0.0
    violations = []
    if max_res > tol:
        bad = np.argwhere(np.abs(J) > tol)
        for a, b, c, e in bad[:20]:
            violations.append(((int(a), int(b), int(c), int(e)), float(J[a, b, c, e])))
    ok = anti <= tol and max_res <= tol
    return JacobiReport(ok, max_res, anti, violations)


def poisson_tensor(alg: LieAlgebra, f):
    """Lie-Poisson bivector matrix B_ab = C_ab^c f_c at the dual point f."""
    f = np.asarray(f, dtype=float)
    if f.shape != (alg.dim,):
        raise InputError(f"dual vector must have length {alg.dim}, got {f.shape}")
    return np.einsum("abc,c->ab", alg.C, f)


def rank_skew(B, rtol=RANK_RTOL):
    """Numeric rank by singular values with a relative threshold."""
    s = np.linalg.svd(B, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def index(alg: LieAlgebra, samples=160, seed=0):
    """Index of the algebra: dim minus max Lie-Poisson rank over random duals."""
    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(samples):
        f = rng.uniform(-1.0, 1.0, alg.dim)
        best = max(best, rank_skew(poisson_tensor(alg, f)))
        if best == alg.dim:
            break
    if best % 2 != 0:
        raise RuntimeError("odd rank for a skew form; numeric rank threshold broken")
    return alg.dim - best


def unimodularity(alg: LieAlgebra):
    """(flag, trace vector): C_a = C_ab^b, flag true iff all vanish."""
    Ca = np.einsum("abb->a", alg.C)
    return bool(np.all(np.abs(Ca) < 1e-14)), Ca


def integrability_criterion(alg: LieAlgebra, samples=160, seed=0):
    """(flag, m): flag true iff half the regular orbit dimension is <= 1."""
    ind = index(alg, samples=samples, seed=seed)
    m2 = alg.dim - ind
    return (m2 // 2 <= 1), m2 // 2


def algebra_from_dict(doc):
    """Build an algebra from {"name", "dim", "brackets": [[a,b,c,val], ...]}.

    Bracket indices are 1-based; both (a,b,c,v) and its antisymmetric partner
    may be listed, and any inconsistency is an error rather than silently
    symmetrized away.
    """
    try:
        name = doc["name"]
        dim = int(doc["dim"])
        brackets = doc["brackets"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"algebra document missing field: {exc}") from exc
    if dim < 1:
        raise InputError("dim must be a positive integer")
    C = np.zeros((dim, dim, dim))
    seen = {}
    for entry in brackets:
        if len(entry) != 4:
            raise InputError(f"bracket entry must be [a, b, c, value], got {entry}")
        a, b, c, v = int(entry[0]) - 1, int(entry[1]) - 1, int(entry[2]) - 1, float(entry[3])
        if not (0 <= a < dim and 0 <= b < dim and 0 <= c < dim):
            raise InputError(f"bracket indices out of range in {entry}")
        if a == b and v != 0.0:
            raise InputError(f"C_aa^c must vanish; got {entry}")
        for key, val in (((a, b, c), v), ((b, a, c), -v)):
            if key in seen and seen[key] != val:
                raise InputError(
                    f"antisymmetry violated at C_{key[0]+1}{key[1]+1}^{key[2]+1}")
            seen[key] = val
            C[key] = val
    return LieAlgebra(name=name, dim=dim, C=C)


def algebra_from_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return algebra_from_dict(json.load(fh))
