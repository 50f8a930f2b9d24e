"""Forward-mode jets (nested dual numbers) over numpy arrays.

A ``Jet`` carries a value and partial derivatives along seed directions in a
trailing axis of ``dot``; nesting jets yields exact higher derivatives from
first-order chain rules.  A slot array at nesting depth d carries d trailing
derivative axes (innermost direction first), so the arithmetic threads an
explicit trailing-axis count ``k`` through the recursion.  Plain operands
mixed with jets are always treated as value-shaped constants.  Values may be
real or complex; rules are holomorphic, and ``conj`` is valid because seed
directions are always real.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet", "seed", "value_of", "jacobian", "value_and_jacobian", "hessian",
    "sin", "cos", "exp", "log", "sqrt", "atan2", "conj", "where", "lift_c2",
    "stack", "matrix", "mat_vec", "mat_inv", "mat_det", "mat_transpose",
]


class Jet:
    """First-order jet: value of shape S, derivatives of shape S + (nd,)."""

    __slots__ = ("val", "dot")
    __array_priority__ = 100

    def __init__(self, val, dot):
        self.val = val
        self.dot = dot

    def __add__(self, other):
        return _add(self, other, 0)

    __radd__ = __add__

    def __neg__(self):
        return Jet(_neg(self.val), _neg(self.dot))

    def __sub__(self, other):
        return _add(self, _neg(other), 0)

    def __rsub__(self, other):
        return _add(-self, other, 0)

    def __mul__(self, other):
        return _mul(self, other, 0)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _div(self, other, 0)

    def __rtruediv__(self, other):
        return _div(other, self, 0)

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)) and not isinstance(k, bool):
            if k < 0:
                return _div(1.0, self ** (-k), 0)
            if k == 0:
                return _add(_mul(self, 0.0, 0), 1.0, 0)
            if k == 1:
                return self
            half = self ** (k // 2)
            out = _mul(half, half, 0)
            return _mul(out, self, 0) if k % 2 else out
        return exp(log(self) * k)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return _index(self, idx, 0)

    @property
    def shape(self):
        return np.asarray(value_of(self)).shape

    def __repr__(self):
        return f"Jet({value_of(self)!r})"


def value_of(x):
    """Innermost plain array/scalar of a (possibly nested) jet."""
    while isinstance(x, Jet):
        x = x.val
    return x


# -- depth-threaded primitives -------------------------------------------------
# k = number of trailing derivative axes carried by the arrays of this slot.
# Plain operands passed to _add/_mul/_div alongside a Jet are value-shaped
# constants; plain-plain combinations inside slot recursion go through the
# raw "2" variants, which never expand axes.

def _neg(x):
    if isinstance(x, Jet):
        return Jet(_neg(x.val), _neg(x.dot))
    return np.negative(x)


def _expand(b, k):
    """Right-pad a value-shaped constant against k derivative axes."""
    b = np.asarray(b)
    if k == 0 or b.ndim == 0:
        return b
    return b.reshape(b.shape + (1,) * k)


def _bcx(x, k):
    """Insert a broadcast axis for the current level's direction block.

    The axis goes at position -(k+1) in every array of the tree: k counts the
    enclosing (outer) derivative axes, which stay behind it, while the tree's
    own inner derivative axes accumulate in front, so k is constant in the
    recursion.
    """
    if isinstance(x, Jet):
        return Jet(_bcx(x.val, k), _bcx(x.dot, k))
    a = np.asarray(x)
    return np.expand_dims(a, axis=a.ndim - k)


def _vshape(x):
    return np.asarray(value_of(x)).shape


def _ensure_vshape(x, shape, k):
    """Broadcast all slots of x so their value block equals ``shape``."""
    if isinstance(x, Jet):
        return Jet(_ensure_vshape(x.val, shape, k), _ensure_vshape(x.dot, shape, k + 1))
    a = np.asarray(x)
    tail = a.shape[a.ndim - k:] if k else ()
    return np.broadcast_to(a, shape + tail)


def _add2(u, v, k):
    if isinstance(u, Jet) or isinstance(v, Jet):
        return _add_slots(u, v, k)
    return u + v


def _mul2(u, v, k):
    if isinstance(u, Jet) or isinstance(v, Jet):
        return _mul_slots(u, v, k)
    return u * v


def _add_slots(a, b, k):
    """Sum of two same-structure slots (promote a plain side as constant-free)."""
    if not isinstance(a, Jet):
        return Jet(_add2(a, b.val, k), b.dot)
    if not isinstance(b, Jet):
        return Jet(_add2(a.val, b, k), a.dot)
    return Jet(_add2(a.val, b.val, k), _add2(a.dot, b.dot, k + 1))


def _mul_slots(a, b, k):
    if not isinstance(a, Jet):
        a, b = b, a
    if not isinstance(b, Jet):
        # b is a plain slot array with k trailing axes
        return Jet(_mul2(a.val, b, k), _mul2(a.dot, _bcx_plain(b, k), k + 1))
    return Jet(_mul2(a.val, b.val, k),
               _add2(_mul2(_bcx(a.val, k), b.dot, k + 1),
                     _mul2(a.dot, _bcx(b.val, k), k + 1), k + 1))


def _bcx_plain(b, k):
    b = np.asarray(b)
    return np.expand_dims(b, axis=b.ndim - k)


def _add(a, b, k):
    """a + b where a plain side is a value-shaped constant."""
    if isinstance(a, Jet) and isinstance(b, Jet):
        return Jet(_add(a.val, b.val, k) if (isinstance(a.val, Jet) or isinstance(b.val, Jet))
                   else a.val + b.val,
                   _add2(a.dot, b.dot, k + 1))
    if isinstance(a, Jet):
        sb = np.shape(b)
        sa = _vshape(a)
        out = np.broadcast_shapes(sa, sb)
        if out != sa:
            a = _ensure_vshape(a, out, k)
        return Jet(_add(a.val, b, k), a.dot)
    if isinstance(b, Jet):
        return _add(b, a, k)
    return a + _expand(b, k)


def _mul(a, b, k):
    """a * b where a plain side is a value-shaped constant."""
    if isinstance(a, Jet) and isinstance(b, Jet):
        return Jet(_mul(a.val, b.val, k) if (isinstance(a.val, Jet) or isinstance(b.val, Jet))
                   else a.val * b.val,
                   _add2(_mul2(_bcx(a.val, k), b.dot, k + 1),
                         _mul2(a.dot, _bcx(b.val, k), k + 1), k + 1))
    if isinstance(b, Jet):
        a, b = b, a
    if isinstance(a, Jet):
        return Jet(_mul(a.val, b, k), _mul(a.dot, b, k + 1))
    return a * _expand(b, k)


def _div(a, b, k):
    if isinstance(b, Jet):
        inv = _recip(b, k)
        return _mul(a, inv, k)
    if isinstance(a, Jet):
        return Jet(_div(a.val, b, k), _div(a.dot, b, k + 1))
    return a / _expand(b, k)


def _recip(b, k):
    if not isinstance(b, Jet):
        return 1.0 / b
    inv = _recip(b.val, k)
    sq = _mul2(_bcx(inv, k), _bcx(inv, k), k + 1)
    return Jet(inv, _neg(_mul2(sq, b.dot, k + 1)))


def _index(x, idx, k):
    if isinstance(x, Jet):
        return Jet(_index(x.val, idx, k), _index(x.dot, idx, k + 1))
    return x[idx + (slice(None),) * k]


def take_dir(dot_slot, mu):
    """Component ``mu`` along the outermost direction axis of a dot slot.

    The outermost level's axis is the last axis of every array in the slot.
    """
    if isinstance(dot_slot, Jet):
        return Jet(take_dir(dot_slot.val, mu), take_dir(dot_slot.dot, mu))
    return np.asarray(dot_slot)[..., mu]


def vsum(x, k=0):
    """Sum a jet/array over all of its value axes."""
    if isinstance(x, Jet):
        return Jet(vsum(x.val, k), vsum(x.dot, k + 1))
    a = np.asarray(x)
    axes = tuple(range(a.ndim - k))
    return a.sum(axis=axes) if axes else a


def seed_like(x):
    """Seed an (..., n) argument with a fresh identity direction block.

    Unlike :func:`seed`, the argument may itself be a jet; the new directions
    become the outermost level, so gradients of composite callables can be
    taken at jet inputs.
    """
    v = np.asarray(value_of(x))
    n = v.shape[-1]
    eye = np.broadcast_to(np.eye(n), v.shape + (n,)).copy()
    if not isinstance(x, Jet):
        return Jet(np.asarray(x, dtype=float), eye)
    return Jet(x, _const_dirblock(x, eye, n))


def _const_dirblock(x, eye, n):
    if isinstance(x, Jet):
        return Jet(_const_dirblock(x.val, eye, n), _zeros_extend(x.dot, n))
    return eye


def field_apply(frame_fn, a, f):
    """The jet-capable callable x -> (frame column a applied to f)(x)."""

    def out(x):
        s = seed_like(x)
        o = f(s)
        E = frame_fn(x)
        n = np.asarray(value_of(x)).shape[-1]
        acc = None
        for i in range(n):
            term = E[..., i, a] * take_dir(o.dot, i)
            acc = term if acc is None else acc + term
        return acc

    return out


def _unary(x, k, fn, dfn):
    """Chain rule for a scalar function; ``dfn(v, k)`` is jet-aware itself."""
    if isinstance(x, Jet):
        return Jet(_unary(x.val, k, fn, dfn),
                   _mul2(_bcx(dfn(x.val, k), k), x.dot, k + 1))
    return fn(x)


# -- elementary functions --------------------------------------------------------

def sin(x):
    return _sin(x, 0)


def _sin(x, k):
    return _unary(x, k, np.sin, lambda v, kk: _cos(v, kk))


def cos(x):
    return _cos(x, 0)


def _cos(x, k):
    return _unary(x, k, np.cos, lambda v, kk: _neg(_sin(v, kk)))


def exp(x):
    return _exp(x, 0)


def _exp(x, k):
    return _unary(x, k, np.exp, lambda v, kk: _exp(v, kk))


def log(x):
    return _log(x, 0)


def _log(x, k):
    return _unary(x, k, np.log, lambda v, kk: _recip(v, kk))


def sqrt(x):
    return _sqrt(x, 0)


def _sqrt(x, k):
    return _unary(x, k, np.sqrt, lambda v, kk: _div(0.5, _sqrt(v, kk), kk))


def atan2(y, x):
    return _atan2(y, x, 0)


def _atan2(y, x, k):
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return np.arctan2(y, x)
    if not isinstance(y, Jet):
        y = _const_like(y, x, k)
    if not isinstance(x, Jet):
        x = _const_like(x, y, k)
    val = _atan2(y.val, x.val, k) if (isinstance(y.val, Jet) or isinstance(x.val, Jet)) \
        else np.arctan2(y.val, x.val)
    denom = _add2(_mul2(x.val, x.val, k), _mul2(y.val, y.val, k), k)
    num = _add2(_mul2(_bcx(x.val, k), y.dot, k + 1),
                _mul2(_bcx(_neg(y.val), k), x.dot, k + 1), k + 1)
    if isinstance(num, Jet) or isinstance(denom, Jet):
        dot = _mul2(num, _recip(_bcx(denom, k), k + 1), k + 1)
    else:
        dot = num / _bcx_plain(denom, k)
    return Jet(val, dot)


def conj(x):
    """Complex conjugate; valid because seed directions are real."""
    if isinstance(x, Jet):
        return Jet(conj(x.val), conj(x.dot))
    return np.conjugate(x)


def where(cond, a, b):
    return _where(np.asarray(cond), a, b, 0)


def _where(cond, a, b, k):
    if isinstance(a, Jet) or isinstance(b, Jet):
        if not isinstance(a, Jet):
            a = _const_like(a, b, k)
        if not isinstance(b, Jet):
            b = _const_like(b, a, k)
        return Jet(_where(cond, a.val, b.val, k), _where(cond, a.dot, b.dot, k + 1))
    return np.where(_expand(cond, k), a, b)


def _const_like(value, ref, k):
    """Promote a value-shaped constant to a jet of ref's structure with zero dots."""
    if not isinstance(ref, Jet):
        return _expand(value, k) + 0.0 * np.asarray(ref)
    return Jet(_const_like(value, ref.val, k), _zero_slot(ref.dot, k + 1))


def _zero_slot(d, k):
    if isinstance(d, Jet):
        return Jet(_zero_slot(d.val, k), _zero_slot(d.dot, k + 1))
    return np.zeros_like(d)


def lift_c2(fs, u):
    """Apply a scalar function given by derivative callables [f, f', ...].

    Nesting depth of ``u`` must not exceed len(fs) - 1.
    """
    return _lift(fs, u, 0)


def _lift(fs, u, k):
    if not isinstance(u, Jet):
        return fs[0](u)
    return Jet(_lift(fs, u.val, k), _mul2(_bcx(_lift(fs[1:], u.val, k), k), u.dot, k + 1))


# -- seeding and extraction -------------------------------------------------------

def _zeros_extend(x, n):
    """All-zero structure of x with an extra trailing axis of length n."""
    if isinstance(x, Jet):
        return Jet(_zeros_extend(x.val, n), _zeros_extend(x.dot, n))
    x = np.asarray(x)
    return np.zeros(x.shape + (n,))


def seed(x, order=1):
    """Seed a real vector of shape (..., n) for differentiation of ``order``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    eye = np.broadcast_to(np.eye(n), x.shape + (n,)).copy()
    cur = Jet(x, eye)
    template = Jet(eye, np.zeros(x.shape + (n, n)))  # d(cur)/dx
    for _ in range(order - 1):
        cur = Jet(cur, template)
        template = Jet(template, _zeros_extend(template, n))
    return cur


def _coerce(out):
    """Fold an object array of jets (from a stray np.stack) into one jet."""
    if isinstance(out, np.ndarray) and out.dtype == object:
        return stack([_coerce(o) for o in out])
    return out


def value_and_jacobian(f, x):
    """(f(x), Jacobian) via one forward sweep; Jacobian shape out + (n,)."""
    x = np.asarray(x, dtype=float)
    out = _coerce(f(seed(x, 1)))
    if not isinstance(out, Jet):
        out = np.asarray(out)
        return out, np.zeros(out.shape + (x.shape[-1],))
    return np.asarray(value_of(out.val)), np.asarray(value_of(out.dot))


def jacobian(f, x):
    return value_and_jacobian(f, x)[1]


def hessian(f, x):
    """Hessian stack of f at x, shape out + (n, n)."""
    x = np.asarray(x, dtype=float)
    out = _coerce(f(seed(x, 2)))
    n = x.shape[-1]
    if not isinstance(out, Jet) or not isinstance(out.dot, Jet):
        val = np.asarray(value_of(out))
        return np.zeros(val.shape + (n, n))
    return np.asarray(value_of(out.dot.dot))


# -- stacking and small dense linear algebra ---------------------------------------

def _stack_at(items, pos, k=0):
    """Stack slots along a new value axis ``pos`` places inside the value
    block, keeping k trailing derivative axes outside the stacking."""
    if any(isinstance(it, Jet) for it in items):
        ref = next(j for j in items if isinstance(j, Jet))
        items = [it if isinstance(it, Jet) else _const_like(it, ref, k) for it in items]
        return Jet(_stack_at([it.val for it in items], pos, k),
                   _stack_at([it.dot for it in items], pos, k + 1))
    arrs = np.broadcast_arrays(*[np.asarray(it) for it in items])
    return np.stack(arrs, axis=arrs[0].ndim - k - pos + 1)


def stack(items):
    """Stack jet/array scalars (broadcast-compatible) into a trailing value axis."""
    return _stack_at(list(items), 1)


def matrix(rows):
    """Build an (..., n, n) matrix from a nested list of jet/array scalars."""
    return _stack_at([stack(r) for r in rows], 2)


def _swap_axes(x, k):
    if isinstance(x, Jet):
        return Jet(_swap_axes(x.val, k), _swap_axes(x.dot, k + 1))
    a = np.asarray(x)
    return np.swapaxes(a, a.ndim - k - 1, a.ndim - k - 2)


def mat_transpose(m):
    """Transpose the two trailing value axes of a (possibly jet) matrix."""
    if not isinstance(m, Jet):
        return np.swapaxes(m, -1, -2)
    return _swap_axes(m, 0)


def mat_vec(m, v, n=None):
    """Matrix-vector product with jet-aware entries."""
    if not isinstance(m, Jet) and not isinstance(v, Jet):
        return np.einsum("...ij,...j->...i", m, v)
    n = n or _vshape(m)[-1]
    rows = []
    for i in range(n):
        acc = None
        for j in range(n):
            term = m[..., i, j] * v[..., j]
            acc = term if acc is None else acc + term
        rows.append(acc)
    return stack(rows)


def mat_inv(m, n=None):
    """Gauss-Jordan inverse over jet scalars (small, diagonally safe matrices)."""
    if not isinstance(m, Jet):
        return np.linalg.inv(m)
    n = n or _vshape(m)[-1]
    a = [[m[..., i, j] for j in range(n)] for i in range(n)]
    one = np.ones(_vshape(m)[:-2])
    b = [[(one + 0.0 * a[0][0]) if i == j else 0.0 * a[0][0] for j in range(n)]
         for i in range(n)]
    for k in range(n):
        piv = 1.0 / a[k][k]
        a[k] = [piv * e for e in a[k]]
        b[k] = [piv * e for e in b[k]]
        for i in range(n):
            if i == k:
                continue
            f = a[i][k]
            a[i] = [a[i][j] - f * a[k][j] for j in range(n)]
            b[i] = [b[i][j] - f * b[k][j] for j in range(n)]
    return matrix(b)


def mat_det(m, n=None):
    """Determinant over jet scalars via elimination (no pivot search)."""
    if not isinstance(m, Jet):
        return np.linalg.det(m)
    n = n or _vshape(m)[-1]
    a = [[m[..., i, j] for j in range(n)] for i in range(n)]
    det = None
    for k in range(n):
        det = a[k][k] if det is None else det * a[k][k]
        inv = 1.0 / a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] * inv
            a[i] = [a[i][j] - f * a[k][j] for j in range(n)]
    return det
