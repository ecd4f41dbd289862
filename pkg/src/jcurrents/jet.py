"""Tagged, array-valued dual numbers for exact forward-mode derivatives.

A :class:`Dual` carries a value and one perturbation per direction.  Values
and perturbations are numpy arrays (any shape, real or complex) or lower-level
duals, so nesting two levels gives exact second derivatives.  Every dual has
an integer ``tag``; when two duals with different tags meet, the one with the
lower tag is a constant with respect to the higher one.  This is what keeps
nested differentiation free of perturbation confusion.

The module-level functions (``exp``, ``log``, ``where``, ``stack``, ...)
dispatch on plain arrays and duals alike, so user callables written with them
can be evaluated on numbers or on jets.
"""

from __future__ import annotations

import itertools

import numpy as np

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


class Dual:
    __slots__ = ("val", "eps", "tag")
    __array_ufunc__ = None

    def __init__(self, val, eps, tag):
        self.val = val
        self.eps = tuple(eps)
        self.tag = tag

    def __repr__(self):
        return f"Dual(tag={self.tag}, val={self.val!r}, eps={self.eps!r})"

    @property
    def shape(self):
        return np.shape(base_value(self))

    def __neg__(self):
        return Dual(-self.val, [-e for e in self.eps], self.tag)

    def __pos__(self):
        return self

    def __add__(self, other):
        t = _tag(other)
        if t < self.tag:
            return Dual(self.val + other, self.eps, self.tag)
        if t > self.tag:
            return other.__radd__(self)
        return Dual(self.val + other.val, [a + b for a, b in zip(self.eps, other.eps)], self.tag)

    def __radd__(self, other):
        return Dual(other + self.val, self.eps, self.tag)

    def __sub__(self, other):
        t = _tag(other)
        if t < self.tag:
            return Dual(self.val - other, self.eps, self.tag)
        if t > self.tag:
            return other.__rsub__(self)
        return Dual(self.val - other.val, [a - b for a, b in zip(self.eps, other.eps)], self.tag)

    def __rsub__(self, other):
        return Dual(other - self.val, [-e for e in self.eps], self.tag)

    def __mul__(self, other):
        t = _tag(other)
        if t < self.tag:
            return Dual(self.val * other, [e * other for e in self.eps], self.tag)
        if t > self.tag:
            return other.__rmul__(self)
        a, b = self.val, other.val
        return Dual(a * b, [a * eb + ea * b for ea, eb in zip(self.eps, other.eps)], self.tag)

    def __rmul__(self, other):
        return Dual(other * self.val, [other * e for e in self.eps], self.tag)

    def __truediv__(self, other):
        t = _tag(other)
        if t < self.tag:
            inv = 1.0 / other
            return Dual(self.val * inv, [e * inv for e in self.eps], self.tag)
        if t > self.tag:
            return other.__rtruediv__(self)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return other * reciprocal(self)

    def __pow__(self, k):
        if isinstance(k, Dual):
            return exp(k * log(self))
        if k == 2:
            return self * self
        v = self.val
        dv = k * v ** (k - 1)
        return Dual(v**k, [dv * e for e in self.eps], self.tag)

    def __matmul__(self, other):
        t = _tag(other)
        if t < self.tag:
            return Dual(self.val @ other, [e @ other for e in self.eps], self.tag)
        if t > self.tag:
            return other.__rmatmul__(self)
        a, b = self.val, other.val
        return Dual(a @ b, [a @ eb + ea @ b for ea, eb in zip(self.eps, other.eps)], self.tag)

    def __rmatmul__(self, other):
        return Dual(other @ self.val, [other @ e for e in self.eps], self.tag)

    def __getitem__(self, idx):
        return Dual(_index(self.val, idx), [_index(e, idx) for e in self.eps], self.tag)

    def conjugate(self):
        return conj(self)

    @property
    def real(self):
        return real(self)

    @property
    def imag(self):
        return imag(self)

    # comparisons act on the base value (used for masks)
    def __lt__(self, other):
        return base_value(self) < base_value(other)

    def __gt__(self, other):
        return base_value(self) > base_value(other)

    def __le__(self, other):
        return base_value(self) <= base_value(other)

    def __ge__(self, other):
        return base_value(self) >= base_value(other)


def _index(x, idx):
    if isinstance(x, Dual):
        return x[idx]
    x = np.asarray(x)
    if x.ndim == 0:
        return x
    return x[idx]


def _tag(x) -> int:
    return x.tag if isinstance(x, Dual) else 0


def is_dual(x) -> bool:
    return isinstance(x, Dual)


def base_value(x):
    while isinstance(x, Dual):
        x = x.val
    return x


def make_variables(values):
    """Seed a fresh tag: variable k gets unit perturbation in direction k."""
    tag = new_tag()
    m = len(values)
    out = []
    for k, v in enumerate(values):
        eps = [1.0 if j == k else 0.0 for j in range(m)]
        out.append(Dual(v, eps, tag))
    return out, tag


def part(x, tag, k):
    """Perturbation of ``x`` in direction ``k`` of ``tag`` (zero if independent)."""
    if isinstance(x, Dual):
        if x.tag == tag:
            return x.eps[k]
        if x.tag > tag:
            return Dual(part(x.val, tag, k), [part(e, tag, k) for e in x.eps], x.tag)
    return 0.0


def strip(x, tag):
    """Value of ``x`` with the ``tag`` perturbations dropped."""
    if isinstance(x, Dual):
        if x.tag == tag:
            return x.val
        if x.tag > tag:
            return Dual(strip(x.val, tag), [strip(e, tag) for e in x.eps], x.tag)
    return x


# -- elementary functions -------------------------------------------------
def _chain(x, f, df):
    v = x.val
    d = df(v)
    return Dual(f(v), [d * e for e in x.eps], x.tag)


def exp(x):
    if isinstance(x, Dual):
        ev = exp(x.val)
        return Dual(ev, [ev * e for e in x.eps], x.tag)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return _chain(x, log, reciprocal)
    return np.log(x)


def reciprocal(x):
    if isinstance(x, Dual):
        r = reciprocal(x.val)
        r2 = -(r * r)
        return Dual(r, [r2 * e for e in x.eps], x.tag)
    return 1.0 / x


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.val)
        h = 0.5 * reciprocal(s)
        return Dual(s, [h * e for e in x.eps], x.tag)
    return np.sqrt(x)


def sin(x):
    if isinstance(x, Dual):
        return _chain(x, sin, cos)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return _chain(x, cos, lambda v: -sin(v))
    return np.cos(x)


def conj(x):
    if isinstance(x, Dual):
        return Dual(conj(x.val), [conj(e) for e in x.eps], x.tag)
    return np.conj(x)


def real(x):
    if isinstance(x, Dual):
        return Dual(real(x.val), [real(e) for e in x.eps], x.tag)
    return np.real(x)


def imag(x):
    if isinstance(x, Dual):
        return Dual(imag(x.val), [imag(e) for e in x.eps], x.tag)
    return np.imag(x)


def abs2(x):
    """|x|^2, smooth for complex jets."""
    return real(x * conj(x))


def where(mask, a, b):
    """Elementwise select; ``mask`` is a plain boolean array."""
    ta, tb = _tag(a), _tag(b)
    t = max(ta, tb)
    if t == 0:
        return np.where(mask, a, b)
    if ta == t and tb == t:
        return Dual(where(mask, a.val, b.val),
                    [where(mask, x, y) for x, y in zip(a.eps, b.eps)], t)
    if ta == t:
        return Dual(where(mask, a.val, b), [where(mask, x, 0.0) for x in a.eps], t)
    return Dual(where(mask, a, b.val), [where(mask, 0.0, y) for y in b.eps], t)


def _zero_like(x):
    return np.zeros(np.shape(base_value(x)))


def stack(items, axis=-1):
    """np.stack for mixed arrays/duals (scalars broadcast to the common shape)."""
    t = max(_tag(x) for x in items)
    if t == 0:
        arrays = np.broadcast_arrays(*[np.asarray(x) for x in items])
        return np.stack(arrays, axis=axis)
    ref = next(x for x in items if _tag(x) == t)
    m = len(ref.eps)
    vals, epss = [], [[] for _ in range(m)]
    for x in items:
        if _tag(x) == t:
            vals.append(x.val)
            for k in range(m):
                epss[k].append(x.eps[k])
        else:
            vals.append(x)
            for k in range(m):
                epss[k].append(0.0)
    shape = np.broadcast_shapes(*[np.shape(base_value(v)) for v in vals])
    vals = [_broadcast(v, shape) for v in vals]
    epss = [[_broadcast(e, shape) for e in col] for col in epss]
    return Dual(stack(vals, axis), [stack(col, axis) for col in epss], t)


def _broadcast(x, shape):
    if isinstance(x, Dual):
        if np.shape(base_value(x)) == shape:
            return x
        return Dual(_broadcast(x.val, shape), [_broadcast(e, shape) for e in x.eps], x.tag)
    return np.broadcast_to(np.asarray(x), shape)


def inv(m):
    """Matrix inverse over the last two axes."""
    if isinstance(m, Dual):
        v = inv(m.val)
        return Dual(v, [-(v @ e @ v) for e in m.eps], m.tag)
    return np.linalg.inv(m)


def det(m):
    """Determinant over the last two axes (Laplace expansion for jets)."""
    if not isinstance(m, Dual):
        m = np.asarray(m)
        k = m.shape[-1]
        if k == 0:
            return np.ones(m.shape[:-2])
        if k == 1:
            return m[..., 0, 0]
        if k == 2:
            return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
        return np.linalg.det(m)
    k = m.shape[-1]
    entries = [[m[..., i, j] for j in range(k)] for i in range(k)]
    return _laplace(entries, list(range(k)))


def _laplace(entries, cols):
    row = len(entries) - len(cols)
    if len(cols) == 1:
        return entries[row][cols[0]]
    total = 0.0
    for pos, c in enumerate(cols):
        minor = _laplace(entries, cols[:pos] + cols[pos + 1:])
        term = entries[row][c] * minor
        total = total + term if pos % 2 == 0 else total - term
    return total


def mT(x):
    """Swap the last two axes."""
    if isinstance(x, Dual):
        return Dual(mT(x.val), [mT(e) for e in x.eps], x.tag)
    return np.swapaxes(x, -1, -2)
