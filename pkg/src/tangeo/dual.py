"""Forward-mode dual numbers and the derivative helpers built on them.

A :class:`Dual` carries a value and a single infinitesimal part. Nesting is
supported through integer tags: every call to :func:`jacobian` or
:func:`directional` draws a fresh tag, and arithmetic between duals of
different tags treats the lower-tagged operand as a constant of the
higher-tagged one. This avoids perturbation confusion when derivatives of
derivatives are taken (Christoffel symbols inside curvature, for instance).

numpy ufuncs applied to object arrays dispatch to methods of the same name,
so metric functions written with ``np.sin`` / ``np.exp`` etc. accept duals
without modification.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_tags = itertools.count(1)


class Dual:
    __slots__ = ("re", "du", "tag")

    def __init__(self, re, du, tag: int):
        self.re = re
        self.du = du
        self.tag = tag

    def __repr__(self) -> str:
        return f"Dual({self.re!r}, {self.du!r}, tag={self.tag})"

    # arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        ar, ad = _parts(self, tag)
        br, bd = _parts(other, tag)
        return Dual(ar + br, ad + bd, tag)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        ar, ad = _parts(self, tag)
        br, bd = _parts(other, tag)
        return Dual(ar - br, ad - bd, tag)

    def __rsub__(self, other):
        tag = _top(self, other)
        ar, ad = _parts(other, tag)
        br, bd = _parts(self, tag)
        return Dual(ar - br, ad - bd, tag)

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        ar, ad = _parts(self, tag)
        br, bd = _parts(other, tag)
        return Dual(ar * br, ar * bd + ad * br, tag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        ar, ad = _parts(self, tag)
        br, bd = _parts(other, tag)
        q = ar / br
        return Dual(q, (ad - q * bd) / br, tag)

    def __rtruediv__(self, other):
        tag = _top(self, other)
        ar, ad = _parts(other, tag)
        br, bd = _parts(self, tag)
        q = ar / br
        return Dual(q, (ad - q * bd) / br, tag)

    def __neg__(self):
        return Dual(-self.re, -self.du, self.tag)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if value(self) < 0 else self

    def __pow__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, Dual) and other.tag >= self.tag:
            return exp(other * log(self))
        # constant exponent relative to this tag
        p = other
        if isinstance(p, (int, np.integer)) or (isinstance(p, float) and p.is_integer()):
            p = int(p)
            if p == 0:
                return Dual(_one_like(self.re), 0.0 * self.du, self.tag)
        return Dual(self.re**p, p * self.re ** (p - 1) * self.du, self.tag)

    def __rpow__(self, other):
        return exp(self * log(other))

    # comparisons act on the primal value
    def __lt__(self, other):
        return value(self) < value(other)

    def __le__(self, other):
        return value(self) <= value(other)

    def __gt__(self, other):
        return value(self) > value(other)

    def __ge__(self, other):
        return value(self) >= value(other)

    def __float__(self) -> float:
        return float(value(self))

    # elementary functions (numpy object-dtype dispatch) ------------------

    def sin(self):
        return Dual(sin(self.re), cos(self.re) * self.du, self.tag)

    def cos(self):
        return Dual(cos(self.re), -sin(self.re) * self.du, self.tag)

    def tan(self):
        c = cos(self.re)
        return Dual(tan(self.re), self.du / (c * c), self.tag)

    def exp(self):
        e = exp(self.re)
        return Dual(e, e * self.du, self.tag)

    def log(self):
        return Dual(log(self.re), self.du / self.re, self.tag)

    def sqrt(self):
        s = sqrt(self.re)
        return Dual(s, self.du / (2 * s), self.tag)

    def arctan(self):
        return Dual(arctan(self.re), self.du / (1 + self.re * self.re), self.tag)

    def sinh(self):
        return Dual(sinh(self.re), cosh(self.re) * self.du, self.tag)

    def cosh(self):
        return Dual(cosh(self.re), sinh(self.re) * self.du, self.tag)

    def tanh(self):
        th = tanh(self.re)
        return Dual(th, (1 - th * th) * self.du, self.tag)

    def square(self):
        return self * self

    def conjugate(self):
        return self


def _top(a, b) -> int:
    ta = a.tag if isinstance(a, Dual) else 0
    tb = b.tag if isinstance(b, Dual) else 0
    return ta if ta >= tb else tb


def _parts(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.re, x.du
    return x, 0.0


def _one_like(x):
    return 1.0 if not isinstance(x, Dual) else Dual(_one_like(x.re), 0.0, x.tag)


def _unary(name: str, fallback: Callable[[float], float]):
    def f(x):
        if isinstance(x, Dual):
            return getattr(x, name)()
        if isinstance(x, np.ndarray):
            return getattr(np, name)(x)
        return fallback(x)

    f.__name__ = name
    return f


sin = _unary("sin", math.sin)
cos = _unary("cos", math.cos)
tan = _unary("tan", math.tan)
exp = _unary("exp", math.exp)
log = _unary("log", math.log)
sqrt = _unary("sqrt", math.sqrt)
arctan = _unary("arctan", math.atan)
sinh = _unary("sinh", math.sinh)
cosh = _unary("cosh", math.cosh)
tanh = _unary("tanh", math.tanh)


def value(x):
    """Primal value of a (possibly nested) dual, as a plain float."""
    while isinstance(x, Dual):
        x = x.re
    return x


def values(a) -> np.ndarray:
    """Float array of primal values for an array that may hold duals."""
    a = np.asarray(a)
    if a.dtype != object:
        return a.astype(float)
    return np.array([value(v) for v in a.ravel()], dtype=float).reshape(a.shape)


def _tangent(y, tag: int):
    if isinstance(y, Dual) and y.tag == tag:
        return y.du
    return 0.0


def _primal(y, tag: int):
    if isinstance(y, Dual) and y.tag == tag:
        return y.re
    return y


def _map(fn, y, tag):
    arr = np.asarray(y)
    if arr.dtype != object:
        # nothing depended on the perturbation
        return np.zeros(arr.shape) if fn is _tangent else arr
    out = [fn(v, tag) for v in arr.ravel()]
    res = np.empty(arr.shape, dtype=object)
    res.ravel()[:] = out
    return _compact(res)


def _compact(a: np.ndarray) -> np.ndarray:
    """Downcast an object array to float when it no longer holds duals."""
    if a.dtype == object and not any(isinstance(v, Dual) for v in a.ravel()):
        return a.astype(float)
    return a


# ---------------------------------------------------------------------------
# differentiation modes


@dataclass(frozen=True)
class DiffMode:
    """How derivatives are taken: ``"dual"`` or ``"central"`` with step ``h``.

    In central mode the step for coordinate ``k`` is ``h * max(1, |x_k|)``.
    """

    kind: str = "dual"
    h: float = 1e-5

    def __post_init__(self):
        if self.kind not in ("dual", "central"):
            raise ValueError(f"unknown differentiation mode {self.kind!r}")


FORWARD_DUAL = DiffMode("dual")
CENTRAL = DiffMode("central", 1e-5)


def _as_input(x) -> np.ndarray:
    x = np.asarray(x)
    if x.dtype != object:
        x = x.astype(float)
    return x


def directional(f: Callable, x, v, mode: DiffMode = FORWARD_DUAL):
    """Derivative of ``f`` at ``x`` along ``v``: d/ds f(x + s v) at s = 0."""
    x = _as_input(x)
    v = _as_input(v)
    if mode.kind == "dual":
        tag = next(_tags)
        xd = np.empty(x.shape, dtype=object)
        for k in range(x.size):
            xd.flat[k] = Dual(x.flat[k], v.flat[k], tag)
        return _map(_tangent, f(xd), tag)
    scale = max(1.0, float(np.max(np.abs(values(x))))) if x.size else 1.0
    h = mode.h * scale
    return (np.asarray(f(x + h * v)) - np.asarray(f(x - h * v))) / (2 * h)


def jacobian(f: Callable, x, mode: DiffMode = FORWARD_DUAL):
    """Partial derivatives of ``f`` at ``x``; the new axis is appended last.

    ``jacobian(f, x)[..., k] == d f / d x_k``.
    """
    x = _as_input(x)
    n = x.size
    cols = []
    for k in range(n):
        if mode.kind == "dual":
            tag = next(_tags)
            xd = x.astype(object)
            xd.flat[k] = Dual(x.flat[k], 1.0, tag)
            cols.append(_map(_tangent, f(xd), tag))
        else:
            h = mode.h * max(1.0, abs(float(value(x.flat[k]))))
            xp = x.copy()
            xm = x.copy()
            xp.flat[k] = x.flat[k] + h
            xm.flat[k] = x.flat[k] - h
            cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h))
    if any(np.asarray(c).dtype == object for c in cols):
        return _compact(np.stack([np.asarray(c, dtype=object) for c in cols], axis=-1))
    return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)


def derivative(f: Callable, s: float, mode: DiffMode = FORWARD_DUAL):
    """Derivative of a function of one real parameter."""
    return directional(lambda a: f(a[0]), np.array([s]), np.array([1.0]), mode)


# ---------------------------------------------------------------------------
# small linear algebra that also works on object arrays


def inv(m: np.ndarray) -> np.ndarray:
    """Matrix inverse; Gauss-Jordan with partial pivoting for object arrays."""
    m = np.asarray(m)
    if m.dtype != object:
        return np.linalg.inv(m)
    n = m.shape[0]
    a = [[m[i, j] for j in range(n)] + [1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(float(value(a[r][c]))))
        if value(a[piv][c]) == 0:
            raise np.linalg.LinAlgError("singular matrix")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [e / p for e in a[c]]
        for r in range(n):
            if r != c:
                f = a[r][c]
                a[r] = [er - f * ec for er, ec in zip(a[r], a[c])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = a[i][n + j]
    return _compact(out)
