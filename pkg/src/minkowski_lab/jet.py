"""Second-order truncated Taylor arithmetic over a batch of points.

A :class:`Jet` carries a value, gradient and Hessian with respect to ``m``
independent parameters, for every point of a batch at once.  Surface maps,
weight functions and vector fields are written against the functions in this
module so they accept plain floats/arrays as well as jets.
"""

from __future__ import annotations

import numpy as np


class Jet:
    """Value ``v`` (batch), gradient ``d`` (m, *batch), Hessian ``h`` (m, m, *batch)."""

    __slots__ = ("v", "d", "h")
    # numpy defers binary operators to the Jet reflected methods
    __array_ufunc__ = None

    def __init__(self, v, d, h):
        self.v = v
        self.d = d
        self.h = h

    @property
    def nvars(self) -> int:
        return self.d.shape[0]

    @classmethod
    def variables(cls, values) -> list["Jet"]:
        """Independent variables: ``values`` has shape (m, *batch)."""
        values = np.asarray(values, dtype=float)
        m = values.shape[0]
        batch = values.shape[1:]
        out = []
        for i in range(m):
            d = np.zeros((m,) + batch)
            d[i] = 1.0
            out.append(cls(values[i].copy(), d, np.zeros((m, m) + batch)))
        return out

    def _lift(self, c) -> "Jet":
        c = np.broadcast_to(np.asarray(c, dtype=float), np.shape(self.v))
        return Jet(c, np.zeros_like(self.d), np.zeros_like(self.h))

    def _chain(self, f0, f1, f2) -> "Jet":
        outer = self.d[:, None] * self.d[None, :]
        return Jet(f0, f1 * self.d, f1 * self.h + f2 * outer)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v + other.v, self.d + other.d, self.h + other.h)
        return Jet(self.v + other, self.d, self.h)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d, -self.h)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            cross = self.d[:, None] * other.d[None, :]
            return Jet(
                self.v * other.v,
                self.d * other.v + self.v * other.d,
                self.h * other.v + self.v * other.h + cross + np.swapaxes(cross, 0, 1),
            )
        return Jet(self.v * other, self.d * other, self.h * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == 0.0:
            return self._lift(1.0)
        if p == 1.0:
            return self
        if p == 2.0:
            return self * self
        return self._chain(self.v**p, p * self.v ** (p - 1), p * (p - 1) * self.v ** (p - 2))

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __repr__(self) -> str:
        return f"Jet(v={self.v!r}, d={self.d!r})"


def _unary(x, f0, f1, f2):
    """Apply a scalar function given value/first/second-derivative callables."""
    if isinstance(x, Jet):
        v = x.v
        return x._chain(f0(v), f1(v), f2(v))
    return f0(np.asarray(x, dtype=float) if not np.isscalar(x) else x)


def value(x):
    return x.v if isinstance(x, Jet) else x


def sqrt(x):
    return _unary(x, np.sqrt, lambda v: 0.5 / np.sqrt(v), lambda v: -0.25 / (v * np.sqrt(v)))


def exp(x):
    return _unary(x, np.exp, np.exp, np.exp)


def log(x):
    return _unary(x, np.log, lambda v: 1.0 / v, lambda v: -1.0 / (v * v))


def sin(x):
    return _unary(x, np.sin, np.cos, lambda v: -np.sin(v))


def cos(x):
    return _unary(x, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))


def tan(x):
    return _unary(
        x,
        np.tan,
        lambda v: 1.0 / np.cos(v) ** 2,
        lambda v: 2.0 * np.tan(v) / np.cos(v) ** 2,
    )


def sinh(x):
    return _unary(x, np.sinh, np.cosh, np.sinh)


def cosh(x):
    return _unary(x, np.cosh, np.sinh, np.cosh)


def tanh(x):
    return _unary(
        x,
        np.tanh,
        lambda v: 1.0 / np.cosh(v) ** 2,
        lambda v: -2.0 * np.tanh(v) / np.cosh(v) ** 2,
    )


def arccos(x):
    return _unary(
        x,
        np.arccos,
        lambda v: -1.0 / np.sqrt(1.0 - v * v),
        lambda v: -v / (1.0 - v * v) ** 1.5,
    )


def arcsin(x):
    return _unary(
        x,
        np.arcsin,
        lambda v: 1.0 / np.sqrt(1.0 - v * v),
        lambda v: v / (1.0 - v * v) ** 1.5,
    )


def arctan(x):
    return _unary(
        x,
        np.arctan,
        lambda v: 1.0 / (1.0 + v * v),
        lambda v: -2.0 * v / (1.0 + v * v) ** 2,
    )


def arcsinh(x):
    return _unary(
        x,
        np.arcsinh,
        lambda v: 1.0 / np.sqrt(v * v + 1.0),
        lambda v: -v / (v * v + 1.0) ** 1.5,
    )


def arccosh(x):
    return _unary(
        x,
        np.arccosh,
        lambda v: 1.0 / np.sqrt(v * v - 1.0),
        lambda v: -v / (v * v - 1.0) ** 1.5,
    )


def dot(u, v, signs=None):
    """Signature inner product of two component sequences (jets or arrays)."""
    if signs is None:
        signs = (1.0,) * len(u)
    total = 0.0
    for s, a, b in zip(signs, u, v):
        total = total + s * (a * b)
    return total


def stack_value(components) -> np.ndarray:
    """Values of a list of components, stacked on the last axis."""
    return np.stack([np.broadcast_to(value(c), _batch_shape(components)) for c in components], axis=-1)


def stack_grad(components) -> np.ndarray:
    """First derivatives, shape (*batch, m, n)."""
    shape = _batch_shape(components)
    m = _nvars(components)
    cols = []
    for c in components:
        if isinstance(c, Jet):
            cols.append(np.broadcast_to(c.d, (m,) + shape))
        else:
            cols.append(np.zeros((m,) + shape))
    arr = np.stack(cols, axis=-1)  # (m, *batch, n)
    return np.moveaxis(arr, 0, -2)


def stack_hess(components) -> np.ndarray:
    """Second derivatives, shape (*batch, m, m, n)."""
    shape = _batch_shape(components)
    m = _nvars(components)
    cols = []
    for c in components:
        if isinstance(c, Jet):
            cols.append(np.broadcast_to(c.h, (m, m) + shape))
        else:
            cols.append(np.zeros((m, m) + shape))
    arr = np.stack(cols, axis=-1)  # (m, m, *batch, n)
    arr = np.moveaxis(arr, 0, -2)
    return np.moveaxis(arr, 0, -2)


def _batch_shape(components):
    shapes = [np.shape(value(c)) for c in components]
    return np.broadcast_shapes(*shapes)


def _nvars(components):
    for c in components:
        if isinstance(c, Jet):
            return c.nvars
    raise ValueError("no jet among components")
