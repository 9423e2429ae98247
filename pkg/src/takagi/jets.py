"""Truncated Taylor series in the curve parameter t.

The workhorse representation is a plain numpy array whose last axis holds
the coefficients c_0..c_K (c_k = k-th derivative / k!).  Leading axes are
batch axes, so one call advances many points at once.  ``Jet`` is a small
immutable wrapper for single series used by the public API.
"""
from math import factorial

import numpy as np

from .errors import ShapeError, SingularDivision

MAX_ORDER = 8
TINY = 1e-300


def _check(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError(f"jet orders differ: {a.shape[-1] - 1} vs {b.shape[-1] - 1}")


def const(value, order, shape=()):
    out = np.zeros(tuple(shape) + (order + 1,))
    out[..., 0] = value
    return out


def variable(order, at=0.0):
    """The jet of t -> at + t."""
    out = const(at, order)
    if order >= 1:
        out[1] = 1.0
    return out


def mul(a, b):
    _check(a, b)
    K = a.shape[-1] - 1
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K + 1):
        out[..., k] = np.einsum("...j,...j->...", a[..., : k + 1], b[..., k::-1])
    return out


def div(a, b):
    _check(a, b)
    b0 = b[..., 0]
    if np.any(np.abs(b0) < TINY):
        raise SingularDivision("jet division by a series with zero constant term")
    K = a.shape[-1] - 1
    q = np.empty(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K + 1):
        acc = a[..., k]
        if k:
            acc = acc - np.einsum("...j,...j->...", q[..., :k], b[..., k:0:-1])
        q[..., k] = acc / b0
    return q


def recip(b):
    one = np.zeros_like(b)
    one[..., 0] = 1.0
    return div(one, b)


def compose_poly(coeffs, t0):
    """Evaluate a coefficient vector as a polynomial at t0 (last axis)."""
    coeffs = np.asarray(coeffs, dtype=float)
    powers = t0 ** np.arange(coeffs.shape[-1])
    return coeffs @ powers


def mobius_jet(m, z):
    """(a z + b) / (c z + d) for a 2x2 matrix of jets m[i][j] and a jet z."""
    if isinstance(z, Jet):
        K = z.order
        arr = [[e.coeffs if isinstance(e, Jet) else const(e, K) for e in row] for row in m]
        return Jet(mobius_jet(arr, z.coeffs))
    a, b = m[0]
    c, d = m[1]
    return div(mul(a, z) + b, mul(c, z) + d)


def derivatives(a):
    """Raw derivatives k! c_k from Taylor coefficients."""
    a = np.asarray(a, dtype=float)
    f = np.array([factorial(k) for k in range(a.shape[-1])], dtype=float)
    return a * f


class Jet:
    """A single truncated Taylor series of fixed order."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or not 1 <= c.size <= MAX_ORDER + 1:
            raise ShapeError(f"jet must have between 1 and {MAX_ORDER + 1} coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @property
    def order(self):
        return self.coeffs.size - 1

    @classmethod
    def constant(cls, value, order):
        return cls(const(value, order))

    def derivative(self, k):
        return factorial(k) * float(self.coeffs[k])

    def _other(self, other):
        if isinstance(other, Jet):
            _check(self.coeffs, other.coeffs)
            return other.coeffs
        return const(float(other), self.order)

    def __add__(self, other):
        return Jet(self.coeffs + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.coeffs - self._other(other))

    def __rsub__(self, other):
        return Jet(self._other(other) - self.coeffs)

    def __neg__(self):
        return Jet(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(mul(self.coeffs, other.coeffs))
        return Jet(self.coeffs * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Jet(div(self.coeffs, self._other(other)))

    def __rtruediv__(self, other):
        return Jet(div(self._other(other), self.coeffs))

    def __eq__(self, other):
        return isinstance(other, Jet) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Jet({self.coeffs.tolist()})"


def jet_add(a, b):
    return a + b


def jet_sub(a, b):
    return a - b


def jet_scale(a, s):
    return a * s


def jet_mul(a, b):
    return a * b


def jet_div(a, b):
    return a / b
