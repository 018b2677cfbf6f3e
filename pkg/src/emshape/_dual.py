"""First-order dual numbers over numpy arrays.

A ``Dual`` carries a value and its Gateaux derivative along one deformation.
A missing derivative (``d is None``) means zero, so the same pipeline code
evaluates the transported quantity at any t (plain values) or its
derivative at t = 0 (duals seeded with the derivative factors).
"""

from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("v", "d")
    __array_priority__ = 100

    def __init__(self, v, d=None):
        self.v = np.asarray(v)
        self.d = None if d is None else np.asarray(d)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.v.shape

    @property
    def ndim(self) -> int:
        return self.v.ndim

    def deriv(self) -> np.ndarray:
        return np.zeros_like(self.v) if self.d is None else self.d

    def __getitem__(self, idx) -> "Dual":
        return Dual(self.v[idx], None if self.d is None else self.d[idx])

    def reshape(self, *shape) -> "Dual":
        return Dual(self.v.reshape(*shape), None if self.d is None else self.d.reshape(*shape))

    def __neg__(self) -> "Dual":
        return Dual(-self.v, None if self.d is None else -self.d)

    def __add__(self, other) -> "Dual":
        o = lift(other)
        return Dual(self.v + o.v, _add(self.d, o.d))

    __radd__ = __add__

    def __sub__(self, other) -> "Dual":
        return self + (-lift(other))

    def __rsub__(self, other) -> "Dual":
        return lift(other) + (-self)

    def __mul__(self, other) -> "Dual":
        o = lift(other)
        return Dual(self.v * o.v, _add(_mul(self.d, o.v), _mul(self.v, o.d, right=True)))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Dual":
        o = lift(other)
        inv = 1.0 / o.v
        d = _mul(self.d, inv)
        if o.d is not None:
            d = _add(d, -self.v * o.d * inv**2)
        return Dual(self.v * inv, d)


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _mul(a, b, right: bool = False):
    if right:
        return None if b is None else a * b
    return None if a is None else a * b


def lift(x) -> Dual:
    return x if isinstance(x, Dual) else Dual(x)


def value(x) -> np.ndarray:
    return x.v if isinstance(x, Dual) else np.asarray(x)


def linear(f, x) -> Dual:
    """Apply a fixed linear map to value and derivative."""
    x = lift(x)
    return Dual(f(x.v), None if x.d is None else f(x.d))


def einsum(spec: str, *ops) -> Dual:
    ops = [lift(o) for o in ops]
    vals = [o.v for o in ops]
    out = np.einsum(spec, *vals, optimize=True)
    d = None
    for k, o in enumerate(ops):
        if o.d is None:
            continue
        args = vals[:k] + [o.d] + vals[k + 1:]
        d = _add(d, np.einsum(spec, *args, optimize=True))
    return Dual(out, d)


def matmul(a, b) -> Dual:
    a, b = lift(a), lift(b)
    d = None
    if a.d is not None:
        d = a.d @ b.v
    if b.d is not None:
        d = _add(d, a.v @ b.d)
    return Dual(a.v @ b.v, d)


def solve(A, b) -> Dual:
    """x = A^{-1} b with dx = A^{-1}(db - dA x), one factorization."""
    import scipy.linalg as sla

    A, b = lift(A), lift(b)
    lu = sla.lu_factor(A.v)
    x = sla.lu_solve(lu, b.v)
    rhs = None
    if b.d is not None:
        rhs = b.d
    if A.d is not None:
        rhs = _add(rhs, -(A.d @ x))
    return Dual(x, None if rhs is None else sla.lu_solve(lu, rhs))


def cross(a, b, axis: int = -1) -> Dual:
    a, b = lift(a), lift(b)
    d = None
    if a.d is not None:
        d = np.cross(a.d, b.v, axis=axis)
    if b.d is not None:
        d = _add(d, np.cross(a.v, b.d, axis=axis))
    return Dual(np.cross(a.v, b.v, axis=axis), d)


def concatenate(items, axis: int = 0) -> Dual:
    items = [lift(x) for x in items]
    v = np.concatenate([x.v for x in items], axis=axis)
    if all(x.d is None for x in items):
        return Dual(v)
    return Dual(v, np.concatenate([x.deriv() for x in items], axis=axis))


def stack(items, axis: int = 0) -> Dual:
    items = [lift(x) for x in items]
    v = np.stack([x.v for x in items], axis=axis)
    if all(x.d is None for x in items):
        return Dual(v)
    return Dual(v, np.stack([x.deriv() for x in items], axis=axis))
