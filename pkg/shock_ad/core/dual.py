"""
Forward-mode dual numbers.

A Dual carries (value, tangent) through arithmetic. Both components may be
floats or numpy arrays of equal shape, so a whole field of cell averages is a
single Dual and one run propagates the solution together with one tangent
direction.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from shock_ad.core.errors import DomainError

Real = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class Dual:
    value: Real
    tangent: Real

    # ndarray (op) Dual must dispatch to the reflected Dual operator
    __array_ufunc__ = None

    def __add__(self, other):
        other = _as_dual(other)
        return Dual(self.value + other.value, self.tangent + other.tangent)

    def __radd__(self, other):
        return _as_dual(other) + self

    def __sub__(self, other):
        other = _as_dual(other)
        return Dual(self.value - other.value, self.tangent - other.tangent)

    def __rsub__(self, other):
        return _as_dual(other) - self

    def __mul__(self, other):
        if not isinstance(other, Dual):
            return Dual(self.value * other, self.tangent * other)
        return Dual(self.value * other.value, self.tangent * other.value + self.value * other.tangent)

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        if not isinstance(other, Dual):
            if np.any(np.asarray(other) == 0):
                raise DomainError("Division by zero")
            return Dual(self.value / other, self.tangent / other)
        if np.any(np.asarray(other.value) == 0):
            raise DomainError("Division by a dual with zero value")
        quotient = self.value / other.value
        return Dual(quotient, (self.tangent - quotient * other.tangent) / other.value)

    def __rtruediv__(self, other):
        return _as_dual(other) / self

    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        if isinstance(exponent, Dual):
            return exp(exponent * log(self))
        return power(self, exponent)

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __abs__(self):
        return absolute(self)

    # Comparisons look at the value only; the tangent follows the taken branch.
    def __lt__(self, other):
        return self.value < _value_of(other)

    def __le__(self, other):
        return self.value <= _value_of(other)

    def __gt__(self, other):
        return self.value > _value_of(other)

    def __ge__(self, other):
        return self.value >= _value_of(other)

    def __getitem__(self, index):
        return Dual(self.value[index], self.tangent[index])

    def __len__(self):
        return len(self.value)

    @property
    def shape(self):
        return np.shape(self.value)


def _value_of(x) -> Real:
    return x.value if isinstance(x, Dual) else x


def _as_dual(x) -> Dual:
    if isinstance(x, Dual):
        return x
    return lift(x)


def lift(c) -> Dual:
    """Constant with exactly zero tangent."""
    if np.ndim(c) == 0:
        return Dual(float(c), 0.0)
    c = np.asarray(c, dtype=float)
    return Dual(c, np.zeros_like(c))


def seed(c, d) -> Dual:
    if np.ndim(c) == 0 and np.ndim(d) == 0:
        return Dual(float(c), float(d))
    c = np.asarray(c, dtype=float)
    return Dual(c, np.broadcast_to(np.asarray(d, dtype=float), c.shape).copy())


def with_custom_tangent(value_result, tangent_result) -> Dual:
    """
    Custom elemental function: the value and the tangent come from two
    independent rules and are only joined here. Downstream arithmetic treats the
    result like any other Dual.
    """
    return Dual(value_result, tangent_result)


def sqrt(a: Dual) -> Dual:
    if np.any(np.asarray(a.value) <= 0):
        raise DomainError("sqrt of a non-positive dual value")
    root = np.sqrt(a.value)
    return Dual(root, a.tangent / (2.0 * root))


def power(a: Dual, exponent: float) -> Dual:
    if exponent == 0:
        return lift(np.ones_like(a.value) if np.ndim(a.value) else 1.0)
    if exponent == 1:
        return a
    if exponent == 2:
        return Dual(a.value * a.value, 2.0 * a.value * a.tangent)
    if not float(exponent).is_integer() and np.any(np.asarray(a.value) < 0):
        raise DomainError(f"Non-integer power {exponent} of a negative dual value")
    return Dual(a.value ** exponent, exponent * a.value ** (exponent - 1) * a.tangent)


def exp(a: Dual) -> Dual:
    e = np.exp(a.value)
    return Dual(e, e * a.tangent)


def log(a: Dual) -> Dual:
    if np.any(np.asarray(a.value) <= 0):
        raise DomainError("log of a non-positive dual value")
    return Dual(np.log(a.value), a.tangent / a.value)


def absolute(a: Dual) -> Dual:
    # zero value takes the positive branch
    sign = np.where(np.asarray(a.value) >= 0, 1.0, -1.0)
    if np.ndim(a.value) == 0:
        sign = float(sign)
    return Dual(np.abs(a.value), sign * a.tangent)


def maximum(a: Dual, b: Dual) -> Dual:
    a, b = _as_dual(a), _as_dual(b)
    take_a = np.asarray(a.value) >= np.asarray(b.value)
    return where(take_a, a, b)


def where(condition, a: Dual, b: Dual) -> Dual:
    a, b = _as_dual(a), _as_dual(b)
    value = np.where(condition, a.value, b.value)
    tangent = np.where(condition, a.tangent, b.tangent)
    if np.ndim(value) == 0:
        return Dual(float(value), float(tangent))
    return Dual(value, tangent)


def stack(duals) -> Dual:
    return Dual(np.stack([d.value for d in duals]), np.stack([d.tangent for d in duals]))


def pad_edge(a: Dual, width: int) -> Dual:
    """Zero-gradient ghost cells along the last axis."""
    pad = [(0, 0)] * (np.ndim(a.value) - 1) + [(width, width)]
    return Dual(np.pad(a.value, pad, mode="edge"), np.pad(a.tangent, pad, mode="edge"))


def scale_tangent(a: Dual, factor: float) -> Dual:
    return Dual(a.value, a.tangent * factor)
