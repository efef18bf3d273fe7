"""Forward-mode automatic differentiation with tagged dual numbers.

Every differentiation pass draws a fresh tag, so duals can be nested
(for second derivatives, or for differentiating a function that itself
differentiates) without perturbation confusion: an operand carrying an
older tag is treated as a constant by the newer perturbation.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Dual",
    "exp",
    "log",
    "primal",
    "is_dual",
    "derivative",
    "gradient",
    "jacobian",
    "hessian",
    "fd_gradient",
    "fd_step",
]

_tags = itertools.count(1)


def _new_tag() -> int:
    return next(_tags)


class Dual:
    """Number ``re + du * eps`` with ``eps**2 = 0`` under perturbation ``tag``.

    ``re`` and ``du`` may themselves be duals with older tags.
    """

    __slots__ = ("re", "du", "tag")
    # make numpy scalars defer to the reflected dual operators
    __array_ufunc__ = None

    def __init__(self, re, du, tag: int):
        self.re = re
        self.du = du
        self.tag = tag

    # -- helpers ---------------------------------------------------------
    def _split(self, other):
        """Return the (re, du) pair of ``other`` as seen by this perturbation."""
        if isinstance(other, Dual) and other.tag == self.tag:
            return other.re, other.du
        return other, 0.0

    def _outer(self, other) -> bool:
        # True when ``other`` is a dual with a newer tag and must drive the op.
        return isinstance(other, Dual) and other.tag > self.tag

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if self._outer(other):
            return other.__radd__(self)
        ore, odu = self._split(other)
        return Dual(self.re + ore, self.du + odu, self.tag)

    def __radd__(self, other):
        return Dual(other + self.re, self.du, self.tag)

    def __sub__(self, other):
        if self._outer(other):
            return other.__rsub__(self)
        ore, odu = self._split(other)
        return Dual(self.re - ore, self.du - odu, self.tag)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.du, self.tag)

    def __mul__(self, other):
        if self._outer(other):
            return other.__rmul__(self)
        ore, odu = self._split(other)
        return Dual(self.re * ore, self.re * odu + self.du * ore, self.tag)

    def __rmul__(self, other):
        return Dual(other * self.re, other * self.du, self.tag)

    def __truediv__(self, other):
        if self._outer(other):
            return other.__rtruediv__(self)
        ore, odu = self._split(other)
        return Dual(self.re / ore, (self.du * ore - self.re * odu) / (ore * ore), self.tag)

    def __rtruediv__(self, other):
        return Dual(other / self.re, -other * self.du / (self.re * self.re), self.tag)

    def __neg__(self):
        return Dual(-self.re, -self.du, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, other):
        if isinstance(other, Dual):
            return exp(other * log(self))
        if other == 0:
            return Dual(1.0, 0.0, self.tag)
        return Dual(self.re**other, other * self.re ** (other - 1) * self.du, self.tag)

    def __rpow__(self, other):
        # constant ** dual
        return exp(self * math.log(other))

    # -- comparisons act on the primal value ------------------------------
    def __lt__(self, other):
        return primal(self) < primal(other)

    def __le__(self, other):
        return primal(self) <= primal(other)

    def __gt__(self, other):
        return primal(self) > primal(other)

    def __ge__(self, other):
        return primal(self) >= primal(other)

    def __abs__(self):
        return -self if primal(self) < 0 else self

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r}, tag={self.tag})"


def is_dual(x) -> bool:
    return isinstance(x, Dual)


def primal(x) -> float:
    """Strip every perturbation layer and return the plain float."""
    while isinstance(x, Dual):
        x = x.re
    return float(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.du, x.tag)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.re), x.du / x.re, x.tag)
    return math.log(x)


def _tangent(value, tag):
    if isinstance(value, Dual) and value.tag == tag:
        return value.du
    return 0.0


def derivative(f: Callable, x, tag: int | None = None):
    """d f / d x for a scalar function of one variable."""
    tag = _new_tag() if tag is None else tag
    return _tangent(f(Dual(x, 1.0, tag)), tag)


def _seeded(x: Sequence, k: int, tag: int) -> list:
    return [Dual(xi, 1.0 if i == k else 0.0, tag) for i, xi in enumerate(x)]


def gradient(f: Callable[[Sequence], object], x: Sequence) -> np.ndarray:
    """Gradient of a scalar function by one forward pass per coordinate.

    ``x`` may hold floats or duals (with older tags); the result's dtype
    follows accordingly.
    """
    x = list(x)
    out = []
    for k in range(len(x)):
        tag = _new_tag()
        out.append(_tangent(f(_seeded(x, k, tag)), tag))
    return _as_array(out)


def jacobian(f: Callable[[Sequence], Sequence], x: Sequence) -> np.ndarray:
    """Jacobian ``J[i, k] = d f_i / d x_k`` of a vector function."""
    x = list(x)
    cols = []
    for k in range(len(x)):
        tag = _new_tag()
        cols.append([_tangent(fi, tag) for fi in f(_seeded(x, k, tag))])
    return _as_array(cols).T if cols else np.zeros((0, 0))


def hessian(f: Callable[[Sequence], object], x: Sequence) -> np.ndarray:
    """Full Hessian by nested duals; both triangles are computed independently."""
    x = list(x)
    n = len(x)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            t_in, t_out = _new_tag(), _new_tag()
            xs = []
            for k, xk in enumerate(x):
                inner = Dual(xk, 1.0 if k == j else 0.0, t_in)
                xs.append(Dual(inner, 1.0 if k == i else 0.0, t_out))
            val = _tangent(f(xs), t_out)
            row.append(_tangent(val, t_in))
        rows.append(row)
    return _as_array(rows)


def _as_array(values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    if all(not isinstance(v, Dual) for v in arr.flat):
        return arr.astype(float)
    return arr


def fd_step(x: float, rel: float = 1e-6) -> float:
    return rel * max(1.0, abs(x))


def fd_gradient(f: Callable[[np.ndarray], float], x: Sequence[float], rel: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient with relative steps (oracle only)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = fd_step(x[i], rel)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g
