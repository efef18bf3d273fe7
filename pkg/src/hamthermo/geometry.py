"""Canonical phase space in Darboux coordinates.

Points carry a chart label (the ordered names of the configuration
coordinates); anything that combines two points or vectors checks the
labels first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .errors import ChartMismatchError, NonFiniteDerivativeError

__all__ = [
    "HYDROSTATIC",
    "HYDROSTATIC_MOMENTA",
    "PhasePoint",
    "TangentVector",
    "Hamiltonian",
    "FunctionHamiltonian",
    "ShiftedHamiltonian",
    "canonical_matrix",
    "canonical_pairing",
    "hamiltonian_field",
    "energy_rate",
    "flow_jacobian",
    "symplectic_defect",
]

HYDROSTATIC = ("S", "V", "N")
# conjugates of (S, V, N); the V slot holds -P
HYDROSTATIC_MOMENTA = ("T", "-P", "mu")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


def default_chart(n: int) -> tuple[str, ...]:
    return tuple(f"q{i + 1}" for i in range(n))


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point ``(q, p)`` of the 2n-dimensional phase space."""

    q: np.ndarray
    p: np.ndarray
    chart: tuple[str, ...] = None

    def __post_init__(self):
        q, p = _frozen(self.q), _frozen(self.p)
        if q.size == 0 or q.size != p.size:
            raise ChartMismatchError(f"q and p must have equal length n >= 1, got {q.size} and {p.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase point has non-finite components")
        chart = default_chart(q.size) if self.chart is None else tuple(self.chart)
        if len(chart) != q.size:
            raise ChartMismatchError(f"chart {chart} does not match dimension {q.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "chart", chart)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def x(self) -> np.ndarray:
        """Flat ``(q, p)`` vector."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, x: Sequence[float], chart: Sequence[str] | None = None) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:], chart)

    @classmethod
    def hydrostatic(cls, S, V, N, T, P, mu) -> "PhasePoint":
        """Build a point from physical values; the stored V-momentum is ``-P``."""
        return cls((S, V, N), (T, -P, mu), HYDROSTATIC)

    def as_hydrostatic(self) -> dict[str, float]:
        if self.chart != HYDROSTATIC:
            raise ChartMismatchError(f"expected hydrostatic chart, got {self.chart}")
        S, V, N = self.q
        T, mP, mu = self.p
        return {"S": S, "V": V, "N": N, "T": T, "P": -mP, "mu": mu}

    def same_as(self, other: "PhasePoint") -> bool:
        return self.chart == other.chart and np.array_equal(self.q, other.q) and np.array_equal(self.p, other.p)

    def __repr__(self):
        return f"PhasePoint(q={self.q.tolist()}, p={self.p.tolist()}, chart={self.chart})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    dq: np.ndarray
    dp: np.ndarray
    base: PhasePoint | None = None

    def __post_init__(self):
        dq, dp = _frozen(self.dq), _frozen(self.dp)
        if dq.size != dp.size:
            raise ChartMismatchError("dq and dp must have equal length")
        if self.base is not None and self.base.n != dq.size:
            raise ChartMismatchError(f"tangent vector of dimension {dq.size} at a base point of dimension {self.base.n}")
        object.__setattr__(self, "dq", dq)
        object.__setattr__(self, "dp", dp)

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.dq, self.dp])

    def hydrostatic_rates(self) -> dict[str, float]:
        """Rates of ``S, V, N, T, P, mu`` (``P`` with its physical sign)."""
        dS, dV, dN = self.dq
        dT, dmP, dmu = self.dp
        return {"S": dS, "V": dV, "N": dN, "T": dT, "P": -dmP, "mu": dmu}


def canonical_matrix(n: int) -> np.ndarray:
    """Matrix of ``dq ^ dp`` in the ordering ``(q, p)``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def canonical_pairing(u: TangentVector, v: TangentVector) -> float:
    """``omega(u, v) = sum_i u.dq_i v.dp_i - u.dp_i v.dq_i``."""
    if u.dq.size != v.dq.size:
        raise ChartMismatchError(f"dimension mismatch: {u.dq.size} vs {v.dq.size}")
    if u.base is not None and v.base is not None and not u.base.same_as(v.base):
        raise ChartMismatchError("tangent vectors are attached to different base points")
    return float(u.dq @ v.dp - u.dp @ v.dq)


class Hamiltonian:
    """Smooth scalar function on phase space.

    Subclasses implement :meth:`value` with plain arithmetic (and
    :func:`autodiff.exp`/:func:`autodiff.log`) so it accepts dual numbers.
    :meth:`gradient` defaults to forward-mode differentiation of
    :meth:`value`; subclasses with closed-form derivatives override it and
    keep :meth:`dual_gradient` as an independent path.
    """

    name = "hamiltonian"

    def __init__(self, n: int, chart: Sequence[str] | None = None, params: dict | None = None):
        self.n = n
        self.chart = default_chart(n) if chart is None else tuple(chart)
        self.params = dict(params or {})

    def value(self, q, p):
        raise NotImplementedError

    def __call__(self, x: PhasePoint) -> float:
        self._check(x)
        return float(self.value(list(x.q), list(x.p)))

    def _check(self, x: PhasePoint):
        if x.chart != self.chart:
            raise ChartMismatchError(f"{self.name} lives on chart {self.chart}, point is on {x.chart}")

    def dual_gradient(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        g = ad.gradient(lambda z: self.value(z[:n], z[n:]), list(q) + list(p))
        return g[:n], g[n:]

    def gradient(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        """``(dH/dq, dH/dp)``."""
        return self.dual_gradient(q, p)

    def vector_field(self, x: np.ndarray) -> np.ndarray:
        """Flat Hamiltonian vector field at the flat state ``x``."""
        n = self.n
        gq, gp = self.gradient(x[:n], x[n:])
        return np.concatenate([gp, -np.asarray(gq, dtype=float)])

    def kernel_spec(self):
        """``(kind, params)`` for a compiled vector field, or ``None``."""
        return None

    def describe(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.name}({args})"


class FunctionHamiltonian(Hamiltonian):
    """Hamiltonian from a callable ``fn(q, p)`` differentiated with duals."""

    def __init__(self, fn: Callable, n: int, chart=None, name: str = "function", params=None):
        super().__init__(n, chart, params)
        self._fn = fn
        self.name = name

    def value(self, q, p):
        return self._fn(q, p)


class ShiftedHamiltonian(Hamiltonian):
    """``H + c``; shares every derivative with ``H``."""

    def __init__(self, base: Hamiltonian, shift: float):
        super().__init__(base.n, base.chart, {**base.params, "shift": shift})
        self.base = base
        self.shift = float(shift)
        self.name = f"{base.name}+const"

    def value(self, q, p):
        return self.base.value(q, p) + self.shift

    def gradient(self, q, p):
        return self.base.gradient(q, p)

    def kernel_spec(self):
        return self.base.kernel_spec()


def hamiltonian_field(H: Hamiltonian, x: PhasePoint) -> TangentVector:
    """``X_H = (dH/dp, -dH/dq)`` at ``x``."""
    H._check(x)
    gq, gp = H.gradient(x.q, x.p)
    flat = np.concatenate([np.asarray(gq, dtype=float), np.asarray(gp, dtype=float)])
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        i = int(bad[0])
        name = x.chart[i] if i < x.n else f"p[{x.chart[i - x.n]}]"
        raise NonFiniteDerivativeError(f"non-finite derivative of {H.name} along coordinate {i} ({name})", i)
    return TangentVector(flat[x.n :], -flat[: x.n], x)


def energy_rate(H: Hamiltonian, x: PhasePoint) -> tuple[float, float]:
    """Derivative of ``H`` along its own field, and the gradient norm it should be compared with."""
    gq, gp = H.gradient(x.q, x.p)
    gq, gp = np.asarray(gq, dtype=float), np.asarray(gp, dtype=float)
    v = hamiltonian_field(H, x)
    rate = float(gq @ v.dq + gp @ v.dp)
    return rate, float(np.linalg.norm(np.concatenate([gq, gp])))


def flow_jacobian(flow: Callable[[PhasePoint], PhasePoint], x: PhasePoint, h: float) -> np.ndarray:
    """Central-difference Jacobian of a phase-space map, steps ``h * max(1, |x_i|)``."""
    base = x.x
    m = base.size
    J = np.empty((m, m))
    for j in range(m):
        step = h * max(1.0, abs(base[j]))
        xp, xm = base.copy(), base.copy()
        xp[j] += step
        xm[j] -= step
        fp = flow(PhasePoint.from_array(xp, x.chart)).x
        fm = flow(PhasePoint.from_array(xm, x.chart)).x
        J[:, j] = (fp - fm) / (2.0 * step)
    return J


def symplectic_defect(flow: Callable[[PhasePoint], PhasePoint], x: PhasePoint, h: float = 1e-5) -> float:
    """Max-norm of ``J^T Omega J - Omega`` for the flow map's Jacobian ``J`` at ``x``."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    J = flow_jacobian(flow, x, h)
    omega = canonical_matrix(x.n)
    return float(np.max(np.abs(J.T @ omega @ J - omega)))
