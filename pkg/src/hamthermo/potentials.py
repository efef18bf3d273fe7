"""Fundamental equations as generators of equilibrium submanifolds.

A potential ``Phi(q)`` fixes the equilibrium momenta ``p = grad Phi(q)``.
The ideal-gas energy

    E(S, V, N) = A * exp(S / (C N)) * V**(-1/C) * N**(1 + 1/C)

is the workhorse; a quadratic and a linear potential are provided for
Legendre-transform tests (the linear one is singular everywhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .errors import ChartMismatchError, DomainError
from .geometry import HYDROSTATIC, PhasePoint, default_chart

__all__ = [
    "Potential",
    "IdealGasParams",
    "IdealGasEnergy",
    "QuadraticPotential",
    "LinearPotential",
    "FunctionPotential",
    "EquilibriumState",
    "POTENTIALS",
    "make_potential",
    "evaluate",
    "gradient",
    "hessian",
    "embed",
    "onshell_residual",
    "ideal_gas_entropy",
    "eos_residual",
    "euler_residual",
]


class Potential:
    """Generating function ``Phi(q)`` on an n-dimensional chart.

    :meth:`value` must be written with plain arithmetic so that it accepts
    dual numbers. Default derivatives come from forward-mode
    differentiation; subclasses may override :meth:`gradient` and
    :meth:`hessian` with closed forms, while :meth:`dual_gradient` and
    :meth:`dual_hessian` stay available as the second path.
    """

    name = "potential"

    def __init__(self, n: int, chart: Sequence[str] | None = None, params: dict | None = None):
        self.n = n
        self.chart = default_chart(n) if chart is None else tuple(chart)
        self.params = dict(params or {})

    def value(self, q):
        raise NotImplementedError

    def check_domain(self, q) -> None:
        if len(q) != self.n:
            raise ChartMismatchError(f"{self.name} expects {self.n} coordinates, got {len(q)}")

    def __call__(self, q) -> float:
        q = list(q)
        self.check_domain(q)
        return float(self.value(q))

    def dual_gradient(self, q) -> np.ndarray:
        return ad.gradient(self.value, list(q))

    def dual_hessian(self, q) -> np.ndarray:
        return ad.hessian(self.value, list(q))

    def gradient(self, q) -> np.ndarray:
        q = list(q)
        self.check_domain(q)
        return self.dual_gradient(q)

    def hessian(self, q) -> np.ndarray:
        q = list(q)
        self.check_domain(q)
        return self.dual_hessian(q)

    def describe(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.name}({args})"


@dataclass(frozen=True)
class IdealGasParams:
    A: float = 1.0
    C: float = 1.5

    def __post_init__(self):
        if not (self.A > 0 and math.isfinite(self.A)):
            raise ValueError(f"A must be positive, got {self.A}")
        if not (self.C > 0 and math.isfinite(self.C)):
            raise ValueError(f"C must be positive, got {self.C}")

    @property
    def gamma(self) -> float:
        return (self.C + 1.0) / self.C


class IdealGasEnergy(Potential):
    """Internal energy ``E(S, V, N)`` of the ideal gas on the hydrostatic chart."""

    name = "ideal_gas"

    def __init__(self, params: IdealGasParams | None = None):
        params = params or IdealGasParams()
        super().__init__(3, HYDROSTATIC, {"A": params.A, "C": params.C})
        self.gas = params

    def check_domain(self, q) -> None:
        super().check_domain(q)
        S, V, N = q
        if not ad.primal(V) > 0:
            raise DomainError(f"ideal gas requires V > 0, got V={ad.primal(V)}", "V")
        if not ad.primal(N) > 0:
            raise DomainError(f"ideal gas requires N > 0, got N={ad.primal(N)}", "N")

    def value(self, q):
        S, V, N = q
        A, C = self.gas.A, self.gas.C
        return A * ad.exp(S / (C * N)) * V ** (-1.0 / C) * N ** (1.0 + 1.0 / C)

    def gradient(self, q) -> np.ndarray:
        q = list(q)
        self.check_domain(q)
        S, V, N = q
        C = self.gas.C
        E = self.value(q)
        return _array([E / (C * N), -E / (C * V), E * (-S / (C * N * N) + (1.0 + 1.0 / C) / N)])

    def hessian(self, q) -> np.ndarray:
        q = list(q)
        self.check_domain(q)
        S, V, N = q
        C = self.gas.C
        E = self.value(q)
        g = -S / (C * N * N) + (1.0 + 1.0 / C) / N
        E_N = E * g
        ss = E / (C * C * N * N)
        sv = -E / (C * C * N * V)
        sn = E_N / (C * N) - E / (C * N * N)
        vv = (1.0 / C) * (1.0 / C + 1.0) * E / (V * V)
        vn = -E_N / (C * V)
        nn = E_N * g + E * (2.0 * S / (C * N**3) - (1.0 + 1.0 / C) / (N * N))
        return _array([[ss, sv, sn], [sv, vv, vn], [sn, vn, nn]])

    def entropy(self, E, V, N):
        """Entropy representation ``S(E, V, N)``, the inverse of :meth:`value` in ``S``."""
        for label, val in (("E", E), ("V", V), ("N", N)):
            if not ad.primal(val) > 0:
                raise DomainError(f"entropy representation requires {label} > 0, got {ad.primal(val)}", label)
        A, C = self.gas.A, self.gas.C
        return C * N * ad.log(E * V ** (1.0 / C) * N ** (-1.0 - 1.0 / C) / A)


class QuadraticPotential(Potential):
    """``Phi = sum_i (k_i q_i**2 / 2 + c_i q_i)``; singular where some ``k_i = 0``."""

    name = "quadratic"

    def __init__(self, stiffness: Sequence[float], linear: Sequence[float] | None = None, chart=None):
        k = [float(v) for v in stiffness]
        c = [0.0] * len(k) if linear is None else [float(v) for v in linear]
        if len(c) != len(k):
            raise ValueError("stiffness and linear coefficients differ in length")
        super().__init__(len(k), chart, {"stiffness": k, "linear": c})
        self.k, self.c = k, c

    def value(self, q):
        return sum(0.5 * k * qi * qi + c * qi for k, c, qi in zip(self.k, self.c, q))

    def gradient(self, q):
        q = list(q)
        self.check_domain(q)
        return _array([k * qi + c for k, c, qi in zip(self.k, self.c, q)])

    def hessian(self, q):
        self.check_domain(list(q))
        return np.diag(self.k).astype(float)


class LinearPotential(Potential):
    """``Phi = sum_i c_i q_i``; its Hessian vanishes identically."""

    name = "linear"

    def __init__(self, coefficients: Sequence[float], chart=None):
        c = [float(v) for v in coefficients]
        super().__init__(len(c), chart, {"coefficients": c})
        self.c = c

    def value(self, q):
        return sum(c * qi for c, qi in zip(self.c, q))


class FunctionPotential(Potential):
    """User-supplied potential; every derivative comes from dual numbers."""

    def __init__(self, fn: Callable, n: int, chart=None, name: str = "function", domain: Callable | None = None):
        super().__init__(n, chart)
        self._fn = fn
        self._domain = domain
        self.name = name

    def check_domain(self, q) -> None:
        super().check_domain(q)
        if self._domain is not None:
            self._domain([ad.primal(v) for v in q])

    def value(self, q):
        return self._fn(q)


def _array(values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    if any(ad.is_dual(v) for v in arr.flat):
        return arr
    return arr.astype(float)


def _ideal_gas(A: float = 1.0, C: float = 1.5) -> IdealGasEnergy:
    return IdealGasEnergy(IdealGasParams(float(A), float(C)))


POTENTIALS: dict[str, Callable[..., Potential]] = {
    "ideal_gas": _ideal_gas,
    "quadratic": lambda stiffness, linear=None, chart=None: QuadraticPotential(stiffness, linear, chart),
    "linear": lambda coefficients, chart=None: LinearPotential(coefficients, chart),
}


def make_potential(name: str, **params) -> Potential:
    try:
        factory = POTENTIALS[name]
    except KeyError:
        raise KeyError(f"unknown potential {name!r}; known: {sorted(POTENTIALS)}") from None
    return factory(**params)


@dataclass(frozen=True)
class EquilibriumState:
    q: tuple
    potential: Potential

    def __post_init__(self):
        self.potential.check_domain(list(self.q))

    @property
    def point(self) -> PhasePoint:
        return embed(self.potential, self.q)


def evaluate(phi: Potential, q) -> float:
    return phi(q)


def gradient(phi: Potential, q) -> np.ndarray:
    return phi.gradient(q)


def hessian(phi: Potential, q) -> np.ndarray:
    return phi.hessian(q)


def embed(phi: Potential, q) -> PhasePoint:
    """Lift ``q`` onto the equilibrium submanifold: ``p = grad Phi(q)``."""
    q = np.asarray(q, dtype=float)
    return PhasePoint(q, phi.gradient(q), phi.chart)


def onshell_residual(phi: Potential, x: PhasePoint) -> float:
    """Scaled max-norm distance ``|p_i - dPhi/dq_i| / max(1, |p_i|)``."""
    if x.chart != phi.chart:
        raise ChartMismatchError(f"point on chart {x.chart} cannot be checked against {phi.name} on {phi.chart}")
    g = phi.gradient(x.q)
    return float(np.max(np.abs(x.p - g) / np.maximum(1.0, np.abs(x.p))))


def ideal_gas_entropy(params: IdealGasParams, E, V, N):
    return IdealGasEnergy(params).entropy(E, V, N)


def _require_hydrostatic(x: PhasePoint) -> None:
    if x.chart != HYDROSTATIC:
        raise ChartMismatchError(f"expected hydrostatic chart {HYDROSTATIC}, got {x.chart}")


def eos_residual(x: PhasePoint, scaled: bool = True) -> float:
    """``P V - N T``, divided by ``max(1, |N T|)`` when ``scaled``."""
    _require_hydrostatic(x)
    S, V, N = x.q
    T, mP, _ = x.p
    raw = -mP * V - N * T
    return float(raw / max(1.0, abs(N * T))) if scaled else float(raw)


def euler_residual(x: PhasePoint, E: float, scaled: bool = True) -> float:
    """``E - (T S - P V + mu N)``, divided by ``max(1, |E|)`` when ``scaled``."""
    _require_hydrostatic(x)
    raw = E - float(x.p @ x.q)
    return float(raw / max(1.0, abs(E))) if scaled else float(raw)
