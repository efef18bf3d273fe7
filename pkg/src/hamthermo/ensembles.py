"""Partial Legendre transforms between equilibrium submanifolds.

Transforming a potential ``Phi(q)`` over the index set ``K`` gives

    Psi(q_J, p_K) = Phi(q) - sum_{k in K} p_k q_k,   with  p_K = dPhi/dq_K,

so ``dPsi/dq_J = p_J`` and ``dPsi/dp_K = -q_K``. The inner relation is
inverted numerically by damped Newton iteration on ``q_K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .dynamics import ProcessSpec
from .errors import ConvergenceError, DomainError, RegularityError
from .geometry import HYDROSTATIC, HYDROSTATIC_MOMENTA
from .potentials import Potential

__all__ = [
    "LegendreSpec",
    "TransformedPotential",
    "legendre_eval",
    "regularity_indicator",
    "hydrostatic_preset",
    "compose",
    "pushforward_check",
    "REGULARITY_THRESHOLD",
    "PRESETS",
]

REGULARITY_THRESHOLD = 1e-8

PRESETS = {
    "helmholtz": (0,),
    "enthalpy": (1,),
    "gibbs": (0, 1),
}


@dataclass(frozen=True)
class LegendreSpec:
    """Split of ``{0, ..., n-1}`` into kept indices ``J`` and transformed indices ``K``."""

    n: int
    K: tuple[int, ...]

    def __post_init__(self):
        K = tuple(sorted(int(k) for k in self.K))
        if len(set(K)) != len(K):
            raise ValueError(f"duplicate transformed indices in {self.K}")
        if any(k < 0 or k >= self.n for k in K):
            raise ValueError(f"transformed indices {self.K} out of range for n={self.n}")
        object.__setattr__(self, "K", K)

    @property
    def J(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if i not in self.K)


def hydrostatic_preset(name: str) -> LegendreSpec:
    """Ensemble presets on the ``(S, V, N)`` chart."""
    try:
        return LegendreSpec(3, PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


_NAMED_CONJUGATES = {
    **dict(zip(HYDROSTATIC, HYDROSTATIC_MOMENTA)),
    # transforming back: the conjugate of a momentum slot is minus its position
    **{m: f"-{q}" for q, m in zip(HYDROSTATIC, HYDROSTATIC_MOMENTA)},
}


def _conjugate_name(chart: tuple[str, ...], k: int) -> str:
    return _NAMED_CONJUGATES.get(chart[k], f"p_{chart[k]}")


def _solve_small(A, b):
    """Gaussian elimination that works on dual-valued entries."""
    n = len(b)
    M = [list(A[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(ad.primal(M[r][col])))
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] = M[r][c] - f * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n]
        for c in range(r + 1, n):
            acc = acc - M[r][c] * x[c]
        x[r] = acc / M[r][r]
    return x


class TransformedPotential(Potential):
    """``Psi`` as a potential in the mixed variables ``z``.

    ``z[j] = q_j`` for ``j`` in ``J`` and ``z[k] = p_k`` for ``k`` in ``K``,
    so indices keep their positions. Conjugates of ``z`` are
    ``(p_J, -q_K)``; transforming again over ``K`` therefore recovers ``Phi``.
    """

    def __init__(
        self,
        source: Potential,
        spec: LegendreSpec,
        guess: Sequence[float] | None = None,
        tol: float = 1e-12,
        max_iter: int = 50,
    ):
        if spec.n != source.n:
            raise ValueError(f"spec arity {spec.n} does not match potential arity {source.n}")
        chart = tuple(_conjugate_name(source.chart, i) if i in spec.K else source.chart[i] for i in range(source.n))
        super().__init__(source.n, chart, {"K": list(spec.K)})
        self.name = f"legendre[{','.join(source.chart[k] for k in spec.K)}]({source.name})"
        self.source = source
        self.spec = spec
        self.guess = [1.0] * len(spec.K) if guess is None else [float(g) for g in guess]
        if len(self.guess) != len(spec.K):
            raise ValueError("guess must have one entry per transformed index")
        self.tol = tol
        self.max_iter = max_iter

    # -- assembling ------------------------------------------------------
    def _full_q(self, z, qK):
        q = list(z)
        for k, v in zip(self.spec.K, qK):
            q[k] = v
        return q

    def _pK(self, z):
        return [z[k] for k in self.spec.K]

    def check_domain(self, z) -> None:
        Potential.check_domain(self, z)

    # -- the inner solve -------------------------------------------------
    def _block(self, q):
        K = list(self.spec.K)
        return np.asarray(self.source.hessian(q), dtype=float)[np.ix_(K, K)]

    def _regular_block(self, q) -> np.ndarray:
        block = self._block(q)
        sv = np.linalg.svd(block, compute_uv=False)
        if not np.all(np.isfinite(sv)) or sv.min() <= 1e-14 * max(1.0, sv.max()):
            raise RegularityError(
                f"Hessian block over {self.spec.K} is singular (smallest singular value {sv.min():.3e})",
                float(sv.min()),
            )
        return block

    def solve(self, z, guess: Sequence[float] | None = None) -> np.ndarray:
        """Recover ``q_K`` from ``z = (q_J, p_K)`` (floats only)."""
        K = list(self.spec.K)
        if not K:
            return np.zeros(0)
        z = [ad.primal(v) for v in z]
        pK = np.array(self._pK(z), dtype=float)
        scale = np.maximum(1.0, np.abs(pK))
        qK = np.array(self.guess if guess is None else guess, dtype=float)

        def residual(qk):
            q = self._full_q(z, qk)
            return (np.asarray(self.source.gradient(q), dtype=float)[K] - pK), q

        r, q = residual(qK)
        rn = np.max(np.abs(r) / scale)
        for _ in range(self.max_iter + 1):
            # a converged point on a singular block is still not invertible
            block = self._regular_block(q)
            if rn <= self.tol:
                return qK
            step = np.linalg.solve(block, -r)
            t = 1.0
            while True:
                trial = qK + t * step
                try:
                    r_new, q_new = residual(trial)
                    rn_new = np.max(np.abs(r_new) / scale)
                    ok = np.isfinite(rn_new) and rn_new < rn
                except (DomainError, RegularityError, ConvergenceError):
                    # trial left the region where the source (or its own inner solve) is defined
                    ok = False
                if ok:
                    break
                t *= 0.5
                if t < 1e-10:
                    raise ConvergenceError(f"line search stalled with residual {rn:.3e}", float(rn))
            qK, r, q, rn = trial, r_new, q_new, rn_new
        raise ConvergenceError(
            f"Newton did not converge in {self.max_iter} iterations (residual {rn:.3e})", float(rn)
        )

    def _qK_dual(self, z, qK):
        # Newton corrections in dual arithmetic carry exact derivatives of q_K(z)
        K = list(self.spec.K)
        qK = list(qK)
        pK = self._pK(z)
        for _ in range(2):
            q = self._full_q(z, qK)
            g = self.source.gradient(q)
            h = self.source.hessian(q)
            r = [g[k] - pk for k, pk in zip(K, pK)]
            block = [[h[a][b] for b in K] for a in K]
            d = _solve_small(block, r)
            qK = [a - b for a, b in zip(qK, d)]
        return qK

    def recover(self, z, guess=None):
        """``q_K(z)``; dual-valued when ``z`` carries duals."""
        qK = self.solve(z, guess)
        if any(ad.is_dual(v) for v in z) and len(qK):
            return self._qK_dual(list(z), qK)
        return list(qK)

    # -- potential interface ---------------------------------------------
    def evaluate(self, z, guess=None):
        """``(Psi, q_K)`` at ``z``."""
        z = list(z)
        qK = self.recover(z, guess)
        q = self._full_q(z, qK)
        psi = self.source.value(q)
        for k, v in zip(self.spec.K, qK):
            psi = psi - z[k] * v
        return psi, qK

    def value(self, z):
        return self.evaluate(z)[0]

    def gradient(self, z) -> np.ndarray:
        z = list(z)
        if any(ad.is_dual(v) for v in z):
            return self.dual_gradient(z)
        qK = self.recover(z)
        q = self._full_q(z, qK)
        g = np.asarray(self.source.gradient(q), dtype=float).copy()
        for k, v in zip(self.spec.K, qK):
            g[k] = -v
        return g

    def hessian(self, z) -> np.ndarray:
        z = list(z)
        if any(ad.is_dual(v) for v in z):
            return self.dual_hessian(z)
        J, K = list(self.spec.J), list(self.spec.K)
        q = self._full_q(z, self.recover(z))
        h = np.asarray(self.source.hessian(q), dtype=float)
        out = h.copy()
        if K:
            inv = np.linalg.inv(h[np.ix_(K, K)])
            hJK = h[np.ix_(J, K)]
            out[np.ix_(J, J)] = h[np.ix_(J, J)] - hJK @ inv @ hJK.T
            out[np.ix_(J, K)] = hJK @ inv
            out[np.ix_(K, J)] = (hJK @ inv).T
            out[np.ix_(K, K)] = -inv
        return out


def legendre_eval(
    phi: Potential,
    spec: LegendreSpec,
    q_J: Sequence[float],
    p_K: Sequence[float],
    guess: Sequence[float] | None = None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[float, np.ndarray]:
    """Evaluate ``Psi(q_J, p_K)`` and the recovered ``q_K``."""
    if len(q_J) != len(spec.J) or len(p_K) != len(spec.K):
        raise ValueError(f"expected {len(spec.J)} kept and {len(spec.K)} conjugate values")
    z = [0.0] * spec.n
    for j, v in zip(spec.J, q_J):
        z[j] = float(v)
    for k, v in zip(spec.K, p_K):
        z[k] = float(v)
    psi_pot = TransformedPotential(phi, spec, guess, tol, max_iter)
    psi, qK = psi_pot.evaluate(z)
    return float(psi), np.array(qK, dtype=float)


def compose(phi: Potential, specs: Sequence[LegendreSpec], guesses: Sequence | None = None) -> Potential:
    """Chain transforms, innermost first; ``compose(E, [enthalpy, helmholtz])`` is Gibbs."""
    out = phi
    for i, spec in enumerate(specs):
        out = TransformedPotential(out, spec, None if guesses is None else guesses[i])
    return out


def regularity_indicator(phi: Potential, spec: LegendreSpec, q: Sequence[float]) -> float:
    """Smallest singular value of the ``K x K`` Hessian block of ``phi`` at ``q``."""
    K = list(spec.K)
    if not K:
        return math.inf
    h = np.asarray(phi.hessian(list(q)), dtype=float)[np.ix_(K, K)]
    return float(np.linalg.svd(h, compute_uv=False).min())


def _rk4_path(X: ProcessSpec, q0: np.ndarray, dt: float, steps: int) -> np.ndarray:
    out = np.empty((steps + 1, q0.size))
    out[0] = q = q0
    for i in range(steps):
        k1 = X(q)
        k2 = X(q + 0.5 * dt * k1)
        k3 = X(q + 0.5 * dt * k2)
        k4 = X(q + dt * k3)
        q = q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = q
    return out


def pushforward_check(
    phi: Potential,
    X: ProcessSpec,
    spec: LegendreSpec,
    q0: Sequence[float],
    t_end: float,
    dt: float,
    include_mixed: bool = True,
) -> float:
    """Compare the mapped trajectory's velocity with the pushed-forward process field.

    The process ``dq/dt = X(q)`` is integrated on the equilibrium chart and
    every sample is sent to ``z = (q_J, p_K = dPhi/dq_K)``. The central
    difference velocity of ``z`` is compared with the tangent map applied
    to ``X``: ``dz_J = X_J`` and ``dz_k = sum_i Phi_{k i} X_i``. With
    ``include_mixed=False`` the sum runs over ``K`` only, dropping the
    ``Phi_{k j} X_j`` terms; that variant is kept for comparison and is
    wrong whenever ``Phi`` couples ``J`` and ``K``.

    Returns the largest componentwise defect, scaled by ``max(1, |v|)``.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("t_end and dt must be positive")
    steps = int(round(t_end / dt))
    if steps < 2:
        raise ValueError("need at least two steps for central differences")
    K = list(spec.K)
    path = _rk4_path(X, np.asarray(q0, dtype=float), dt, steps)

    z = np.empty_like(path)
    v = np.empty_like(path)
    for i, q in enumerate(path):
        h = np.asarray(phi.hessian(q), dtype=float)
        if K:
            sv = np.linalg.svd(h[np.ix_(K, K)], compute_uv=False).min()
            if sv < REGULARITY_THRESHOLD:
                raise RegularityError(f"Legendre map is singular at sample {i} (indicator {sv:.3e})", float(sv), i)
        g = np.asarray(phi.gradient(q), dtype=float)
        xq = X(q)
        z[i] = q
        v[i] = xq
        for k in K:
            z[i, k] = g[k]
            cols = range(phi.n) if include_mixed else K
            v[i, k] = sum(h[k, c] * xq[c] for c in cols)

    fd = (z[2:] - z[:-2]) / (2.0 * dt)
    ref = v[1:-1]
    return float(np.max(np.abs(fd - ref) / np.maximum(1.0, np.abs(ref))))
