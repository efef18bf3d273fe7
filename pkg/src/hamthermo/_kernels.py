"""Compiled vector fields and step loops for the built-in ideal-gas Hamiltonians.

Set ``HAMTHERMO_DISABLE_NUMBA=1`` to run the same functions as plain
Python/numpy (also the path taken when numba is not importable). The
generic integrator in :mod:`hamthermo.dynamics` handles every other
Hamiltonian.
"""

from __future__ import annotations

import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

KINDS = {"isochoric": 0, "isothermal_isochoric": 1, "interacting": 2}
METHODS = {"implicit-midpoint": 0, "rk4": 1}

OK, NO_CONVERGENCE, BAD_STATE = 0, 1, 2

_disabled = os.environ.get("HAMTHERMO_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

if _disabled:
    USING_NUMBA = False
else:
    try:
        import numba

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba ships with the dev environment
        logger.warning("numba not importable, falling back to pure numpy kernels")
        USING_NUMBA = False


def _jit(fn):
    if USING_NUMBA:
        # no fastmath: results must match the interpreted path to round-off
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


@_jit
def field(kind, A, C, a, b, x, out):
    """Hamiltonian vector field at flat state ``x = (S, V, N, T, -P, mu)``.

    Returns False when the state leaves the domain (V <= 0, or N <= 0 for
    the ideal-gas energy) or a component is not finite.
    """
    S, V, N, T, mu = x[0], x[1], x[2], x[3], x[5]
    if not V > 0.0:
        return False
    if kind == 2:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
        out[4] = a * N * N / (V * V) + b * N**4 / V**4
        out[5] = -2.0 * a * N / V - (4.0 / 3.0) * b * N**3 / V**3
    else:
        if not N > 0.0:
            return False
        E = A * math.exp(S / (C * N)) * V ** (-1.0 / C) * N ** (1.0 + 1.0 / C)
        E_S = E / (C * N)
        E_V = -E / (C * V)
        E_N = E * (-S / (C * N * N) + (1.0 + 1.0 / C) / N)
        if kind == 0:
            g = (C + 1.0) / C
            out[0] = S
            out[1] = 0.0
            out[2] = N
            out[3] = -T + g * E_S
            out[4] = g * E_V
            out[5] = -mu + g * E_N
        else:
            out[0] = S - N
            out[1] = 0.0
            out[2] = N
            out[3] = -T + E_S
            out[4] = E_V
            out[5] = T - mu + E_N
    for i in range(6):
        if not math.isfinite(out[i]):
            return False
    return True


@_jit
def midpoint_step(kind, A, C, a, b, x, dt, tol, max_iter, out):
    """One implicit-midpoint step by fixed-point iteration; returns a status code."""
    n = x.size
    f = np.empty(n)
    mid = np.empty(n)
    if not field(kind, A, C, a, b, x, f):
        return BAD_STATE
    for i in range(n):
        out[i] = x[i] + dt * f[i]
    for _ in range(max_iter):
        for i in range(n):
            mid[i] = 0.5 * (x[i] + out[i])
        if not field(kind, A, C, a, b, mid, f):
            return BAD_STATE
        err = 0.0
        for i in range(n):
            new = x[i] + dt * f[i]
            d = abs(new - out[i]) / max(1.0, abs(new))
            if d > err:
                err = d
            out[i] = new
        if err <= tol:
            return OK
    return NO_CONVERGENCE


@_jit
def rk4_step(kind, A, C, a, b, x, dt, out):
    n = x.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    y = np.empty(n)
    if not field(kind, A, C, a, b, x, k1):
        return BAD_STATE
    for i in range(n):
        y[i] = x[i] + 0.5 * dt * k1[i]
    if not field(kind, A, C, a, b, y, k2):
        return BAD_STATE
    for i in range(n):
        y[i] = x[i] + 0.5 * dt * k2[i]
    if not field(kind, A, C, a, b, y, k3):
        return BAD_STATE
    for i in range(n):
        y[i] = x[i] + dt * k3[i]
    if not field(kind, A, C, a, b, y, k4):
        return BAD_STATE
    for i in range(n):
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return OK


@_jit
def run(kind, method, A, C, a, b, x0, dt, steps, tol, max_iter):
    """Integrate ``steps`` steps; returns ``(states, status, failed_step)``.

    On failure ``states`` is filled up to the last good sample and
    ``failed_step`` is the index of the step that failed (1-based).
    """
    n = x0.size
    xs = np.empty((steps + 1, n))
    for i in range(n):
        xs[0, i] = x0[i]
    out = np.empty(n)
    for k in range(steps):
        if method == 0:
            status = midpoint_step(kind, A, C, a, b, xs[k], dt, tol, max_iter, out)
        else:
            status = rk4_step(kind, A, C, a, b, xs[k], dt, out)
        if status == OK:
            for i in range(n):
                if not math.isfinite(out[i]):
                    status = BAD_STATE
        if status != OK:
            return xs, status, k + 1
        for i in range(n):
            xs[k + 1, i] = out[i]
    return xs, OK, 0

