"""Executable invariant suites behind ``hamthermo check``.

Each check measures a worst-case value over seeded random samples and
compares it with a fixed threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from . import dynamics
from .dynamics import (
    GeneralProcessHamiltonian,
    IntegratorConfig,
    InteractingMapHamiltonian,
    IsochoricHamiltonian,
    IsothermalIsochoricHamiltonian,
    ProcessSpec,
    closed_form_isochoric,
    closed_form_isothermal_isochoric,
    diagnose,
    integrate,
    step,
)
from .ensembles import PRESETS, TransformedPotential, compose, hydrostatic_preset, pushforward_check, regularity_indicator
from .errors import RegularityError
from .geometry import HYDROSTATIC, PhasePoint, ShiftedHamiltonian, TangentVector, canonical_pairing, energy_rate, symplectic_defect
from .potentials import IdealGasEnergy, IdealGasParams, LinearPotential, embed, onshell_residual

__all__ = ["CheckResult", "SUITES", "run_suite", "format_results"]


@dataclass
class CheckResult:
    name: str
    worst: float
    threshold: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return f"{tag}  {self.name:<40s} worst={self.worst:.3e}  threshold={self.threshold:.1e}{extra}"


def _le(name, worst, threshold, note=""):
    worst = float(worst)
    return CheckResult(name, worst, threshold, bool(math.isfinite(worst) and worst <= threshold), note)


GAS = IdealGasParams(1.0, 1.5)


def random_q(rng: np.random.Generator) -> list[float]:
    """A point of the ideal-gas domain with moderate magnitudes."""
    return [rng.uniform(-1.0, 1.0), rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0)]


def random_process(rng: np.random.Generator) -> ProcessSpec:
    """Random smooth process field written in the expression language."""
    exprs = []
    for _ in range(3):
        c = rng.uniform(-1.0, 1.0, size=5)
        exprs.append(f"{c[0]:.6f} + {c[1]:.6f}*S + {c[2]:.6f}*V*N + {c[3]:.6f}*N^2 + {c[4]:.6f}*exp(S/(V+N))")
    return ProcessSpec.from_expressions(exprs, HYDROSTATIC)


def _hamiltonians(rng):
    yield IsochoricHamiltonian(GAS, 0.3)
    yield IsothermalIsochoricHamiltonian(GAS, -0.7)
    yield InteractingMapHamiltonian(0.1, -0.05)
    yield GeneralProcessHamiltonian(IdealGasEnergy(GAS), random_process(rng), 0.2)


def _random_phase_point(rng) -> PhasePoint:
    q = random_q(rng)
    p = embed(IdealGasEnergy(GAS), q).p + rng.normal(scale=0.2, size=3)
    return PhasePoint(q, p, HYDROSTATIC)


# -- geometry --------------------------------------------------------------


def check_geometry(rng) -> list[CheckResult]:
    worst = 0.0
    for _ in range(100):
        u = TangentVector(rng.normal(size=3), rng.normal(size=3))
        v = TangentVector(rng.normal(size=3), rng.normal(size=3))
        a = canonical_pairing(u, v)
        worst = max(worst, abs(a + canonical_pairing(v, u)) / max(1.0, abs(a)))
    out = [_le("geometry.pairing_antisymmetry", worst, 1e-12)]

    stat = grad = 0.0
    for H in _hamiltonians(rng):
        for _ in range(25):
            x = _random_phase_point(rng)
            rate, norm = energy_rate(H, x)
            stat = max(stat, abs(rate) / max(norm * norm, 1e-300))
            gq, gp = H.gradient(x.q, x.p)
            exact = np.concatenate([gq, gp]).astype(float)
            fd = ad.fd_gradient(lambda z: H(PhasePoint.from_array(z, HYDROSTATIC)), x.x)
            grad = max(grad, np.max(np.abs(fd - exact)) / np.max(np.abs(exact)))
    out.append(_le("geometry.energy_stationarity", stat, 1e-10, "|dH/dt| / |grad H|^2"))
    out.append(_le("geometry.hamiltonian_gradient_vs_fd", grad, 1e-6))
    return out


# -- potentials ------------------------------------------------------------


def check_potentials(rng) -> list[CheckResult]:
    phi = IdealGasEnergy(GAS)
    homog = euler = sym = trip = onshell = fd = dual = 0.0
    for _ in range(100):
        q = random_q(rng)
        lam = rng.uniform(0.2, 5.0)
        E = phi(q)
        homog = max(homog, abs(phi([lam * v for v in q]) - lam * E) / abs(lam * E))
        g = phi.gradient(q)
        euler = max(euler, abs(E - float(np.dot(q, g))) / abs(E))
        h = phi.dual_hessian(q)
        sym = max(sym, np.max(np.abs(h - h.T)) / np.max(np.abs(h)))
        S_back = phi.entropy(E, q[1], q[2])
        trip = max(trip, abs(phi([S_back, q[1], q[2]]) - E) / abs(E))
        onshell = max(onshell, onshell_residual(phi, embed(phi, q)))
        fd = max(fd, np.max(np.abs(ad.fd_gradient(phi, q) - g)) / np.max(np.abs(g)))
        dual = max(dual, np.max(np.abs(phi.dual_gradient(q) - g)) / np.max(np.abs(g)))
    return [
        _le("potentials.homogeneity", homog, 1e-12),
        _le("potentials.euler_identity", euler, 1e-10),
        _le("potentials.hessian_symmetry", sym, 1e-10),
        _le("potentials.entropy_round_trip", trip, 1e-12),
        _le("potentials.embed_onshell", onshell, 1e-12),
        _le("potentials.gradient_vs_fd", fd, 1e-6),
        _le("potentials.gradient_vs_dual", dual, 1e-10),
    ]


# -- ensembles -------------------------------------------------------------


def _mixed_point(phi, spec, q):
    g = phi.gradient(q)
    return [g[i] if i in spec.K else q[i] for i in range(3)]


def check_ensembles(rng) -> list[CheckResult]:
    phi = IdealGasEnergy(GAS)
    invol = rel = comp = 0.0
    for _ in range(30):
        q = random_q(rng)
        E = phi(q)
        for name in ("helmholtz", "enthalpy", "gibbs"):
            spec = hydrostatic_preset(name)
            psi = TransformedPotential(phi, spec, guess=[1.05 * q[k] + 0.05 for k in spec.K])
            z = _mixed_point(phi, spec, q)
            val, qK = psi.evaluate(z)
            # transform back over K with conjugate -q_K
            back = TransformedPotential(psi, spec, guess=[1.05 * z[k] for k in spec.K])
            w = list(z)
            for k, v in zip(spec.K, qK):
                w[k] = -v
            val2, pK = back.evaluate(w)
            invol = max(invol, abs(val2 - E) / max(1.0, abs(E)))
            invol = max(invol, max(abs(a - z[k]) / max(1.0, abs(z[k])) for k, a in zip(spec.K, pK)))
            # gradient relations through the implicit solve, by dual numbers
            dg = ad.gradient(psi.value, z)
            g = phi.gradient(q)
            expect = [-qK[list(spec.K).index(i)] if i in spec.K else g[i] for i in range(3)]
            rel = max(rel, max(abs(a - b) / max(1.0, abs(b)) for a, b in zip(dg, expect)))
        z = _mixed_point(phi, hydrostatic_preset("gibbs"), q)
        direct = TransformedPotential(phi, hydrostatic_preset("gibbs"), guess=[1.05 * q[0] + 0.05, 1.05 * q[1]]).value(z)
        for order in (("enthalpy", "helmholtz"), ("helmholtz", "enthalpy")):
            guesses = [[1.05 * q[PRESETS[o][0]] + 0.05] for o in order]
            chain = compose(phi, [hydrostatic_preset(o) for o in order], guesses)
            comp = max(comp, abs(chain.value(z) - direct) / max(1.0, abs(direct)))

    reg = abs(regularity_indicator(phi, hydrostatic_preset("helmholtz"), [0.0, 1.0, 1.0]) - 4.0 / 9.0)
    X = ProcessSpec.from_expressions({"S": "S", "V": "0", "N": "N"}, HYDROSTATIC)
    push = pushforward_check(phi, X, hydrostatic_preset("helmholtz"), [0.5, 1.0, 1.0], 0.5, 1e-3)
    try:
        pushforward_check(LinearPotential([1.0, 1.0, 1.0], HYDROSTATIC), X, hydrostatic_preset("helmholtz"), [0.5, 1.0, 1.0], 0.5, 1e-3)
        singular = CheckResult("ensembles.singular_potential_rejected", 1.0, 0.0, False, "no regularity error")
    except RegularityError:
        singular = CheckResult("ensembles.singular_potential_rejected", 0.0, 0.0, True)
    return [
        _le("ensembles.involution", invol, 1e-10),
        _le("ensembles.gradient_relations", rel, 1e-8),
        _le("ensembles.gibbs_composition", comp, 1e-10),
        _le("ensembles.regularity_helmholtz", reg, 1e-10, "indicator at (0,1,1) vs 4/9"),
        _le("ensembles.pushforward_defect", push, 1e-4),
        singular,
    ]


# -- dynamics --------------------------------------------------------------


def check_dynamics(rng) -> list[CheckResult]:
    phi = IdealGasEnergy(GAS)
    level = 0.0
    hams = [IsochoricHamiltonian(GAS, 0.0), IsothermalIsochoricHamiltonian(GAS, 0.0)]
    hams += [GeneralProcessHamiltonian(phi, random_process(rng), 0.0) for _ in range(10)]
    for H in hams:
        for _ in range(100):
            Lam = rng.uniform(-10.0, 10.0)
            Hs = ShiftedHamiltonian(H, Lam)
            level = max(level, abs(Hs(embed(phi, random_q(rng))) - Lam) / max(1.0, abs(Lam)))
    out = [_le("dynamics.level_set", level, 1e-12)]

    x0 = embed(phi, [0.5, 1.0, 1.0])
    errs = []
    dts = (4e-3, 2e-3, 1e-3)
    for dt in dts:
        tr = integrate(IsochoricHamiltonian(GAS), x0, IntegratorConfig(dt=dt, steps=int(round(1.0 / dt))))
        errs.append(diagnose(tr, phi, lambda x, t: closed_form_isochoric(x, GAS, t)).closed_form_max)
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    out.append(_le("dynamics.convergence_order", abs(order - 2.0), 0.2, f"order={order:.3f}"))

    H = IsochoricHamiltonian(GAS)
    defects = {}
    for method in dynamics.METHODS:
        cfg = IntegratorConfig(method=method, dt=0.1, steps=1)
        defects[method] = symplectic_defect(lambda x, c=cfg: step(H, x, c), x0, 1e-5)
    symp = [m for m in dynamics.METHODS if m in dynamics.SYMPLECTIC_METHODS]
    other = [m for m in dynamics.METHODS if m not in dynamics.SYMPLECTIC_METHODS]
    out.append(_le("dynamics.symplectic_defect", max(defects[m] for m in symp), 1e-5))
    separated = bool(other) and min(defects[m] for m in other) > max(defects[m] for m in symp)
    note = ", ".join(f"{m}={d:.2e}" for m, d in defects.items())
    out.append(CheckResult("dynamics.symplectic_vs_rk4", max(defects[m] for m in symp), min((defects[m] for m in other), default=0.0), separated, note))

    cf = 0.0
    for Hc, ref in ((IsochoricHamiltonian(GAS), closed_form_isochoric), (IsothermalIsochoricHamiltonian(GAS), closed_form_isothermal_isochoric)):
        tr = integrate(Hc, x0, IntegratorConfig(dt=1e-3, steps=1000))
        cf = max(cf, diagnose(tr, phi, lambda x, t, r=ref: r(x, GAS, t)).closed_form_max)
    out.append(_le("dynamics.closed_form_match", cf, 1e-5))

    cfg = IntegratorConfig(dt=1e-2, steps=50)
    a = integrate(H, x0, cfg).states
    b = integrate(ShiftedHamiltonian(H, 3.25), x0, cfg).states
    out.append(_le("dynamics.lambda_shift", np.max(np.abs(a - b)), 0.0))

    Hi = InteractingMapHamiltonian(0.1, -0.05)
    tr = integrate(Hi, x0, IntegratorConfig(dt=1e-3, steps=1000))
    P = -tr.states[:, 4]
    mu = tr.states[:, 5]
    slope = Hi.pressure_slope(1.0, 1.0)
    dev = max(
        np.max(np.abs(P - (P[0] + slope * tr.t))),
        np.max(np.abs(mu - (mu[0] - (2 * 0.1 - (4.0 / 3.0) * 0.05) * tr.t))),
        np.max(np.abs(tr.states[:, :4] - tr.states[0, :4])),
    )
    out.append(_le("dynamics.interacting_affine", dev, 1e-12))
    return out


SUITES: dict[str, Callable] = {
    "geometry": check_geometry,
    "potentials": check_potentials,
    "ensembles": check_ensembles,
    "dynamics": check_dynamics,
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    results = []
    order = list(SUITES)
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown suite {n!r}; known: {sorted(SUITES)} or 'all'")
        results.extend(SUITES[n](np.random.default_rng([seed, order.index(n)])))
    return results


def format_results(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)
