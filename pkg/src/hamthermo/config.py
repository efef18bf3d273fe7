"""Scenario files: YAML documents validated into typed objects.

Unknown keys are errors; every message names the offending field path.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import yaml

from .dynamics import (
    GeneralProcessHamiltonian,
    IntegratorConfig,
    InteractingMapHamiltonian,
    IsochoricHamiltonian,
    IsothermalIsochoricHamiltonian,
    ProcessSpec,
    closed_form_interacting,
    closed_form_isochoric,
    closed_form_isothermal_isochoric,
)
from .errors import ConfigError
from .expr import ExpressionError
from .geometry import HYDROSTATIC, Hamiltonian, PhasePoint
from .potentials import IdealGasEnergy, IdealGasParams, Potential, embed, make_potential

__all__ = [
    "ScenarioConfig",
    "load_yaml",
    "parse_scenario",
    "load_scenario",
    "parse_system",
    "set_path",
    "HAMILTONIAN_VARIANTS",
]

HAMILTONIAN_VARIANTS = ("isochoric", "isothermal_isochoric", "general_process", "interacting")


def load_yaml(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", str(path)) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", str(path))
    return data


def _section(data: dict, key: str, allowed: set[str], required: bool = True, prefix: str = "") -> dict:
    path = f"{prefix}{key}"
    if key not in data:
        if required:
            raise ConfigError("missing section", path)
        return {}
    sec = data[key]
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError("must be a mapping", path)
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}; allowed {sorted(allowed)}", path)
    return sec


def _number(value: Any, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError("must be finite", path)
    if positive and value <= 0:
        raise ConfigError(f"must be > 0, got {value}", path)
    return value


def parse_system(data: dict) -> Potential:
    sec = _section(data, "system", {"potential", "A", "C", "stiffness", "linear", "coefficients", "chart"})
    name = sec.get("potential", "ideal_gas")
    params = {k: v for k, v in sec.items() if k != "potential"}
    if name == "ideal_gas":
        extra = set(params) - {"A", "C"}
        if extra:
            raise ConfigError(f"ideal_gas takes A and C only, got {sorted(extra)}", "system")
        A = _number(params.get("A", 1.0), "system.A", positive=True)
        C = _number(params.get("C", 1.5), "system.C", positive=True)
        return IdealGasEnergy(IdealGasParams(A, C))
    try:
        return make_potential(name, **params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]), "system.potential") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "system") from None


@dataclass
class ScenarioConfig:
    potential: IdealGasEnergy
    hamiltonian: Hamiltonian
    variant: str
    initial: PhasePoint
    initial_embedded: bool
    integrator: IntegratorConfig
    csv: str
    report: str
    compare_closed_form: bool
    raw: dict

    def closed_form(self) -> Callable | None:
        gas = self.potential.gas
        if self.variant == "isochoric":
            return lambda x0, t: closed_form_isochoric(x0, gas, t)
        if self.variant == "isothermal_isochoric":
            return lambda x0, t: closed_form_isothermal_isochoric(x0, gas, t)
        if self.variant == "interacting":
            H = self.hamiltonian
            return lambda x0, t: closed_form_interacting(x0, H.a, H.b, t)
        return None


_TOP = {"system", "hamiltonian", "initial", "integrator", "outputs", "compare_closed_form", "sweep"}


def parse_scenario(data: dict, allow_sweep: bool = False) -> ScenarioConfig:
    data = copy.deepcopy(data)
    unknown = set(data) - _TOP
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}", "<root>")
    if "sweep" in data and not allow_sweep:
        raise ConfigError("sweep section is only valid for the sweep command", "sweep")

    phi = parse_system(data)
    if not isinstance(phi, IdealGasEnergy):
        raise ConfigError("simulation needs the ideal_gas potential (hydrostatic chart)", "system.potential")

    hsec = _section(data, "hamiltonian", {"Lambda", *HAMILTONIAN_VARIANTS})
    Lam = _number(hsec.get("Lambda", 0.0), "hamiltonian.Lambda")
    chosen = [v for v in HAMILTONIAN_VARIANTS if v in hsec]
    if len(chosen) != 1:
        raise ConfigError(f"exactly one variant of {list(HAMILTONIAN_VARIANTS)} required, got {chosen}", "hamiltonian")
    variant = chosen[0]
    gas = phi.gas
    if variant == "isochoric":
        _section(hsec, variant, set(), prefix="hamiltonian.")
        H: Hamiltonian = IsochoricHamiltonian(gas, Lam)
    elif variant == "isothermal_isochoric":
        _section(hsec, variant, set(), prefix="hamiltonian.")
        H = IsothermalIsochoricHamiltonian(gas, Lam)
    elif variant == "interacting":
        sec = _section(hsec, variant, {"a", "b"}, prefix="hamiltonian.")
        if "a" not in sec:
            raise ConfigError("missing", "hamiltonian.interacting.a")
        a = _number(sec["a"], "hamiltonian.interacting.a")
        b = _number(sec.get("b", 0.0), "hamiltonian.interacting.b")
        if Lam != 0.0:
            raise ConfigError("the interacting map takes no Lambda", "hamiltonian.Lambda")
        H = InteractingMapHamiltonian(a, b)
    else:
        sec = _section(hsec, variant, {"X"}, prefix="hamiltonian.")
        X = sec.get("X")
        if not isinstance(X, dict):
            raise ConfigError("must map chart variables S, V, N to expressions", "hamiltonian.general_process.X")
        try:
            process = ProcessSpec.from_expressions({k: str(v) for k, v in X.items()}, HYDROSTATIC)
        except (ExpressionError, ValueError) as exc:
            raise ConfigError(str(exc), "hamiltonian.general_process.X") from None
        H = GeneralProcessHamiltonian(phi, process, Lam)

    isec = _section(data, "initial", {"q", "state"})
    if ("q" in isec) == ("state" in isec):
        raise ConfigError("give exactly one of q (embedded) or state (S, V, N, T, P, mu)", "initial")
    if "q" in isec:
        q = isec["q"]
        if not isinstance(q, list) or len(q) != 3:
            raise ConfigError("expected [S, V, N]", "initial.q")
        q = [_number(v, f"initial.q[{i}]") for i, v in enumerate(q)]
        try:
            x0 = embed(phi, q)
        except ValueError as exc:
            raise ConfigError(str(exc), "initial.q") from None
        embedded = True
    else:
        st = isec["state"]
        names = ("S", "V", "N", "T", "P", "mu")
        if isinstance(st, dict):
            if set(st) != set(names):
                raise ConfigError(f"expected keys {list(names)}", "initial.state")
            vals = [_number(st[k], f"initial.state.{k}") for k in names]
        elif isinstance(st, list) and len(st) == 6:
            vals = [_number(v, f"initial.state[{i}]") for i, v in enumerate(st)]
        else:
            raise ConfigError("expected a mapping or a list of six numbers", "initial.state")
        x0 = PhasePoint.hydrostatic(*vals)
        try:
            phi.check_domain(list(x0.q))
        except ValueError as exc:
            raise ConfigError(str(exc), "initial.state") from None
        embedded = False

    gsec = _section(data, "integrator", {"method", "dt", "steps", "t_end", "tol", "max_iter"})
    method = gsec.get("method", "implicit-midpoint")
    if method not in ("implicit-midpoint", "rk4"):
        raise ConfigError(f"unknown method {method!r}", "integrator.method")
    if "dt" not in gsec:
        raise ConfigError("missing", "integrator.dt")
    dt = _number(gsec["dt"], "integrator.dt", positive=True)
    if ("steps" in gsec) == ("t_end" in gsec):
        raise ConfigError("give exactly one of steps or t_end", "integrator.steps")
    if "steps" in gsec:
        steps = gsec["steps"]
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ConfigError(f"must be an integer >= 1, got {steps!r}", "integrator.steps")
    else:
        t_end = _number(gsec["t_end"], "integrator.t_end", positive=True)
        steps = int(round(t_end / dt))
        if steps < 1 or abs(steps * dt - t_end) > 1e-9 * max(1.0, t_end):
            raise ConfigError(f"t_end={t_end} is not a whole number of steps of dt={dt}", "integrator.t_end")
    tol = _number(gsec.get("tol", 1e-13), "integrator.tol", positive=True)
    max_iter = gsec.get("max_iter", 100)
    if isinstance(max_iter, bool) or not isinstance(max_iter, int) or max_iter < 1:
        raise ConfigError("must be an integer >= 1", "integrator.max_iter")
    cfg = IntegratorConfig(method, dt, steps, tol, max_iter)

    osec = _section(data, "outputs", {"csv", "report"}, required=False)
    compare = data.get("compare_closed_form", True)
    if not isinstance(compare, bool):
        raise ConfigError("must be true or false", "compare_closed_form")

    return ScenarioConfig(
        potential=phi,
        hamiltonian=H,
        variant=variant,
        initial=x0,
        initial_embedded=embedded,
        integrator=cfg,
        csv=str(osec.get("csv", "trajectory.csv")),
        report=str(osec.get("report", "report.txt")),
        compare_closed_form=compare,
        raw=data,
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(load_yaml(path))


def set_path(data: dict, dotted: str, value: Any) -> None:
    """Assign ``value`` at a dotted key path, creating intermediate mappings."""
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError("path crosses a non-mapping value", dotted)
        node = nxt
    node[keys[-1]] = value
