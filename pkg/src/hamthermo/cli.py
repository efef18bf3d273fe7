"""Command-line front end: ``simulate``, ``check``, ``legendre``, ``sweep``.

Exit codes: 0 success, 1 failed invariant check, 2 configuration error,
3 integration or solver failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .checks import SUITES, format_results, run_suite
from .config import ScenarioConfig, load_yaml, parse_scenario, parse_system, set_path
from .dynamics import Trajectory, diagnose, integrate, sample_table
from .ensembles import (
    REGULARITY_THRESHOLD,
    LegendreSpec,
    TransformedPotential,
    hydrostatic_preset,
    regularity_indicator,
)
from .errors import ConfigError, ConvergenceError, HamThermoError, RegularityError, StepError
from .geometry import HYDROSTATIC
from .potentials import onshell_residual

logger = logging.getLogger("hamthermo")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

CSV_HEADER = ["t", "S", "V", "N", "T", "P", "mu", "E", "H", "onshell", "eos", "euler"]


def _fmt(v: float) -> str:
    # shortest repr that round-trips exactly
    return repr(float(v))


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def out(self, msg: str = ""):
        if not self.quiet:
            print(msg)

    def err(self, msg: str):
        print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def write_trajectory_csv(path: Path, traj: Trajectory, cols: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(len(traj)):
            S, V, N, T, mP, mu = traj.states[i]
            w.writerow(
                [_fmt(v) for v in (traj.t[i], S, V, N, T, -mP, mu)]
                + [_fmt(cols[k][i]) for k in ("E", "H", "onshell", "eos", "euler")]
            )


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body])
    return {name: data[:, j] for j, name in enumerate(header)}


def scenario_warnings(cfg: ScenarioConfig, traj: Trajectory | None = None) -> list[str]:
    warnings = []
    if not cfg.initial_embedded:
        res = onshell_residual(cfg.potential, cfg.initial)
        if res > 1e-10:
            warnings.append(f"initial state is off the equilibrium set (onshell residual {res:.3e})")
    if traj is not None and cfg.variant == "interacting":
        P = -traj.states[:, 4]
        if np.any(np.sign(P) != np.sign(P[0])):
            i = int(np.argmax(np.sign(P) != np.sign(P[0])))
            warnings.append(f"pressure changes sign near t={traj.t[i]:.6g}")
    return warnings


def run_scenario(cfg: ScenarioConfig, out_dir: Path) -> tuple[Trajectory, object, list[str]]:
    """Integrate, write CSV and report; raises :class:`StepError` on integration failure."""
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = integrate(cfg.hamiltonian, cfg.initial, cfg.integrator)
    closed = cfg.closed_form() if cfg.compare_closed_form else None
    report = diagnose(traj, cfg.potential, closed)
    cols = sample_table(traj, cfg.potential)
    write_trajectory_csv(out_dir / cfg.csv, traj, cols)
    warnings = scenario_warnings(cfg, traj)
    for w in warnings:
        logger.warning(w)
    lines = [
        "hamthermo simulation report",
        f"potential        : {cfg.potential.describe()}",
        f"hamiltonian      : {cfg.hamiltonian.describe()}",
        f"integrator       : {cfg.integrator.method}, dt={cfg.integrator.dt}, steps={cfg.integrator.steps}",
        f"affine parameter : t in [0, {traj.t[-1]:.6g}]",
        f"backend          : {traj.provenance.get('backend')}",
        f"initial (S,V,N,T,P,mu): {[round(float(v), 12) for v in cfg.initial.as_hydrostatic().values()]}",
        "",
        "diagnostics (maxima over the trajectory, scaled):",
        report.format(),
    ]
    if warnings:
        lines += ["", "warnings:"] + [f"  - {w}" for w in warnings]
    (out_dir / cfg.report).write_text("\n".join(lines) + "\n")
    return traj, report, warnings


def cmd_simulate(args, console: _Console) -> int:
    try:
        cfg = parse_scenario(load_yaml(args.config))
    except (ConfigError, ValueError) as exc:
        console.err(f"config error: {exc}")
        return EXIT_CONFIG
    out_dir = Path(args.out_dir or ".")
    try:
        traj, report, _ = run_scenario(cfg, out_dir)
    except StepError as exc:
        console.err(f"integration error: {exc}")
        return EXIT_RUNTIME
    except HamThermoError as exc:
        console.err(f"integration error: {exc}")
        return EXIT_RUNTIME
    console.out(f"wrote {out_dir / cfg.csv} ({len(traj)} samples) and {out_dir / cfg.report}")
    console.out(report.format())
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args, console: _Console) -> int:
    results = run_suite(args.suite, seed=args.seed)
    text = format_results(results)
    console.out(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"check_{args.suite}.txt").write_text(text + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# legendre
# ---------------------------------------------------------------------------


def _user_name(name: str) -> tuple[str, float]:
    """Column name shown to users and the sign relating it to the stored variable."""
    return (name[1:], -1.0) if name.startswith("-") else (name, 1.0)


def _resolve_K(phi, value, path: str) -> tuple[int, ...]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of coordinate names or indices", path)
    out = []
    for v in value:
        if isinstance(v, str):
            if v not in phi.chart:
                raise ConfigError(f"unknown coordinate {v!r}; chart is {list(phi.chart)}", path)
            out.append(phi.chart.index(v))
        elif isinstance(v, int) and not isinstance(v, bool):
            out.append(v)
        else:
            raise ConfigError(f"bad entry {v!r}", path)
    return tuple(out)


def build_transform(data: dict):
    """Potential, stacked transform, and column names from a legendre config."""
    allowed = {"system", "transform", "points", "grid", "outputs"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}", "<root>")
    phi = parse_system(data)
    tsec = data.get("transform")
    if not isinstance(tsec, dict):
        raise ConfigError("missing or not a mapping", "transform")
    bad = set(tsec) - {"preset", "K", "guess"}
    if bad:
        raise ConfigError(f"unknown keys {sorted(bad)}", "transform")
    if ("preset" in tsec) == ("K" in tsec):
        raise ConfigError("give exactly one of preset or K", "transform")
    specs: list[LegendreSpec] = []
    if "preset" in tsec:
        names = tsec["preset"] if isinstance(tsec["preset"], list) else [tsec["preset"]]
        if phi.chart != HYDROSTATIC:
            raise ConfigError("presets need the hydrostatic chart (S, V, N)", "transform.preset")
        for name in names:
            try:
                specs.append(hydrostatic_preset(str(name)))
            except KeyError as exc:
                raise ConfigError(str(exc.args[0]), "transform.preset") from None
    else:
        try:
            specs.append(LegendreSpec(phi.n, _resolve_K(phi, tsec["K"], "transform.K")))
        except ValueError as exc:
            raise ConfigError(str(exc), "transform.K") from None
    guesses = tsec.get("guess")
    if guesses is not None:
        if len(specs) == 1 and guesses and not isinstance(guesses[0], list):
            guesses = [guesses]
        if len(guesses) != len(specs) or any(len(g) != len(s.K) for g, s in zip(guesses, specs)):
            raise ConfigError("one guess list per stage, one value per transformed index", "transform.guess")
    pot = phi
    for i, spec in enumerate(specs):
        guess = None if guesses is None else guesses[i]
        if guess is None and phi.chart == HYDROSTATIC:
            # S may start anywhere; V must start positive
            guess = [0.0 if k == 0 else 1.0 for k in spec.K]
        pot = TransformedPotential(pot, spec, guess)
    return phi, pot


def legendre_points(pot, data: dict) -> list[list[float]]:
    names = [_user_name(c) for c in pot.chart]
    keys = [n for n, _ in names]
    has_points, has_grid = "points" in data, "grid" in data
    if has_points == has_grid:
        raise ConfigError("give exactly one of points or grid", "points")
    rows = []
    if has_points:
        pts = data["points"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError("expected a non-empty list of mappings", "points")
        for i, p in enumerate(pts):
            if not isinstance(p, dict) or set(p) != set(keys):
                raise ConfigError(f"each point needs exactly the keys {keys}", f"points[{i}]")
            rows.append([float(p[k]) for k in keys])
    else:
        grid = data["grid"]
        if not isinstance(grid, dict) or set(grid) != set(keys):
            raise ConfigError(f"grid needs value lists for exactly {keys}", "grid")
        axes = []
        for k in keys:
            vals = grid[k] if isinstance(grid[k], list) else [grid[k]]
            if not vals:
                raise ConfigError("empty value list", f"grid.{k}")
            axes.append([float(v) for v in vals])
        rows = [list(r) for r in itertools.product(*axes)]
    # convert user values to stored variables
    return [[v * sign for v, (_, sign) in zip(r, names)] for r in rows]


def evaluate_stack(pot, z):
    """Evaluate a (possibly stacked) transform; returns ``(Psi, q, indicator)``."""
    psi = None
    indicator = float("inf")
    K_all: set[int] = set()
    while isinstance(pot, TransformedPotential):
        val, qK = pot.evaluate(z)
        if psi is None:
            psi = float(val)
        z = [float(v) for v in pot._full_q(z, qK)]
        indicator = min(indicator, regularity_indicator(pot.source, pot.spec, z))
        K_all.update(pot.spec.K)
        pot = pot.source
    if psi is None:
        psi = float(pot(z))
    return psi, z, indicator, sorted(K_all)


def cmd_legendre(args, console: _Console) -> int:
    try:
        data = load_yaml(args.config)
        phi, pot = build_transform(data)
        points = legendre_points(pot, data)
        osec = data.get("outputs") or {}
        if not isinstance(osec, dict) or set(osec) - {"csv"}:
            raise ConfigError("only csv is allowed", "outputs")
    except (ConfigError, ValueError) as exc:
        console.err(f"config error: {exc}")
        return EXIT_CONFIG

    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / str(osec.get("csv", "legendre.csv"))
    inputs = [_user_name(c) for c in pot.chart]
    status = EXIT_OK
    rows = []
    K_names = None
    flagged = 0
    for i, z in enumerate(points):
        try:
            psi, q, ind, K = evaluate_stack(pot, z)
        except (RegularityError, ConvergenceError, ValueError) as exc:
            console.err(f"solver failure at point {i}: {exc}")
            status = EXIT_RUNTIME
            break
        if K_names is None:
            K_names = [phi.chart[k] for k in K]
        flag = "near_singular" if ind < REGULARITY_THRESHOLD else "ok"
        flagged += flag != "ok"
        rows.append([v * s for v, (_, s) in zip(z, inputs)] + [q[k] for k in K] + [psi, ind, flag])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([n for n, _ in inputs] + (K_names or []) + ["Psi", "regularity", "flag"])
        for r in rows:
            w.writerow([_fmt(v) for v in r[:-1]] + [r[-1]])
    console.out(f"wrote {path} ({len(rows)} points, {flagged} flagged near-singular)")
    return status


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _run_tuple(job):
    index, data, out_dir = job
    cfg = parse_scenario(data)
    run_dir = Path(out_dir) / f"run_{index:03d}"
    try:
        traj, report, warnings = run_scenario(cfg, run_dir)
    except HamThermoError as exc:
        return {"status": "failed", "message": str(exc)}
    x = traj.final.as_hydrostatic()
    out = {"status": "ok", "message": "; ".join(warnings), "steps": cfg.integrator.steps, "t_final": float(traj.t[-1])}
    out.update({k: float(v) for k, v in x.items()})
    out.update({k: v for k, v in report.as_dict().items() if k in ("h_drift", "onshell_max", "eos_max", "euler_max")})
    out["closed_form_max"] = report.closed_form_max
    return out


def cmd_sweep(args, console: _Console) -> int:
    try:
        data = load_yaml(args.config)
        sweep = data.get("sweep")
        if not isinstance(sweep, dict) or not sweep:
            raise ConfigError("expected a non-empty mapping of dotted paths to value lists", "sweep")
        for key, vals in sweep.items():
            if not isinstance(vals, list) or not vals:
                raise ConfigError("empty or non-list range", f"sweep.{key}")
        base = {k: v for k, v in data.items() if k != "sweep"}
        keys = list(sweep)
        tuples = list(itertools.product(*(sweep[k] for k in keys)))
        jobs = []
        out_dir = Path(args.out_dir or ".")
        for i, combo in enumerate(tuples):
            d = copy.deepcopy(base)
            for k, v in zip(keys, combo):
                set_path(d, k, v)
            parse_scenario(d)
            jobs.append((i, d, str(out_dir)))
    except (ConfigError, ValueError) as exc:
        console.err(f"config error: {exc}")
        return EXIT_CONFIG

    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_tuple, jobs))
    else:
        results = [_run_tuple(j) for j in jobs]

    fields = ["run", *keys, "status", "message", "steps", "t_final", "S", "V", "N", "T", "P", "mu",
              "h_drift", "onshell_max", "eos_max", "euler_max", "closed_form_max", "error_ratio_prev"]
    prev = None
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for (i, _, _), combo, res in zip(jobs, tuples, results):
            err = res.get("closed_form_max")
            ratio = prev / err if (prev is not None and err) else None
            prev = err if res["status"] == "ok" else None
            row = [f"run_{i:03d}", *combo]
            for f in fields[len(keys) + 1 :]:
                v = ratio if f == "error_ratio_prev" else res.get(f)
                row.append("" if v is None else (_fmt(v) if isinstance(v, float) else v))
            w.writerow(row)
    ok = sum(r["status"] == "ok" for r in results)
    console.out(f"{ok}/{len(results)} runs succeeded; summary in {out_dir / 'summary.csv'}")
    return EXIT_OK if ok else EXIT_RUNTIME


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def add_globals(p, suppress: bool):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--out-dir", default=d(None), help="directory for output files (default: current)")
        p.add_argument("--seed", type=int, default=d(0), help="seed for randomized checks")
        p.add_argument("--quiet", action="store_true", default=d(False), help="suppress normal output")

    parser = argparse.ArgumentParser(prog="hamthermo", description="Hamiltonian flows on thermodynamic phase space")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario and write CSV + report")
    p.add_argument("config")
    add_globals(p, suppress=True)

    p = sub.add_parser("check", help="run invariant suites")
    p.add_argument("suite", choices=[*SUITES, "all"])
    add_globals(p, suppress=True)

    p = sub.add_parser("legendre", help="evaluate Legendre transforms at points or on a grid")
    p.add_argument("config")
    add_globals(p, suppress=True)

    p = sub.add_parser("sweep", help="run a scenario over parameter ranges")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    add_globals(p, suppress=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    console = _Console(args.quiet)
    handler = {"simulate": cmd_simulate, "check": cmd_check, "legendre": cmd_legendre, "sweep": cmd_sweep}[args.command]
    return handler(args, console)


if __name__ == "__main__":
    sys.exit(main())
