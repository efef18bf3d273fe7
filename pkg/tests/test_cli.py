import csv
import logging
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from hamthermo import cli, dynamics
from hamthermo.cli import main, read_trajectory_csv

HEADER = "t,S,V,N,T,P,mu,E,H,onshell,eos,euler\n"

ISOCHORIC = {
    "system": {"potential": "ideal_gas", "A": 1.0, "C": 1.5},
    "hamiltonian": {"Lambda": 0.0, "isochoric": {}},
    "initial": {"q": [0.0, 1.0, 1.0]},
    "integrator": {"method": "implicit-midpoint", "dt": 1e-3, "steps": 1000},
}

INTERACTING = {
    "system": {"potential": "ideal_gas", "A": 1.0, "C": 1.5},
    "hamiltonian": {"interacting": {"a": 0.1, "b": 0.0}},
    "initial": {"q": [0.0, 1.0, 1.0]},
    "integrator": {"method": "implicit-midpoint", "dt": 1e-3, "steps": 1000},
}


def write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSimulate:
    def test_header_and_row_at_half(self, tmp_path):
        cfg = write(tmp_path, ISOCHORIC)
        assert main(["simulate", cfg, "--out-dir", str(tmp_path / "out"), "--quiet"]) == 0
        text = (tmp_path / "out" / "trajectory.csv").read_text()
        assert text.startswith(HEADER)
        rows = read_csv(tmp_path / "out" / "trajectory.csv")
        assert len(rows) == 1001
        row = min(rows, key=lambda r: abs(float(r["t"]) - 0.5))
        assert float(row["t"]) == pytest.approx(0.5)
        assert float(row["N"]) == pytest.approx(math.exp(0.5), rel=1e-5)
        assert float(row["P"]) == pytest.approx(2 / 3 * math.exp(5 / 6), rel=1e-5)
        assert float(row["T"]) == pytest.approx(2 / 3 * math.exp(1 / 3), rel=1e-5)
        report = (tmp_path / "out" / "report.txt").read_text()
        assert "h_drift" in report and "closed_form_N" in report and "affine parameter" in report

    def test_deterministic_bytes(self, tmp_path):
        cfg = write(tmp_path, ISOCHORIC)
        main(["--quiet", "simulate", cfg, "--out-dir", str(tmp_path / "a")])
        main(["--quiet", "simulate", cfg, "--out-dir", str(tmp_path / "b")])
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_round_trip_exact(self, tmp_path):
        from hamthermo.config import parse_scenario

        data = dict(ISOCHORIC, integrator={"method": "rk4", "dt": 0.01, "steps": 100})
        cfg = write(tmp_path, data)
        main(["--quiet", "simulate", cfg, "--out-dir", str(tmp_path)])
        cols = read_trajectory_csv(tmp_path / "trajectory.csv")
        sc = parse_scenario(data)
        tr = dynamics.integrate(sc.hamiltonian, sc.initial, sc.integrator)
        for j, name in enumerate(("S", "V", "N", "T")):
            assert np.array_equal(cols[name], tr.states[:, j])
        assert np.array_equal(cols["P"], -tr.states[:, 4])
        assert np.array_equal(cols["mu"], tr.states[:, 5])
        assert np.array_equal(cols["t"], tr.t)

    def test_interacting_pressure_line(self, tmp_path):
        cfg = write(tmp_path, INTERACTING)
        assert main(["--quiet", "simulate", cfg, "--out-dir", str(tmp_path)]) == 0
        cols = read_trajectory_csv(tmp_path / "trajectory.csv")
        slope = np.polyfit(cols["t"], cols["P"], 1)[0]
        assert slope == pytest.approx(-0.1, rel=1e-10)
        np.testing.assert_allclose(cols["P"], 2 / 3 - 0.1 * cols["t"], atol=1e-12)

    def test_steps_zero_exit_2(self, tmp_path, capsys):
        data = dict(ISOCHORIC, integrator={"method": "rk4", "dt": 1e-3, "steps": 0})
        assert main(["simulate", write(tmp_path, data)]) == 2
        assert "integrator.steps" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["--quiet", "simulate", str(tmp_path / "nope.yaml")]) == 2

    def test_integration_failure_exit_3(self, tmp_path, capsys):
        data = dict(ISOCHORIC)
        data["hamiltonian"] = {"general_process": {"X": {"V": "-1"}}}
        data["integrator"] = {"method": "rk4", "dt": 0.3, "steps": 10}
        assert main(["simulate", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 3
        assert "step 4" in capsys.readouterr().err

    def test_raw_state_warning(self, tmp_path, caplog):
        data = dict(ISOCHORIC, integrator={"method": "rk4", "dt": 1e-2, "steps": 2})
        data["initial"] = {"state": {"S": 0.0, "V": 1.0, "N": 1.0, "T": 1.0, "P": 0.6666666666666666, "mu": 1.6666666666666667}}
        with caplog.at_level(logging.WARNING, logger="hamthermo"):
            assert main(["simulate", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        assert "off the equilibrium set" in caplog.text
        assert "warnings:" in (tmp_path / "report.txt").read_text()

    def test_pressure_crossing_warning(self, tmp_path, caplog):
        data = dict(INTERACTING, hamiltonian={"interacting": {"a": 1.0}})
        with caplog.at_level(logging.WARNING, logger="hamthermo"):
            assert main(["simulate", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        assert "pressure changes sign" in caplog.text

    def test_quiet_suppresses_stdout(self, tmp_path, capsys):
        data = dict(ISOCHORIC, integrator={"method": "rk4", "dt": 1e-2, "steps": 2})
        main(["simulate", write(tmp_path, data), "--out-dir", str(tmp_path), "--quiet"])
        assert capsys.readouterr().out == ""
        main(["simulate", write(tmp_path, data), "--out-dir", str(tmp_path)])
        assert "wrote" in capsys.readouterr().out


class TestCheck:
    def test_all_pass(self, capsys):
        assert main(["check", "all"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "checks passed" in out

    def test_ensembles_report_lists_invariants(self, capsys):
        assert main(["check", "ensembles", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "involution" in out and "gradient_relations" in out and "threshold" in out

    def test_mislabelled_rk4_fails(self, monkeypatch, capsys):
        monkeypatch.setattr(dynamics, "SYMPLECTIC_METHODS", frozenset({"implicit-midpoint", "rk4"}))
        assert main(["check", "dynamics"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_writes_report_with_out_dir(self, tmp_path):
        assert main(["--quiet", "check", "geometry", "--out-dir", str(tmp_path)]) == 0
        assert "PASS" in (tmp_path / "check_geometry.txt").read_text()

    def test_unknown_suite(self):
        with pytest.raises(SystemExit) as info:
            main(["check", "bogus"])
        assert info.value.code == 2


class TestLegendre:
    def test_helmholtz_point(self, tmp_path):
        data = {
            "system": {"potential": "ideal_gas"},
            "transform": {"preset": "helmholtz", "guess": [0.0]},
            "points": [{"T": 2 / 3, "V": 1.0, "N": 1.0}],
            "outputs": {"csv": "f.csv"},
        }
        assert main(["--quiet", "legendre", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "f.csv")
        assert list(rows[0]) == ["T", "V", "N", "S", "Psi", "regularity", "flag"]
        assert float(rows[0]["S"]) == pytest.approx(0.0, abs=1e-12)
        assert float(rows[0]["Psi"]) == pytest.approx(1.0, rel=1e-12)
        assert float(rows[0]["regularity"]) == pytest.approx(4 / 9)
        assert rows[0]["flag"] == "ok"

    def test_gibbs_grid_matches_composition(self, tmp_path):
        grid = {"T": [0.5, 0.75, 1.0, 1.25, 1.5], "P": [0.5, 0.75, 1.0, 1.25, 1.5], "N": [1.0]}
        base = {"system": {"potential": "ideal_gas"}, "grid": grid}
        direct = dict(base, transform={"preset": "gibbs", "guess": [0.0, 1.0]}, outputs={"csv": "g.csv"})
        chain = dict(base, transform={"preset": ["helmholtz", "enthalpy"]}, outputs={"csv": "c.csv"})
        assert main(["--quiet", "legendre", write(tmp_path, direct, "d.yaml"), "--out-dir", str(tmp_path)]) == 0
        assert main(["--quiet", "legendre", write(tmp_path, chain, "c.yaml"), "--out-dir", str(tmp_path)]) == 0
        g, c = read_csv(tmp_path / "g.csv"), read_csv(tmp_path / "c.csv")
        assert len(g) == len(c) == 25
        for a, b in zip(g, c):
            assert float(a["Psi"]) == pytest.approx(float(b["Psi"]), rel=1e-10)
            assert float(a["V"]) == pytest.approx(float(a["N"]) * float(a["T"]) / float(a["P"]), rel=1e-10)

    def test_near_singular_flagged(self, tmp_path):
        data = {
            "system": {"potential": "quadratic", "stiffness": [1e-9, 1.0]},
            "transform": {"K": ["q1"]},
            "points": [{"p_q1": 1e-9, "q2": 0.5}],
        }
        assert main(["--quiet", "legendre", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        row = read_csv(tmp_path / "legendre.csv")[0]
        assert row["flag"] == "near_singular"
        assert float(row["regularity"]) < 1e-8

    def test_solver_failure_exit_3_names_point(self, tmp_path, capsys):
        data = {
            "system": {"potential": "linear", "coefficients": [1.0, 2.0]},
            "transform": {"K": [0]},
            "points": [{"p_q1": 1.0, "q2": 0.0}, {"p_q1": 3.0, "q2": 0.5}],
        }
        assert main(["legendre", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 3
        assert "point 0" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "change",
        [
            {"transform": {"preset": "grand"}},
            {"transform": {"preset": "helmholtz", "K": [0]}},
            {"points": [{"T": 1.0, "V": 1.0}]},
            {"extra": 1},
            {"transform": {"K": ["X"]}},
        ],
    )
    def test_config_errors(self, tmp_path, change):
        data = {"system": {"potential": "ideal_gas"}, "transform": {"preset": "helmholtz"}, "points": [{"T": 1.0, "V": 1.0, "N": 1.0}]}
        data.update(change)
        assert main(["--quiet", "legendre", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 2


class TestSweep:
    def test_sweep_a(self, tmp_path):
        data = dict(INTERACTING, sweep={"hamiltonian.interacting.a": [0.05, 0.1, 0.2]})
        assert main(["--quiet", "sweep", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        summary = read_csv(tmp_path / "summary.csv")
        assert [r["status"] for r in summary] == ["ok"] * 3
        for r, a in zip(summary, (0.05, 0.1, 0.2)):
            cols = read_trajectory_csv(tmp_path / r["run"] / "trajectory.csv")
            np.testing.assert_allclose(np.diff(cols["P"]) / np.diff(cols["t"]), -a, rtol=1e-9)
            assert float(r["P"]) == pytest.approx(2 / 3 - a, abs=1e-12)

    def test_sweep_dt_error_ratios(self, tmp_path):
        data = dict(ISOCHORIC, initial={"q": [0.5, 1.0, 1.0]})
        data["integrator"] = {"method": "implicit-midpoint", "dt": 4e-3, "t_end": 1.0}
        data["sweep"] = {"integrator.dt": [4e-3, 2e-3, 1e-3]}
        assert main(["--quiet", "sweep", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        summary = read_csv(tmp_path / "summary.csv")
        assert summary[0]["error_ratio_prev"] == ""
        for r in summary[1:]:
            assert float(r["error_ratio_prev"]) == pytest.approx(4.0, rel=0.15)

    def test_empty_range_exit_2(self, tmp_path):
        data = dict(INTERACTING, sweep={"hamiltonian.interacting.a": []})
        assert main(["--quiet", "sweep", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 2

    def test_missing_sweep_exit_2(self, tmp_path):
        assert main(["--quiet", "sweep", write(tmp_path, INTERACTING), "--out-dir", str(tmp_path)]) == 2

    def test_invalid_tuple_exit_2(self, tmp_path):
        data = dict(INTERACTING, sweep={"integrator.dt": [1e-3, -1.0]})
        assert main(["--quiet", "sweep", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 2

    def test_all_failed_exit_3(self, tmp_path):
        data = dict(ISOCHORIC)
        data["integrator"] = {"method": "implicit-midpoint", "dt": 0.5, "steps": 3, "max_iter": 2}
        data["sweep"] = {"integrator.dt": [0.5, 0.6]}
        assert main(["--quiet", "sweep", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 3
        summary = read_csv(tmp_path / "summary.csv")
        assert all(r["status"] == "failed" and "converge" in r["message"] for r in summary)

    def test_partial_failure_exit_0(self, tmp_path):
        data = dict(ISOCHORIC)
        data["integrator"] = {"method": "implicit-midpoint", "dt": 1e-2, "steps": 2}
        data["sweep"] = {"integrator.max_iter": [1, 50]}
        assert main(["--quiet", "sweep", write(tmp_path, data), "--out-dir", str(tmp_path)]) == 0
        assert [r["status"] for r in read_csv(tmp_path / "summary.csv")] == ["failed", "ok"]

    def test_parallel_matches_serial(self, tmp_path):
        data = dict(INTERACTING, sweep={"hamiltonian.interacting.a": [0.05, 0.1], "hamiltonian.interacting.b": [0.0, -0.01]})
        cfg = write(tmp_path, data)
        assert main(["--quiet", "sweep", cfg, "--out-dir", str(tmp_path / "s")]) == 0
        assert main(["--quiet", "sweep", cfg, "--jobs", "2", "--out-dir", str(tmp_path / "p")]) == 0
        assert (tmp_path / "s" / "summary.csv").read_bytes() == (tmp_path / "p" / "summary.csv").read_bytes()
        assert (tmp_path / "s" / "run_003" / "trajectory.csv").read_bytes() == (
            tmp_path / "p" / "run_003" / "trajectory.csv"
        ).read_bytes()


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hamthermo", "check", "geometry", "--quiet"], capture_output=True)
    assert res.returncode == 0


def test_global_flags_either_side():
    p = cli.build_parser()
    a = p.parse_args(["--seed", "5", "--out-dir", "x", "check", "all"])
    b = p.parse_args(["check", "all", "--seed", "5", "--out-dir", "x"])
    assert (a.seed, a.out_dir) == (b.seed, b.out_dir) == (5, "x")
    c = p.parse_args(["--quiet", "check", "all"])
    assert c.quiet is True and c.seed == 0
