import pytest

from hamthermo import checks, dynamics


@pytest.mark.parametrize("seed", [0, 7])
def test_all_suites_pass(seed):
    results = checks.run_suite("all", seed)
    failed = [r.line() for r in results if not r.passed]
    assert not failed, "\n".join(failed)
    assert {r.name.split(".")[0] for r in results} == set(checks.SUITES)


def test_deterministic_for_seed():
    a = [r.worst for r in checks.run_suite("potentials", 3)]
    b = [r.worst for r in checks.run_suite("potentials", 3)]
    assert a == b


def test_unknown_suite():
    with pytest.raises(KeyError):
        checks.run_suite("nope")


def test_mislabelled_method_is_caught(monkeypatch):
    # pretend rk4 is symplectic: the separation check must notice
    monkeypatch.setattr(dynamics, "SYMPLECTIC_METHODS", frozenset(dynamics.METHODS))
    results = {r.name: r for r in checks.run_suite("dynamics")}
    assert not results["dynamics.symplectic_vs_rk4"].passed or not results["dynamics.symplectic_defect"].passed


def test_format_results_counts():
    rs = [checks.CheckResult("a", 0.0, 1.0, True), checks.CheckResult("b", 2.0, 1.0, False)]
    text = checks.format_results(rs)
    assert text.splitlines()[-1] == "1/2 checks passed"
    assert text.splitlines()[1].startswith("FAIL")
