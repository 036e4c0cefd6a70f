import json

import pytest

from cartwright import cli
from cartwright.errors import AccuracyError, InvariantViolation


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def test_parse_verify_scenario():
    sc = cli.parse_scenario(["verify", "--theorem", "T1", "--n", "2", "--weight",
                             "family=power p=5", "--theta-min", "1e-3", "--theta-max", "0.3"])
    assert (sc.command, sc.n, sc.options["theorem"]) == ("verify", 2, "T1")
    assert sc.options["weight"] == "family=power p=5" and sc.options["seed"] == 42


def test_parse_mu_eval():
    sc = cli.parse_scenario(["mu-eval", "--n", "1", "--a", "0.8", "--y", "0.01", "--t", "0.4",
                             "--mode", "both"])
    assert sc.options["mode"] == "both" and sc.options["a"] == 0.8


def test_missing_n_is_a_usage_error(capsys):
    assert cli.main(["verify", "--theorem", "T1"]) == cli.EXIT_USAGE
    assert "--n" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["nope"], ["verify", "--n", "1", "--bogus", "1"],
                                  ["weight-check", "--n", "2", "--weight", "family=x"],
                                  ["verify", "--n", "1", "--theta-min", "0.4",
                                   "--theta-max", "0.3"], []])
def test_usage_errors(argv):
    assert cli.main(argv) == cli.EXIT_USAGE


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 2\ntheorem = T2prime\ntheta-min = 0.01\nper_decade = 3\n")
    sc = cli.parse_scenario(["verify", "--config", str(cfg), "--theta-min", "0.02"])
    assert sc.n == 2 and sc.options["theorem"] == "T2prime"
    assert sc.options["theta_min"] == 0.02 and sc.options["per_decade"] == 3
    cfg.write_text("colour = blue\n")
    with pytest.raises(cli.UsageError):
        cli.parse_scenario(["verify", "--n", "1", "--config", str(cfg)])


def test_weight_check_threshold_power(tmp_path):
    code, doc, _ = run(tmp_path, "weight-check", "--n", "2", "--weight", "family=power p=2")
    assert code == 0
    cond = doc["results"][0]
    assert cond["ar_delta"] == 0
    assert doc["summary"]["verdict"] == "Theorem 1 hypotheses: fail"


def test_mu_eval_both(tmp_path):
    code, doc, _ = run(tmp_path, "mu-eval", "--n", "1", "--a", "0.8", "--y", "0.01",
                       "--t", "0.4", "--mode", "both")
    assert code == 0
    assert [r["mode"] for r in doc["results"]] == ["quadrature", "lemma1_estimate"]
    assert doc["summary"]["ratio_quadrature_to_estimate"] > 0


def test_surface_build_export(tmp_path):
    csv_path = tmp_path / "s.csv"
    code, doc, _ = run(tmp_path, "surface-build", "--n", "1", "--theta", "0.1",
                       "--samples", "20", "--rows", "5", "--csv", str(csv_path))
    assert code == 0 and doc["summary"]["pass"]
    assert csv_path.read_text().splitlines()[0] == "y,gamma,k_of_y,mu_at_beta,va_value"


def test_example_report_keys(tmp_path):
    code, doc, _ = run(tmp_path, "example", "--n", "2")
    assert code == 0
    res = doc["results"][0]
    assert "pde_residual_max" in res and "log_exponent_fit" in res


@pytest.mark.parametrize("argv", [
    ["verify", "--n", "1", "--theta-min", "0.01", "--theta-max", "0.1", "--per-decade", "2",
     "--slack-samples", "4"],
    ["example", "--n", "1"],
])
def test_reports_are_deterministic(tmp_path, argv):
    c1, _, p1 = run(tmp_path, *argv, name="a.json")
    c2, _, p2 = run(tmp_path, *argv, name="b.json")
    assert c1 == c2 == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_exit_codes_for_failures(tmp_path, monkeypatch):
    def accuracy(sc):
        raise AccuracyError("no convergence", (1.0, 2.0))

    def invariant(sc):
        raise InvariantViolation("broken")

    monkeypatch.setitem(cli.RUNNERS, "example", accuracy)
    code, doc, _ = run(tmp_path, "example", "--n", "2", name="acc.json")
    assert code == cli.EXIT_ACCURACY and doc["summary"]["pass"] is False
    monkeypatch.setitem(cli.RUNNERS, "example", invariant)
    code, doc, _ = run(tmp_path, "example", "--n", "2", name="inv.json")
    assert code == cli.EXIT_INVARIANT and "broken" in doc["summary"]["error"]


def test_failing_pipeline_exits_one(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.RUNNERS, "verify", lambda sc: ([], False, {}))
    code, doc, _ = run(tmp_path, "verify", "--n", "1")
    assert code == cli.EXIT_INVARIANT and doc["summary"]["pass"] is False
