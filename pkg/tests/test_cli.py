import json

import pytest

from nlslab.cli import run_cli
from nlslab.config import load_config, parse_config
from nlslab.errors import ConfigError
from nlslab.io import read_csv, read_json


def test_config_defaults():
    cfg = parse_config({})
    assert cfg.nls.p == 3
    assert cfg.experiment.horizon_factor == 0.1
    assert cfg.experiment.caps.n_max == 2 ** 16


@pytest.mark.parametrize(
    "obj, path",
    [
        ({"nls": {"p": 4}}, "nls.p"),
        ({"nls": {"omega": 0}}, "nls.omega"),
        ({"solver": {"gridsize": 12}}, "solver.gridsize"),
        ({"solver": {"dt": -1}}, "solver.dt"),
        ({"experiment": {"caps": {"n_max": 0}}}, "experiment.caps.n_max"),
        ({"experiment": {"s": 0.5}}, "experiment.s"),
        ({"experiment": {"colour": 1}}, "experiment.colour"),
    ],
)
def test_config_errors_name_the_field(obj, path):
    with pytest.raises(ConfigError) as info:
        parse_config(obj)
    assert info.value.path == path


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_no_arguments_prints_usage(capsys):
    assert run_cli([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_command():
    assert run_cli(["frobnicate"]) == 1


def test_malformed_config_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"solver": {"gridsize": 12}}))
    assert run_cli(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "solver.gridsize" in capsys.readouterr().err


def test_verify_bound_writes_trace(tmp_path):
    code = run_cli(["verify-bound", "--p", "3", "--sigma", "0.1", "--out", str(tmp_path)])
    assert code == 0
    rep = read_json(tmp_path / "report.json")
    assert rep["passed"] is True
    assert rep["solver_configs"][0]["gridsize"] == 16
    cols = read_csv(tmp_path / "trace.csv")
    assert {"t", "bound_ratio", "mass", "hamiltonian"} <= set(cols)
    assert cols["bound_ratio"][0] == 0


def test_thm1_default_budget_reports_infeasible(tmp_path):
    assert run_cli(["thm1", "--rho", "1", "--delta", "0.1", "--s", "-0.25", "--out", str(tmp_path)]) == 2
    rep = read_json(tmp_path / "report.json")
    assert rep["verdicts"]["feasible_at_desk_scale"] is False
    assert rep["measured"]["required_log2_n"] > 16


def test_thm1_at_fixed_frequency(tmp_path):
    assert run_cli(["thm1", "--N", "8", "--out", str(tmp_path)]) == 2
    cols = read_csv(tmp_path / "trace.csv")
    assert cols["gap"][0] == 0


def test_thm1_rejects_large_delta(tmp_path):
    assert run_cli(["thm1", "--rho", "1", "--delta", "2", "--out", str(tmp_path)]) == 1


def test_thm2_passes_with_labelled_fallback(tmp_path):
    assert run_cli(["thm2", "--p", "5", "--delta", "0.05", "--out", str(tmp_path)]) == 0
    rep = read_json(tmp_path / "report.json")
    assert any("FALLBACK" in n for n in rep["notes"])
    assert run_cli(["report", str(tmp_path / "report.json")]) == 0


def test_simulate_writes_diagnostics_and_checkpoint(tmp_path):
    code = run_cli(["simulate", "--alpha", "0.05", "--beta", "0.1j", "--t-final", "2", "--samples", "20", "--out", str(tmp_path)])
    assert code == 0
    diag = read_csv(tmp_path / "diagnostics.csv")
    assert list(diag) == ["t", "mass", "hamiltonian", "h1norm"]
    assert diag["t"][-1] == 2.0
    ckpt = read_json(tmp_path / "checkpoint.json")
    assert ckpt["t"] == 2.0
    assert ckpt["field"]["nmax"] == 5


def test_approx_and_ode(tmp_path):
    assert run_cli(["approx", "--sigma", "0.1", "--samples", "10", "--out", str(tmp_path)]) == 0
    cols = read_csv(tmp_path / "approx.csv")
    assert {"re_v-1", "re_v2"} <= set(cols)
    assert run_cli(["ode", "--p", "5", "--alpha", "0.1", "--beta", "0.2", "--t-final", "1", "--out", str(tmp_path)]) == 0
    assert read_json(tmp_path / "report.json")["verdicts"]["moduli_conserved"] is True
