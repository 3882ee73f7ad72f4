import json
import os

import pytest

from fpdrift import ConfigError, parse_config
from fpdrift.cli import main, _parse_grid, _read_bundle_csv

pytestmark = pytest.mark.usefixtures("no_env_seed")


@pytest.fixture
def no_env_seed(monkeypatch):
    monkeypatch.delenv("FPDRIFT_SEED", raising=False)


def write_config(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


# ---------------------------------------------------------------------------
# Config parsing.
# ---------------------------------------------------------------------------

def test_minimal_config_applies_preset(tmp_path):
    path = write_config(tmp_path, "model: model2\nH: 0.9\nseed: 1\n")
    cfg = parse_config(path)
    e = cfg.experiment
    assert e.horizon == 0.75 and e.sigma == 1.0  # model2 preset
    assert e.x0 == 5.0 and e.theta0 == 1.0
    assert e.steps == 20 and e.contraction == 0.5 and e.alpha == 0.05
    assert e.tol == 1e-12 and e.enforce_omega is False
    assert e.seed == 1


def test_model1_preset(tmp_path):
    cfg = parse_config(write_config(tmp_path, "model: model1\nH: 0.7\n"))
    assert cfg.experiment.horizon == 0.1
    assert cfg.experiment.sigma == 0.25


def test_unknown_key_rejected(tmp_path):
    path = write_config(tmp_path, "model: model2\nH: 0.9\nwibble: 3\n")
    with pytest.raises(ConfigError, match="wibble"):
        parse_config(path)


def test_range_error_names_field(tmp_path):
    path = write_config(tmp_path, "model: model2\nH: 1.2\n")
    with pytest.raises(ConfigError, match="H"):
        parse_config(path)
    path = write_config(tmp_path, "model: model2\nH: 0.9\nsigma: 0\n")
    with pytest.raises(ConfigError, match="sigma"):
        parse_config(path)


def test_malformed_file(tmp_path):
    path = write_config(tmp_path, "model: [unclosed\n")
    with pytest.raises(ConfigError):
        parse_config(path)
    with pytest.raises(ConfigError):
        parse_config(str(tmp_path / "missing.yaml"))


def test_overrides_and_precedence(tmp_path):
    path = write_config(tmp_path, "model: model2\nH: 0.9\nseed: 1\n")
    cfg = parse_config(path, overrides=["n_max=12", "enforce_omega=true"], seed=99)
    assert cfg.experiment.n_max == 12
    assert cfg.experiment.enforce_omega is True
    assert cfg.experiment.seed == 99  # explicit seed wins over the file
    with pytest.raises(ConfigError):
        parse_config(path, overrides=["oops"])
    with pytest.raises(ConfigError):
        parse_config(path, overrides=["nosuchkey=3"])


def test_round_trip(tmp_path):
    import yaml
    cfg = parse_config(write_config(tmp_path, "model: model1\nH: 0.7\nn_max: 9\n"),
                       overrides=["eval_points=3,9", "alpha=0.1"])
    dumped = tmp_path / "effective.yaml"
    dumped.write_text(yaml.safe_dump(cfg.to_dict()), encoding="utf-8")
    again = parse_config(str(dumped))
    assert again == cfg


def test_parse_grid():
    grid = _parse_grid("0.5:0.1:31")
    assert len(grid) == 31
    assert grid[0] == 0.5
    assert grid[1] == pytest.approx(0.6)
    assert _parse_grid("1:0.5:31")[-1] == pytest.approx(16.0)
    with pytest.raises(ConfigError):
        _parse_grid("1:2")
    with pytest.raises(ConfigError):
        _parse_grid("a:b:c")
    with pytest.raises(ConfigError):
        _parse_grid("1:1:0")


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def run_cli(*args):
    return main(list(args))


def common_args(tmp_path, **extra):
    args = ["--set", "model=model2", "--set", "H=0.9",
            "--set", "replications=2", "--set", "n_max=3",
            "--seed", "5", "--out", str(tmp_path), "--workers", "1"]
    for k, v in extra.items():
        args += ["--set", f"{k}={v}"]
    return args


def test_simulate_row_counts(tmp_path):
    code = run_cli("simulate", *common_args(tmp_path, steps=2, n_max=1,
                                            replications=1))
    assert code == 0
    lines = (tmp_path / "bundle_0000.csv").read_text().splitlines()
    assert lines[0] == "t,path_1"
    assert len(lines) == 1 + 3  # header + (steps + 1) nodes


def test_simulate_byte_stable(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_cli("simulate", *common_args(out1))
    run_cli("simulate", *common_args(out2))
    assert (out1 / "bundle_0000.csv").read_bytes() == (out2 / "bundle_0000.csv").read_bytes()


def test_estimate_record(tmp_path):
    code = run_cli("estimate", *common_args(tmp_path))
    assert code == 0
    record = json.loads((tmp_path / "estimate.json").read_text())
    for key in ("theta_tilde", "R_N", "iterations", "residual", "D_N", "I_N",
                "omega_holds", "aci_lower", "aci_upper"):
        assert key in record
    assert record["omega_holds"] is True
    assert record["aci_lower"] < record["theta_tilde"] < record["aci_upper"]


def test_estimate_constant_drift_equals_identity_statistic(tmp_path):
    code = run_cli("estimate", "--set", "model=custom:2", "--set", "H=0.9",
                   "--set", "T=0.5", "--set", "sigma=1.0", "--set", "n_max=3",
                   "--seed", "5", "--out", str(tmp_path), "--workers", "1")
    assert code == 0
    record = json.loads((tmp_path / "estimate.json").read_text())
    assert record["R_N"] == 0.0
    assert record["theta_tilde"] == pytest.approx(record["I_N"])


def test_estimate_from_simulated_file(tmp_path):
    run_cli("simulate", *common_args(tmp_path, replications=1))
    bundle_path = str(tmp_path / "bundle_0000.csv")
    code = run_cli("estimate", *common_args(tmp_path), "--input", bundle_path)
    assert code == 0
    bundle = _read_bundle_csv(bundle_path)
    assert bundle.n_paths == 3


def test_estimate_missing_input_is_io_error(tmp_path):
    code = run_cli("estimate", *common_args(tmp_path),
                   "--input", str(tmp_path / "nope.csv"))
    assert code == 4


def test_validation_error_exit_code(tmp_path):
    code = run_cli("experiment", "--set", "model=model2", "--set", "H=1.5",
                   "--out", str(tmp_path))
    assert code == 2


def test_degenerate_statistics_exit_code(tmp_path):
    # Drift b(x) = x - 5 vanishes at x0 = 5 with tiny noise: D_N can still be
    # positive, so force degeneracy with b = 0 polynomial.
    code = run_cli("estimate", "--set", "model=custom:0", "--set", "H=0.9",
                   "--set", "T=0.5", "--set", "sigma=1.0",
                   "--seed", "5", "--out", str(tmp_path), "--workers", "1")
    assert code == 3


def test_experiment_outputs(tmp_path):
    code = run_cli("experiment", *common_args(tmp_path, replications=1))
    assert code == 0
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "model,H,N_max,replications,mean_error,std_error,coverage,seconds"
    assert len(summary) == 2
    traj = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert traj[0] == "trial,N,estimate,aci_lower,aci_upper"
    assert len(traj) == 1 + 3  # one trial, n_max = 3


def test_experiment_json_format(tmp_path):
    code = run_cli("experiment", *common_args(tmp_path), "--format", "json")
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["replications"] == 2
    traj = json.loads((tmp_path / "trajectories.json").read_text())
    assert len(traj["trials"]) == 2


def test_seventeen_digit_round_trip(tmp_path):
    run_cli("experiment", *common_args(tmp_path))
    for line in (tmp_path / "trajectories.csv").read_text().splitlines()[1:]:
        for cell in line.split(",")[2:]:
            value = float(cell)
            assert format(value, ".17g") == cell


def test_sweep_outputs(tmp_path):
    code = run_cli("sweep", *common_args(tmp_path), "--grid", "0.5:0.1:31")
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "threshold,mean_error"
    assert len(lines) == 32


def test_coverage_outputs(tmp_path):
    code = run_cli("coverage", *common_args(tmp_path))
    assert code == 0
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert len(lines) == 2
    coverage = float(lines[1].split(",")[6])
    assert 0.0 <= coverage <= 1.0


def test_env_var_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("FPDRIFT_SEED", "321")
    out_env, out_flag = tmp_path / "env", tmp_path / "flag"
    args = ["--set", "model=model2", "--set", "H=0.9", "--set", "replications=1",
            "--set", "n_max=2", "--workers", "1"]
    run_cli("experiment", *args, "--out", str(out_env))
    run_cli("experiment", *args, "--out", str(out_flag), "--seed", "321")
    assert (out_env / "trajectories.csv").read_bytes() == \
        (out_flag / "trajectories.csv").read_bytes()
    # An explicit --seed overrides the environment.
    out_other = tmp_path / "other"
    run_cli("experiment", *args, "--out", str(out_other), "--seed", "99")
    assert (out_env / "trajectories.csv").read_bytes() != \
        (out_other / "trajectories.csv").read_bytes()


def test_bad_env_var_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("FPDRIFT_SEED", "notanumber")
    code = run_cli("experiment", "--set", "model=model2", "--set", "H=0.9",
                   "--set", "replications=1", "--set", "n_max=2",
                   "--out", str(tmp_path), "--workers", "1")
    assert code == 2
