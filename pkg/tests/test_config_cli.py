"""Configuration loading and the command-line workflow end to end."""

import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from riscov.analytic import RadialProfile, los_probability_override
from riscov.cli import (
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VALIDATION,
    main,
    run_sweep,
    run_validation,
)
from riscov.config import (
    ConfigError,
    SweepSpec,
    default_config,
    load_config,
    save_config,
)


def test_default_config_values():
    cfg = default_config()
    assert cfg.params.cell_radius == 100.0
    assert cfg.params.lambda_u == pytest.approx(3.18e-3)
    assert cfg.params.radio.alpha == 3.8
    assert cfg.mc.n_scenes == 400
    assert cfg.sweep.variable == "lambda_r"
    assert len(cfg.sweep.grid) == 6
    assert cfg.engines.analytic and cfg.engines.mc_model_faithful
    assert not cfg.engines.mc_physical


def test_load_none_is_default():
    assert load_config(None) == default_config()


def test_empty_file_is_default(tmp_path):
    path = tmp_path / "empty.toml"
    path.write_text("")
    assert load_config(str(path)) == default_config()


def test_round_trip(tmp_path):
    cfg = default_config()
    cfg = replace(cfg, params=replace(cfg.params, lambda_r=3.18e-4,
                                      threshold=2.5),
                  sweep=SweepSpec(variable="threshold",
                                  grid=(0.5, 1.0, 2.0)),
                  mc=replace(cfg.mc, seed=99, n_scenes=128))
    path = tmp_path / "cfg.toml"
    save_config(cfg, str(path))
    assert load_config(str(path)) == cfg


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[system]\nlambda_q = 1.0\n")
    with pytest.raises(ConfigError, match="lambda_q"):
        load_config(str(path))


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[universe]\nanswer = 42\n")
    with pytest.raises(ConfigError, match="universe"):
        load_config(str(path))


def test_negative_density_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[system]\nlambda_b = -0.5\n")
    with pytest.raises(ConfigError, match="nonnegative"):
        load_config(str(path))


def test_type_errors_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[mc]\nn_scenes = 12.5\n")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text("[mc]\nmode = 3\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "absent.toml"))


def test_malformed_toml_rejected(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[system\nlambda_b = 1")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(variable="bandwidth", grid=(1.0, 2.0))
    with pytest.raises(ValueError):
        SweepSpec(variable="lambda_r", grid=())
    with pytest.raises(ValueError):
        SweepSpec(variable="lambda_r", grid=(2.0, 1.0))


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("RISCOV_MC__SEED", "123")
    monkeypatch.setenv("RISCOV_SYSTEM__LAMBDA_R", "0.000955")
    cfg = load_config(None)
    assert cfg.mc.seed == 123
    assert cfg.params.lambda_r == pytest.approx(9.55e-4)


def test_env_override_unknown_key(monkeypatch):
    monkeypatch.setenv("RISCOV_SYSTEM__LAMBDA_Q", "1.0")
    with pytest.raises(ConfigError):
        load_config(None)


def test_save_config_rejects_profiles(tmp_path):
    cfg = default_config()
    profile = RadialProfile(radii=(0.0, 100.0), values=(1e-3, 2e-3))
    cfg = replace(cfg, params=replace(cfg.params, lambda_u=profile))
    with pytest.raises(ConfigError):
        save_config(cfg, str(tmp_path / "x.toml"))


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SWEEP_TOML = """
[mc]
n_scenes = 60
seed = 11

[sweep]
variable = "lambda_r"
grid = [0.0, 0.000955]
"""


def test_cli_bad_config_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "bad.toml", "[system]\nlambda_q = 1\n")
    assert main(["analytic", "--config", path]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_cli_unwritable_out_path_exit_code(tmp_path, capsys):
    missing = tmp_path / "no_such_dir" / "run.csv"
    code = main(["analytic", "--json", str(missing)])
    assert code == EXIT_CONFIG
    assert "file error" in capsys.readouterr().err


def test_cli_sweep_writes_pinned_schema(tmp_path, capsys):
    cfg = _write(tmp_path, "sweep.toml", SWEEP_TOML)
    out = tmp_path / "run.csv"
    jout = tmp_path / "run.json"
    code = main(["sweep", "--config", cfg, "--out", str(out),
                 "--json", str(jout)])
    assert code == EXIT_OK
    raw = out.read_bytes()
    assert b"\r\n" in raw
    rows = list(csv.DictReader(raw.decode().splitlines()))
    assert list(rows[0].keys()) == list(CSV_COLUMNS)
    assert len(rows) == 2
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert all(r["runtime_s"] == "" for r in rows)
    covs = [float(r["analytic_cov"]) for r in rows]
    assert covs == sorted(covs)
    # per-hertz column is the rate column over the bandwidth
    for r in rows:
        assert float(r["analytic_sumrate_per_hz"]) == pytest.approx(
            float(r["analytic_sumrate"]) / 2.0e8, rel=1e-12)
        assert float(r["mc_cov_ci_low"]) <= float(r["mc_cov"]) <= float(
            r["mc_cov_ci_high"])
    mirror = json.loads(jout.read_text())
    assert mirror["columns"] == list(CSV_COLUMNS)
    assert len(mirror["rows"]) == 2
    assert mirror["rows"][0]["sweep_value"] == 0.0
    assert mirror["rows"][0]["runtime_s"] is None
    # rerun lands byte-identical
    out2 = tmp_path / "rerun.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out2)]) == EXIT_OK
    assert out2.read_bytes() == raw


def test_cli_sweep_threads_do_not_change_bytes(tmp_path):
    cfg = _write(tmp_path, "sweep.toml", SWEEP_TOML)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["sweep", "--config", cfg, "--threads", "8",
                 "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_cli_sweep_timing_fills_runtime(tmp_path):
    cfg = _write(tmp_path, "quick.toml", """
[engines]
analytic = false

[mc]
n_scenes = 30

[sweep]
variable = "threshold"
grid = [1.0]
""")
    out = tmp_path / "t.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out),
                 "--timing"]) == EXIT_OK
    row = list(csv.DictReader(out.read_text().splitlines()))[0]
    assert float(row["runtime_s"]) >= 0.0
    assert row["analytic_cov"] == ""
    assert row["mc_cov"] != ""


def test_cli_sweep_failure_recorded_in_row(tmp_path, capsys):
    cfg = _write(tmp_path, "empty.toml", """
[system]
lambda_u = 0.0

[mc]
n_scenes = 20

[sweep]
variable = "lambda_r"
grid = [0.000159]
""")
    code = main(["sweep", "--config", cfg])
    assert code == EXIT_NUMERIC
    outerr = capsys.readouterr()
    rows = list(csv.DictReader(outerr.out.splitlines()))
    assert len(rows) == 1
    assert "analytic" in rows[0]["status"] and "mc" in rows[0]["status"]
    assert rows[0]["analytic_cov"] == "" and rows[0]["mc_cov"] == ""


def test_cli_rejects_two_mc_engines():
    cfg = default_config()
    both = replace(cfg, engines=replace(cfg.engines, mc_physical=True))
    with pytest.raises(ConfigError):
        run_sweep(both)


def test_run_time_value_error_maps_to_config_exit(tmp_path, capsys):
    cfg = _write(tmp_path, "zero.toml", "[system]\nlambda_u = 0.0\n")
    assert main(["analytic", "--config", cfg]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


VALIDATE_TOML = """
[mc]
n_scenes = 200
seed = 17
"""


def test_validation_suite_passes_and_canary_fails(tmp_path, capsys):
    cfg_path = _write(tmp_path, "val.toml", VALIDATE_TOML)
    assert main(["validate", "--config", cfg_path]) == EXIT_OK
    report = capsys.readouterr().out
    assert report.count("PASS") >= 12
    assert "FAIL" not in report

    # same suite with a corrupted survival law in the analytic engine
    # only: the re-sampling oracles keep the canonical law, so the
    # disagreement must surface
    def warped(d, lam_b, mean_len):
        base = np.exp(-2.0 * lam_b * mean_len * np.asarray(d) / math.pi)
        return base ** 1.35

    with los_probability_override(warped):
        passed, report = run_validation(load_config(cfg_path))
    assert not passed
    assert any(line.startswith("FAIL reflection_prob")
               for line in report.splitlines())


def test_validation_skips_reflected_checks_without_reflectors(tmp_path,
                                                              capsys):
    cfg_path = _write(tmp_path, "degen.toml", """
[system]
lambda_r = 0.0

[mc]
n_scenes = 120
seed = 19
""")
    assert main(["validate", "--config", cfg_path]) == EXIT_OK
    report = capsys.readouterr().out
    assert report.count("skipped (degenerate") == 5
    assert "FAIL" not in report


def test_cli_analytic_json_output(tmp_path, capsys):
    cfg = _write(tmp_path, "one.toml", """
[system]
lambda_r = 0.0
""")
    jpath = tmp_path / "a.json"
    assert main(["analytic", "--config", cfg, "--json", str(jpath)]) == EXIT_OK
    data = json.loads(jpath.read_text())
    assert data["coverage"] == pytest.approx(0.388916, abs=5e-6)
    assert data["sum_rate_bps_per_hz"] == pytest.approx(
        data["sum_rate_bps"] / 2.0e8, rel=1e-12)


def test_cli_mc_seed_override_changes_result(tmp_path, capsys):
    cfg = _write(tmp_path, "mc.toml", "[mc]\nn_scenes = 40\n")
    assert main(["mc", "--config", cfg, "--seed", "1"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["mc", "--config", cfg, "--seed", "2"]) == EXIT_OK
    second = capsys.readouterr().out
    assert first != second
    assert main(["mc", "--config", cfg, "--seed", "1"]) == EXIT_OK
    assert capsys.readouterr().out == first


def test_cli_gap_report_to_file(tmp_path, capsys):
    cfg = _write(tmp_path, "gap.toml", "[mc]\nn_scenes = 20\nseed = 2\n")
    out = tmp_path / "gap.txt"
    assert main(["gap-report", "--config", cfg, "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert text.splitlines()[0] == "coverage model gap report"
    assert text.count("\n") >= 9
