import json
import math

import pytest

import nutaxis.cli
import nutaxis.verify
from nutaxis import preset
from nutaxis.cli import _env_threads, main
from nutaxis.io import write_config
from nutaxis.stepper import PositivityViolation
from nutaxis.verify import CheckResult


def _line_value(out, key):
    for line in out.splitlines():
        if line.startswith(key + " ="):
            return float(line.split("=")[1].split("(")[0])
    raise AssertionError(f"{key} not printed:\n{out}")


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 1
    capsys.readouterr()


def test_help_exits_zero(capsys):
    assert main(["-h"]) == 0
    assert "run" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["run"],                                        # neither config nor preset
    ["run", "--preset", "fig1_left"],               # preset without variant
    ["run", "--preset", "fig1_left", "--variant", "sigma=61"],
    ["run", "nope.json", "--preset", "fig1_left", "--variant", "sigma=60"],
])
def test_bad_run_invocations_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_missing_config_file_exits_one(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 1
    assert "i/o error" in capsys.readouterr().err


def test_run_preset_writes_artifacts(tmp_path, capsys):
    code = main(["run", "--preset", "fig1_right", "--variant", "l=14",
                 "--t-end", "0.05", "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "records.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    out = capsys.readouterr().out
    assert "audits ok" in out
    assert "records.csv" in out


def test_run_config_file_with_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    write_config(preset("fig1_right", 14), str(cfg_path))
    code = main(["run", str(cfg_path), "--t-end", "0.02", "--n-cells", "101",
                 "--out-dir", str(tmp_path / "out")])
    assert code == 0
    doc = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert doc["scenario"]["t_end"] == 0.02
    assert doc["scenario"]["geometry"]["n_cells"] == 101
    capsys.readouterr()


def test_run_failure_exits_two(tmp_path, capsys, monkeypatch):
    def boom(cfg, **kw):
        raise PositivityViolation("u", 3, 0.5)

    monkeypatch.setattr(nutaxis.cli, "run_scenario", boom)
    code = main(["run", "--preset", "fig1_right", "--variant", "l=14",
                 "--out-dir", str(tmp_path)])
    assert code == 2
    assert "simulation failure" in capsys.readouterr().err


def test_constants_subcommand(capsys):
    assert main(["constants", "--preset", "fig1_left",
                 "--variant", "sigma=60"]) == 0
    out = capsys.readouterr().out
    assert _line_value(out, "sigma_star") == 60.0
    assert _line_value(out, "kappa") == pytest.approx(4.792460381095228,
                                                      rel=1e-9)
    assert _line_value(out, "M_star") == 0.0
    assert _line_value(out, "jensen_c1") == pytest.approx(0.4621434220244197,
                                                          rel=1e-9)


def test_ode_subcommand(capsys):
    code = main(["ode", "--delta", "1", "--alpha", "2", "--beta", "1",
                 "--gamma", "1", "--u0", "1", "--v0", "1", "--w0", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert _line_value(out, "u_final") == pytest.approx(math.sqrt(6.0) - 1.0,
                                                        rel=1e-8)
    assert _line_value(out, "v_final") == pytest.approx(7.0 - 2.0 * math.sqrt(6.0),
                                                        rel=1e-8)
    assert "sign(u - v) = -1" in out


def test_heat_subcommand(capsys):
    assert main(["heat", "--n-cells", "100"]) == 0
    out = capsys.readouterr().out
    c1 = _line_value(out, "c1")
    assert abs(c1 - 0.462) < 1e-3
    assert _line_value(out, "L") == pytest.approx(0.5 * c1, rel=1e-9)
    assert _line_value(out, "t0") > 0.0


def test_sweep_subcommand(tmp_path, capsys):
    spec_path = tmp_path / "sweep.json"
    spec_path.write_text(json.dumps({
        "base": {"preset": "fig1_right", "variant": "l=14"},
        "overrides": [{"path": "t_end", "values": [0.02, 0.04]}],
    }))
    out_dir = tmp_path / "sweep_out"
    code = main(["sweep", str(spec_path), "--out-dir", str(out_dir),
                 "--threads", "1"])
    assert code == 0
    assert "2 runs (0 failed)" in capsys.readouterr().out
    table = (out_dir / "sweep_table.csv").read_text().splitlines()
    assert len(table) == 3
    assert (out_dir / "run_000" / "records.csv").exists()
    assert (out_dir / "run_001" / "manifest.json").exists()


def test_verify_exit_codes(monkeypatch, capsys):
    monkeypatch.setattr(nutaxis.verify, "run_all",
                        lambda seed=0, printer=None: [CheckResult("x", True, "")])
    assert main(["verify"]) == 0
    monkeypatch.setattr(nutaxis.verify, "run_all",
                        lambda seed=0, printer=None: [CheckResult("x", False, "")])
    assert main(["verify"]) == 3
    capsys.readouterr()


def test_env_threads(monkeypatch):
    monkeypatch.delenv("NUTAXIS_THREADS", raising=False)
    assert _env_threads() == 1
    monkeypatch.setenv("NUTAXIS_THREADS", "4")
    assert _env_threads() == 4
    monkeypatch.setenv("NUTAXIS_THREADS", "0")
    assert _env_threads() == 1
    monkeypatch.setenv("NUTAXIS_THREADS", "banana")
    assert _env_threads() == 1
