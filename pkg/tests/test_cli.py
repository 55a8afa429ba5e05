import json
import subprocess
import sys
from pathlib import Path

import pytest

from fbm_bismut.cli import CSV_COLUMNS, main

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"

SMALL_GRADIENT = {
    "experiment": "GRADIENT",
    "model": {"drift": "LINEAR", "drift_params": {"kappa": 1.0}, "hurst": 0.7, "x0": [0.5]},
    "numerics": {"n": 32, "N": 4000, "seed": 1, "chunk": 500},
    "f": {"name": "COORDINATE"},
    "v": [1.0],
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    return p


def read_rows(out):
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "#schema=1"
    assert lines[1] == ",".join(CSV_COLUMNS)
    return [dict(zip(CSV_COLUMNS, line.split(","))) for line in lines[2:]]


def test_list_presets(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "LINEAR" in out and "DELAY_LINEAR" in out and "DIAG_HOLDER" in out


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path, capsys):
    assert main(["validate", str(path)]) == 0


def test_gradient_run_writes_pass_row(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, SMALL_GRADIENT)), "--out", str(out)]) == 0
    rows = read_rows(out)
    grad = [r for r in rows if r["row_id"] == "gradient"][0]
    assert grad["verdict"] == "PASS" and "CLOSED" in grad["note"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"] == SMALL_GRADIENT
    assert {"version", "wall_time_s"} <= manifest.keys()
    assert b"\r\n" not in (out / "results.csv").read_bytes()


@pytest.mark.parametrize("bad,needle", [
    ('{"experiment": "GRADIENT",\n "model": {,}}', ":2:"),
    ({"experiment": "GRADIENT", "model": {"drift": "NOPE", "hurst": 0.7}, "numerics": {"seed": 1}}, "model/drift"),
    ({"experiment": "GRADIENT", "model": {"drift": "ZERO", "hurst": 0.5}, "numerics": {"seed": 1}}, "model/hurst"),
    ({"experiment": "GRADIENT", "model": {"drift": "ZERO", "hurst": 0.7}, "numerics": {}}, "seed"),
    ({"experiment": "SFDE_GRADIENT", "model": {"drift": "ZERO", "hurst": 0.7}, "numerics": {"seed": 1}}, "DELAY"),
    ({"experiment": "GRADIENT", "model": {"drift": "ZERO", "hurst": 0.7, "x0": [0.0]}, "numerics": {"seed": 1},
      "v": [1.0, 2.0]}, "field v"),
])
def test_config_errors_exit_2_without_output(tmp_path, capsys, bad, needle):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, bad)), "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err and needle in err
    assert not out.exists()


def test_fail_rows_give_exit_1(tmp_path, monkeypatch):
    from fbm_bismut import cli
    from fbm_bismut.experiments import ResultRow

    row = ResultRow("GRADIENT", "gradient", 0.7, 8, 100, 1, "", 1.0, 0.01, 2.0, 0.0)
    monkeypatch.setattr(cli, "run_experiment", lambda cfg, workers=1: [row])
    assert main(["run", str(write(tmp_path, SMALL_GRADIENT)), "--out", str(tmp_path / "o")]) == 1
    assert read_rows(tmp_path / "o")[0]["verdict"] == "FAIL"


def test_runs_are_bitwise_reproducible_across_workers(tmp_path):
    p = write(tmp_path, SMALL_GRADIENT)
    for name, workers in (("a", "1"), ("b", "1"), ("c", "3")):
        assert main(["run", str(p), "--out", str(tmp_path / name), "--workers", workers]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes() == (tmp_path / "c" / "results.csv").read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fbm_bismut", "validate", str(write(tmp_path, SMALL_GRADIENT))],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "ok: GRADIENT" in res.stdout
