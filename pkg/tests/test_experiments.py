import pytest

from fbm_bismut.bismut import ShiftRow
from fbm_bismut.experiments import ResultRow, _shift_rows, run_experiment


def test_result_row_verdict_rule():
    row = ResultRow("X", "r", 0.7, 8, 10, 0, "", 1.0, 0.1, 1.25, 0.0)
    assert row.verdict == "PASS"
    assert ResultRow("X", "r", 0.7, 8, 10, 0, "", 1.0, 0.1, None, 0.0).verdict == "NA"


def test_shift_rows_classify_exact_and_quadratic():
    quad = _shift_rows([ShiftRow(1e-2, 4e-6), ShiftRow(5e-3, 1e-6)], "SHIFT_TEST", 0.7, 8, 0, "")
    assert quad[-1].row_id.startswith("richardson") and quad[-1].verdict == "PASS"
    exact = _shift_rows([ShiftRow(1e-2, 1e-16), ShiftRow(5e-3, 3e-16)], "SHIFT_TEST", 0.7, 8, 0, "")
    assert exact[-1].row_id.startswith("exact") and exact[-1].verdict == "PASS"
    linear = _shift_rows([ShiftRow(1e-2, 2e-6), ShiftRow(5e-3, 1e-6)], "SHIFT_TEST", 0.7, 8, 0, "")
    assert linear[-1].verdict == "FAIL"


@pytest.mark.parametrize("cfg", [
    {"experiment": "SHIFT_TEST", "model": {"drift": "TANH_BOUNDED", "hurst": 0.3, "x0": [0.3]},
     "numerics": {"n": 64, "seed": 1}},
    {"experiment": "SFDE_GRADIENT", "model": {"drift": "DELAY_LINEAR", "hurst": 0.7, "xi": [1.0]},
     "numerics": {"n": 32, "N": 4000, "seed": 1}},
    {"experiment": "LOG_HARNACK", "model": {"drift": "LINEAR", "hurst": 0.7, "x0": [0.0]},
     "f": {"name": "ONE_PLUS_TANH"}, "numerics": {"n": 32, "N": 4000, "seed": 1}},
    {"experiment": "MOMENT_SCAN", "model": {"drift": "ZERO", "hurst": 0.3, "x0": [0.0]},
     "numerics": {"n": 32, "N": 4000, "seed": 1, "route": "generic"}},
    {"experiment": "VALIDATE_OPERATORS", "model": {"drift": "TANH_BOUNDED", "hurst": 0.5, "x0": [0.0]},
     "numerics": {"n": 64, "seed": 0, "hursts": [0.5, 0.7]}},
], ids=lambda c: c["experiment"])
def test_small_experiments_have_no_fail_rows(cfg):
    rows = run_experiment(cfg)
    assert rows
    assert all(r.verdict != "FAIL" for r in rows), [(r.row_id, r.estimate, r.oracle) for r in rows]
