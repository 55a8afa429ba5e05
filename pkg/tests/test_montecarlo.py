import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_bismut.models import ModelSpec, make_drift, make_sigma
from fbm_bismut.montecarlo import EstimateReport, SdeTask, mean_and_se, run_paths, verdict
from fbm_bismut.rng import normal_increments, path_generator


def test_streams_are_keyed_by_seed_and_index():
    a = normal_increments(3, [0, 1, 2], 8, 2, 0.1)
    b = normal_increments(3, [2], 8, 2, 0.1)
    assert np.array_equal(a[2], b[0])
    assert not np.array_equal(a[0], a[1])
    assert not np.array_equal(a, normal_increments(4, [0, 1, 2], 8, 2, 0.1))
    with pytest.raises(ValueError):
        path_generator(-1, 0)


def test_increment_variance():
    x = normal_increments(0, np.arange(200), 50, 1, 0.04)
    assert x.var() == pytest.approx(0.04, rel=0.05)


@given(st.integers(1, 500), st.integers(1, 300))
def test_run_paths_chunking_is_invisible(N, chunk):
    m = ModelSpec(make_drift("TANH_BOUNDED", 1), make_sigma("IDENTITY"), 0.7, 1.0, (0.1,))
    task = SdeTask(m, 8, 5, ((0.1,), (0.2,)), (1.0,))
    ref = run_paths(task, N, 1, 1000)
    out = run_paths(task, N, 1, chunk)
    # chunk boundaries are part of the configuration; changing them only moves roundoff
    assert np.array_equal(ref["XT"], out["XT"])
    assert np.allclose(ref["delta"], out["delta"], rtol=1e-12, atol=1e-14)
    assert out["XT"].shape == (2, N, 1)


def test_worker_count_does_not_change_results():
    m = ModelSpec(make_drift("TANH_BOUNDED", 1), make_sigma("IDENTITY"), 0.3, 1.0, (0.1,))
    task = SdeTask(m, 16, 5, ((0.1,),), (1.0,))
    one = run_paths(task, 3000, 1, 500)
    many = run_paths(task, 3000, 3, 500)
    assert np.array_equal(one["XT"], many["XT"]) and np.array_equal(one["delta"], many["delta"])


def test_mean_and_se():
    m, se = mean_and_se(np.array([1.0, 2.0, 3.0]))
    assert m == 2.0 and se == pytest.approx(1 / np.sqrt(3))
    assert mean_and_se(np.array([1.0]))[1] == np.inf
    with pytest.raises(ValueError):
        run_paths(lambda lo, hi: {}, 0)


def test_verdict_rule():
    assert verdict(1.0, 0.1, None) == "NA"
    assert verdict(1.0, 0.1, 1.3) == "PASS"
    assert verdict(1.0, 0.1, 1.31) == "FAIL"
    assert verdict(1.0, 0.0, 1.3, 0.1) == "PASS"
    r = EstimateReport(1.0, 0.1, 10, 0).with_oracle(2.0)
    assert r.verdict == "FAIL"
