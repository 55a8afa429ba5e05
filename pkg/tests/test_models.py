import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_bismut.models import (
    DRIFT_PRESETS,
    SIGMA_PRESETS,
    ConstantSegment,
    FunctionalModelSpec,
    ModelSpec,
    ShiftedSegment,
    describe_presets,
    make_drift,
    make_sigma,
    make_test_function,
)

IDENT = make_sigma("IDENTITY")
points = st.lists(st.floats(-5, 5), min_size=2, max_size=2)


def test_presets_listed():
    text = describe_presets()
    assert "LINEAR" in text and "DELAY_LINEAR" in text
    assert len(DRIFT_PRESETS) + len(SIGMA_PRESETS) >= 4


@pytest.mark.parametrize("name", ["ZERO", "LINEAR", "TANH_BOUNDED"])
@given(x=points)
def test_drift_gradient_matches_finite_differences(name, x):
    b = make_drift(name, 2)
    x = np.array(x)
    eps = 1e-6
    J = np.column_stack([(b(x + eps * e) - b(x - eps * e)) / (2 * eps) for e in np.eye(2)])
    assert np.allclose(b.grad(x), J, atol=1e-6)


@given(points, points)
def test_tanh_drift_is_lipschitz(x, y):
    b = make_drift("TANH_BOUNDED", 2)
    x, y = np.array(x), np.array(y)
    assert np.linalg.norm(b(x) - b(y)) <= b.lipschitz(2) * np.linalg.norm(x - y) + 1e-12


def test_linear_from_matrix_and_validation():
    b = make_drift("LINEAR", 2, A=[[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(b(np.array([1.0, 2.0])), [2.0, -1.0])
    with pytest.raises(ValueError):
        make_drift("LINEAR", 2, A=[[1.0]])
    with pytest.raises(KeyError):
        make_drift("NOPE", 1)
    with pytest.raises(ValueError):
        make_drift("ZERO", 1, kappa=2.0)


def test_sigma_presets():
    s = make_sigma("DIAG_HOLDER", alpha0=0.8, eps=0.5)
    t = np.array([0.0, 0.5, 1.0])
    M = s(t, 2)
    assert np.allclose(M[:, 0, 0], 1 + 0.5 * t**0.8)
    assert np.allclose(np.einsum("kij,kjl->kil", M, s.inverse(t, 2)), np.eye(2))
    assert IDENT.is_identity and not s.is_identity


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec(make_drift("ZERO", 1), IDENT, 1.2, 1.0, (0.0,))
    with pytest.raises(ValueError):
        ModelSpec(make_drift("ZERO", 1), IDENT, 0.7, -1.0, (0.0,))
    with pytest.raises(ValueError):
        ModelSpec(make_drift("ZERO", 1), make_sigma("DIAG_HOLDER", alpha0=0.1), 0.7, 1.0, (0.0,))
    with pytest.raises(ValueError):
        FunctionalModelSpec(make_drift("DELAY_LINEAR", 1), IDENT, 0.7, 0.2, 0.25)


def test_segments():
    seg = ConstantSegment((1.0, 2.0))
    s = np.linspace(-0.25, 0, 5)
    assert seg(s).shape == (5, 2)
    shifted = ShiftedSegment(seg, ConstantSegment((1.0, 0.0)), 0.5)
    assert np.allclose(shifted(s)[:, 0], 1.5)


def test_test_functions():
    y = np.array([[0.5, -1.0]])
    assert make_test_function("COORDINATE", index=1)(y)[0] == -1.0
    assert make_test_function("SQUARE")(y)[0] == 0.25
    assert make_test_function("CONSTANT", value=2.0)(y)[0] == 2.0
    assert 0 < make_test_function("SMOOTH_STEP")(y)[0] < 1
    with pytest.raises(KeyError):
        make_test_function("NOPE")
