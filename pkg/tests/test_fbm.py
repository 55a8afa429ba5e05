import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_bismut import fbm
from fbm_bismut.fractional import Grid, GridFunction
from fbm_bismut.oracles import forward_kernel_oracle, kernel_dt_closed_form, kernel_oracle, reconstruction_oracle

hursts = st.floats(min_value=0.05, max_value=0.95)
times = st.floats(min_value=0.0, max_value=3.0)


def test_covariance_examples():
    assert fbm.covariance(0.3, 1.0, 1.0) == 1.0
    assert fbm.covariance(0.5, 0.3, 0.8) == pytest.approx(0.3)
    assert fbm.covariance(0.7, 0.5, 0.5) == pytest.approx(0.5**1.4)
    with pytest.raises(ValueError):
        fbm.covariance(0.7, -0.1, 0.5)


@given(hursts, times, times)
def test_covariance_symmetric_and_cauchy_schwarz(H, t, s):
    r = fbm.covariance(H, t, s)
    assert r == fbm.covariance(H, s, t)
    assert r**2 <= fbm.covariance(H, t, t) * fbm.covariance(H, s, s) * (1 + 1e-12) + 1e-28


@given(hursts)
def test_covariance_matrix_is_psd(H):
    C = fbm.covariance_matrix(H, np.linspace(0.1, 1.0, 12))
    assert np.linalg.eigvalsh(C).min() > -1e-12


def test_hurst_validation_and_regime():
    with pytest.raises(ValueError):
        fbm.Hurst(1.0)
    assert fbm.Hurst(0.3).regime is fbm.Regime.LOW
    assert fbm.Hurst(0.7).regime is fbm.Regime.HIGH


def test_kernel_half_is_one():
    assert np.allclose(fbm.kernel_KH(0.5, 1.0, np.array([0.1, 0.5, 0.9])), 1.0)
    assert np.all(fbm.kernel_KH_dt(0.5, 1.0, np.array([0.1, 0.5])) == 0.0)


@given(st.sampled_from([0.2, 0.3, 0.7, 0.85]), st.floats(0.3, 2.0), st.floats(0.01, 0.99))
def test_kernel_matches_scipy_hypergeometric(H, t, frac):
    s = frac * t
    assert fbm.kernel_KH(H, t, s) == pytest.approx(kernel_oracle(H, t, s), rel=1e-10)


def test_kernel_requires_ordered_times():
    with pytest.raises(ValueError):
        fbm.kernel_KH(0.7, 0.5, 0.6)
    with pytest.raises(ValueError):
        fbm.kernel_KH(0.7, 0.5, 0.0)


def test_kernel_low_regime_blows_up_near_diagonal():
    gaps = np.array([1e-3, 1e-4, 1e-5])
    k = fbm.kernel_KH(0.3, 1.0, 1.0 - gaps)
    assert np.all(k > 0)
    slope = np.polyfit(np.log(gaps), np.log(k), 1)[0]
    assert slope == pytest.approx(-0.2, abs=0.01)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_kernel_dt_matches_central_difference(H):
    t, s, dt = 1.0, 0.4, 1e-5
    fd = (fbm.kernel_KH(H, t + dt, s) - fbm.kernel_KH(H, t - dt, s)) / (2 * dt)
    assert fbm.kernel_KH_dt(H, t, s) == pytest.approx(fd, rel=1e-5)
    assert fbm.kernel_KH_dt(H, t, s) == pytest.approx(kernel_dt_closed_form(H, t, s), rel=1e-12)


def test_kernel_dt_signs():
    t = np.linspace(0.2, 1.0, 9)
    for frac in (0.1, 0.5, 0.9, 0.99):
        assert np.all(fbm.kernel_KH_dt(0.7, t, frac * t) > 0)
        assert np.all(fbm.kernel_KH_dt(0.3, t, 0.99 * t) < 0)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_kernel_reconstruction(H):
    for t, s in [(1.0, 1.0), (1.0, 0.5), (0.6, 0.2)]:
        val = fbm.kernel_reconstruction(H, t, s)
        assert val == pytest.approx(fbm.covariance(H, t, s), rel=1e-4)
        assert val == pytest.approx(reconstruction_oracle(H, t, s).value, rel=1e-4)


def test_khstar_half_is_identity():
    g = Grid(0.0, 1.0, 32)
    phi = g.sample(np.cos)
    out = fbm.apply_KH_star(0.5, phi)
    assert np.allclose(out, phi.values[:-1])
    assert np.all(fbm.apply_KH_star(0.7, g.function(np.zeros(33))) == 0.0)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_khstar_of_indicator_is_kernel(H):
    g = Grid(0.0, 1.0, 64)
    k = 32
    ind = g.function((g.nodes < g.nodes[k] - 1e-12).astype(float))
    pts = np.array([0.1, 0.3])
    assert np.allclose(fbm.apply_KH_star(H, ind, pts), fbm.kernel_KH(H, g.nodes[k], pts), rtol=1e-12)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_isometry_small_grid(H):
    idx = [8, 16, 24, 32]
    G = fbm.isometry_gram(H, 1.0, 32, idx)
    R = fbm.covariance_matrix(H, np.array(idx) / 32)
    assert np.abs(G - R).max() < 1e-3


def test_inverse_at_half_is_derivative():
    g = Grid(0.0, 1.0, 16)
    fn = g.sample(lambda x: np.sin(x))
    assert np.allclose(fbm.apply_KH_inverse(0.5, fn, g.sample(np.cos)), np.cos(g.nodes))


def test_inverse_of_zero_and_preconditions():
    g = Grid(0.0, 1.0, 16)
    z = g.function(np.zeros(17))
    assert np.all(fbm.apply_KH_inverse(0.7, z, z) == 0.0)
    assert np.all(fbm.apply_KH_inverse(0.3, z) == 0.0)
    with pytest.raises(ValueError):
        fbm.apply_KH_inverse(0.7, g.sample(lambda x: x + 1), z)
    with pytest.raises(ValueError):
        fbm.apply_KH_inverse(0.7, z)


def _roundtrip(H, n, use_derivative=True):
    g = Grid(0.0, 1.0, n)
    pairs = [forward_kernel_oracle(H, lambda s: 1 + np.sin(2 * s), lambda s: 2 * np.cos(2 * s), t)
             for t in g.nodes]
    fn = GridFunction(g, np.array([p[0].value for p in pairs]))
    dfn = GridFunction(g, np.array([p[1].value for p in pairs])) if use_derivative else None
    u = fbm.apply_KH_inverse(H, fn, dfn)
    return np.abs(u - (1 + np.sin(2 * g.nodes)))[g.nodes >= 0.25].max()


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_inverse_roundtrip_error_decreases(H):
    e = [_roundtrip(H, n) for n in (32, 64, 128)]
    assert e[0] > e[1] > e[2]
    assert e[2] < 1e-2


def test_inverse_roundtrip_without_derivative_low_regime():
    e = [_roundtrip(0.3, n, use_derivative=False) for n in (32, 64, 128)]
    assert e[0] > e[2]
    assert e[2] < 3e-2


def test_forward_matrix_against_oracle():
    H, n = 0.7, 64
    g = Grid(0.0, 1.0, n)
    out = fbm.apply_KH(H, g.sample(lambda s: 1 + np.sin(2 * s))).values
    for k in (16, 64):
        ref = forward_kernel_oracle(H, lambda s: 1 + np.sin(2 * s), lambda s: 2 * np.cos(2 * s), g.nodes[k])[0]
        assert out[k] == pytest.approx(ref.value, rel=1e-3)


def test_volterra_half_is_cumsum():
    g = Grid(0.0, 1.0, 50)
    path = fbm.sample_fbm(0.5, g, seed=3)
    assert np.allclose(path.values[1:, 0], np.cumsum(path.wiener.increments[:, 0]))
    assert path.provenance is fbm.Provenance.VOLTERRA


def test_sampler_is_deterministic_per_index():
    g = Grid(0.0, 1.0, 20)
    a = fbm.sample_fbm(0.7, g, seed=5, index=4).values
    b = fbm.sample_fbm_batch(0.7, g, 5, [3, 4])[0][1]
    assert np.array_equal(a, b)
    c = fbm.sample_fbm(0.7, g, seed=5, index=4, method="covfactor").values
    assert np.array_equal(c, fbm.sample_fbm_batch(0.7, g, 5, [4], method="covfactor")[0][0])


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_sample_covariance_and_increment_variance(H):
    g = Grid(0.0, 1.0, 64)
    vals, _ = fbm.sample_fbm_batch(H, g, 11, np.arange(20000))
    x, y = vals[:, 32, 0], vals[:, 64, 0]
    prod = x * y
    se = prod.std(ddof=1) / np.sqrt(prod.size)
    assert abs(prod.mean() - fbm.covariance(H, 0.5, 1.0)) < 3 * se + 0.02 * fbm.covariance(H, 0.5, 1.0)
    inc = (y - x) ** 2
    se = inc.std(ddof=1) / np.sqrt(inc.size)
    assert abs(inc.mean() - 0.5 ** (2 * H)) < 3 * se + 0.02 * 0.5 ** (2 * H)


def test_covfactor_sampler_matches_covariance():
    g = Grid(0.0, 1.0, 32)
    vals, dW = fbm.sample_fbm_batch(0.3, g, 2, np.arange(20000), method="covfactor")
    assert dW is None
    prod = vals[:, 16, 0] * vals[:, 32, 0]
    se = prod.std(ddof=1) / np.sqrt(prod.size)
    assert abs(prod.mean() - fbm.covariance(0.3, 0.5, 1.0)) < 3 * se
    with pytest.raises(ValueError):
        fbm.sample_fbm(0.3, Grid(0.5, 1.0, 8), 0)


def test_holder_norm_examples():
    g = Grid(0.0, 1.0, 40)
    assert fbm.holder_norm(g.sample(lambda t: t), 1.0) == pytest.approx(1.0)
    assert fbm.holder_norm(g.function(np.full(41, 2.0)), 0.5) == 0.0
    with pytest.raises(ValueError):
        fbm.holder_norm(np.zeros(5), 0.5)


def test_holder_norm_of_fbm_is_stable_under_refinement():
    H = 0.7
    lam = H - 0.05
    norms = []
    for n in (128, 256, 512):
        g = Grid(0.0, 1.0, n)
        norms.append(np.median([fbm.holder_norm(fbm.sample_fbm(H, g, 1, index=i), lam) for i in range(10)]))
    assert max(norms) / min(norms) < 1.5
