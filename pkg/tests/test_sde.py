import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_bismut.fbm import FbmPath, Provenance, holder_norm, sample_fbm, sample_fbm_batch
from fbm_bismut.fractional import Grid
from fbm_bismut.models import ConstantSegment, FunctionalModelSpec, ModelSpec, default_lambda0, make_drift, make_sigma
from fbm_bismut.oracles import method_of_steps
from fbm_bismut.sde import (
    SolutionPath,
    SolverError,
    derivative_flow,
    euler_batch,
    fitted_holder_constant,
    sfde_derivative_flow,
    solve_euler,
    solve_picard,
    solve_sfde,
)

IDENT = make_sigma("IDENTITY")


def model(drift="LINEAR", H=0.7, x0=(0.5,), **params):
    return ModelSpec(make_drift(drift, len(x0), **params), IDENT, H, 1.0, x0)


def delay_model(H=0.7, kappa=1.0, r0=0.25, xi=1.0, drift="DELAY_LINEAR"):
    d = make_drift(drift, 1, kappa=kappa, r0=r0) if drift == "DELAY_LINEAR" else make_drift(drift, 1)
    return FunctionalModelSpec(d, IDENT, H, 1.0, r0, ConstantSegment((xi,)))


def zero_noise(n, H=0.7):
    g = Grid(0.0, 1.0, n)
    return FbmPath(g, np.zeros((n + 1, 1)), Provenance.COVFACTOR, H)


def test_zero_drift_adds_noise_exactly():
    g = Grid(0.0, 1.0, 64)
    noise = sample_fbm(0.7, g, 1)
    X = solve_euler(model("ZERO", x0=(0.2,)), noise)
    assert np.allclose(X.values, 0.2 + noise.values, atol=1e-15)


def test_linear_mean_decays_like_exponential():
    m = model("LINEAR", kappa=1.0, x0=(1.0,))
    g = Grid(0.0, 1.0, 128)
    vals, _ = sample_fbm_batch(0.7, g, 4, np.arange(20000))
    XT = euler_batch(m, m.x0_array, np.diff(vals, axis=1), g.h)[:, -1, 0]
    se = XT.std(ddof=1) / np.sqrt(XT.size)
    bias_budget = math.exp(-1.0) * g.h  # (1 - h)^n against e^{-1}
    assert abs(XT.mean() - math.exp(-1.0)) < 3 * se + bias_budget


def test_euler_self_convergence_order():
    m = model("TANH_BOUNDED", H=0.7, x0=(0.3,))
    g = Grid(0.0, 1.0, 1024)
    fine = sample_fbm(0.7, g, 9)
    ref = solve_euler(m, fine).values[:, 0]
    errs = []
    ns = (64, 128, 256)
    for n in ns:
        step = 1024 // n
        coarse = FbmPath(Grid(0.0, 1.0, n), fine.values[::step], Provenance.COVFACTOR, 0.7)
        errs.append(np.abs(solve_euler(m, coarse).values[:, 0] - ref[::step]).max())
    order = np.polyfit(np.log(ns), -np.log(errs), 1)[0]
    assert order >= 0.6


def test_euler_raises_on_blow_up():
    class Explosive:
        name = "EXPLOSIVE"
        beta0 = 1.0

        def __call__(self, x):
            with np.errstate(over="ignore"):
                return np.asarray(x) * 1e200

        def grad(self, x):
            return np.zeros(np.shape(x) + (np.shape(x)[-1],))

        def lipschitz(self, d):
            return 0.0

    m = ModelSpec(Explosive(), IDENT, 0.7, 1.0, (1.0,), lipschitz_K=0.0)
    with pytest.raises(SolverError):
        euler_batch(m, np.ones(1), np.zeros((1, 10, 1)), 0.1)


def test_noise_grid_must_match_horizon():
    with pytest.raises(ValueError):
        solve_euler(model(), sample_fbm(0.7, Grid(0.0, 2.0, 8), 0))


def test_picard_zero_drift_converges_in_one_iteration():
    noise = sample_fbm(0.7, Grid(0.0, 1.0, 64), 2)
    its = solve_picard(model("ZERO"), noise, 3, return_all=True)
    assert np.array_equal(its[1].values, its[2].values)
    assert np.allclose(its[1].values, solve_euler(model("ZERO"), noise).values)


def test_picard_approaches_euler_and_gaps_decay_factorially():
    m = model("TANH_BOUNDED", x0=(0.3,))
    n = 256
    noise = sample_fbm(0.7, Grid(0.0, 1.0, n), 3)
    its = solve_picard(m, noise, 25, return_all=True)
    euler = solve_euler(m, noise).values
    # trapezoid vs left-point drift: O(h) discretisation budget
    assert np.abs(its[-1].values - euler).max() < 2 * m.lipschitz_K * m.T / n
    gaps = [np.abs(its[k + 1].values - its[k].values).max() for k in range(8)]
    K, T = m.lipschitz_K, m.T
    for k in range(1, 8):
        # gap_k <= gap_0 (K T)^k / k!; the trapezoid sum of convex powers overshoots slightly
        assert gaps[k] <= gaps[0] * (K * T) ** k / math.factorial(k) * 1.05 + 1e-15


def test_derivative_flow_examples():
    noise = sample_fbm(0.7, Grid(0.0, 1.0, 256), 5)
    path = solve_euler(model("ZERO"), noise)
    assert np.all(derivative_flow(model("ZERO"), path, [2.0]) == 2.0)
    m = model("LINEAR", kappa=1.0)
    J = derivative_flow(m, solve_euler(m, noise), [1.0])[:, 0]
    assert np.abs(J - np.exp(-path.grid.nodes)).max() < path.grid.h


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_derivative_flow_is_linear_and_gronwall(a, b):
    m = ModelSpec(make_drift("TANH_BOUNDED", 2), IDENT, 0.7, 1.0, (0.1, -0.2))
    noise = sample_fbm(0.7, Grid(0.0, 1.0, 32), 6, d=2)
    path = solve_euler(m, noise)
    e1, e2 = np.array([1.0, 0.0]), np.array([0.3, 1.0])
    lhs = derivative_flow(m, path, a * e1 + b * e2)
    rhs = a * derivative_flow(m, path, e1) + b * derivative_flow(m, path, e2)
    assert np.allclose(lhs, rhs, atol=1e-12)
    v = a * e1 + b * e2
    bound = np.linalg.norm(v) * np.exp(m.lipschitz_K * path.grid.nodes)
    assert np.all(np.linalg.norm(lhs, axis=1) <= bound * (1 + 1e-12) + 1e-15)


def test_solution_is_deterministic():
    m = model("TANH_BOUNDED")
    noise = sample_fbm(0.7, Grid(0.0, 1.0, 64), 8)
    assert np.array_equal(solve_euler(m, noise).values, solve_euler(m, noise).values)


def test_sfde_zero_drift():
    # zero delay drift: kappa = 0
    m = FunctionalModelSpec(make_drift("DELAY_LINEAR", 1, kappa=0.0), IDENT, 0.7, 1.0, 0.25,
                            ConstantSegment((1.5,)))
    noise = sample_fbm(0.7, Grid(0.0, 1.0, 64), 1)
    X = solve_sfde(m, noise)
    assert np.allclose(X.values[X.offset:], 1.5 + noise.values)
    Z = sfde_derivative_flow(m, X, ConstantSegment((2.0,)))
    assert np.all(Z == 2.0)


@pytest.mark.parametrize("n", [256, 512])
def test_sfde_zero_noise_matches_method_of_steps(n):
    m = delay_model()
    X = solve_sfde(m, zero_noise(n))
    z = method_of_steps(1.0, 0.25, lambda s: 1.0, 1.0)
    t = X.grid.nodes
    err = np.abs(X.values[X.offset:, 0] - z(t)).max()
    assert err < 1.0 / n


def test_sfde_first_interval_is_frozen_history_ode():
    m = delay_model(kappa=2.0)
    X = solve_sfde(m, zero_noise(64))
    t = X.grid.nodes
    first = t <= 0.25 + 1e-12
    assert np.allclose(X.values[X.offset:, 0][first], 1.0 - 2.0 * t[first], atol=1e-12)


def test_sfde_derivative_flow_matches_method_of_steps_and_gronwall():
    m = delay_model()
    X = solve_sfde(m, sample_fbm(0.7, Grid(0.0, 1.0, 512), 2))
    Z = sfde_derivative_flow(m, X, ConstantSegment((1.0,)))[:, 0]
    z = method_of_steps(1.0, 0.25, lambda s: 1.0, 1.0)
    assert np.abs(Z[X.offset:] - z(X.grid.nodes)).max() < 2.0 / 512
    assert np.all(np.abs(Z) <= np.exp(m.lipschitz_K * np.r_[np.zeros(X.offset), X.grid.nodes]) + 1e-12)


def test_sfde_rejects_incommensurate_delay():
    m = delay_model(r0=0.3)
    with pytest.raises(ValueError):
        solve_sfde(m, zero_noise(64))


@pytest.mark.parametrize("H,drift", [(0.7, "TANH_BOUNDED"), (0.3, "LINEAR"), (0.7, "LINEAR")])
def test_holder_bound_constant_is_stable(H, drift):
    m = model(drift, H=H)
    lam = default_lambda0(H, m.sigma.alpha0, m.drift.beta0)
    consts = []
    for n in (128, 256):
        for i in range(4):
            noise = sample_fbm(H, Grid(0.0, 1.0, n), 21, index=i)
            path = solve_euler(m, noise)
            consts.append(fitted_holder_constant(path, holder_norm(noise, lam), lam))
    assert max(consts) / min(consts) <= 2.0


def test_default_lambda0_satisfies_constraints():
    for H in (0.55, 0.7, 0.9):
        for a0 in (0.5, 0.8, 1.0):
            if a0 <= H - 0.5:
                continue
            lam = default_lambda0(H, a0, 1.0)
            assert 0 < lam <= H - 0.01
            assert lam > 1 - a0 or lam == H - 0.01
