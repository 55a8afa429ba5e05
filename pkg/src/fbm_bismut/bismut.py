"""Cameron-Martin directions, the integrand ``K_H^* h`` and the Malliavin weight.

Given a solved path, the direction ``h`` has density

    psi(s) = sigma^{-1}(s) [ ((T-s)/T) grad b(X(s)) v + v/T ]

and ``K_H^* h = K_H^{-1}(int_0^. psi)``.  Four routes evaluate the integrand:

* ``explicit``  (H > 1/2): the five-term decomposition, term by term;
* ``generic``   : the weighted fractional-operator matrix of :mod:`.fbm`;
* ``lowh``      (H < 1/2, sigma = I): the weighted Riemann-Liouville integral;
* ``discrete``  : the exact inverse of the discrete Volterra sampler.

The discrete route makes ``sum_k u_k dW_k`` the exact divergence for the
Euler scheme driven by the discrete sampler, so the gradient estimator is
unbiased for the discretised model.  The continuous routes carry an
additional left-point quadrature bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .fbm import (
    FbmPath,
    Provenance,
    inverse_matrix,
    normalization,
    power_difference_weights,
    volterra_weights,
)
from .fractional import Grid, rl_integral_matrix, weyl_matrix
from .models import FunctionalModelSpec, ModelSpec
from .sde import SolutionPath, delay_steps
from .special import beta, gamma

__all__ = [
    "ROUTES",
    "CutoffGamma",
    "WeightPlan",
    "MalliavinWeight",
    "make_plan",
    "build_RHh_density",
    "khstar_h_explicit",
    "khstar_h_generic",
    "khstar_h_lowH",
    "khstar_h_discrete",
    "build_sfde_plan",
    "malliavin_weight",
    "c0_constant",
    "density_batch",
    "sfde_density_batch",
    "integrand_batch",
    "explicit_terms_batch",
    "bismut_gradient",
    "sfde_bismut_gradient",
    "ShiftRow",
    "cameron_martin_shift_test",
    "sfde_shift_test",
    "richardson_ratios",
]

ROUTES = ("discrete", "generic", "explicit", "lowh")


def c0_constant(hurst: float) -> float:
    """``C_0 = int_0^1 (theta^{1/2-H} - 1)(1-theta)^{-1/2-H} dtheta`` for ``H > 1/2``.

    Equals ``B(3/2-H, 1/2-H) - 1/(1/2-H)`` by analytic continuation; positive.
    """
    if not 0.5 < hurst < 1:
        raise ValueError("C_0 is defined for 1/2 < H < 1")
    return beta(1.5 - hurst, 0.5 - hurst) - 1.0 / (0.5 - hurst)


@dataclass(frozen=True)
class CutoffGamma:
    """Cubic smoothstep: 1 on ``[-r0, 0]``, 0 on ``[T - r0, T]``."""

    r0: float
    T: float

    def __post_init__(self):
        if not 0 < self.r0 < self.T:
            raise ValueError("cutoff needs 0 < r0 < T")

    @property
    def width(self) -> float:
        return self.T - self.r0

    def __call__(self, t):
        tau = np.clip(np.asarray(t, dtype=float) / self.width, 0.0, 1.0)
        return 1.0 - tau * tau * (3.0 - 2.0 * tau)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        tau = t / self.width
        inside = (tau > 0) & (tau < 1)
        return np.where(inside, -6.0 * tau * (1.0 - tau) / self.width, 0.0)

    @property
    def max_slope(self) -> float:
        return 1.5 / self.width

    def check(self, nodes: np.ndarray) -> None:
        g = self(nodes)
        if np.any(g[nodes <= 0] != 1.0) or np.any(g[nodes >= self.width] != 0.0):
            raise ValueError("cutoff violates its boundary conditions")


@dataclass(frozen=True, eq=False)
class WeightPlan:
    """Everything needed to evaluate ``delta(h)`` on one realisation.

    ``density`` holds ``psi`` at the nodes ``0..n``; ``increments`` holds the
    increments of the shift ``R_H h`` over each cell (left-point rule), which
    drive the discrete route.
    """

    model: object
    grid: Grid
    path: SolutionPath
    dW: np.ndarray
    density: np.ndarray
    increments: np.ndarray
    direction: object = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MalliavinWeight:
    delta_h: float
    integrand: np.ndarray  # (n, d): values at nodes 0..n-1 used by the left-point sum
    diagnostics: dict = field(default_factory=dict)


def _wiener_increments(path: SolutionPath) -> np.ndarray:
    noise = path.noise
    if not isinstance(noise, FbmPath) or noise.provenance is not Provenance.VOLTERRA or noise.wiener is None:
        raise ValueError("the path must be driven by a VOLTERRA fBm sample with its Wiener path")
    return noise.wiener.increments


def density_batch(model: ModelSpec, X: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """``psi`` at nodes for a batch ``X`` of shape ``(N, n+1, d)``."""
    N, n1, d = X.shape
    t = h * np.arange(n1)
    g = ((model.T - t) / model.T)[None, :, None] * v
    grad_term = np.einsum("nkij,nkj->nki", model.drift.grad(X), np.broadcast_to(g, X.shape))
    inner = grad_term + v / model.T
    return np.einsum("kij,nkj->nki", model.sigma.inverse(t, d), inner)


def make_plan(model: ModelSpec, path: SolutionPath, v) -> WeightPlan:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (model.d,):
        raise ValueError(f"direction has dimension {v.size}, model has {model.d}")
    dW = _wiener_increments(path)
    h = path.grid.h
    psi = density_batch(model, path.values[None], v, h)[0]
    return WeightPlan(model, path.grid, path, dW, psi, psi[:-1] * h, v)


def build_RHh_density(plan: WeightPlan) -> np.ndarray:
    """``(R_H h)'`` at the nodes, shape ``(n+1, d)``."""
    return plan.density


# ---------------------------------------------------------------------------
# integrand routes (batched over a leading path axis)


def _lower_solve(H: float, T: float, n: int, incr: np.ndarray) -> np.ndarray:
    """Solve ``sum_{i<j} kbar[j,i] dt u_i = phi_j`` for ``u``; ``incr`` is ``(N, n, d)``."""
    N, _, d = incr.shape
    L = volterra_weights(H, T, n)[1:] * (T / n)
    phi = np.cumsum(incr, axis=1)
    rhs = np.moveaxis(phi, 1, 0).reshape(n, N * d)
    u = solve_triangular(L, rhs, lower=True, check_finite=False)
    return np.moveaxis(u.reshape(n, N, d), 0, 1)


def _apply_rows(M: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("kj,njd->nkd", M, psi)


def explicit_terms_batch(model: ModelSpec, X: np.ndarray, v: np.ndarray, h: float):
    """The five terms at nodes ``1..n`` (node 0 zero), each divided by ``Gamma(3/2-H)``.

    Includes the ``1/kappa_H`` normalisation.  Returns ``(total, terms)`` where
    ``total`` carries the first-cell average at node 0.
    """
    H = model.hurst
    if not H > 0.5:
        raise ValueError("explicit five-term route needs H > 1/2 (use lowh or generic)")
    if not hasattr(model.sigma, "scale"):
        raise ValueError("explicit route supports scalar diffusion schedules")
    a = H - 0.5
    N, n1, d = X.shape
    n = n1 - 1
    T = model.T
    t = h * np.arange(n1)
    s = 1.0 / model.sigma.scale(t)  # sigma^{-1} = s(t) I
    F = np.einsum("nkij,j->nki", model.drift.grad(X), v)
    G = ((T - t) / T)[None, :, None] * F
    c = v / T
    psi = s[None, :, None] * (G + c)

    with np.errstate(divide="ignore"):
        tpa = np.where(t > 0, t**-a, 0.0)
    Q = weyl_matrix(n, h, a)
    U = power_difference_weights(n, a)
    A_rl = rl_integral_matrix(n, h, 1.0 - a)
    C0 = c0_constant(H)

    I1 = tpa[None, :, None] * psi
    # constant part of I2 through C_0 (the reduction integral equals -C_0 t^{1-2H})
    remainder = _apply_rows(U, psi) - U.sum(axis=1)[None, :, None] * psi
    I2 = a * (t**a)[None, :, None] * (-C0 * (tpa**2)[None, :, None] * psi + h ** (-2 * a) * remainder)
    qs = Q.sum(axis=1) * s - Q @ s
    I3 = qs[None, :, None] * (G + c)
    I4 = -(a / T) * gamma(1.0 - a) * (A_rl @ s)[None, :, None] * F
    w = (T - t) / T * s
    I5 = (Q @ w)[None, :, None] * F - _apply_rows(Q * w[None, :], F)
    pref = 1.0 / (gamma(1.5 - H) * normalization(H))
    terms = {name: pref * arr for name, arr in zip(("I1", "I2", "I3", "I4", "I5"), (I1, I2, I3, I4, I5))}
    for arr in terms.values():
        arr[:, 0] = 0.0
    total = sum(terms.values())
    total[:, 0] = psi[:, 0] * gamma(1.0 - a) / (gamma(1.0 - 2 * a) * (1.0 - a)) * h ** (-a) / normalization(H)
    return total, terms


def integrand_batch(route: str, model, X: np.ndarray, psi: np.ndarray, incr: np.ndarray,
                    h: float, v=None) -> np.ndarray:
    """``K_H^* h`` at nodes ``0..n-1`` for a batch; shape ``(N, n, d)``."""
    H = model.hurst
    n = incr.shape[1]
    T = model.T
    route = route.lower()
    if route == "discrete":
        return _lower_solve(H, T, n, incr)
    if route == "generic":
        return _apply_rows(inverse_matrix(H, T, n), psi)[:, :n]
    if route == "explicit":
        if v is None:
            raise ValueError("explicit route needs the direction v")
        return explicit_terms_batch(model, X, v, h)[0][:, :n]
    if route == "lowh":
        _check_lowh(model)
        return _apply_rows(inverse_matrix(H, T, n), psi)[:, :n]
    raise ValueError(f"unknown route {route!r}; choose from {ROUTES}")


def _check_lowh(model) -> None:
    if not model.hurst < 0.5:
        raise ValueError("low-H route needs H < 1/2")
    if not getattr(model.sigma, "is_identity", False):
        raise ValueError("low-H route needs additive noise (sigma = I)")


def khstar_h_explicit(plan: WeightPlan):
    """Five-term integrand at nodes ``0..n``; returns ``(values, {I1..I5})``."""
    total, terms = explicit_terms_batch(plan.model, plan.path.values[None], plan.direction, plan.grid.h)
    return total[0], {k: v[0] for k, v in terms.items()}


def khstar_h_generic(plan: WeightPlan) -> np.ndarray:
    """``K_H^{-1}`` applied through the weighted operator matrix, nodes ``0..n``."""
    return inverse_matrix(plan.model.hurst, plan.grid.b, plan.grid.n) @ plan.density


def khstar_h_lowH(plan: WeightPlan) -> np.ndarray:
    """``t^{H-1/2} I^{1/2-H}[r^{1/2-H} psi] / kappa_H`` at nodes ``0..n`` (``H < 1/2``)."""
    _check_lowh(plan.model)
    return inverse_matrix(plan.model.hurst, plan.grid.b, plan.grid.n) @ plan.density


def khstar_h_discrete(plan: WeightPlan) -> np.ndarray:
    """Exact inverse of the discrete Volterra map applied to the shift, nodes ``0..n-1``."""
    return _lower_solve(plan.model.hurst, plan.grid.b, plan.grid.n, plan.increments[None])[0]


def malliavin_weight(plan: WeightPlan, integrand=None, route: str = "discrete") -> MalliavinWeight:
    """``delta(h) = sum_k <u_k, dW_k>`` (left-point, adapted)."""
    diagnostics = {}
    if integrand is None:
        route = route.lower()
        if route == "discrete":
            integrand = khstar_h_discrete(plan)
        elif route == "explicit":
            integrand, terms = khstar_h_explicit(plan)
            diagnostics = {k: float(np.sqrt(np.sum(v[1:] ** 2) * plan.grid.h)) for k, v in terms.items()}
        elif route == "lowh":
            integrand = khstar_h_lowH(plan)
        elif route == "generic":
            integrand = khstar_h_generic(plan)
        else:
            raise ValueError(f"unknown route {route!r}")
    u = np.asarray(integrand, dtype=float)
    n = plan.grid.n
    u = u[:n] if u.shape[0] == n + 1 else u
    if u.shape[0] != n:
        raise ValueError("integrand must have n or n+1 node values")
    u = u.reshape(n, -1)
    if not np.all(np.isfinite(u)):
        raise ValueError("integrand is not finite")
    delta = float(np.sum(u * plan.dW))
    return MalliavinWeight(delta, u, diagnostics)


# ---------------------------------------------------------------------------
# delay equations


def _gamma_nodes(gam: CutoffGamma, h: float, m: int, n: int) -> np.ndarray:
    return gam(h * np.arange(-m, n + 1))


def sfde_density_batch(model: FunctionalModelSpec, X: np.ndarray, eta_hist: np.ndarray,
                       gam: CutoffGamma, h: float):
    """Shift density and increments for the SFDE direction ``(eta, gamma)``.

    ``Gamma = eta`` on ``[-r0, 0]`` and ``eta(0) gamma(t)`` afterwards.  The
    increments over cell ``k`` are ``sigma^{-1}(t_k)[(grad_{Gamma_seg} b)(X_seg) h
    - (gamma_{k+1} - gamma_k) eta(0)]``, which makes the first-order
    perturbation equal ``-eps Gamma`` exactly on the grid.
    Returns ``(psi (N, n+1, d), incr (N, n, d), Gamma (m+n+1, d))``.
    """
    N, total, d = X.shape
    m = delay_steps(model, h)
    n = total - m - 1
    gvals = _gamma_nodes(gam, h, m, n)
    Gam = np.empty((total, d))
    Gam[: m + 1] = eta_hist
    Gam[m + 1:] = gvals[m + 1:, None] * eta_hist[-1]
    t = h * np.arange(n + 1)
    sinv = 1.0 / model.sigma.scale(t)
    segs = np.lib.stride_tricks.sliding_window_view(X, m + 1, axis=1)  # (N, n+1, d, m+1)
    gsegs = np.lib.stride_tricks.sliding_window_view(Gam, m + 1, axis=0)  # (n+1, d, m+1)
    drift_dir = model.drift.directional(np.moveaxis(segs, -1, -2),
                                        np.broadcast_to(np.moveaxis(gsegs, -1, -2), segs.shape[:2] + (m + 1, d)))
    gdot = gam.derivative(t)
    psi = sinv[None, :, None] * (drift_dir - gdot[None, :, None] * eta_hist[-1])
    dg = np.diff(gvals[m:])
    incr = sinv[None, :-1, None] * (drift_dir[:, :-1] * h - dg[None, :, None] * eta_hist[-1])
    return psi, incr, Gam


def build_sfde_plan(model: FunctionalModelSpec, eta, gam: CutoffGamma, path: SolutionPath) -> WeightPlan:
    h = path.grid.h
    m = delay_steps(model, h)
    gam.check(h * np.arange(-m, path.grid.n + 1))
    if callable(eta):
        eta = eta(np.linspace(-model.r0, 0.0, m + 1))
    eta_hist = np.asarray(eta, dtype=float).reshape(m + 1, -1)
    dW = _wiener_increments(path)
    psi, incr, Gam = sfde_density_batch(model, path.values[None], eta_hist, gam, h)
    return WeightPlan(model, path.grid, path, dW, psi[0], incr[0], (eta_hist, gam), {"Gamma": Gam})


# ---------------------------------------------------------------------------
# estimators


def bismut_gradient(model: ModelSpec, f, x, v, N: int, seed: int, n: int = 256,
                    route: str = "discrete", workers: int = 1, chunk: int | None = None):
    """Monte Carlo ``grad_v P_T f(x) = E[f(X_T) delta(h)]``; returns an EstimateReport."""
    from .montecarlo import DEFAULT_CHUNK, EstimateReport, SdeTask, mean_and_se, run_paths

    if N < 100:
        raise ValueError("need N >= 100 paths")
    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)))
    v = tuple(np.atleast_1d(np.asarray(v, dtype=float)))
    model = model.with_x0(x)
    if len(v) != model.d:
        raise ValueError("direction dimension does not match the model")
    task = SdeTask(model, n, seed, (x,), v, route)
    out = run_paths(task, N, workers, chunk or DEFAULT_CHUNK)
    fx = f(out["XT"][0])
    samples = fx * out["delta"]
    est, se = mean_and_se(samples)
    dmean, dse = mean_and_se(out["delta"])
    return EstimateReport(est, se, N, seed, label=f"bismut/{route}",
                          extras={"delta_mean": dmean, "delta_se": dse, "samples": samples})


def sfde_bismut_gradient(model: FunctionalModelSpec, f, eta, N: int, seed: int, n: int = 256,
                         gam: CutoffGamma | None = None, route: str = "discrete",
                         workers: int = 1, chunk: int | None = None):
    """``grad_eta P_T f(xi) = E[f(X(T)) delta(h)]`` for the delay equation."""
    from .montecarlo import DEFAULT_CHUNK, EstimateReport, SfdeTask, mean_and_se, run_paths

    gam = gam or CutoffGamma(model.r0, model.T)
    task = SfdeTask(model, n, seed, (model.xi,), eta, gam, route)
    out = run_paths(task, N, workers, chunk or DEFAULT_CHUNK)
    samples = f(out["XT"][0]) * out["delta"]
    est, se = mean_and_se(samples)
    return EstimateReport(est, se, N, seed, label=f"sfde-bismut/{route}",
                          extras={"samples": samples})


@dataclass(frozen=True)
class ShiftRow:
    eps: float
    defect: float


def cameron_martin_shift_test(model: ModelSpec, x, v, eps_list, seed: int, n: int = 256,
                              index: int = 0) -> list[ShiftRow]:
    """Compare ``X^{x + eps v}(T)`` with ``X^x(T)`` under the noise shifted by ``eps R_H h``.

    One fixed realisation; ``defect(eps) = |difference at T|`` is ``O(eps^2)``.
    """
    from .rng import normal_increments
    from .sde import euler_batch

    eps_list = [float(e) for e in eps_list]
    if any(not 0 < e <= 0.1 for e in eps_list):
        raise ValueError("eps values must lie in (0, 0.1]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    model = model.with_x0(x)
    h = model.T / n
    dW = normal_increments(seed, [index], n, model.d, h)
    dB = np.diff(np.einsum("ji,nid->njd", volterra_weights(model.hurst, model.T, n), dW), axis=1)
    X = euler_batch(model, x, dB, h)
    shift = density_batch(model, X, v, h)[:, :-1] * h  # increments of R_H h in B-space
    rows = []
    for e in eps_list:
        moved = euler_batch(model, x + e * v, dB, h)[0, -1]
        shifted = euler_batch(model, x, dB + e * shift, h)[0, -1]
        rows.append(ShiftRow(e, float(np.linalg.norm(moved - shifted))))
    return rows


def sfde_shift_test(model: FunctionalModelSpec, eta, eps_list, seed: int, n: int = 256,
                    gam: CutoffGamma | None = None, index: int = 0) -> list[ShiftRow]:
    """Delay-equation analogue: ``X^{xi + eps eta}(T)`` against the shifted-noise solution."""
    from .rng import normal_increments
    from .sde import sfde_batch

    gam = gam or CutoffGamma(model.r0, model.T)
    h = model.T / n
    m = delay_steps(model, h)
    s = np.linspace(-model.r0, 0.0, m + 1)
    xi = np.asarray(model.xi(s), dtype=float)
    eta_hist = np.asarray(eta(s) if callable(eta) else eta, dtype=float).reshape(m + 1, model.d)
    dW = normal_increments(seed, [index], n, model.d, h)
    dB = np.diff(np.einsum("ji,nid->njd", volterra_weights(model.hurst, model.T, n), dW), axis=1)
    X = sfde_batch(model, xi, dB, h)
    _, incr, _ = sfde_density_batch(model, X, eta_hist, gam, h)
    rows = []
    for e in eps_list:
        moved = sfde_batch(model, xi + e * eta_hist, dB, h)[0, -1]
        shifted = sfde_batch(model, xi, dB + e * incr, h)[0, -1]
        rows.append(ShiftRow(float(e), float(np.linalg.norm(moved - shifted))))
    return rows


def richardson_ratios(rows: list[ShiftRow]) -> list[float]:
    """``defect(eps_i) / defect(eps_{i+1})`` for consecutive rows (nan when 0/0)."""
    out = []
    for a, b in zip(rows, rows[1:]):
        out.append(a.defect / b.defect if b.defect > 0 else float("nan"))
    return out
