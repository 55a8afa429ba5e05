"""Slow, independent reference computations used by the tests and the CLI.

Nothing here reuses the product-integration or stepping code under test:
integrals go through QUADPACK (``scipy.integrate.quad`` with algebraic
weights), the kernel through ``scipy.special.hyp2f1``, matrix exponentials
through ``scipy.linalg.expm`` and delay ODEs through ``solve_ivp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

__all__ = [
    "OracleResult",
    "quad_frac_integral",
    "kernel_oracle",
    "kernel_dt_closed_form",
    "reconstruction_oracle",
    "forward_kernel_oracle",
    "fd_gradient",
    "sfde_fd_gradient",
    "linear_model_flow",
    "method_of_steps",
]

METHODS = ("QUAD", "FD-CRN", "CLOSED", "STEPS")


@dataclass(frozen=True)
class OracleResult:
    value: float
    error: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown oracle method {self.method}")
        if not self.error >= 0:
            raise ValueError("error estimate must be non-negative")


def quad_frac_integral(f, alpha: float, x: float, tol: float = 1e-10, a: float = 0.0) -> OracleResult:
    """``I_{a+}^alpha f (x)`` by adaptive quadrature with the ``(x-y)^{alpha-1}`` weight."""
    if not alpha > 0 or not tol > 0:
        raise ValueError("need alpha > 0 and tol > 0")
    if x <= a:
        return OracleResult(0.0, 0.0, "QUAD")
    if alpha == 1.0:
        val, err = quad(f, a, x, epsabs=tol, epsrel=tol, limit=500)
    else:
        val, err = quad(f, a, x, weight="alg", wvar=(0.0, alpha - 1.0), epsabs=tol, epsrel=tol, limit=500)
    if err > 10 * tol:
        raise ArithmeticError(f"quadrature refinement limit reached (error {err:.2e})")
    g = special.gamma(alpha)
    return OracleResult(val / g, err / g, "QUAD")


def _kappa(H: float) -> float:
    return math.sqrt(2 * H * special.gamma(1.5 - H) * special.gamma(H + 0.5) / special.gamma(2 - 2 * H))


def kernel_oracle(H: float, t: float, s: float) -> float:
    """Normalised kernel through scipy's hypergeometric routine."""
    return _kappa(H) / special.gamma(H + 0.5) * (t - s) ** (H - 0.5) * special.hyp2f1(
        H - 0.5, 0.5 - H, H + 0.5, 1.0 - t / s)


def kernel_dt_closed_form(H: float, t, s):
    """``dK/dt = c_H (t/s)^{H-1/2} (t-s)^{H-3/2}`` (times ``H-1/2`` for ``H < 1/2``)."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if H > 0.5:
        c = math.sqrt(H * (2 * H - 1) / special.beta(2 - 2 * H, H - 0.5))
    elif H < 0.5:
        c = math.sqrt(2 * H / ((1 - 2 * H) * special.beta(1 - 2 * H, H + 0.5))) * (H - 0.5)
    else:
        return np.zeros(np.broadcast(t, s).shape)
    return c * (t / s) ** (H - 0.5) * (t - s) ** (H - 1.5)


def _smooth_kernel(H: float):
    e0, e1 = -abs(H - 0.5), H - 0.5

    def k(u):
        u = min(max(u, 1e-300), 1.0 - 1e-15)
        return kernel_oracle(H, 1.0, u) / (u**e0 * (1.0 - u) ** e1)

    return k, e0, e1


def forward_kernel_oracle(H: float, g, dg, t: float, tol: float = 1e-11):
    """``(K_H g)(t)`` and its derivative via ``s = t u``:

    ``(K g)(t) = t^{H+1/2} int_0^1 K(1,u) g(tu) du``, differentiated under the integral.
    """
    if t <= 0:
        return OracleResult(0.0, 0.0, "QUAD"), OracleResult(0.0, 0.0, "QUAD")
    k, e0, e1 = _smooth_kernel(H)
    opts = dict(weight="alg", wvar=(e0, e1), epsabs=tol, epsrel=tol, limit=200)
    i1, r1 = quad(lambda u: k(u) * g(t * u), 0.0, 1.0, **opts)
    i2, r2 = quad(lambda u: k(u) * u * dg(t * u), 0.0, 1.0, **opts)
    val = t ** (H + 0.5) * i1
    der = (H + 0.5) * t ** (H - 0.5) * i1 + t ** (H + 0.5) * i2
    return (OracleResult(val, t ** (H + 0.5) * r1, "QUAD"),
            OracleResult(der, (H + 0.5) * t ** (H - 0.5) * r1 + t ** (H + 0.5) * r2, "QUAD"))


def reconstruction_oracle(H: float, t: float, s: float, tol: float = 1e-11) -> OracleResult:
    """``int_0^{min} K(t,r) K(s,r) dr`` by QUADPACK (split at the midpoint)."""
    lo, hi = min(t, s), max(t, s)
    e0 = -2 * abs(H - 0.5)
    eT = (H - 0.5) * (2 if lo == hi else 1)

    def clamp(r):
        return min(max(r, 1e-300), lo * (1 - 1e-15))

    def prod(r):
        return kernel_oracle(H, lo, r) * kernel_oracle(H, hi, r)

    def left(r):
        r = clamp(r)
        return prod(r) / r**e0

    def right(r):
        r = clamp(r)
        return prod(r) / (lo - r) ** eT

    mid = 0.5 * lo
    opts = dict(epsabs=tol, epsrel=tol, limit=200)
    a, ea = quad(left, 0.0, mid, weight="alg", wvar=(e0, 0.0), **opts)
    b, eb = quad(right, mid, lo, weight="alg", wvar=(0.0, eT), **opts)
    return OracleResult(a + b, ea + eb, "QUAD")


# ---------------------------------------------------------------------------
# finite differences with common random numbers


def _fd_from_terminal(f, XT: np.ndarray, step: float) -> OracleResult:
    # XT rows: x+s, x-s, x+2s, x-2s
    d1 = (f(XT[0]) - f(XT[1])) / (2 * step)
    d2 = (f(XT[2]) - f(XT[3])) / (4 * step)
    m1 = float(np.mean(d1))
    se = float(np.std(d1, ddof=1) / np.sqrt(d1.size))
    curvature = abs(float(np.mean(d2)) - m1) / 3.0
    return OracleResult(m1, se + curvature, "FD-CRN")


def fd_gradient(model, f, x, v, step: float, N: int, seed: int, n: int = 256,
                workers: int = 1) -> OracleResult:
    """Central difference of ``P_T f`` along ``v`` with identical noise on every leg.

    Error estimate: Monte Carlo SE of the difference plus a Richardson proxy
    ``|D(2 step) - D(step)| / 3`` for the ``step^2`` truncation term.
    """
    from .montecarlo import SdeTask, run_paths

    if not 1e-5 <= step <= 1e-1:
        raise ValueError("step must lie in [1e-5, 1e-1]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    starts = tuple(tuple(x + c * step * v) for c in (1, -1, 2, -2))
    out = run_paths(SdeTask(model.with_x0(x), n, seed, starts), N, workers)
    return _fd_from_terminal(f, out["XT"], step)


def sfde_fd_gradient(model, f, eta, step: float, N: int, seed: int, n: int = 256,
                     workers: int = 1) -> OracleResult:
    """CRN central difference in the direction ``eta`` of the initial segment."""
    from .models import ShiftedSegment
    from .montecarlo import SfdeTask, run_paths

    if not 1e-5 <= step <= 1e-1:
        raise ValueError("step must lie in [1e-5, 1e-1]")
    starts = tuple(ShiftedSegment(model.xi, eta, c * step) for c in (1, -1, 2, -2))
    out = run_paths(SfdeTask(model, n, seed, starts), N, workers)
    return _fd_from_terminal(f, out["XT"], step)


# ---------------------------------------------------------------------------
# closed forms


def linear_model_flow(A, x, T: float) -> OracleResult:
    """``E X(T) = exp(A T) x`` for ``b(x) = A x`` with centred additive noise."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    val = expm(A * T) @ np.atleast_1d(np.asarray(x, dtype=float))
    return OracleResult(val if val.size > 1 else float(val[0]), 0.0, "CLOSED")


def method_of_steps(kappa: float, r0: float, history, T: float, rtol: float = 1e-11):
    """Zero-noise delay ODE ``z'(t) = -kappa z(t - r0)`` solved interval by interval.

    ``history`` is a scalar callable on ``[-r0, 0]``.  Returns a vectorised
    callable ``z(t)`` on ``[-r0, T]``.
    """
    pieces = []  # (start, end, dense solution)

    def z(t):
        t = float(t)
        if t <= 0:
            return float(history(t))
        for a, b, sol in pieces:
            if t <= b + 1e-14:
                return float(sol(min(t, b))[0])
        raise ValueError("time beyond the solved range")

    start = 0.0
    while start < T - 1e-14:
        end = min(start + r0, T)
        z0 = z(start)
        sol = solve_ivp(lambda t, y: [-kappa * z(t - r0)], (start, end), [z0],
                        dense_output=True, rtol=rtol, atol=rtol, max_step=r0 / 50)
        pieces.append((start, end, sol.sol))
        start = end

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        return np.vectorize(z)(t)

    return evaluate
