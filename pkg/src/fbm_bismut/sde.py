"""Pathwise Euler solvers for the fBm-driven SDE and SFDE, plus derivative flows.

Because ``sigma`` depends on time only, the noise term is an exact increment
of the supplied fBm path and plain Euler stepping needs no rough-path
correction.  Batch versions (leading path axis) serve the Monte Carlo code;
the single-path functions wrap them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbm import FbmPath
from .fractional import Grid
from .models import FunctionalModelSpec, ModelSpec

__all__ = [
    "SolverError",
    "SolutionPath",
    "euler_batch",
    "solve_euler",
    "solve_picard",
    "derivative_flow",
    "derivative_flow_batch",
    "delay_steps",
    "sfde_batch",
    "solve_sfde",
    "sfde_derivative_flow",
    "sfde_derivative_flow_batch",
    "fitted_holder_constant",
]


class SolverError(ArithmeticError):
    """The state became non-finite."""


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """Solution values on ``grid``; for SFDEs ``values`` also hold the ``m``
    history nodes on ``[-r0, 0)`` in front, with ``offset = m``."""

    grid: Grid
    values: np.ndarray
    noise: FbmPath | None
    offset: int = 0

    @property
    def times(self) -> np.ndarray:
        h = self.grid.h
        return h * np.arange(-self.offset, self.grid.n + 1)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]


def _check_finite(X: np.ndarray, k: int, offset: int = 0):
    if not np.all(np.isfinite(X)):
        raise SolverError(f"non-finite state at node {k - offset}")


def _noise_grid(model, noise: FbmPath) -> Grid:
    g = noise.grid
    if g.a != 0.0 or abs(g.b - model.T) > 1e-12 * model.T:
        raise ValueError(f"noise grid [{g.a}, {g.b}] does not match [0, {model.T}]")
    return g


def euler_batch(model: ModelSpec, x0: np.ndarray, dB: np.ndarray, h: float) -> np.ndarray:
    """``X_{k+1} = X_k + b(X_k) h + sigma(t_k) dB_k`` for a batch.

    ``x0`` is ``(N, d)`` or ``(d,)``; ``dB`` is ``(N, n, d)``.  Returns ``(N, n+1, d)``.
    """
    N, n, d = dB.shape
    X = np.empty((N, n + 1, d))
    X[:, 0] = x0
    scale = model.sigma.scale(h * np.arange(n))
    sig_diag = _is_scalar_sigma(model.sigma)
    S = None if sig_diag else model.sigma(h * np.arange(n), d)
    for k in range(n):
        noise = scale[k] * dB[:, k] if sig_diag else dB[:, k] @ S[k].T
        X[:, k + 1] = X[:, k] + model.drift(X[:, k]) * h + noise
        _check_finite(X[:, k + 1], k + 1)
    return X


def _is_scalar_sigma(sigma) -> bool:
    return hasattr(sigma, "scale")


def solve_euler(model: ModelSpec, noise: FbmPath) -> SolutionPath:
    g = _noise_grid(model, noise)
    dB = np.diff(noise.values, axis=0)[None]
    if dB.shape[-1] != model.d:
        raise ValueError("noise dimension does not match the model")
    X = euler_batch(model, model.x0_array, dB, g.h)[0]
    return SolutionPath(g, X, noise)


def solve_picard(model: ModelSpec, noise: FbmPath, iters: int, return_all: bool = False):
    """Picard iterates ``X^{m+1}(t) = x0 + int_0^t b(X^m) ds + int_0^t sigma dB^H``.

    The drift integral uses the trapezoid rule and the noise integral the same
    left-point sum as :func:`solve_euler`.  With ``return_all`` every iterate
    is returned (index 0 is the start ``X^0 = x0 + noise``).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    g = _noise_grid(model, noise)
    h = g.h
    dB = np.diff(noise.values, axis=0)
    scale = model.sigma.scale(g.nodes[:-1])[:, None]
    stoch = np.vstack([np.zeros((1, model.d)), np.cumsum(scale * dB, axis=0)])
    X = model.x0_array + stoch
    history = [X]
    for m in range(iters):
        bx = model.drift(X)
        integral = np.vstack([np.zeros((1, model.d)), np.cumsum(0.5 * h * (bx[1:] + bx[:-1]), axis=0)])
        X = model.x0_array + integral + stoch
        if not np.all(np.isfinite(X)):
            k = int(np.argwhere(~np.isfinite(X))[0][0])
            raise SolverError(f"non-finite state at node {k} in Picard iterate {m + 1}")
        history.append(X)
    if return_all:
        return [SolutionPath(g, x, noise) for x in history]
    return SolutionPath(g, X, noise)


def derivative_flow_batch(model: ModelSpec, X: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """``J_{k+1} = J_k + grad b(X_k) J_k h``, ``J_0 = v``; ``X`` is ``(N, n+1, d)``."""
    N, n1, d = X.shape
    J = np.empty_like(X)
    J[:, 0] = v
    for k in range(n1 - 1):
        J[:, k + 1] = J[:, k] + h * np.einsum("nij,nj->ni", model.drift.grad(X[:, k]), J[:, k])
    return J


def derivative_flow(model: ModelSpec, path: SolutionPath, v) -> np.ndarray:
    v = np.broadcast_to(np.asarray(v, dtype=float), (model.d,))
    return derivative_flow_batch(model, path.values[None], v, path.grid.h)[0]


# ---------------------------------------------------------------------------
# delay equations


def delay_steps(model: FunctionalModelSpec, h: float) -> int:
    m = model.r0 / h
    if abs(m - round(m)) > 1e-9 * max(1.0, m):
        raise ValueError(f"delay r0={model.r0} is not a multiple of the step {h}")
    return int(round(m))


def sfde_batch(model: FunctionalModelSpec, hist: np.ndarray, dB: np.ndarray, h: float) -> np.ndarray:
    """Euler for the SFDE; ``hist`` holds ``(N, m+1, d)`` or ``(m+1, d)`` segment values.

    Returns ``(N, m+n+1, d)`` with the history in front.
    """
    N, n, d = dB.shape
    m = delay_steps(model, h)
    X = np.empty((N, m + n + 1, d))
    X[:, : m + 1] = hist
    scale = model.sigma.scale(h * np.arange(n))
    for k in range(n):
        seg = X[:, k : k + m + 1]
        X[:, m + k + 1] = X[:, m + k] + model.drift(seg) * h + scale[k] * dB[:, k]
        _check_finite(X[:, m + k + 1], k + 1)
    return X


def solve_sfde(model: FunctionalModelSpec, noise: FbmPath) -> SolutionPath:
    g = _noise_grid(model, noise)
    m = delay_steps(model, g.h)
    dB = np.diff(noise.values, axis=0)[None]
    X = sfde_batch(model, model.initial_segment(m), dB, g.h)[0]
    return SolutionPath(g, X, noise, offset=m)


def sfde_derivative_flow_batch(model: FunctionalModelSpec, X: np.ndarray, eta_hist: np.ndarray,
                               h: float) -> np.ndarray:
    """``Z_{k+1} = Z_k + (grad_{Z_seg} b)(X_seg) h`` with ``Z = eta`` on ``[-r0, 0]``."""
    N, total, d = X.shape
    m = delay_steps(model, h)
    Z = np.empty_like(X)
    Z[:, : m + 1] = eta_hist
    for k in range(total - m - 1):
        Z[:, m + k + 1] = Z[:, m + k] + h * model.drift.directional(
            X[:, k : k + m + 1], Z[:, k : k + m + 1])
    return Z


def sfde_derivative_flow(model: FunctionalModelSpec, path: SolutionPath, eta) -> np.ndarray:
    """Derivative of the solution in the direction of the initial segment ``eta``.

    ``eta`` is a segment callable or an array of the ``m+1`` history node values.
    """
    m = path.offset
    if callable(eta):
        eta = eta(np.linspace(-model.r0, 0.0, m + 1))
    eta = np.asarray(eta, dtype=float).reshape(m + 1, -1)
    return sfde_derivative_flow_batch(model, path.values[None], eta, path.grid.h)[0]


# ---------------------------------------------------------------------------
# Hoelder bound


def fitted_holder_constant(path: SolutionPath, noise_holder: float, lam: float) -> float:
    """Smallest ``C`` with ``|X(t)-X(s)| <= C (|t-s| + ||B||_lam |t-s|^lam)`` over node pairs."""
    X = path.values[path.offset:]
    h = path.grid.h
    best = 0.0
    for m in range(1, X.shape[0]):
        dt = m * h
        inc = np.sqrt(np.sum((X[m:] - X[:-m]) ** 2, axis=1)).max()
        best = max(best, float(inc) / (dt + noise_holder * dt**lam))
    return best
