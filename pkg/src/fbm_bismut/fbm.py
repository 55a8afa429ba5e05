"""Fractional Brownian motion: covariance, Volterra kernel and its transforms.

The kernel is normalised so that ``int_0^{t^s} K(t,r) K(s,r) dr = R_H(t,s)``
exactly.  The bare hypergeometric expression carries the covariance
``V_H R_H`` with ``V_H = Gamma(2-2H) cos(pi H) / (pi H (1-2H))``; the factor
``kappa_H = V_H^{-1/2}`` fixes that, and the inverse operator carries ``1/kappa_H``.

Kernel quantities are homogeneous, ``K(c t, c s) = c^{H-1/2} K(t, s)``, so all
grid matrices are computed once on the unit grid and rescaled.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from .fractional import Grid, GridFunction, left_frac_derivative, weyl_matrix
from .rng import normal_increments
from .special import gamma, hyp2f1, jacobi_rule

__all__ = [
    "Regime",
    "Hurst",
    "Provenance",
    "WienerPath",
    "FbmPath",
    "FactorizationError",
    "normalization",
    "covariance",
    "covariance_matrix",
    "kernel_KH",
    "kernel_KH_dt",
    "volterra_weights",
    "forward_matrix",
    "apply_KH",
    "apply_KH_star",
    "apply_KH_inverse",
    "inverse_matrix",
    "power_difference_weights",
    "low_inverse_weights",
    "kernel_reconstruction",
    "isometry_gram",
    "sample_fbm",
    "sample_fbm_batch",
    "holder_norm",
]

QUAD_NODES = 10


class Regime(enum.Enum):
    LOW = "LOW"
    BROWNIAN = "BROWNIAN"
    HIGH = "HIGH"


@dataclass(frozen=True)
class Hurst:
    h: float

    def __post_init__(self):
        if not 0.0 < self.h < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.h}")

    @property
    def regime(self) -> Regime:
        if self.h < 0.5:
            return Regime.LOW
        return Regime.BROWNIAN if self.h == 0.5 else Regime.HIGH


def _h(hurst) -> float:
    return Hurst(float(hurst.h if isinstance(hurst, Hurst) else hurst)).h


class Provenance(enum.Enum):
    VOLTERRA = "VOLTERRA"
    COVFACTOR = "COVFACTOR"


class FactorizationError(RuntimeError):
    """Covariance matrix not numerically positive definite."""


@dataclass(frozen=True, eq=False)
class WienerPath:
    grid: Grid
    increments: np.ndarray  # (n, d), each N(0, h)
    seed: int
    index: int = 0

    @property
    def values(self) -> np.ndarray:
        d = self.increments.shape[1]
        return np.vstack([np.zeros((1, d)), np.cumsum(self.increments, axis=0)])


@dataclass(frozen=True, eq=False)
class FbmPath:
    grid: Grid
    values: np.ndarray  # (n+1, d)
    provenance: Provenance
    hurst: float
    wiener: WienerPath | None = None


def normalization(hurst) -> float:
    """``kappa_H`` with ``kappa_H^2 = 2H Gamma(3/2-H) Gamma(H+1/2) / Gamma(2-2H)``."""
    H = _h(hurst)
    return math.sqrt(2 * H * gamma(1.5 - H) * gamma(H + 0.5) / gamma(2 - 2 * H))


def covariance(hurst, t, s):
    """``R_H(t, s) = (t^2H + s^2H - |t-s|^2H) / 2``."""
    H = _h(hurst)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("covariance needs non-negative times")
    out = 0.5 * (t ** (2 * H) + s ** (2 * H) - np.abs(t - s) ** (2 * H))
    return out[()] if out.ndim == 0 else out


def covariance_matrix(hurst, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return covariance(hurst, times[:, None], times[None, :])


def _check_pairs(t, s):
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(s >= t):
        raise ValueError("kernel needs 0 < s < t")
    return np.broadcast_arrays(t, s)


def kernel_KH(hurst, t, s):
    """Volterra kernel ``K_H(t, s)`` for ``0 < s < t``."""
    H = _h(hurst)
    t, s = _check_pairs(t, s)
    if H == 0.5:
        out = np.ones(t.shape)
    else:
        c = normalization(H) / gamma(H + 0.5)
        z = 1.0 - t / s
        out = c * (t - s) ** (H - 0.5) * hyp2f1(H - 0.5, 0.5 - H, H + 0.5, z)
    return out[()] if out.ndim == 0 else out


def kernel_KH_dt(hurst, t, s):
    """``dK_H/dt (t, s)``, by term-wise differentiation of the hypergeometric form."""
    H = _h(hurst)
    t, s = _check_pairs(t, s)
    if H == 0.5:
        out = np.zeros(t.shape)
    else:
        a, b, c = H - 0.5, 0.5 - H, H + 0.5
        pre = normalization(H) / gamma(H + 0.5)
        z = 1.0 - t / s
        u = t - s
        out = pre * (
            a * u ** (a - 1.0) * hyp2f1(a, b, c, z)
            - u**a * (a * b / c) * hyp2f1(a + 1, b + 1, c + 1, z) / s
        )
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# cell moments of the kernel on the unit grid


def _cell_rules(n: int, left_exp: float, right_exp: float, q: int):
    """Quadrature for every (row k, cell c) pair with c < k on the unit grid.

    Returns ``(k, c, nodes, weights, wfun)`` where ``wfun`` is the Jacobi weight
    evaluated at the nodes, so ``weights * f(nodes) / wfun`` integrates ``f``.
    Cell ``[0, 1]`` carries ``s^left_exp`` and the last cell ``[k-1, k]`` carries
    ``(k - s)^right_exp``.
    """
    ks, cs, nodes, weights, wfun = [], [], [], [], []
    k_all, c_all = np.tril_indices(n + 1, -1)
    for first, last in ((True, True), (True, False), (False, True), (False, False)):
        sel = ((c_all == 0) == first) & ((c_all == k_all - 1) == last)
        if not np.any(sel):
            continue
        k, c = k_all[sel], c_all[sel]
        le = left_exp if first else 0.0
        re = right_exp if last else 0.0
        x, w = jacobi_rule(q, c, c + 1.0, le, re)
        wf = np.ones_like(x)
        if le:
            wf = wf * (x - c[:, None]) ** le
        if re:
            wf = wf * (k[:, None] - x) ** re
        ks.append(k)
        cs.append(c)
        nodes.append(x)
        weights.append(w)
        wfun.append(wf)
    return (np.concatenate(ks), np.concatenate(cs), np.concatenate(nodes),
            np.concatenate(weights), np.concatenate(wfun))


@lru_cache(maxsize=32)
def _kernel_hat_moments(H: float, n: int, q: int = QUAD_NODES):
    """``(falling, rising)`` moments of ``K(k, s)`` over unit cells.

    ``falling[k, c] = int_c^{c+1} K(k,s)(c+1-s) ds`` and ``rising[k, c]`` uses
    ``(s - c)``.  Singularities: ``s^{-|H-1/2|}`` at the origin and
    ``(k-s)^{H-1/2}`` on the diagonal.
    """
    k, c, x, w, wf = _cell_rules(n, -abs(H - 0.5), H - 0.5, q)
    kv = kernel_KH(H, np.broadcast_to(k[:, None], x.shape).astype(float), x)
    base = w * kv / wf
    falling = np.zeros((n + 1, n))
    rising = np.zeros((n + 1, n))
    falling[k, c] = np.sum(base * (c[:, None] + 1.0 - x), axis=1)
    rising[k, c] = np.sum(base * (x - c[:, None]), axis=1)
    falling.setflags(write=False)
    rising.setflags(write=False)
    return falling, rising


@lru_cache(maxsize=32)
def volterra_weights(hurst, T: float, n: int) -> np.ndarray:
    """Cell averages ``kbar[j, i] = (1/dt) int_{t_i}^{t_{i+1}} K(t_j, s) ds``.

    ``B(t_j) = sum_i kbar[j, i] dW_i`` is the discrete Volterra representation;
    row 0 is zero.
    """
    H = _h(hurst)
    dt = T / n
    falling, rising = _kernel_hat_moments(H, n)
    W = (falling + rising) * dt ** (H - 0.5)
    W.setflags(write=False)
    return W


@lru_cache(maxsize=32)
def forward_matrix(hurst, T: float, n: int) -> np.ndarray:
    """Matrix of ``f -> int_0^{t_k} K(t_k, s) f(s) ds`` for piecewise-linear ``f``."""
    H = _h(hurst)
    dt = T / n
    falling, rising = _kernel_hat_moments(H, n)
    F = np.zeros((n + 1, n + 1))
    F[:, :n] += falling
    F[:, 1:] += rising
    F *= dt ** (H + 0.5)
    F.setflags(write=False)
    return F


def apply_KH(hurst, f: GridFunction) -> GridFunction:
    """Forward operator ``(K_H f)(t) = int_0^t K_H(t, s) f(s) ds`` on ``[0, T]``."""
    g = f.grid
    if g.a != 0.0:
        raise ValueError("K_H acts on grids starting at 0")
    return GridFunction(g, forward_matrix(_h(hurst), g.b, g.n) @ f.values)


# ---------------------------------------------------------------------------
# inverse operator


@lru_cache(maxsize=32)
def power_difference_weights(n: int, alpha: float, q: int = QUAD_NODES) -> np.ndarray:
    """``U[k, j] = int_0^k hat_j(r) (k^{-a} - r^{-a}) (k - r)^{-a-1} dr`` on the unit grid.

    Cells touching ``r = 0`` or ``r = k`` use Gauss-Jacobi rules for the
    ``r^{-a}`` and ``(k-r)^{-a}`` singularities.
    """
    a = alpha
    U = np.zeros((n + 1, n + 1))
    k_all, c_all = np.tril_indices(n + 1, -1)

    def add(k, c, x, w, smooth):
        vals = w * smooth
        np.add.at(U, (k, c), np.sum(vals * (c[:, None] + 1.0 - x), axis=1))
        np.add.at(U, (k, c + 1), np.sum(vals * (x - c[:, None]), axis=1))

    kf = k_all.astype(float)
    mid = (c_all >= 1) & (c_all <= k_all - 2)
    k, c = kf[mid], c_all[mid]
    x, w = jacobi_rule(q, c, c + 1.0)
    K = k[:, None]
    add(k_all[mid], c, x, w, (K**-a - x**-a) * (K - x) ** (-a - 1))

    first = (c_all == 0) & (k_all >= 2)
    k, c = kf[first], c_all[first]
    K = k[:, None]
    x, w = jacobi_rule(q, c, c + 1.0)
    add(k_all[first], c, x, w, K**-a * (K - x) ** (-a - 1))
    x, w = jacobi_rule(q, c, c + 1.0, left=-a)
    add(k_all[first], c, x, w, -((K - x) ** (-a - 1)))

    last = (c_all == k_all - 1) & (k_all >= 2)
    k, c = kf[last], c_all[last]
    K = k[:, None]
    x, w = jacobi_rule(q, c, c + 1.0, right=-a)
    add(k_all[last], c, x, w, (K**-a - x**-a) / (K - x))

    one = np.array([0])
    x, w = jacobi_rule(q, one, one + 1.0, left=-a, right=-a)
    add(np.array([1]), one, x, w, (x**a - 1.0) / (1.0 - x))
    U.setflags(write=False)
    return U


@lru_cache(maxsize=32)
def _high_inverse_unit(n: int, alpha: float) -> np.ndarray:
    """Unit-grid matrix of ``psi -> t^a D^a [u^{-a} psi](t)``, ``a = H - 1/2``.

    Weyl form with the split ``t^{-a}psi(t) - r^{-a}psi(r) =
    t^{-a}(psi(t)-psi(r)) + (t^{-a}-r^{-a}) psi(r)``; the second piece uses
    :func:`power_difference_weights`.
    """
    a = alpha
    U = power_difference_weights(n, a)
    Q = weyl_matrix(n, 1.0, a)
    kk = np.arange(n + 1, dtype=float)
    G = np.zeros((n + 1, n + 1))
    with np.errstate(divide="ignore"):
        diag = kk ** (-a) + Q.sum(axis=1)
    G[np.arange(1, n + 1), np.arange(1, n + 1)] = diag[1:]
    G -= Q
    G += a * (kk**a)[:, None] * U
    G /= gamma(1.0 - a)
    # node 0: first-cell average of the leading term  Gamma(1-a)/Gamma(1-2a) t^{-a} psi(0)
    G[0, :] = 0.0
    G[0, 0] = gamma(1.0 - a) / (gamma(1.0 - 2 * a) * (1.0 - a))
    G.setflags(write=False)
    return G


@lru_cache(maxsize=32)
def low_inverse_weights(n: int, beta: float, q: int = QUAD_NODES) -> np.ndarray:
    """Unit-grid matrix of ``psi -> t^{-b} I^b [u^b psi](t)``, ``b = 1/2 - H``."""
    b = beta
    V = np.zeros((n + 1, n + 1))
    k_all, c_all = np.tril_indices(n + 1, -1)
    kf = k_all.astype(float)

    def add(k, c, x, w, smooth):
        vals = w * smooth
        np.add.at(V, (k, c), np.sum(vals * (c[:, None] + 1.0 - x), axis=1))
        np.add.at(V, (k, c + 1), np.sum(vals * (x - c[:, None]), axis=1))

    mid = (c_all >= 1) & (c_all <= k_all - 2)
    c, K = c_all[mid], kf[mid][:, None]
    x, w = jacobi_rule(q, c, c + 1.0)
    add(k_all[mid], c, x, w, (K - x) ** (b - 1) * x**b)

    first = (c_all == 0) & (k_all >= 2)
    c, K = c_all[first], kf[first][:, None]
    x, w = jacobi_rule(q, c, c + 1.0, left=b)
    add(k_all[first], c, x, w, (K - x) ** (b - 1))

    last = (c_all == k_all - 1) & (k_all >= 2)
    c = c_all[last]
    x, w = jacobi_rule(q, c, c + 1.0, right=b - 1)
    add(k_all[last], c, x, w, x**b)

    one = np.array([0])
    x, w = jacobi_rule(q, one, one + 1.0, left=b, right=b - 1)
    add(np.array([1]), one, x, w, np.ones_like(x))

    kk = np.arange(n + 1, dtype=float)
    scale = np.zeros(n + 1)
    scale[1:] = kk[1:] ** (-b) / gamma(b)
    G = scale[:, None] * V
    G.setflags(write=False)
    return G


def inverse_matrix(hurst, T: float, n: int) -> np.ndarray:
    """Matrix taking node values of ``h'`` to node values of ``K_H^{-1} h``.

    High regime: ``s^{H-1/2} D^{H-1/2} (u^{1/2-H} h')``; node 0 holds the
    first-cell average of the leading ``s^{1/2-H}`` singularity so left-point
    sums stay finite.  Low regime: ``s^{H-1/2} I^{1/2-H} (u^{1/2-H} h')``.
    Both include the ``1/kappa_H`` normalisation.
    """
    H = _h(hurst)
    dt = T / n
    kappa = normalization(H)
    if H > 0.5:
        a = H - 0.5
        return dt ** (-a) / kappa * _high_inverse_unit(n, a)
    if H < 0.5:
        b = 0.5 - H
        return dt**b / kappa * low_inverse_weights(n, b)
    return np.eye(n + 1)


def apply_KH_inverse(hurst, fn: GridFunction, derivative: GridFunction | None = None) -> np.ndarray:
    """Node values of ``K_H^{-1} fn`` on a grid ``[0, T]``.

    ``derivative`` is ``fn'`` sampled on the same grid; it is required for
    ``H >= 1/2``.  For ``H < 1/2`` without it, the composite derivative form
    ``s^{1/2-H} D^{1/2-H} s^{H-1/2} D^{2H} fn`` is used, which is markedly less
    accurate near the origin.

    Returns an array (not a :class:`GridFunction`) because in the high regime
    the true value at ``s = 0`` is infinite; see :func:`inverse_matrix` for
    what node 0 holds.
    """
    H = _h(hurst)
    g = fn.grid
    if g.a != 0.0:
        raise ValueError("K_H^{-1} acts on grids starting at 0")
    scale = max(1.0, float(np.max(np.abs(fn.values))))
    if np.any(np.abs(fn.values[0]) > 1e-12 * scale):
        raise ValueError("K_H^{-1} needs fn(0) = 0")
    if derivative is not None:
        if derivative.grid != g:
            raise ValueError("derivative must live on the same grid")
        return inverse_matrix(H, g.b, g.n) @ derivative.values
    if H >= 0.5:
        raise ValueError("derivative of fn is required for H >= 1/2")
    b = 0.5 - H
    inner = left_frac_derivative(fn, 2 * H).values
    t = g.nodes.reshape((-1,) + (1,) * (inner.ndim - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = np.where(t > 0, t ** (-b) * inner, 0.0)
    outer = left_frac_derivative(GridFunction(g, mid), b).values
    return t**b * outer / normalization(H)


# ---------------------------------------------------------------------------
# adjoint operator and isometry checks


def apply_KH_star(hurst, phi: GridFunction, points=None, kind: str = "step") -> np.ndarray:
    """``(K_H^* phi)(s) = K(T,s) phi(s) + int_s^T (phi(r)-phi(s)) dK/dr(r,s) dr``.

    ``kind="step"`` reads ``phi`` as piecewise constant on cells
    ``[t_k, t_{k+1})`` with value ``phi_k``; the integral is then exact through
    kernel differences.  ``kind="linear"`` interpolates linearly and integrates
    ``dK/dr`` with a Gauss-Jacobi rule at ``r = s``.  Values are returned at
    ``points`` in ``(0, T)`` (default: cell midpoints).
    """
    H = _h(hurst)
    g = phi.grid
    if g.a != 0.0:
        raise ValueError("K_H^* acts on grids starting at 0")
    vals = np.asarray(phi.values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite input")
    nodes = g.nodes
    T = g.b
    pts = nodes[:-1] + 0.5 * g.h if points is None else np.asarray(points, dtype=float)
    if np.any(pts <= 0) or np.any(pts >= T):
        raise ValueError("evaluation points must lie in (0, T)")
    cell = np.minimum((pts / g.h).astype(int), g.n - 1)
    if kind == "step":
        table = _kernel_rows(H, nodes, pts)  # K(t_m, s_p), zero where t_m <= s_p
        phi_s = vals[cell]
        out = table[-1][:, None] * phi_s if vals.ndim == 2 else table[-1] * phi_s
        diffs = np.diff(table, axis=0)  # K(t_{m+1}, s) - K(t_m, s), m = 0..n-1
        for p in range(pts.size):
            m = np.arange(cell[p] + 1, g.n)
            out[p] = out[p] + np.tensordot(diffs[m, p], vals[m] - vals[cell[p]], axes=(0, 0))
        return out
    if kind == "linear":
        return _khstar_linear(H, g, vals, pts)
    raise ValueError(f"unknown kind {kind!r}")


def _kernel_rows(H: float, nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    tt = nodes[:, None] + 0.0 * pts[None, :]
    ss = np.broadcast_to(pts[None, :], tt.shape)
    out = np.zeros(tt.shape)
    ok = tt > ss
    out[ok] = kernel_KH(H, tt[ok], ss[ok])
    return out


def _khstar_linear(H: float, g: Grid, vals: np.ndarray, pts: np.ndarray, q: int = 16) -> np.ndarray:
    nodes = g.nodes

    def interp(r):
        if vals.ndim == 1:
            return np.interp(r, nodes, vals)
        return np.stack([np.interp(r, nodes, vals[:, i]) for i in range(vals.shape[1])], axis=-1)

    out = []
    for s in pts:
        c = min(int(s / g.h), g.n - 1)
        phis = interp(np.array([s]))[0]
        acc = kernel_KH(H, g.b, s) * phis
        # partial cell [s, t_{c+1}]: integrand ~ (r-s)^{H-1/2}
        x, w = jacobi_rule(q, s, nodes[c + 1], left=H - 0.5)
        x, w = x.ravel(), w.ravel()
        dk = kernel_KH_dt(H, x, np.full_like(x, s))
        smooth = (interp(x) - phis) / (x - s)[:, None] if vals.ndim == 2 else (interp(x) - phis) / (x - s)
        fac = dk * (x - s) ** (1.5 - H)
        acc = acc + np.tensordot(w * fac, smooth, axes=(0, 0))
        if c + 1 < g.n:
            lo = nodes[c + 1:-1]
            x, w = jacobi_rule(q, lo, lo + g.h)
            dk = kernel_KH_dt(H, x, np.full_like(x, s))
            diff = interp(x.ravel()).reshape(x.shape + vals.shape[1:]) - phis
            acc = acc + np.tensordot((w * dk).ravel(), diff.reshape((-1,) + vals.shape[1:]), axes=(0, 0))
        out.append(acc)
    return np.array(out)


def _pair_rule(H: float, m: int, h: float, diagonal: bool, q: int):
    """Composite rule on ``[0, t_m]`` for ``K(t_j, s) K(t_k, s)`` with ``t_m = min``.

    The first cell carries ``s^{-2|H-1/2|}`` and the last cell carries
    ``(t_m - s)^{H-1/2}``, doubled when ``j = k``.
    """
    left0 = -2 * abs(H - 0.5)
    right = (H - 0.5) * (2 if diagonal else 1)
    lo = h * np.arange(m)
    xs, ws = [], []
    for le, re, cells in ((left0, right if m == 1 else 0.0, lo[:1]),
                          (0.0, 0.0, lo[1:-1]),
                          (0.0, right, lo[-1:] if m > 1 else lo[:0])):
        if cells.size == 0:
            continue
        x, w = jacobi_rule(q, cells, cells + h, le, re)
        wf = np.ones_like(x)
        if le:
            wf = wf * (x - cells[:, None]) ** le
        if re:
            wf = wf * (cells[:, None] + h - x) ** re
        xs.append(x.ravel())
        ws.append((w / wf).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def isometry_gram(hurst, T: float, n: int, idx, q: int = QUAD_NODES) -> np.ndarray:
    """``<K^* 1_[0,t_j), K^* 1_[0,t_k)>_{L^2}`` for node indices ``idx``.

    The indicators go through :func:`apply_KH_star` (step kind), evaluated at
    the nodes of a composite Gauss-Jacobi rule adapted to each pair.
    """
    H = _h(hurst)
    g = Grid(0.0, T, n)
    idx = [int(i) for i in idx]
    out = np.zeros((len(idx), len(idx)))
    for a, j in enumerate(idx):
        for b, k in enumerate(idx[a:], start=a):
            x, w = _pair_rule(H, min(j, k), g.h, j == k, q)
            phis = np.zeros((n + 1, 2))
            phis[:j, 0] = 1.0
            phis[:k, 1] = 1.0
            vals = apply_KH_star(H, GridFunction(g, phis), points=x, kind="step")
            out[a, b] = out[b, a] = float(np.sum(w * vals[:, 0] * vals[:, 1]))
    return out


def kernel_reconstruction(hurst, t: float, s: float, q: int = QUAD_NODES, cells: int = 512) -> float:
    """``int_0^{min(t,s)} K(t,r) K(s,r) dr`` by composite Gauss-Jacobi quadrature."""
    H = _h(hurst)
    lo_t, hi_t = min(t, s), max(t, s)
    h = lo_t / cells
    e0 = -2 * abs(H - 0.5)
    eT = (H - 0.5) * (2 if hi_t == lo_t else 1)
    edges = h * np.arange(cells + 1)
    total = 0.0
    for c in range(cells):
        le = e0 if c == 0 else 0.0
        re = eT if c == cells - 1 else 0.0
        x, w = jacobi_rule(q, edges[c], edges[c + 1], le, re)
        x, w = x.ravel(), w.ravel()
        wf = np.ones_like(x)
        if le:
            wf *= (x - edges[c]) ** le
        if re:
            wf *= (edges[c + 1] - x) ** re
        total += float(np.sum(w * kernel_KH(H, lo_t, x) * kernel_KH(H, hi_t, x) / wf))
    return total


# ---------------------------------------------------------------------------
# sampling


def sample_fbm(hurst, grid: Grid, seed: int, method: str = "volterra", d: int = 1,
               index: int = 0) -> FbmPath:
    """One fBm path on ``grid`` (which must start at 0)."""
    H = _h(hurst)
    if grid.a != 0.0:
        raise ValueError("fBm paths start at time 0")
    method = method.lower()
    if method == "volterra":
        values, dW = sample_fbm_batch(H, grid, seed, [index], "volterra", d)
        return FbmPath(grid, values[0], Provenance.VOLTERRA, H, WienerPath(grid, dW[0], seed, index))
    if method == "covfactor":
        values, _ = sample_fbm_batch(H, grid, seed, [index], "covfactor", d)
        return FbmPath(grid, values[0], Provenance.COVFACTOR, H)
    raise ValueError(f"unknown sampler {method!r}")


def sample_fbm_batch(hurst, grid: Grid, seed: int, indices, method: str = "volterra",
                     d: int = 1):
    """Paths for several indices: returns ``(values (N, n+1, d), dW or None)``."""
    H = _h(hurst)
    indices = np.asarray(indices)
    if method == "volterra":
        dW = normal_increments(seed, indices, grid.n, d, grid.h)
        W = volterra_weights(H, grid.b, grid.n)
        return np.einsum("ji,nid->njd", W, dW), dW
    if method == "covfactor":
        L = _cov_factor(H, grid.b, grid.n)
        z = normal_increments(seed, indices, grid.n, d, 1.0)
        vals = np.einsum("ji,nid->njd", L, z)
        return np.concatenate([np.zeros((indices.size, 1, d)), vals], axis=1), None
    raise ValueError(f"unknown sampler {method!r}")


@lru_cache(maxsize=16)
def _cov_factor(H: float, T: float, n: int) -> np.ndarray:
    times = T / n * np.arange(1, n + 1)
    C = covariance_matrix(H, times)
    try:
        L = cholesky(C, lower=True)
    except LinAlgError:
        C = C + 1e-12 * covariance(H, T, T) * np.eye(n)
        try:
            L = cholesky(C, lower=True)
        except LinAlgError as exc:
            raise FactorizationError(
                "covariance not positive definite; use a coarser grid or the volterra sampler"
            ) from exc
    L.setflags(write=False)
    return L


def holder_norm(path, lam: float, h: float | None = None) -> float:
    """Discrete ``sup |f(t)-f(s)| / |t-s|^lam`` over all node pairs.

    ``path`` is a :class:`GridFunction`, an :class:`FbmPath`, or an array with
    spacing ``h``.
    """
    if isinstance(path, (GridFunction, FbmPath)):
        vals, h = np.asarray(path.values, dtype=float), path.grid.h
    else:
        vals = np.asarray(path, dtype=float)
        if h is None:
            raise ValueError("spacing h required for raw arrays")
    if vals.ndim == 1:
        vals = vals[:, None]
    best = 0.0
    for m in range(1, vals.shape[0]):
        inc = np.sqrt(np.sum((vals[m:] - vals[:-m]) ** 2, axis=1))
        best = max(best, float(inc.max()) / (m * h) ** lam)
    return best
