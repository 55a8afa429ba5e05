"""Riemann-Liouville fractional integrals and derivatives on uniform grids.

All operators use product integration: the sampled function is replaced by its
piecewise-linear interpolant and the singular power kernel is integrated
exactly against each hat function.  The operators are therefore exact on
piecewise-linear data and reduce to lower-triangular matrices that are built
once per ``(n, h, alpha)`` and cached.

Right-sided operators are real-valued: the complex phase ``(-1)^{-alpha}`` of
the textbook definition is dropped.  Do not compose them with left-sided ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import binom

from .special import gamma

__all__ = [
    "Grid",
    "GridFunction",
    "InsufficientRegularityError",
    "hat_power_weights",
    "rl_integral_matrix",
    "weyl_matrix",
    "left_frac_integral",
    "right_frac_integral",
    "left_frac_derivative",
    "right_frac_derivative",
    "weyl_derivative_values",
]

OVERFLOW_GUARD = 1e12


class InsufficientRegularityError(ValueError):
    """The Weyl integral diverged or the function is singular at the base point."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``a = t_0 < ... < t_n = b`` on ``[a, b]``."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"grid needs a < b, got [{self.a}, {self.b}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 intervals, got {self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n + 1)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def sample(self, f) -> "GridFunction":
        """Evaluate a vectorised callable at the nodes."""
        return GridFunction(self, np.asarray(f(self.nodes), dtype=float))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Scalar or vector values (shape ``(n+1,)`` or ``(n+1, d)``) on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2) or v.shape[0] != self.grid.n + 1:
            raise ValueError(f"expected {self.grid.n + 1} node values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    __rmul__ = __mul__


def _second_difference(q: float, m: np.ndarray) -> np.ndarray:
    """``(m+1)^q - 2 m^q + (m-1)^q`` for integer ``m >= 1`` without cancellation."""
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    small = m < 4
    ms = m[small]
    out[small] = (ms + 1) ** q - 2 * ms**q + (ms - 1) ** q
    mb = m[~small]
    x = 1.0 / mb
    acc = np.zeros_like(mb)
    for i in range(2, 40, 2):
        acc += binom(q, i) * x**i
    out[~small] = 2.0 * mb**q * acc
    return out


def _backward_tail(q: float, k: np.ndarray) -> np.ndarray:
    """``q k^(q-1) - (k^q - (k-1)^q)`` for integer ``k >= 1`` without cancellation."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    small = k < 4
    ks = k[small]
    out[small] = q * ks ** (q - 1) - (ks**q - (ks - 1) ** q)
    kb = k[~small]
    x = 1.0 / kb
    acc = np.zeros_like(kb)
    for i in range(2, 40):
        acc += binom(q, i) * (-x) ** i
    out[~small] = kb**q * acc
    return out


@lru_cache(maxsize=128)
def hat_power_weights(n: int, p: float) -> np.ndarray:
    """Matrix ``A[k, j] = int hat_j(r) (k - r)^p dr`` over ``[0, k]`` on the unit grid.

    ``hat_j`` is the piecewise-linear basis function of node ``j``.  Requires
    ``p > -2``; for ``p <= -1`` the diagonal is singular and left at zero, which
    is what the Weyl form needs (its integrand vanishes at ``r = k``).
    """
    if p <= -2:
        raise ValueError("power must exceed -2")
    q = p + 2.0
    scale = 1.0 / ((p + 1.0) * q)
    mvals = np.arange(1, n + 1)
    interior = _second_difference(q, mvals) * scale  # indexed by m = k - j
    first = _backward_tail(q, mvals) * scale  # j = 0 column, indexed by k
    A = np.zeros((n + 1, n + 1))
    k_idx, j_idx = np.tril_indices(n + 1, -1)
    A[k_idx, j_idx] = interior[k_idx - j_idx - 1]
    A[1:, 0] = first
    if p > -1:
        A[np.arange(n + 1), np.arange(n + 1)] = scale
        A[0, 0] = 0.0
    A.setflags(write=False)
    return A


@lru_cache(maxsize=128)
def rl_integral_matrix(n: int, h: float, alpha: float) -> np.ndarray:
    """Left Riemann-Liouville integral of order ``alpha`` as a node-to-node matrix."""
    if not alpha > 0:
        raise ValueError(f"integral order must be positive, got {alpha}")
    M = h**alpha / gamma(alpha) * hat_power_weights(n, alpha - 1.0)
    M.setflags(write=False)
    return M


@lru_cache(maxsize=128)
def weyl_matrix(n: int, h: float, alpha: float) -> np.ndarray:
    """Weights ``Q`` with ``alpha * int_a^x (f(x)-f(y))/(x-y)^(1+alpha) dy = sum_j Q[k,j] (f_k - f_j)``."""
    if not 0 < alpha < 1:
        raise ValueError(f"derivative order must lie in (0, 1), got {alpha}")
    Q = alpha * h ** (-alpha) * hat_power_weights(n, -alpha - 1.0)
    Q.setflags(write=False)
    return Q


def _check_finite(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("input values must be finite")
    return values


def _guard(values: np.ndarray) -> np.ndarray:
    bad = np.abs(values) > OVERFLOW_GUARD
    if np.any(bad):
        k = int(np.argwhere(bad)[0][0])
        raise InsufficientRegularityError(f"fractional operator diverged at node {k}")
    return values


def _apply(M: np.ndarray, values: np.ndarray) -> np.ndarray:
    return M @ values


def left_frac_integral(f: GridFunction, alpha: float) -> GridFunction:
    """``I_{a+}^alpha f`` at every node; zero at the left end."""
    g = f.grid
    M = rl_integral_matrix(g.n, g.h, float(alpha))
    return GridFunction(g, _guard(_apply(M, f.values)))


def right_frac_integral(f: GridFunction, alpha: float) -> GridFunction:
    """``I_{b-}^alpha f`` (real convention); zero at the right end."""
    g = f.grid
    M = rl_integral_matrix(g.n, g.h, float(alpha))
    return GridFunction(g, _guard(_apply(M, f.values[::-1])[::-1]))


def weyl_derivative_values(values: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """Weyl-form ``D_{a+}^alpha`` at nodes ``1..n``; entry 0 is NaN.

    The boundary term ``f(x)/(x-a)^alpha`` is singular at ``x = a``, so the base
    node carries no value here.  :func:`left_frac_derivative` applies the
    base-point convention on top of this.
    """
    values = _check_finite(values)
    n = values.shape[0] - 1
    Q = weyl_matrix(n, float(h), float(alpha))
    x = h * np.arange(n + 1)
    rowsum = Q.sum(axis=1)
    diff = rowsum.reshape((-1,) + (1,) * (values.ndim - 1)) * values - Q @ values
    with np.errstate(divide="ignore", invalid="ignore"):
        boundary = x ** (-alpha)
        out = (boundary.reshape(diff.shape[:1] + (1,) * (values.ndim - 1)) * values + diff) / gamma(1.0 - alpha)
    out[0] = np.nan
    return out


def _left_derivative_array(values: np.ndarray, h: float, alpha: float, scale: float) -> np.ndarray:
    if not 0 < alpha < 1:
        raise ValueError(f"derivative order must lie in (0, 1), got {alpha}")
    if np.any(np.abs(values[0]) > 1e-13 * max(1.0, scale)):
        raise InsufficientRegularityError(
            "f(a) != 0: the derivative is singular at the base point"
        )
    out = weyl_derivative_values(values, h, alpha)
    out[0] = 0.0
    return _guard(out)


def left_frac_derivative(f: GridFunction, alpha: float) -> GridFunction:
    """``D_{a+}^alpha f`` via the Weyl representation.

    Raises :class:`InsufficientRegularityError` unless ``f(a) = 0``; the value at
    ``a`` is then defined as 0.
    """
    scale = float(np.max(np.abs(f.values))) if f.values.size else 1.0
    return GridFunction(f.grid, _left_derivative_array(f.values, f.grid.h, float(alpha), scale))


def right_frac_derivative(f: GridFunction, alpha: float) -> GridFunction:
    """``D_{b-}^alpha f`` (real convention), mirror image of the left derivative."""
    scale = float(np.max(np.abs(f.values))) if f.values.size else 1.0
    out = _left_derivative_array(f.values[::-1], f.grid.h, float(alpha), scale)[::-1]
    return GridFunction(f.grid, out)
