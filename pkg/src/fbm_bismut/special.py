"""Special functions: Gauss hypergeometric series and Gauss-Jacobi rules.

The hypergeometric routine only has to cover real arguments ``z < 1``, which is
all the fBm kernel needs.  Negative arguments are mapped into ``[0, 1)`` with
the Pfaff transformation and arguments above 1/2 are handled with the
``1 - z`` connection formula, so the power series never runs with ``|z| > 1/2``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["gamma", "rgamma", "beta", "hyp2f1", "hyp2f1_series", "jacobi_rule"]

_SERIES_TOL = 1e-15
_MAX_TERMS = 400


def gamma(x: float) -> float:
    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal gamma, zero at the poles."""
    if x <= 0 and float(x).is_integer():
        return 0.0
    return 1.0 / math.gamma(x)


def beta(a: float, b: float) -> float:
    """Euler beta function, analytically continued through negative non-integers."""
    return math.gamma(a) * math.gamma(b) * rgamma(a + b)


def hyp2f1_series(a: float, b: float, c: float, z) -> np.ndarray:
    """Plain power series of 2F1, vectorised over ``z``; requires ``|z| < 1``."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1.0):
        raise ValueError("series needs |z| < 1")
    if c <= 0 and float(c).is_integer():
        raise ValueError("c must not be a non-positive integer")
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(_MAX_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
        if np.all(np.abs(term) <= _SERIES_TOL * np.abs(total)):
            return total
    raise ArithmeticError("hypergeometric series did not converge")


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _hyp2f1_unit(a: float, b: float, c: float, w: np.ndarray, wc: np.ndarray) -> np.ndarray:
    """2F1 for ``0 <= w < 1``; ``wc`` is ``1 - w`` computed without cancellation."""
    out = np.empty_like(w)
    near = w <= 0.5
    if np.any(near):
        out[near] = hyp2f1_series(a, b, c, w[near])
    far = ~near
    if np.any(far):
        if _is_nonpositive_int(a) or _is_nonpositive_int(b):
            # terminating polynomial: the series is exact on the whole interval
            out[far] = _polynomial(a, b, c, w[far])
            return out
        s = c - a - b
        if abs(s - round(s)) < 1e-9:
            raise ValueError(f"connection formula degenerate for c-a-b={s}")
        x = wc[far]
        g = math.gamma(c)
        first = g * math.gamma(s) * rgamma(c - a) * rgamma(c - b)
        second = g * math.gamma(-s) * rgamma(a) * rgamma(b)
        val = np.zeros_like(x)
        if first != 0.0:
            val += first * hyp2f1_series(a, b, 1.0 - s, x)
        if second != 0.0:
            val += second * x**s * hyp2f1_series(c - a, c - b, 1.0 + s, x)
        out[far] = val
    return out


def _polynomial(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    m = int(-min(a if _is_nonpositive_int(a) else 0, b if _is_nonpositive_int(b) else 0))
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(m):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
    return total


def hyp2f1(a: float, b: float, c: float, z):
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for real ``z < 1``.

    Relative accuracy is around 1e-13 away from the degenerate parameter sets
    where ``c - a - b`` is an integer.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(z >= 1.0) or not np.all(np.isfinite(z)):
        raise ValueError("hyp2f1 is only implemented for finite z < 1")
    out = np.empty_like(z)
    if a == 0.0 or b == 0.0:
        out[:] = 1.0
        return out[0] if scalar else out
    pos = z >= 0
    if np.any(pos):
        out[pos] = _hyp2f1_unit(a, b, c, z[pos], 1.0 - z[pos])
    neg = ~pos
    if np.any(neg):
        zn = z[neg]
        # Pfaff: w = z/(z-1) maps (-inf, 0) onto (0, 1)
        w = zn / (zn - 1.0)
        out[neg] = (1.0 - zn) ** (-a) * _hyp2f1_unit(a, c - b, c, w, 1.0 / (1.0 - zn))
    return out[0] if scalar else out


@lru_cache(maxsize=64)
def _jacobi_reference(q: int, left: float, right: float) -> tuple[np.ndarray, np.ndarray]:
    # scipy's weight is (1-x)^alpha (1+x)^beta on [-1, 1]
    x, w = roots_jacobi(q, right, left)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def jacobi_rule(q: int, lo, hi, left: float = 0.0, right: float = 0.0):
    """Gauss-Jacobi nodes and weights on ``[lo, hi]`` for ``(s-lo)^left (hi-s)^right``.

    ``lo`` and ``hi`` may be arrays of cell endpoints; the result then has a
    trailing axis of length ``q``.  Integrals are ``sum(weights * g(nodes))``
    where ``g`` is the smooth factor.
    """
    x, w = _jacobi_reference(q, float(left), float(right))
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    weights = w * half ** (1.0 + left + right)
    return nodes, weights
