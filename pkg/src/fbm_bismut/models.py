"""Model specifications and the drift / diffusion / test-function presets.

All callables are top-level classes (not closures) so models pickle cleanly
into worker processes.  Drifts act on batches: ``x`` has shape ``(..., d)``.
Functional drifts act on node-sampled segments of shape ``(..., m+1, d)``
covering ``[-r0, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fbm import Hurst

__all__ = [
    "ZeroDrift",
    "LinearDrift",
    "TanhDrift",
    "DelayLinearDrift",
    "IdentitySigma",
    "DiagHolderSigma",
    "ModelSpec",
    "FunctionalModelSpec",
    "Coordinate",
    "Square",
    "OnePlusTanh",
    "Constant",
    "ExpTilt",
    "SmoothStep",
    "DRIFT_PRESETS",
    "SIGMA_PRESETS",
    "TEST_FUNCTIONS",
    "make_drift",
    "make_sigma",
    "make_test_function",
    "describe_presets",
    "default_lambda0",
    "ConstantSegment",
    "ShiftedSegment",
]


# ---------------------------------------------------------------------------
# drifts


@dataclass(frozen=True)
class ZeroDrift:
    name = "ZERO"
    beta0 = 1.0

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        return np.zeros(x.shape + (d,))

    def lipschitz(self, d: int) -> float:
        return 0.0


@dataclass(frozen=True)
class LinearDrift:
    """``b(x) = A x``; built from ``kappa`` as ``A = -kappa I`` or from an explicit matrix."""

    A: tuple
    name = "LINEAR"
    beta0 = 1.0

    @classmethod
    def from_params(cls, d: int, kappa: float | None = None, A=None) -> "LinearDrift":
        if A is None:
            A = -float(1.0 if kappa is None else kappa) * np.eye(d)
        A = np.asarray(A, dtype=float)
        if A.shape != (d, d):
            raise ValueError(f"LINEAR matrix must be {d}x{d}, got {A.shape}")
        return cls(tuple(map(tuple, A)))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.A)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape + (x.shape[-1],))

    def lipschitz(self, d: int) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class TanhDrift:
    """``b(x)_i = a tanh(c x_i)``: bounded, with bounded Lipschitz gradient."""

    a: float = -1.0
    c: float = 1.5
    name = "TANH_BOUNDED"
    beta0 = 1.0

    def __call__(self, x):
        return self.a * np.tanh(self.c * np.asarray(x, dtype=float))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        diag = self.a * self.c / np.cosh(self.c * x) ** 2
        return diag[..., :, None] * np.eye(x.shape[-1])

    def lipschitz(self, d: int) -> float:
        return abs(self.a * self.c)


@dataclass(frozen=True)
class DelayLinearDrift:
    """Functional drift ``b(phi) = -kappa phi(-r0)``."""

    kappa: float = 1.0
    r0: float = 0.25
    name = "DELAY_LINEAR"
    beta0 = 1.0

    def __call__(self, seg):
        return -self.kappa * np.asarray(seg, dtype=float)[..., 0, :]

    def directional(self, seg, psi):
        """``(nabla_psi b)(phi)``; linear drift, so independent of ``phi``."""
        return -self.kappa * np.asarray(psi, dtype=float)[..., 0, :]

    def lipschitz(self, d: int) -> float:
        return abs(self.kappa)


# ---------------------------------------------------------------------------
# diffusion schedules


@dataclass(frozen=True)
class IdentitySigma:
    name = "IDENTITY"
    alpha0 = 1.0

    def scale(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def __call__(self, t, d: int):
        return np.multiply.outer(self.scale(t), np.eye(d))

    def inverse(self, t, d: int):
        return self(t, d)

    @property
    def is_identity(self) -> bool:
        return True


@dataclass(frozen=True)
class DiagHolderSigma:
    """``sigma(t) = (1 + eps t^alpha0) I``, Hoelder of order ``alpha0`` at 0."""

    alpha0: float = 0.8
    eps: float = 0.5
    name = "DIAG_HOLDER"

    def __post_init__(self):
        if not 0 < self.alpha0 <= 1:
            raise ValueError("alpha0 must lie in (0, 1]")
        if self.eps <= -1:
            raise ValueError("eps must exceed -1 to keep sigma invertible on [0, 1]")

    def scale(self, t):
        return 1.0 + self.eps * np.asarray(t, dtype=float) ** self.alpha0

    def __call__(self, t, d: int):
        return np.multiply.outer(self.scale(t), np.eye(d))

    def inverse(self, t, d: int):
        return np.multiply.outer(1.0 / self.scale(t), np.eye(d))

    @property
    def is_identity(self) -> bool:
        return self.eps == 0.0


# ---------------------------------------------------------------------------
# model specs


def _probe_points(d: int, count: int = 64, seed: int = 12345) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.normal(scale=3.0, size=(count, d))


@dataclass(frozen=True)
class ModelSpec:
    """``dX = b(X) dt + sigma(t) dB^H``, ``X(0) = x0``."""

    drift: object
    sigma: object
    hurst: float
    T: float
    x0: tuple
    lipschitz_K: float | None = None

    def __post_init__(self):
        Hurst(self.hurst)
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        object.__setattr__(self, "x0", x0)
        d = len(x0)
        K = self.drift.lipschitz(d) if self.lipschitz_K is None else float(self.lipschitz_K)
        object.__setattr__(self, "lipschitz_K", K)
        probe = _probe_points(d)
        gnorm = np.linalg.norm(self.drift.grad(probe), ord=2, axis=(-2, -1))
        if np.max(gnorm) > K * (1 + 1e-12) + 1e-12:
            raise ValueError(f"lipschitz_K={K} is below the probed gradient norm {np.max(gnorm):.4g}")
        if self.hurst > 0.5 and not self.sigma.alpha0 > self.hurst - 0.5:
            raise ValueError("sigma must be Hoelder of order alpha0 > H - 1/2")

    @property
    def d(self) -> int:
        return len(self.x0)

    @property
    def x0_array(self) -> np.ndarray:
        return np.array(self.x0)

    def check_sigma(self, nodes: np.ndarray, tol: float = 1e-10) -> None:
        prod = self.sigma(nodes, self.d) @ self.sigma.inverse(nodes, self.d)
        if np.max(np.abs(prod - np.eye(self.d))) > tol:
            raise ValueError("sigma(t) sigma^{-1}(t) differs from the identity")

    def with_x0(self, x0) -> "ModelSpec":
        return ModelSpec(self.drift, self.sigma, self.hurst, self.T, tuple(np.atleast_1d(x0)),
                         self.lipschitz_K)


@dataclass(frozen=True)
class ConstantSegment:
    """Initial segment ``xi(s) = value`` on ``[-r0, 0]``."""

    value: tuple

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(np.array(self.value), s.shape + (len(self.value),)).copy()


@dataclass(frozen=True)
class FunctionalModelSpec:
    """``dX = b(X_t) dt + sigma(t) dB^H`` with segment ``X_t(s) = X(t+s)``, ``s in [-r0, 0]``."""

    drift: object
    sigma: object
    hurst: float
    T: float
    r0: float
    xi: object = field(default_factory=lambda: ConstantSegment((1.0,)))
    lipschitz_K: float | None = None

    def __post_init__(self):
        Hurst(self.hurst)
        if not self.r0 > 0:
            raise ValueError("delay r0 must be positive")
        if not self.T > self.r0:
            raise ValueError("need T > r0")
        K = self.drift.lipschitz(self.d) if self.lipschitz_K is None else float(self.lipschitz_K)
        object.__setattr__(self, "lipschitz_K", K)
        if self.hurst > 0.5 and not self.sigma.alpha0 > self.hurst - 0.5:
            raise ValueError("sigma must be Hoelder of order alpha0 > H - 1/2")

    @property
    def d(self) -> int:
        return int(np.asarray(self.xi(np.zeros(1))).shape[-1])

    def initial_segment(self, m: int) -> np.ndarray:
        """``xi`` at the ``m+1`` nodes of ``[-r0, 0]``."""
        s = np.linspace(-self.r0, 0.0, m + 1)
        vals = np.asarray(self.xi(s), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("initial segment must be finite")
        return vals

    def with_xi(self, xi) -> "FunctionalModelSpec":
        return FunctionalModelSpec(self.drift, self.sigma, self.hurst, self.T, self.r0, xi,
                                   self.lipschitz_K)


@dataclass(frozen=True)
class ShiftedSegment:
    """``xi + eps * eta`` for segment callables."""

    base: object
    eta: object
    eps: float

    def __call__(self, s):
        return self.base(s) + self.eps * self.eta(s)


# ---------------------------------------------------------------------------
# test functions f: (..., d) -> (...)


@dataclass(frozen=True)
class Coordinate:
    index: int = 0
    name = "COORDINATE"

    def __call__(self, y):
        return np.asarray(y, dtype=float)[..., self.index]


@dataclass(frozen=True)
class Square:
    index: int = 0
    name = "SQUARE"

    def __call__(self, y):
        return np.asarray(y, dtype=float)[..., self.index] ** 2


@dataclass(frozen=True)
class OnePlusTanh:
    index: int = 0
    name = "ONE_PLUS_TANH"

    def __call__(self, y):
        return 1.0 + np.tanh(np.asarray(y, dtype=float)[..., self.index])


@dataclass(frozen=True)
class Constant:
    value: float = 1.0
    name = "CONSTANT"

    def __call__(self, y):
        return np.full(np.asarray(y).shape[:-1], float(self.value))


@dataclass(frozen=True)
class ExpTilt:
    """``exp(s tanh(theta y / s))``: a bounded, positive stand-in for ``exp(theta y)``."""

    theta: float
    cap: float = 8.0
    index: int = 0
    name = "EXP_TILT"

    def __call__(self, y):
        y = np.asarray(y, dtype=float)[..., self.index]
        return np.exp(self.cap * np.tanh(self.theta * y / self.cap))


@dataclass(frozen=True)
class SmoothStep:
    """``(1 + tanh(y / width)) / 2``, a smoothed indicator of ``y > 0``."""

    width: float = 0.05
    index: int = 0
    name = "SMOOTH_STEP"

    def __call__(self, y):
        return 0.5 * (1.0 + np.tanh(np.asarray(y, dtype=float)[..., self.index] / self.width))


# ---------------------------------------------------------------------------
# registries


DRIFT_PRESETS = {
    "ZERO": "b(x) = 0",
    "LINEAR": "b(x) = A x; params kappa (A = -kappa I, default 1) or A (d x d matrix)",
    "TANH_BOUNDED": "b(x)_i = a tanh(b x_i); params a (default -1), b (default 1.5)",
    "DELAY_LINEAR": "b(phi) = -kappa phi(-r0); params kappa (default 1), r0 (default 0.25)",
}
SIGMA_PRESETS = {
    "IDENTITY": "sigma(t) = I",
    "DIAG_HOLDER": "sigma(t) = (1 + eps t^alpha0) I; params alpha0 (default 0.8), eps (default 0.5)",
}
TEST_FUNCTIONS = {
    "COORDINATE": "f(y) = y_i; param index",
    "SQUARE": "f(y) = y_i^2; param index",
    "ONE_PLUS_TANH": "f(y) = 1 + tanh(y_i); param index",
    "CONSTANT": "f(y) = c; param value",
    "SMOOTH_STEP": "f(y) = (1 + tanh(y_i / w)) / 2; params width, index",
}


def make_drift(name: str, d: int = 1, **params):
    name = name.upper()
    if name == "ZERO":
        _no_params(name, params)
        return ZeroDrift()
    if name == "LINEAR":
        _allowed(name, params, {"kappa", "A"})
        return LinearDrift.from_params(d, params.get("kappa"), params.get("A"))
    if name == "TANH_BOUNDED":
        _allowed(name, params, {"a", "b"})
        return TanhDrift(float(params.get("a", -1.0)), float(params.get("b", 1.5)))
    if name == "DELAY_LINEAR":
        _allowed(name, params, {"kappa", "r0"})
        return DelayLinearDrift(float(params.get("kappa", 1.0)), float(params.get("r0", 0.25)))
    raise KeyError(f"unknown drift preset {name!r}")


def make_sigma(name: str, **params):
    name = name.upper()
    if name == "IDENTITY":
        _no_params(name, params)
        return IdentitySigma()
    if name == "DIAG_HOLDER":
        _allowed(name, params, {"alpha0", "eps"})
        return DiagHolderSigma(float(params.get("alpha0", 0.8)), float(params.get("eps", 0.5)))
    raise KeyError(f"unknown sigma preset {name!r}")


def make_test_function(name: str, **params):
    name = name.upper()
    table = {"COORDINATE": Coordinate, "SQUARE": Square, "ONE_PLUS_TANH": OnePlusTanh,
             "CONSTANT": Constant, "SMOOTH_STEP": SmoothStep}
    if name not in table:
        raise KeyError(f"unknown test function {name!r}")
    return table[name](**params)


def _no_params(name, params):
    if params:
        raise ValueError(f"preset {name} takes no parameters, got {sorted(params)}")


def _allowed(name, params, keys):
    extra = set(params) - keys
    if extra:
        raise ValueError(f"unknown parameters for {name}: {sorted(extra)}")


def describe_presets() -> str:
    lines = ["drift presets:"]
    lines += [f"  {k:<14} {v}" for k, v in DRIFT_PRESETS.items()]
    lines.append("sigma presets:")
    lines += [f"  {k:<14} {v}" for k, v in SIGMA_PRESETS.items()]
    lines.append("test functions:")
    lines += [f"  {k:<14} {v}" for k, v in TEST_FUNCTIONS.items()]
    return "\n".join(lines)


def default_lambda0(hurst: float, alpha0: float, beta0: float) -> float:
    """``max(1 - alpha0, (H - 1/2) / beta0) + 0.01`` clamped into ``(0, H - 0.01]``."""
    lam = max(1.0 - alpha0, (hurst - 0.5) / beta0) + 0.01
    return float(min(max(lam, 1e-3), hurst - 0.01))

