"""Chunked, worker-count independent Monte Carlo over fBm-driven paths.

Paths are split into fixed chunks of consecutive indices.  Each path draws
its noise from its own counter-based stream, chunks are evaluated in any
order (optionally in a process pool) and their outputs are concatenated in
index order before any reduction.  The result is therefore bitwise identical
for every worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .bismut import integrand_batch, density_batch, sfde_density_batch, CutoffGamma
from .fbm import volterra_weights
from .rng import normal_increments
from .sde import delay_steps, euler_batch, sfde_batch

__all__ = [
    "DEFAULT_CHUNK",
    "SdeTask",
    "SfdeTask",
    "EstimateReport",
    "run_paths",
    "mean_and_se",
    "verdict",
]

DEFAULT_CHUNK = 2000


@dataclass(frozen=True)
class SdeTask:
    """Simulate from each start in ``starts`` with common noise; optionally
    compute ``delta(h)`` for direction ``v`` along the first start."""

    model: object
    n: int
    seed: int
    starts: tuple
    v: tuple | None = None
    route: str = "discrete"

    def __call__(self, lo: int, hi: int) -> dict:
        model, n = self.model, self.n
        h = model.T / n
        d = model.d
        dW = normal_increments(self.seed, np.arange(lo, hi), n, d, h)
        B = np.einsum("ji,nid->njd", volterra_weights(model.hurst, model.T, n), dW)
        dB = np.diff(B, axis=1)
        out = {}
        XT = []
        for i, x0 in enumerate(self.starts):
            X = euler_batch(model, np.asarray(x0, dtype=float), dB, h)
            XT.append(X[:, -1])
            if i == 0 and self.v is not None:
                v = np.asarray(self.v, dtype=float)
                psi = density_batch(model, X, v, h)
                incr = psi[:, :-1] * h
                u = integrand_batch(self.route, model, X, psi, incr, h, v)
                out["delta"] = np.einsum("nkd,nkd->n", u, dW)
        out["XT"] = np.stack(XT)
        return out


@dataclass(frozen=True)
class SfdeTask:
    """SFDE analogue: starts are initial-segment callables; direction ``eta``."""

    model: object
    n: int
    seed: int
    starts: tuple
    eta: object = None
    gamma: CutoffGamma | None = None
    route: str = "discrete"

    def __call__(self, lo: int, hi: int) -> dict:
        model, n = self.model, self.n
        h = model.T / n
        m = delay_steps(model, h)
        d = model.d
        dW = normal_increments(self.seed, np.arange(lo, hi), n, d, h)
        B = np.einsum("ji,nid->njd", volterra_weights(model.hurst, model.T, n), dW)
        dB = np.diff(B, axis=1)
        s = np.linspace(-model.r0, 0.0, m + 1)
        out = {}
        XT = []
        for i, xi in enumerate(self.starts):
            X = sfde_batch(model, np.asarray(xi(s), dtype=float), dB, h)
            XT.append(X[:, -1])
            if i == 0 and self.eta is not None:
                eta_hist = np.asarray(self.eta(s), dtype=float).reshape(m + 1, d)
                psi, incr, _ = sfde_density_batch(model, X, eta_hist, self.gamma, h)
                u = integrand_batch(self.route, model, X[:, m:], psi, incr, h)
                out["delta"] = np.einsum("nkd,nkd->n", u, dW)
        out["XT"] = np.stack(XT)
        return out


def _run_one(args):
    task, lo, hi = args
    with threadpool_limits(1):
        return task(lo, hi)


def run_paths(task, N: int, workers: int = 1, chunk: int = DEFAULT_CHUNK) -> dict:
    """Evaluate ``task`` on path indices ``0..N-1``; arrays concatenated on the path axis."""
    if N < 1:
        raise ValueError("need at least one path")
    bounds = [(lo, min(lo + chunk, N)) for lo in range(0, N, chunk)]
    jobs = [(task, lo, hi) for lo, hi in bounds]
    workers = max(1, min(int(workers or 1), len(jobs), os.cpu_count() or 1))
    if workers == 1:
        parts = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_one, jobs))
    out = {}
    for key in parts[0]:
        axis = 1 if key == "XT" else 0
        out[key] = np.concatenate([p[key] for p in parts], axis=axis)
    return out


def mean_and_se(samples: np.ndarray) -> tuple[float, float]:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return mean, se


def verdict(estimate: float, se: float, oracle: float | None, oracle_err: float = 0.0) -> str:
    """``PASS`` iff ``|estimate - oracle| <= 3 (se + oracle_err)``; ``NA`` without an oracle."""
    if oracle is None or not np.isfinite(oracle):
        return "NA"
    return "PASS" if abs(estimate - oracle) <= 3.0 * (se + oracle_err) else "FAIL"


@dataclass(frozen=True)
class EstimateReport:
    estimate: float
    se: float
    n_paths: int
    seed: int
    oracle: float | None = None
    oracle_err: float = 0.0
    label: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return verdict(self.estimate, self.se, self.oracle, self.oracle_err)

    def with_oracle(self, value: float, err: float = 0.0) -> "EstimateReport":
        return EstimateReport(self.estimate, self.se, self.n_paths, self.seed, float(value),
                              float(err), self.label, self.extras)
