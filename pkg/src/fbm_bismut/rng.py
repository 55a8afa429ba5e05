"""Counter-based random streams, one per Monte Carlo path.

Every path gets its own Philox stream keyed by ``(seed, path_index)``, so the
noise of path ``i`` does not depend on how paths are split across workers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def path_generator(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and path index must be non-negative")
    key = (int(seed) & _MASK64) | (int(index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def normal_increments(seed: int, indices, n: int, d: int, dt: float) -> np.ndarray:
    """Wiener increments of shape ``(len(indices), n, d)``, each ``N(0, dt)``."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty((indices.size, n, d))
    sd = np.sqrt(dt)
    for row, i in enumerate(indices):
        out[row] = sd * path_generator(seed, int(i)).standard_normal((n, d))
    return out
