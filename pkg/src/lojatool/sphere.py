"""Deterministic low-discrepancy direction sets on the unit sphere."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.stats import norm, qmc

_SOBOL_SEED = 20160531


@lru_cache(maxsize=64)
def _directions(dim: int, n: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        phi = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(phi), np.sin(phi)])
    # scrambled Sobol with a fixed seed, pushed through the normal quantile
    m = int(np.ceil(np.log2(max(n, 2))))
    pts = qmc.Sobol(dim, scramble=True, seed=_SOBOL_SEED).random_base2(m)[:n]
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    nrm = np.linalg.norm(g, axis=1)
    g = g[nrm > 0] / nrm[nrm > 0, None]
    return g


def sphere_directions(dim: int, n: int) -> np.ndarray:
    """``n`` unit vectors in ``R^dim`` (exactly ``{+1, -1}`` when ``dim == 1``).

    In two dimensions the set is the equally spaced circle starting at
    ``(1, 0)``; above that it is a seeded scrambled Sobol sequence mapped to
    the sphere.  The returned array is read-only and shared between calls.
    """
    if dim < 1 or n < 1:
        raise ValueError("dim and n must be positive")
    out = _directions(int(dim), int(n))
    out.setflags(write=False)
    return out
