"""Smooth cutoff functions built from the standard e^{-1/x} construction."""

from __future__ import annotations

import numpy as np


def _psi(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x) -> np.ndarray:
    """C^infinity step: 0 for x <= 0, 1 for x >= 1, monotone in between."""
    x = np.asarray(x, dtype=float)
    a = _psi(x)
    b = _psi(1.0 - x)
    return a / (a + b)


def plateau_bump(a: float, b: float, c: float, d: float):
    """Smooth function equal to 1 on [b, c] and supported in [a, d]."""
    if not a < b <= c < d:
        raise ValueError("need a < b <= c < d")

    def eta(x):
        x = np.asarray(x, dtype=float)
        return smooth_step((x - a) / (b - a)) * smooth_step((d - x) / (d - c))

    return eta


def standard_bump(u) -> np.ndarray:
    """exp(-1/(1-u^2)) on (-1, 1), zero elsewhere (not normalized)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out
