"""Symmetric alpha-stable variates (Chambers-Mallows-Stuck)."""

from __future__ import annotations

import numpy as np


def sample_stable(alpha: float, delta: float, rng: np.random.Generator, size=None):
    """Draw symmetric stable variates with characteristic function exp(-|delta t|^alpha).

    Parameters
    ----------
    alpha : float
        Stability index in (1, 2]. ``alpha = 2`` gives N(0, 2 delta^2).
    delta : float
        Scale, > 0.
    """
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return delta * _standard_stable(alpha, rng, size)


def _standard_stable(alpha, rng, size):
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=size)
    w = rng.standard_exponential(size=size)
    cos_v = np.cos(v)
    x = (
        np.sin(alpha * v)
        / cos_v ** (1.0 / alpha)
        * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha)
    )
    return x
