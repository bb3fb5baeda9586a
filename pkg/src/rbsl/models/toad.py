"""Toad movement model (random-return variant) and its 48 displacement summaries."""

from __future__ import annotations

import warnings

import numpy as np

from rbsl.errors import ConfigurationError, DegenerateSummaryError
from rbsl.models.base import SimulatorModel
from rbsl.models.stable import sample_stable

LAGS = (1, 2, 4, 8)
RETURN_DISTANCE = 10.0
QUANTILE_PROBS = np.linspace(0.0, 1.0, 11)
MIN_QUANTILE_GAP = 1e-8
STATS_PER_LAG = 12


def _check_theta(theta):
    alpha, delta, p0 = (float(v) for v in np.ravel(theta))
    if not (1 < alpha <= 2 and delta > 0 and 0 <= p0 < 1):
        raise ConfigurationError(f"toad parameters out of range: {theta}")
    return alpha, delta, p0


def simulate_toads_batch(theta, m, n_toads, n_days, rng):
    """``m`` independent refuge-location matrices, shape (m, n_days, n_toads)."""
    alpha, delta, p0 = _check_theta(theta)
    shape = (n_days - 1, m * n_toads)
    returns = rng.random(shape) < p0
    # day t (0-based) returns to a refuge drawn uniformly from days 0..t-1
    pick = rng.random(shape)
    days_so_far = np.arange(1, n_days)[:, None]
    src = np.minimum((pick * days_so_far).astype(np.intp), days_so_far - 1)
    moves = ~returns
    disp = np.zeros(shape)
    disp[moves] = sample_stable(alpha, delta, rng, size=int(moves.sum()))

    Y = np.zeros((n_days, m * n_toads))
    cols = np.arange(m * n_toads)
    for t in range(1, n_days):
        moved = Y[t - 1] + disp[t - 1]
        ret = returns[t - 1]
        Y[t] = np.where(ret, Y[src[t - 1], cols], moved)
    return Y.reshape(n_days, m, n_toads).transpose(1, 0, 2)


def simulate_toads(theta, n_toads=66, n_days=63, rng=None) -> np.ndarray:
    """Refuge locations (metres), shape (n_days, n_toads); every toad starts at 0."""
    if rng is None:
        raise ValueError("an explicit random generator is required")
    return simulate_toads_batch(theta, 1, n_toads, n_days, rng)[0]


def _quantiles_sorted(xs: np.ndarray, counts: np.ndarray, probs) -> np.ndarray:
    """Linear-interpolation (type 7) quantiles of the first ``counts[r]`` entries of each sorted row."""
    h = (counts[:, None] - 1) * probs[None, :]
    lo = np.floor(h).astype(np.intp)
    hi = np.minimum(lo + 1, counts[:, None] - 1)
    frac = h - lo
    x_lo = np.take_along_axis(xs, lo, axis=1)
    x_hi = np.take_along_axis(xs, hi, axis=1)
    return x_lo + frac * (x_hi - x_lo)


def summary_toads_batch(Y: np.ndarray, lags=LAGS) -> np.ndarray:
    """Summaries for a stack of matrices, shape (m, n_days, n_toads) -> (m, 12 * len(lags))."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 3:
        raise ValueError("expected a stack of refuge matrices")
    m, n_days, _ = Y.shape
    if n_days < max(lags) + 1:
        raise ConfigurationError(
            f"need at least {max(lags) + 1} days for lags {tuple(lags)}"
        )
    probs = np.append(QUANTILE_PROBS, 0.5)
    out = np.empty((m, STATS_PER_LAG * len(lags)))
    n_clamped = 0
    for b, k in enumerate(lags):
        d = np.abs(Y[:, k:] - Y[:, :-k]).reshape(m, -1)
        ret = d < RETURN_DISTANCE
        n_ret = ret.sum(axis=1)
        n_non = d.shape[1] - n_ret
        if np.any(n_non == 0):
            raise DegenerateSummaryError(
                f"no non-return displacements at lag {k}; the proposal is "
                "rejected by the sampler's degenerate-summary guard"
            )
        xs = np.sort(np.where(ret, np.inf, d), axis=1)
        q = _quantiles_sorted(xs, n_non, probs)
        gaps = np.diff(q[:, :-1], axis=1)
        small = gaps < MIN_QUANTILE_GAP
        n_clamped += int(small.sum())
        block = out[:, STATS_PER_LAG * b : STATS_PER_LAG * (b + 1)]
        block[:, 0] = n_ret
        block[:, 1:11] = np.log(np.maximum(gaps, MIN_QUANTILE_GAP))
        block[:, 11] = q[:, -1]
    if n_clamped:
        warnings.warn(
            f"{n_clamped} quantile gaps below {MIN_QUANTILE_GAP} were clamped",
            RuntimeWarning,
            stacklevel=2,
        )
    return out


def summary_toads(Y, lags=LAGS) -> np.ndarray:
    """Per lag: [returns, 10 log decile gaps of non-returns, non-return median]."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("expected an (n_days, n_toads) matrix")
    return summary_toads_batch(Y[None], lags)[0]


class ToadModel(SimulatorModel):
    name = "toad"
    d_theta = 3
    d_eta = 48

    def __init__(self, n_toads: int = 66, n_days: int = 63):
        if n_days < max(LAGS) + 1 or n_toads < 1:
            raise ConfigurationError("too few toads or days")
        self.n_toads = n_toads
        self.n_days = n_days

    def simulate(self, theta, rng):
        return simulate_toads(theta, self.n_toads, self.n_days, rng)

    def summarize(self, data):
        return summary_toads(data)

    def simulate_summaries(self, theta, m, rng):
        Y = simulate_toads_batch(theta, m, self.n_toads, self.n_days, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return summary_toads_batch(Y)
