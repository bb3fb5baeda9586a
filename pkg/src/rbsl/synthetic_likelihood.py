"""Gaussian synthetic likelihood and its mean/variance robustifications."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from rbsl.errors import DimensionError, NumericalError

LOG_2PI = math.log(2.0 * math.pi)


class AdjustmentKind(enum.Enum):
    MEAN_SHIFT = "mean"
    VARIANCE_INFLATION = "variance"


def as_summary(values, d: int | None = None) -> np.ndarray:
    """Validate a summary vector: 1-D, finite, optionally of length ``d``."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"summary must be a vector, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise DimensionError(f"summary has length {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError("summary contains non-finite entries")
    return arr


def try_cholesky(sigma: np.ndarray) -> np.ndarray | None:
    """Lower Cholesky factor, retrying once with a tiny diagonal jitter.

    Returns None when the matrix is not numerically positive definite.
    """
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * float(np.mean(np.diag(sigma)))
    if not jitter > 0:
        return None
    try:
        return np.linalg.cholesky(sigma + jitter * np.eye(sigma.shape[0]))
    except np.linalg.LinAlgError:
        return None


@dataclass(frozen=True)
class MomentEstimate:
    """Simulated mean and covariance of the summaries at one parameter value."""

    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray | None
    m: int

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    @property
    def is_pd(self) -> bool:
        return self.chol is not None

    @classmethod
    def from_moments(cls, mu, sigma, m: int) -> "MomentEstimate":
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        sigma = 0.5 * (sigma + sigma.T)
        if m < 2:
            raise DimensionError("at least two simulations are required")
        return cls(mu=mu, sigma=sigma, chol=try_cholesky(sigma), m=m)


@dataclass(frozen=True)
class AdjustmentVector:
    gamma: np.ndarray
    kind: AdjustmentKind

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 1:
            raise DimensionError("gamma must be a vector")
        if self.kind is AdjustmentKind.VARIANCE_INFLATION and np.any(g < 0):
            raise ValueError("variance inflation factors must be nonnegative")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def zeros(cls, d: int, kind: AdjustmentKind) -> "AdjustmentVector":
        return cls(np.zeros(d), kind)


def estimate_moments(sims) -> MomentEstimate:
    """Sample mean and covariance (divisor ``m``) of simulated summaries.

    Parameters
    ----------
    sims : array_like, shape (m, d)
        One simulated summary vector per row.
    """
    arr = np.asarray(sims, dtype=float)
    if arr.ndim == 1:
        raise DimensionError("sims must be a list of summary vectors")
    if arr.ndim != 2:
        raise DimensionError(f"sims must be 2-D, got shape {arr.shape}")
    m = arr.shape[0]
    if m < 2:
        raise DimensionError("at least two simulations are required")
    mu = arr.mean(axis=0)
    centred = arr - mu
    sigma = centred.T @ centred / m
    return MomentEstimate.from_moments(mu, sigma, m)


def gaussian_logpdf(x, mu, chol) -> float:
    """Log N(x; mu, L L^T) from the lower Cholesky factor ``L``."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    chol = np.asarray(chol, dtype=float)
    d = x.shape[0]
    if mu.shape != (d,) or chol.shape != (d, d):
        raise DimensionError(
            f"shapes disagree: x {x.shape}, mu {mu.shape}, chol {chol.shape}"
        )
    z = solve_triangular(chol, x - mu, lower=True, check_finite=False)
    return float(
        -0.5 * d * LOG_2PI - np.sum(np.log(np.diag(chol))) - 0.5 * np.dot(z, z)
    )


def summary_sd(est: MomentEstimate) -> np.ndarray:
    diag = np.diag(est.sigma)
    if np.any(diag < 0):
        raise NumericalError("covariance has a negative diagonal entry")
    return np.sqrt(diag)


def mean_adjust(est: MomentEstimate, gamma: AdjustmentVector) -> np.ndarray:
    """Shift the simulated mean by gamma, in units of summary standard deviations."""
    g = gamma.gamma
    if g.shape != est.mu.shape:
        raise DimensionError("gamma and mu lengths differ")
    return est.mu + summary_sd(est) * g


def variance_inflate(est: MomentEstimate, gamma: AdjustmentVector) -> MomentEstimate:
    """Multiply each marginal variance by ``1 + gamma_i**2``; off-diagonals untouched."""
    g = gamma.gamma
    if g.shape != est.mu.shape:
        raise DimensionError("gamma and mu lengths differ")
    if np.any(g < 0):
        raise ValueError("variance inflation factors must be nonnegative")
    sigma = est.sigma.copy()
    idx = np.diag_indices_from(sigma)
    sigma[idx] = sigma[idx] + sigma[idx] * g * g
    return MomentEstimate(mu=est.mu, sigma=sigma, chol=try_cholesky(sigma), m=est.m)
