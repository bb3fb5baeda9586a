"""MA(1) assumed model, autocovariance summaries, and the SV data-generating process."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from rbsl.errors import ConfigurationError
from rbsl.models.base import SimulatorModel

LAGS = (0, 1, 2)


def simulate_ma1(theta: float, T: int, rng: np.random.Generator) -> np.ndarray:
    """z_t = e_t + theta e_{t-1}, t = 1..T, with a pre-sample innovation e_0."""
    if T < 3:
        raise ConfigurationError("T must be at least 3")
    e = rng.standard_normal(T + 1)
    return e[1:] + theta * e[:-1]


def summary_autocov(series, lags=LAGS) -> np.ndarray:
    """eta_j = (1/T) sum_{t=j+1}^T z_t z_{t-j}, divisor T at every lag."""
    z = np.asarray(series, dtype=float)
    T = z.shape[-1]
    return np.stack(
        [np.sum(z[..., j:] * z[..., : T - j], axis=-1) / T for j in lags], axis=-1
    )


def simulate_sv(
    omega: float, rho: float, sigma_v: float, T: int, rng: np.random.Generator
) -> np.ndarray:
    """y_t = exp(h_t / 2) u_t with a stationary AR(1) log-volatility h_t."""
    if not 0 < rho < 1:
        raise ConfigurationError("rho must lie in (0, 1)")
    if not 0 < sigma_v < 1:
        raise ConfigurationError("sigma_v must lie in (0, 1)")
    h1 = rng.normal(omega / (1 - rho), sigma_v / math.sqrt(1 - rho**2))
    v = rng.standard_normal(T - 1)
    u = rng.standard_normal(T)
    forcing = np.empty(T)
    forcing[0] = h1
    forcing[1:] = omega + sigma_v * v
    h = lfilter([1.0], [1.0, -rho], forcing)
    return np.exp(0.5 * h) * u


def ma1_limit(theta: float) -> np.ndarray:
    return np.array([1.0 + theta**2, theta, 0.0])


def sv_limit(omega: float, rho: float, sigma_v: float) -> np.ndarray:
    return np.array(
        [math.exp(omega / (1 - rho) + 0.5 * sigma_v**2 / (1 - rho**2)), 0.0, 0.0]
    )


class MA1Model(SimulatorModel):
    name = "ma1"
    d_theta = 1
    d_eta = 3

    def __init__(self, T: int = 100):
        if T < 3:
            raise ConfigurationError("T must be at least 3")
        self.T = T

    def simulate(self, theta, rng):
        return simulate_ma1(float(np.ravel(theta)[0]), self.T, rng)

    def summarize(self, data):
        return summary_autocov(data)

    def simulate_summaries(self, theta, m, rng):
        t = float(np.ravel(theta)[0])
        e = rng.standard_normal((m, self.T + 1))
        z = e[:, 1:] + t * e[:, :-1]
        return summary_autocov(z)


def ma1_mle(series) -> float:
    """Exact Gaussian maximum-likelihood estimate of theta (innovation variance profiled out)."""
    from scipy.linalg import cho_factor, cho_solve
    from scipy.optimize import minimize_scalar

    y = np.asarray(series, dtype=float)
    n = y.size

    def profile_nll(theta):
        # covariance of the MA(1) with unit innovation variance: tridiagonal Toeplitz
        cov = np.zeros((n, n))
        idx = np.arange(n)
        cov[idx, idx] = 1.0 + theta**2
        cov[idx[:-1], idx[:-1] + 1] = theta
        cov[idx[:-1] + 1, idx[:-1]] = theta
        c, low = cho_factor(cov, lower=True)
        quad = float(y @ cho_solve((c, low), y))
        logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
        return 0.5 * n * math.log(quad / n) + 0.5 * logdet

    res = minimize_scalar(profile_nll, bounds=(-0.99, 0.99), method="bounded")
    return float(res.x)
