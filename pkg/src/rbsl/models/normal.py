"""Normal location model and its contaminated data-generating process."""

from __future__ import annotations

import math

import numpy as np

from rbsl.errors import ConfigurationError
from rbsl.models.base import SimulatorModel


def simulate_normal(theta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 2:
        raise ConfigurationError("n must be at least 2")
    return theta + rng.standard_normal(n)


def summary_normal(data) -> np.ndarray:
    """(sample mean, sample variance with divisor n - 1)."""
    y = np.asarray(data, dtype=float)
    if y.size < 2:
        raise ConfigurationError("need at least two observations")
    return np.array([y.mean(), y.var(ddof=1)])


def generate_contaminated(
    theta: float, n: int, omega: float, sigma_eps: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw from N(theta, 1) w.p. omega, else N(theta, sigma_eps^2)."""
    if n < 2:
        raise ConfigurationError("n must be at least 2")
    if not 0 < omega < 1:
        raise ConfigurationError("omega must lie in (0, 1)")
    if not sigma_eps > 0:
        raise ConfigurationError("sigma_eps must be positive")
    clean = rng.random(n) < omega
    scale = np.where(clean, 1.0, sigma_eps)
    return theta + scale * rng.standard_normal(n)


def contamination_scale(target_sd: float, omega: float) -> float:
    """sigma_eps giving population variance omega + (1 - omega) sigma_eps^2 = target_sd^2."""
    var = (target_sd**2 - omega) / (1.0 - omega)
    if not var > 0:
        raise ConfigurationError(
            f"target sd {target_sd} is unreachable with omega={omega}"
        )
    return math.sqrt(var)


def standardize_to_moments(data, target_mean: float, target_sd: float) -> np.ndarray:
    """Affinely rescale so the sample mean and sample sd (ddof=1) hit the targets."""
    y = np.asarray(data, dtype=float)
    if y.size < 2:
        raise ConfigurationError("need at least two observations")
    if not target_sd > 0:
        raise ConfigurationError("target_sd must be positive")
    sd = y.std(ddof=1)
    if not sd > 0:
        raise ConfigurationError("cannot rescale constant data")
    z = (y - y.mean()) / sd
    # second pass removes the rounding left by the first
    z = (z - z.mean()) / z.std(ddof=1)
    return target_mean + target_sd * z


class NormalModel(SimulatorModel):
    name = "normal"
    d_theta = 1
    d_eta = 2

    def __init__(self, n: int = 100):
        if n < 2:
            raise ConfigurationError("n must be at least 2")
        self.n = n

    def simulate(self, theta, rng):
        return simulate_normal(float(np.ravel(theta)[0]), self.n, rng)

    def summarize(self, data):
        return summary_normal(data)

    def simulate_summaries(self, theta, m, rng):
        t = float(np.ravel(theta)[0])
        y = t + rng.standard_normal((m, self.n))
        return np.column_stack([y.mean(axis=1), y.var(axis=1, ddof=1)])
