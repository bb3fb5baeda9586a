"""Shared oracles and small fixtures for the test suite."""

import math

import numpy as np


def random_spd(rng, d, jitter=0.5):
    a = rng.standard_normal((d, d))
    return a @ a.T + jitter * np.eye(d)


def dense_logpdf(x, mu, sigma):
    """Gaussian log density through an explicit inverse and log-determinant."""
    d = len(x)
    diff = np.asarray(x) - np.asarray(mu)
    _, logdet = np.linalg.slogdet(sigma)
    return -0.5 * (d * math.log(2 * math.pi) + logdet) - 0.5 * diff @ np.linalg.inv(sigma) @ diff


def loop_moments(sims):
    """Mean and divisor-m covariance by explicit loops."""
    sims = [np.asarray(s, dtype=float) for s in sims]
    m, d = len(sims), len(sims[0])
    mu = [sum(s[i] for s in sims) / m for i in range(d)]
    sigma = [[sum((s[i] - mu[i]) * (s[j] - mu[j]) for s in sims) / m for j in range(d)] for i in range(d)]
    return np.array(mu), np.array(sigma)


def brute_ks(a, b):
    """sup |F_a - F_b| evaluated at every sample point with double loops."""
    best = 0.0
    for t in list(a) + list(b):
        fa = sum(1 for v in a if v <= t) / len(a)
        fb = sum(1 for v in b if v <= t) / len(b)
        best = max(best, abs(fa - fb))
    return best


def type7_quantile(values, p):
    """Linear interpolation between order statistics, written out directly."""
    xs = sorted(values)
    h = (len(xs) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def batch_means_se(x, n_batches=50):
    """Monte Carlo standard error of a chain mean by non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    b = len(x) // n_batches
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return means.std(ddof=1) / math.sqrt(n_batches)


class ExactModel:
    """Simulator whose summaries are f(theta) plus a fixed whitened design.

    The simulated mean is exactly f(theta) and the divisor-m covariance is
    exactly ``scale**2 * I``, so the synthetic likelihood is deterministic.
    """

    name = "exact"

    def __init__(self, f, d_theta, d_eta, scale=1.0, fail_above=None):
        self.f = f
        self.d_theta = d_theta
        self.d_eta = d_eta
        self.scale = scale
        self.fail_above = fail_above
        self.calls = 0

    def design(self, m):
        z = np.random.default_rng(99).standard_normal((m, self.d_eta))
        z -= z.mean(axis=0)
        cov = z.T @ z / m
        w = np.linalg.cholesky(np.linalg.inv(cov))
        return self.scale * z @ w

    def simulate_summaries(self, theta, m, rng):
        from rbsl.errors import SimulationError

        self.calls += m
        if self.fail_above is not None and np.ravel(theta)[0] > self.fail_above:
            raise SimulationError("simulator refused this parameter")
        return np.asarray(self.f(np.ravel(theta)), dtype=float)[None, :] + self.design(m)
