from __future__ import annotations

import numpy as np

from rbsl.errors import SimulationError


class SimulatorModel:
    """A simulator paired with its summary map.

    Subclasses implement :meth:`simulate` and :meth:`summarize`; models with a
    cheap batched simulator also override :meth:`simulate_summaries`.
    """

    name: str = "model"
    d_theta: int
    d_eta: int

    def simulate(self, theta, rng: np.random.Generator):
        raise NotImplementedError

    def summarize(self, data) -> np.ndarray:
        raise NotImplementedError

    def simulate_summaries(self, theta, m: int, rng: np.random.Generator) -> np.ndarray:
        """``m`` i.i.d. simulated summary vectors, shape (m, d_eta)."""
        out = np.empty((m, self.d_eta))
        for i in range(m):
            out[i] = self.summarize(self.simulate(theta, rng))
        return out


def check_summaries(sims: np.ndarray, d_eta: int) -> np.ndarray:
    if sims.ndim != 2 or sims.shape[1] != d_eta:
        raise SimulationError(f"simulator returned shape {sims.shape}")
    if not np.all(np.isfinite(sims)):
        raise SimulationError("simulator returned non-finite summaries")
    return sims


class CountingModel(SimulatorModel):
    """Wraps a model and counts simulated datasets (test and audit helper)."""

    def __init__(self, inner: SimulatorModel):
        self.inner = inner
        self.name = inner.name
        self.d_theta = inner.d_theta
        self.d_eta = inner.d_eta
        self.calls = 0

    def simulate(self, theta, rng):
        self.calls += 1
        return self.inner.simulate(theta, rng)

    def summarize(self, data):
        return self.inner.summarize(data)

    def simulate_summaries(self, theta, m, rng):
        self.calls += m
        return self.inner.simulate_summaries(theta, m, rng)
