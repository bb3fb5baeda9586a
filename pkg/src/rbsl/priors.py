"""Priors for the model parameters and the adjustment vector.

Model parameters are sampled on an unconstrained scale; each component
carries a monotone bijection from its support to the real line and the
log-Jacobian needed to move densities across.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, log_expit

from rbsl.errors import ConfigurationError, DimensionError
from rbsl.synthetic_likelihood import AdjustmentKind, AdjustmentVector


# ---------------------------------------------------------------------------
# Adjustment-vector priors


@dataclass(frozen=True)
class GammaPrior:
    """i.i.d. prior on each adjustment component.

    ``kind`` is ``"laplace"`` (location 0, scale ``scale``) or
    ``"exponential"`` (mean ``scale``, i.e. rate ``1/scale``).
    """

    kind: str
    scale: float = 0.5

    def __post_init__(self):
        if self.kind not in ("laplace", "exponential"):
            raise ConfigurationError(f"unknown gamma prior kind {self.kind!r}")
        if not self.scale > 0:
            raise ConfigurationError("gamma prior scale must be positive")

    @property
    def adjustment_kind(self) -> AdjustmentKind:
        if self.kind == "laplace":
            return AdjustmentKind.MEAN_SHIFT
        return AdjustmentKind.VARIANCE_INFLATION

    @property
    def lower(self) -> float:
        return 0.0 if self.kind == "exponential" else -math.inf

    def logpdf1(self, g: float) -> float:
        """Log density of a single component."""
        if self.kind == "laplace":
            return -math.log(2.0 * self.scale) - abs(g) / self.scale
        if g < 0:
            return -math.inf
        return -math.log(self.scale) - g / self.scale

    def logpdf(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if self.kind == "laplace":
            return -np.log(2.0 * self.scale) - np.abs(g) / self.scale
        with np.errstate(invalid="ignore"):
            out = -np.log(self.scale) - g / self.scale
        return np.where(g < 0, -np.inf, out)

    def cdf(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if self.kind == "laplace":
            return np.where(
                g < 0,
                0.5 * np.exp(g / self.scale),
                1.0 - 0.5 * np.exp(-g / self.scale),
            )
        return np.where(g < 0, 0.0, -np.expm1(-np.maximum(g, 0) / self.scale))

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "laplace":
            return rng.laplace(0.0, self.scale, size=size)
        return rng.exponential(self.scale, size=size)

    @classmethod
    def parse(cls, text: str) -> "GammaPrior":
        """Parse ``"laplace:0.5"`` or ``"exponential:0.5"``."""
        kind, _, hyper = text.partition(":")
        kind = kind.strip().lower()
        try:
            scale = float(hyper) if hyper else 0.5
        except ValueError:
            raise ConfigurationError(f"bad gamma prior hyperparameter in {text!r}")
        return cls(kind, scale)


def gamma_log_prior(gamma, prior: GammaPrior) -> float:
    """Joint log prior of an adjustment vector (or a raw array of components)."""
    if isinstance(gamma, AdjustmentVector):
        if gamma.kind is not prior.adjustment_kind:
            raise ConfigurationError(
                f"{prior.kind} prior does not match a {gamma.kind.value} adjustment"
            )
        gamma = gamma.gamma
    return float(np.sum(prior.logpdf(gamma)))


def sample_gamma_prior(
    prior: GammaPrior, n: int, d: int, rng: np.random.Generator
) -> list[AdjustmentVector]:
    if n < 1:
        raise ValueError("n must be at least 1")
    draws = prior.sample((n, d), rng)
    return [AdjustmentVector(row, prior.adjustment_kind) for row in draws]


# ---------------------------------------------------------------------------
# Transforms


class Transform:
    name = "identity"

    def forward(self, theta: float) -> float:
        """Support -> R."""
        return theta

    def inverse(self, x: float) -> float:
        return x

    def log_jacobian(self, x: float) -> float:
        """log |d theta / d x| at unconstrained ``x``."""
        return 0.0


class LogTransform(Transform):
    name = "log"

    def forward(self, theta):
        if not theta > 0:
            raise ValueError(f"{theta} is outside (0, inf)")
        return math.log(theta)

    def inverse(self, x):
        return math.exp(x)

    def log_jacobian(self, x):
        return x


class LogitTransform(Transform):
    """Affine logit map from ``(lower, upper)`` to R."""

    name = "logit"

    def __init__(self, lower: float, upper: float):
        if not (math.isfinite(lower) and math.isfinite(upper) and lower < upper):
            raise ConfigurationError("logit transform needs a finite interval")
        self.lower = lower
        self.upper = upper

    def forward(self, theta):
        if not self.lower < theta < self.upper:
            raise ValueError(f"{theta} is outside ({self.lower}, {self.upper})")
        u = (theta - self.lower) / (self.upper - self.lower)
        return math.log(u) - math.log1p(-u)

    def inverse(self, x):
        return self.lower + (self.upper - self.lower) * float(expit(x))

    def log_jacobian(self, x):
        return (
            math.log(self.upper - self.lower)
            + float(log_expit(x))
            + float(log_expit(-x))
        )


# ---------------------------------------------------------------------------
# Model-parameter priors


@dataclass(frozen=True)
class Uniform:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigurationError("uniform prior needs lower < upper")

    def logpdf(self, t: float) -> float:
        if self.lower < t < self.upper:
            return -math.log(self.upper - self.lower)
        return -math.inf

    def sample(self, size, rng):
        return rng.uniform(self.lower, self.upper, size=size)

    def default_transform(self) -> Transform:
        return LogitTransform(self.lower, self.upper)


@dataclass(frozen=True)
class Normal:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ConfigurationError("normal prior variance must be positive")

    def logpdf(self, t: float) -> float:
        return -0.5 * math.log(2 * math.pi * self.variance) - 0.5 * (
            t - self.mean
        ) ** 2 / self.variance

    def sample(self, size, rng):
        return rng.normal(self.mean, math.sqrt(self.variance), size=size)

    def default_transform(self) -> Transform:
        return Transform()


@dataclass(frozen=True)
class Custom:
    """User-supplied log density (and optionally a sampler)."""

    log_density: Callable[[float], float]
    sampler: Callable | None = None

    def logpdf(self, t: float) -> float:
        return float(self.log_density(t))

    def sample(self, size, rng):
        if self.sampler is None:
            raise NotImplementedError("custom prior has no sampler")
        return self.sampler(size, rng)

    def default_transform(self) -> Transform:
        return Transform()


@dataclass(frozen=True)
class ThetaPrior:
    """Independent prior over the components of theta."""

    components: Sequence
    transforms: Sequence[Transform] = field(default=None)

    def __post_init__(self):
        comps = tuple(self.components)
        if self.transforms is None:
            tr = tuple(c.default_transform() for c in comps)
        else:
            tr = tuple(self.transforms)
            if len(tr) != len(comps):
                raise ConfigurationError("one transform per prior component")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "transforms", tr)

    @property
    def d(self) -> int:
        return len(self.components)

    def _check(self, v) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if v.shape != (self.d,):
            raise DimensionError(f"expected {self.d} parameters, got {v.shape}")
        return v

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.column_stack([c.sample(n, rng) for c in self.components])

    def to_unconstrained(self, theta) -> np.ndarray:
        theta = self._check(theta)
        return np.array([t.forward(v) for t, v in zip(self.transforms, theta)])

    def from_unconstrained(self, x) -> np.ndarray:
        x = self._check(x)
        return np.array([t.inverse(v) for t, v in zip(self.transforms, x)])

    def log_jacobian(self, x) -> float:
        x = self._check(x)
        return float(sum(t.log_jacobian(v) for t, v in zip(self.transforms, x)))


def theta_log_prior(theta, prior: ThetaPrior) -> float:
    theta = prior._check(theta)
    total = 0.0
    for comp, v in zip(prior.components, theta):
        lp = comp.logpdf(float(v))
        if lp == -math.inf:
            return -math.inf
        total += lp
    return total
