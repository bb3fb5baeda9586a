"""Misspecification diagnostics and chain/accuracy summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rbsl.errors import ConfigurationError
from rbsl.models.base import SimulatorModel
from rbsl.priors import GammaPrior
from rbsl.trace import Trace

DEFAULT_THRESHOLD = 0.3
MIN_POST_BURNIN = 100


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def weighted_quantile(x, w, q) -> np.ndarray:
    """Quantiles of a weighted sample (inverse of the weighted empirical CDF)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cw = np.cumsum(ws)
    cw /= cw[-1]
    idx = np.searchsorted(cw, np.atleast_1d(q), side="left")
    return xs[np.minimum(idx, len(xs) - 1)]


@dataclass(frozen=True)
class ComponentDiagnostic:
    component: int  # 1-based, matching gamma_j column names
    ks_statistic: float
    q025: float
    q50: float
    q975: float
    threshold: float = DEFAULT_THRESHOLD

    @property
    def flag(self) -> str:
        return "incompatible" if self.ks_statistic > self.threshold else "compatible"


def gamma_prior_divergence(
    trace: Trace,
    prior: GammaPrior,
    reference_n: int = 100_000,
    rng: np.random.Generator | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[ComponentDiagnostic]:
    """Compare each adjustment component's posterior with a fresh prior sample."""
    if not trace.has_gamma:
        raise ConfigurationError("trace has no adjustment columns (plain BSL run)")
    post = trace.gamma[~trace.burnin_mask]
    if len(post) < MIN_POST_BURNIN:
        raise ConfigurationError(
            f"need at least {MIN_POST_BURNIN} post-burn-in rows, got {len(post)}"
        )
    rng = rng if rng is not None else np.random.default_rng(0)
    out = []
    for j in range(post.shape[1]):
        ref = prior.sample(reference_n, rng)
        q = np.quantile(post[:, j], [0.025, 0.5, 0.975])
        out.append(
            ComponentDiagnostic(
                component=j + 1,
                ks_statistic=ks_statistic(post[:, j], ref),
                q025=float(q[0]),
                q50=float(q[1]),
                q975=float(q[2]),
                threshold=threshold,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Posterior predictive checks


@dataclass(frozen=True)
class PredictiveCheck:
    lower: np.ndarray  # 2.5% quantile per statistic
    median: np.ndarray
    upper: np.ndarray  # 97.5% quantile
    observed: np.ndarray | None
    percentile: np.ndarray | None  # fraction of predictive draws below the observed value
    draws: np.ndarray

    def outside(self) -> np.ndarray:
        """Statistics whose observed value falls outside the 95% predictive interval."""
        if self.observed is None:
            raise ValueError("no observed summary supplied")
        return (self.observed < self.lower) | (self.observed > self.upper)


def posterior_predictive(
    trace: Trace,
    model: SimulatorModel,
    n_draws: int,
    rng: np.random.Generator,
    eta_obs=None,
    adjusted: bool = False,
) -> PredictiveCheck:
    """Simulate one summary per posterior draw of theta and report 95% bands.

    With ``adjusted=True`` the adjustment vector of each sampled row is
    applied: a mean shift of ``gamma * sd`` (Laplace prior runs) or extra
    Gaussian noise with sd ``gamma * sd`` (variance runs), where ``sd`` is the
    spread of the raw predictive summaries.
    """
    if n_draws < 100:
        raise ValueError("n_draws must be at least 100")
    keep = ~trace.burnin_mask
    thetas = trace.theta[keep]
    if len(thetas) == 0:
        raise ConfigurationError("trace has no post-burn-in rows")
    rows = rng.integers(0, len(thetas), size=n_draws)
    sims = np.empty((n_draws, model.d_eta))
    for k, r in enumerate(rows):
        sims[k] = model.simulate_summaries(thetas[r], 1, rng)[0]
    if adjusted:
        if not trace.has_gamma:
            raise ConfigurationError("adjusted predictive needs an R-BSL trace")
        gam = trace.gamma[keep][rows]
        sd = sims.std(axis=0)
        method = trace.meta.get("method", "")
        if method == "rbsl-mean":
            sims = sims + gam * sd
        elif method == "rbsl-var":
            sims = sims + gam * sd * rng.standard_normal(sims.shape)
        else:
            raise ConfigurationError(f"unknown R-BSL method {method!r} in trace")
    lo, med, hi = np.quantile(sims, [0.025, 0.5, 0.975], axis=0)
    pct = None
    if eta_obs is not None:
        eta_obs = np.asarray(eta_obs, dtype=float)
        pct = (sims < eta_obs).mean(axis=0)
    return PredictiveCheck(lo, med, hi, eta_obs, pct, sims)


# ---------------------------------------------------------------------------
# Accuracy across repeated datasets


@dataclass(frozen=True)
class AccuracyRow:
    label: str
    component: int
    bias: float
    rmse: float
    length: float
    coverage: float
    runs: int


def accuracy_table(runs, level: float = 0.95, label: str = "", component: int = 0) -> AccuracyRow:
    """Bias, RMSE, mean interval length and coverage of posterior means.

    ``runs`` is a sequence of ``(posterior, true_theta)`` pairs where the
    posterior is a :class:`Trace` or anything with ``posterior_draws()``
    returning ``(draws, weights)``.
    """
    runs = list(runs)
    if len(runs) < 2:
        raise ValueError("accuracy needs at least two runs")
    tail = 0.5 * (1.0 - level)
    errs, lens, cover = [], [], []
    for post, truth in runs:
        draws, w = post.posterior_draws()
        x = np.asarray(draws, dtype=float).reshape(len(draws), -1)[:, component]
        w = np.asarray(w, dtype=float)
        w = w / w.sum()
        t = float(np.ravel(truth)[component])
        mean = float(w @ x)
        lo, hi = weighted_quantile(x, w, [tail, 1.0 - tail])
        errs.append(mean - t)
        lens.append(hi - lo)
        cover.append(lo <= t <= hi)
    errs = np.array(errs)
    return AccuracyRow(
        label=label,
        component=component + 1,
        bias=float(errs.mean()),
        rmse=float(math.sqrt(np.mean(errs**2))),
        length=float(np.mean(lens)),
        coverage=float(np.mean(cover)),
        runs=len(runs),
    )


# ---------------------------------------------------------------------------
# Chain summaries


@dataclass(frozen=True)
class ChainSummary:
    acceptance_rate: float
    mean: np.ndarray
    median: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    longest_rejection_run: int
    n_post: int


def longest_rejection_run(trace: Trace) -> int:
    best = run = 0
    for a in trace.accepted[trace.iters > 0]:
        run = 0 if a else run + 1
        best = max(best, run)
    return best


def chain_summary(trace: Trace) -> ChainSummary:
    if len(trace) == 0:
        raise ValueError("empty trace")
    post = trace.theta[~trace.burnin_mask]
    if len(post) == 0:
        post = trace.theta
    q = np.quantile(post, [0.025, 0.5, 0.975], axis=0)
    return ChainSummary(
        acceptance_rate=trace.acceptance_rate,
        mean=post.mean(axis=0),
        median=q[1],
        q025=q[0],
        q975=q[2],
        longest_rejection_run=longest_rejection_run(trace),
        n_post=len(post),
    )
