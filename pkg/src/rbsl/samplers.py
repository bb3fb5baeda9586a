"""MCMC for BSL and robust BSL, plus prior importance sampling for BSL.

One iteration of the robust chain is: a slice-sampling sweep over every
adjustment component (model simulations held fixed), then one
pseudo-marginal random-walk Metropolis-Hastings move of theta on the
unconstrained scale using the freshly updated adjustment.

Random streams are derived from ``(seed, iteration, purpose)`` so that a run
is reproducible and the three consumers (adjustment sweep, theta move,
model simulations) never perturb each other.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from rbsl.errors import (
    ConfigurationError,
    DegenerateSampleError,
    SimulationError,
    SliceSamplerError,
)
from rbsl.models.base import SimulatorModel, check_summaries
from rbsl.priors import GammaPrior, ThetaPrior, theta_log_prior
from rbsl.synthetic_likelihood import (
    LOG_2PI,
    AdjustmentKind,
    AdjustmentVector,
    MomentEstimate,
    as_summary,
    estimate_moments,
    gaussian_logpdf,
    mean_adjust,
    summary_sd,
    variance_inflate,
)
from rbsl.trace import Trace

log = logging.getLogger(__name__)

STREAM_GAMMA, STREAM_MOVE, STREAM_SIM = 0, 1, 2


class MethodKind(enum.Enum):
    BSL = "bsl"
    RBSL_MEAN = "rbsl-mean"
    RBSL_VAR = "rbsl-var"

    @property
    def adjustment(self) -> AdjustmentKind | None:
        return {
            MethodKind.BSL: None,
            MethodKind.RBSL_MEAN: AdjustmentKind.MEAN_SHIFT,
            MethodKind.RBSL_VAR: AdjustmentKind.VARIANCE_INFLATION,
        }[self]


def stream(seed: int, iteration: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng([seed, iteration, purpose])


# ---------------------------------------------------------------------------
# Synthetic log-likelihood


def synthetic_loglike(
    eta_obs, moments: MomentEstimate, gamma: AdjustmentVector | None, method: MethodKind
) -> float:
    """Log synthetic likelihood of ``eta_obs``; -inf when the covariance is not PD."""
    if method is MethodKind.BSL or gamma is None:
        if moments.chol is None:
            return -math.inf
        return gaussian_logpdf(eta_obs, moments.mu, moments.chol)
    if method is MethodKind.RBSL_MEAN:
        if moments.chol is None:
            return -math.inf
        return gaussian_logpdf(eta_obs, mean_adjust(moments, gamma), moments.chol)
    inflated = variance_inflate(moments, gamma)
    if inflated.chol is None:
        return -math.inf
    return gaussian_logpdf(eta_obs, moments.mu, inflated.chol)


# ---------------------------------------------------------------------------
# Slice sampling


def slice_sample(
    x0: float,
    logf,
    rng: np.random.Generator,
    width: float = 1.0,
    lower: float = -math.inf,
    logf_x0: float | None = None,
    max_steps: int = 1000,
    max_shrink: int = 1000,
) -> tuple[float, float]:
    """One univariate slice-sampling update with stepping out and shrinkage.

    Below ``lower`` the density is taken to be zero: the left end stops
    stepping once it crosses ``lower`` and is then clamped to it.

    Returns the new point and its log density.
    """
    fx0 = logf(x0) if logf_x0 is None else logf_x0
    if not fx0 > -math.inf:
        raise SliceSamplerError(f"current point {x0} has zero density")
    level = fx0 - rng.standard_exponential()
    left = x0 - width * rng.random()
    right = left + width

    steps = 0
    while left > lower and logf(left) > level:
        left -= width
        steps += 1
        if steps > max_steps:
            raise SliceSamplerError(
                f"stepping out to the left exceeded {max_steps} steps from x={x0}"
            )
    steps = 0
    while logf(right) > level:
        right += width
        steps += 1
        if steps > max_steps:
            raise SliceSamplerError(
                f"stepping out to the right exceeded {max_steps} steps from x={x0}"
            )
    if left < lower:
        left = lower

    for _ in range(max_shrink):
        x1 = left + rng.random() * (right - left)
        f1 = logf(x1)
        if f1 > level:
            return x1, f1
        if x1 < x0:
            left = x1
        else:
            right = x1
    raise SliceSamplerError(
        f"shrinkage did not find a point in {max_shrink} tries (x0={x0}, "
        f"interval=({left}, {right}))"
    )


class _MeanShiftConditional:
    """Full conditionals of the mean-shift components with fixed moments.

    Keeps the precision matrix P and P r (r = eta - adjusted mean) so each
    evaluation along one coordinate costs O(1).
    """

    def __init__(self, eta, moments: MomentEstimate, gamma: np.ndarray, prior: GammaPrior):
        d = moments.d
        self.prior = prior
        self.s = summary_sd(moments)
        self.P = cho_solve((moments.chol, True), np.eye(d), check_finite=False)
        self.gamma = gamma.copy()
        r = eta - moments.mu - self.s * self.gamma
        self.Pr = self.P @ r
        self.quad = float(r @ self.Pr)
        self.const = -0.5 * d * LOG_2PI - float(np.sum(np.log(np.diag(moments.chol))))

    def loglike_at(self, j: int, g: float) -> float:
        step = (g - self.gamma[j]) * self.s[j]
        return self.const - 0.5 * (
            self.quad - 2.0 * step * self.Pr[j] + step * step * self.P[j, j]
        )

    def commit(self, j: int, g: float) -> None:
        step = (g - self.gamma[j]) * self.s[j]
        self.quad = self.quad - 2.0 * step * self.Pr[j] + step * step * self.P[j, j]
        self.Pr = self.Pr - step * self.P[:, j]
        self.gamma[j] = g


class _VarianceInflationConditional:
    """Full conditionals of the variance-inflation components with fixed moments.

    Changing gamma_j is a rank-one change of the diagonal, handled with the
    Sherman-Morrison identity on the inverse of the inflated covariance.
    """

    def __init__(self, eta, moments: MomentEstimate, gamma: np.ndarray, prior: GammaPrior):
        self.prior = prior
        self.gamma = gamma.copy()
        self.diag = np.diag(moments.sigma).copy()
        inflated = variance_inflate(
            moments, AdjustmentVector(self.gamma, AdjustmentKind.VARIANCE_INFLATION)
        )
        if inflated.chol is None:
            raise SliceSamplerError("inflated covariance is not positive definite")
        d = moments.d
        self.P = cho_solve((inflated.chol, True), np.eye(d), check_finite=False)
        r = eta - moments.mu
        self.a = self.P @ r
        self.quad = float(r @ self.a)
        self.logdet = 2.0 * float(np.sum(np.log(np.diag(inflated.chol))))
        self.const = -0.5 * d * LOG_2PI

    def _delta(self, j, g):
        c = self.diag[j] * (g * g - self.gamma[j] ** 2)
        return c, 1.0 + c * self.P[j, j]

    def loglike_at(self, j: int, g: float) -> float:
        c, k = self._delta(j, g)
        if not k > 0:
            return -math.inf
        quad = self.quad - c * self.a[j] ** 2 / k
        return self.const - 0.5 * (self.logdet + math.log(k)) - 0.5 * quad

    def commit(self, j: int, g: float) -> None:
        c, k = self._delta(j, g)
        pj = self.P[:, j].copy()
        aj = self.a[j]
        self.quad -= c * aj * aj / k
        self.logdet += math.log(k)
        self.a = self.a - (c * aj / k) * pj
        self.P = self.P - (c / k) * np.outer(pj, pj)
        self.gamma[j] = g


def gamma_conditional(eta, moments, gamma: np.ndarray, prior: GammaPrior):
    if prior.kind == "laplace":
        return _MeanShiftConditional(eta, moments, gamma, prior)
    return _VarianceInflationConditional(eta, moments, gamma, prior)


def gamma_sweep(
    eta, moments: MomentEstimate, gamma: np.ndarray, prior: GammaPrior,
    rng: np.random.Generator, width: float = 1.0,
) -> np.ndarray:
    """Update every adjustment component once, in order, holding simulations fixed."""
    cond = gamma_conditional(eta, moments, gamma, prior)
    lower = prior.lower
    for j in range(len(gamma)):

        def logf(g, j=j):
            lp = prior.logpdf1(g)
            if lp == -math.inf:
                return -math.inf
            return cond.loglike_at(j, g) + lp

        g_new, _ = slice_sample(cond.gamma[j], logf, rng, width=width, lower=lower)
        cond.commit(j, g_new)
    return cond.gamma


def slice_update_gamma(
    j: int, state: "ChainState", eta_obs, gamma_prior: GammaPrior,
    rng: np.random.Generator, width: float = 1.0,
) -> float:
    """Draw gamma_j from its full conditional by direct likelihood evaluation.

    Reference path for :func:`gamma_sweep`; it re-evaluates the synthetic
    likelihood from scratch at every candidate.
    """
    method = (
        MethodKind.RBSL_MEAN if gamma_prior.kind == "laplace" else MethodKind.RBSL_VAR
    )
    kind = method.adjustment
    base = state.gamma.copy()

    def logf(g):
        lp = gamma_prior.logpdf1(g)
        if lp == -math.inf:
            return -math.inf
        cand = base.copy()
        cand[j] = g
        return synthetic_loglike(
            eta_obs, state.moments, AdjustmentVector(cand, kind), method
        ) + lp

    g_new, _ = slice_sample(base[j], logf, rng, width=width, lower=gamma_prior.lower)
    return g_new


# ---------------------------------------------------------------------------
# Chain state and the theta move


@dataclass(frozen=True)
class ChainState:
    theta: np.ndarray
    x: np.ndarray  # theta on the unconstrained scale
    gamma: np.ndarray | None
    moments: MomentEstimate
    log_like: float
    log_prior_theta: float
    log_jacobian: float

    def log_target_theta(self) -> float:
        return self.log_like + self.log_prior_theta + self.log_jacobian


def _adjustment(gamma, method):
    if gamma is None or method is MethodKind.BSL:
        return None
    return AdjustmentVector(gamma, method.adjustment)


def simulate_moments(model: SimulatorModel, theta, m: int, rng) -> MomentEstimate:
    sims = check_summaries(
        np.asarray(model.simulate_summaries(theta, m, rng), dtype=float), model.d_eta
    )
    return estimate_moments(sims)


def log_proposal_ratio(x, x_star, prop_chol) -> float:
    """log q(x | x*) - log q(x* | x) for the Gaussian random walk."""
    return gaussian_logpdf(x, x_star, prop_chol) - gaussian_logpdf(x_star, x, prop_chol)


def rwmh_theta_update(
    state: ChainState,
    prop_chol: np.ndarray,
    model: SimulatorModel,
    m: int,
    eta_obs,
    method: MethodKind,
    theta_prior: ThetaPrior,
    rng_move: np.random.Generator,
    rng_sim: np.random.Generator,
) -> tuple[ChainState, bool, bool]:
    """Pseudo-marginal random-walk MH move of theta.

    Returns ``(new_state, accepted, simulation_failed)``. On rejection the
    previous state, including its cached moments, is returned unchanged.
    """
    x_star = state.x + prop_chol @ rng_move.standard_normal(len(state.x))
    log_u = math.log(rng_move.random())
    theta_star = theta_prior.from_unconstrained(x_star)
    lp_star = theta_log_prior(theta_star, theta_prior)
    if lp_star == -math.inf:
        return state, False, False
    try:
        moments = simulate_moments(model, theta_star, m, rng_sim)
    except SimulationError as exc:
        log.debug("simulation failed at %s: %s", theta_star, exc)
        return state, False, True
    ll_star = synthetic_loglike(eta_obs, moments, _adjustment(state.gamma, method), method)
    if ll_star == -math.inf:
        return state, False, False
    lj_star = theta_prior.log_jacobian(x_star)
    log_r = (
        ll_star + lp_star + lj_star - state.log_target_theta()
        + log_proposal_ratio(state.x, x_star, prop_chol)
    )
    if log_u < log_r:
        new = ChainState(
            theta=theta_star, x=x_star, gamma=state.gamma, moments=moments,
            log_like=ll_star, log_prior_theta=lp_star, log_jacobian=lj_star,
        )
        return new, True, False
    return state, False, False


# ---------------------------------------------------------------------------
# Full chain


@dataclass(frozen=True)
class ChainSettings:
    method: MethodKind
    m: int
    iterations: int
    theta0: np.ndarray
    proposal_cov: np.ndarray  # unconstrained scale
    seed: int
    burn_in: int = 0
    gamma_prior: GammaPrior | None = None
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta0", np.atleast_1d(np.asarray(self.theta0, float)))
        cov = np.asarray(self.proposal_cov, dtype=float)
        d = len(self.theta0)
        if cov.ndim == 0:
            cov = np.eye(d) * float(cov)
        elif cov.ndim == 1:
            cov = np.diag(cov)
        object.__setattr__(self, "proposal_cov", cov)
        self.validate()

    def validate(self) -> None:
        problems = []
        if self.m < 2:
            problems.append("m must be at least 2")
        if self.iterations < 0:
            problems.append("iterations must be >= 0")
        if not 0 <= self.burn_in <= self.iterations:
            problems.append("burn_in must lie in [0, iterations]")
        d = len(self.theta0)
        if self.proposal_cov.shape != (d, d):
            problems.append(f"proposal covariance must be {d}x{d}")
        elif not np.allclose(self.proposal_cov, self.proposal_cov.T):
            problems.append("proposal covariance must be symmetric")
        else:
            try:
                np.linalg.cholesky(self.proposal_cov)
            except np.linalg.LinAlgError:
                problems.append("proposal covariance must be positive definite")
        if self.method is not MethodKind.BSL:
            if self.gamma_prior is None:
                problems.append(f"{self.method.value} needs a gamma prior")
            elif self.gamma_prior.adjustment_kind is not self.method.adjustment:
                problems.append(
                    f"method {self.method.value} is incompatible with a "
                    f"{self.gamma_prior.kind} gamma prior"
                )
        if not self.width > 0:
            problems.append("slice width must be positive")
        if problems:
            raise ConfigurationError("; ".join(problems))


def initial_state(
    eta_obs, model: SimulatorModel, theta_prior: ThetaPrior, settings: ChainSettings
) -> ChainState:
    theta0 = settings.theta0
    lp = theta_log_prior(theta0, theta_prior)
    if lp == -math.inf:
        raise ConfigurationError(f"initial theta {theta0} has zero prior density")
    x0 = theta_prior.to_unconstrained(theta0)
    moments = simulate_moments(model, theta0, settings.m, stream(settings.seed, 0, STREAM_SIM))
    gamma = None if settings.method is MethodKind.BSL else np.zeros(model.d_eta)
    ll = synthetic_loglike(eta_obs, moments, _adjustment(gamma, settings.method), settings.method)
    if not math.isfinite(ll):
        raise ConfigurationError(
            f"synthetic likelihood at the initial theta {theta0} is not finite; "
            "choose another starting value or a larger m"
        )
    return ChainState(
        theta=theta0.copy(),
        x=x0, gamma=gamma, moments=moments, log_like=ll,
        log_prior_theta=lp, log_jacobian=theta_prior.log_jacobian(x0),
    )


def run_chain(
    eta_obs, model: SimulatorModel, theta_prior: ThetaPrior, settings: ChainSettings
) -> Trace:
    """Run BSL (``method=BSL``) or robust BSL for ``settings.iterations`` iterations."""
    eta_obs = as_summary(eta_obs, model.d_eta)
    if theta_prior.d != model.d_theta or len(settings.theta0) != model.d_theta:
        raise ConfigurationError("theta dimension does not match the model")
    method = settings.method
    T = settings.iterations
    state = initial_state(eta_obs, model, theta_prior, settings)
    prop_chol = np.linalg.cholesky(settings.proposal_cov)

    d_eta = model.d_eta
    thetas = np.empty((T + 1, model.d_theta))
    loglike = np.empty(T + 1)
    accepted = np.zeros(T + 1, dtype=bool)
    gammas = None if method is MethodKind.BSL else np.empty((T + 1, d_eta))
    thetas[0] = state.theta
    loglike[0] = state.log_like
    if gammas is not None:
        gammas[0] = state.gamma
    failures = 0

    for i in range(1, T + 1):
        if gammas is not None:
            g = gamma_sweep(
                eta_obs, state.moments, state.gamma, settings.gamma_prior,
                stream(settings.seed, i, STREAM_GAMMA), settings.width,
            )
            ll = synthetic_loglike(eta_obs, state.moments, _adjustment(g, method), method)
            state = replace(state, gamma=g, log_like=ll)
        state, acc, failed = rwmh_theta_update(
            state, prop_chol, model, settings.m, eta_obs, method, theta_prior,
            stream(settings.seed, i, STREAM_MOVE), stream(settings.seed, i, STREAM_SIM),
        )
        failures += failed
        thetas[i] = state.theta
        loglike[i] = state.log_like
        accepted[i] = acc
        if gammas is not None:
            gammas[i] = state.gamma

    meta = {
        "method": method.value,
        "model": model.name,
        "m": settings.m,
        "seed": settings.seed,
        "iterations": T,
        "acceptance_count": int(accepted.sum()),
        "simulation_failures": failures,
        "simulations": settings.m * (T + 1),
    }
    if settings.gamma_prior is not None and gammas is not None:
        meta["gamma_prior"] = f"{settings.gamma_prior.kind}:{settings.gamma_prior.scale}"
    return Trace(
        iters=np.arange(T + 1), theta=thetas, loglike=loglike, accepted=accepted,
        gamma=gammas, burn_in=settings.burn_in, meta=meta,
    )


# ---------------------------------------------------------------------------
# Importance sampling from the prior (plain BSL)


@dataclass
class ImportanceSample:
    theta: np.ndarray  # (N, d_theta)
    log_weights: np.ndarray
    weights: np.ndarray = field(init=False)
    ess: float = field(init=False)

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        top = np.max(lw)
        if not np.isfinite(top):
            raise DegenerateSampleError("every importance weight is zero")
        w = np.exp(lw - top)
        w /= w.sum()
        self.weights = w
        self.ess = float(1.0 / np.sum(w * w))

    def posterior_draws(self):
        return self.theta, self.weights

    def density(self, grid, bandwidth: float, component: int = 0) -> np.ndarray:
        """Weighted Gaussian kernel density estimate on ``grid``."""
        grid = np.asarray(grid, dtype=float)
        x = self.theta[:, component]
        keep = self.weights > 1e-12
        z = (grid[:, None] - x[keep][None, :]) / bandwidth
        k = np.exp(-0.5 * z * z) / (bandwidth * math.sqrt(2 * math.pi))
        return k @ self.weights[keep]


def importance_sample_bsl(
    theta_prior: ThetaPrior,
    n_draws: int,
    m: int,
    model: SimulatorModel,
    eta_obs,
    seed: int,
) -> ImportanceSample:
    """Weight prior draws by their estimated BSL likelihood."""
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    eta_obs = as_summary(eta_obs, model.d_eta)
    theta = theta_prior.sample(n_draws, np.random.default_rng([seed, 0, 3]))
    log_w = np.full(n_draws, -math.inf)
    for k in range(n_draws):
        try:
            moments = simulate_moments(model, theta[k], m, stream(seed, k + 1, STREAM_SIM))
        except SimulationError:
            continue
        log_w[k] = synthetic_loglike(eta_obs, moments, None, MethodKind.BSL)
    return ImportanceSample(theta=theta, log_weights=log_w)
