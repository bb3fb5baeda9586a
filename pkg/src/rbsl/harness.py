"""Experiment orchestration: data generation, chains, reports and aggregates.

Workers return file contents as strings; only the calling process touches the
disk, so the artifact tree does not depend on scheduling or thread count.
"""

from __future__ import annotations

import json
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import gaussian_kde

from rbsl import diagnostics
from rbsl.config import (
    METHODS,
    ExperimentConfig,
    prior_components,
)
from rbsl.errors import ConfigurationError
from rbsl.models import (
    MODELS,
    contamination_scale,
    generate_contaminated,
    simulate_ma1,
    simulate_sv,
    simulate_toads,
    standardize_to_moments,
)
from rbsl.models.io import load_matrix, load_series
from rbsl.models.ma1 import ma1_mle
from rbsl.priors import (
    GammaPrior,
    LogitTransform,
    LogTransform,
    Normal,
    ThetaPrior,
    Transform,
    Uniform,
)
from rbsl.samplers import ChainSettings, MethodKind, importance_sample_bsl, run_chain
from rbsl.trace import Trace, fmt_float

QUANTILES = (0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975)
TOAD_START = (1.8, 45.0, 0.6)
DATA_KEY, CHAIN_KEY = 0, 1


def derive_seed(*keys: int) -> int:
    """A 32-bit seed that depends on every key (order matters)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Builders


def build_model(cfg: ExperimentConfig):
    d = cfg.data
    name = cfg.experiment.model
    if name == "normal":
        return MODELS[name](n=d.size)
    if name == "ma1":
        return MODELS[name](T=d.size)
    return MODELS[name](n_toads=d.n_toads, n_days=d.n_days)


def model_args(model) -> str:
    if model.name == "toad":
        return f"n_toads:{model.n_toads},n_days:{model.n_days}"
    return f"n:{model.n}" if model.name == "normal" else f"T:{model.T}"


def build_theta_prior(cfg: ExperimentConfig) -> ThetaPrior:
    comps, transforms = [], []
    for c in prior_components(cfg):
        comp = Uniform(c["lower"], c["upper"]) if c["kind"] == "uniform" else Normal(
            c["mean"], c["variance"]
        )
        t = c["transform"]
        if t == "default":
            tr = comp.default_transform()
        elif t == "identity":
            tr = Transform()
        elif t == "log":
            tr = LogTransform()
        else:
            if c["kind"] != "uniform":
                raise ConfigurationError("the logit transform needs a uniform prior")
            tr = LogitTransform(c["lower"], c["upper"])
        comps.append(comp)
        transforms.append(tr)
    return ThetaPrior(comps, transforms)


def build_gamma_prior(cfg: ExperimentConfig, method: str) -> GammaPrior | None:
    spec = cfg.gamma_prior_for(method)
    return None if spec is None else GammaPrior(*spec)


def proposal_matrix(cfg: ExperimentConfig, d: int) -> np.ndarray:
    cov = np.asarray(cfg.proposal.cov, dtype=float)
    if cov.size == 1:
        return np.eye(d) * cov[0]
    return np.diag(cov) if cov.size == d else cov.reshape(d, d)


@dataclass
class Observed:
    raw: np.ndarray
    eta: np.ndarray
    truth: np.ndarray | None


def observed_data(cfg: ExperimentConfig, model, seed: int, base_dir=None) -> Observed:
    """Observed summaries: loaded from a file or simulated from the true process."""
    d = cfg.data
    name = cfg.experiment.model
    truth = None
    if d.source == "file":
        path = Path(d.path)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        raw = load_matrix(path) if name == "toad" else load_series(path)
    else:
        rng = np.random.default_rng(seed)
        if name == "normal":
            if (d.dgp or "contaminated") == "contaminated":
                raw = generate_contaminated(
                    d.mean, d.size, d.omega, contamination_scale(d.sd, d.omega), rng
                )
            else:
                raw = d.mean + d.sd * rng.standard_normal(d.size)
            if d.standardize:
                raw = standardize_to_moments(raw, d.mean, d.sd)
            truth = np.array([d.mean])
        elif name == "ma1":
            if (d.dgp or "sv") == "sv":
                raw = simulate_sv(d.sv_omega, d.sv_rho, d.sv_sigma, d.size, rng)
                truth = np.array([0.0])  # pseudo-true value
            else:
                raw = simulate_ma1(d.theta[0], d.size, rng)
                truth = np.array(d.theta[:1])
        else:
            raw = simulate_toads(d.theta, d.n_toads, d.n_days, rng)
            truth = np.array(d.theta)
    if cfg.report.truth:
        truth = np.array(cfg.report.truth)
    return Observed(raw=np.asarray(raw), eta=model.summarize(raw), truth=truth)


def initial_theta(cfg: ExperimentConfig, obs: Observed) -> np.ndarray:
    init = cfg.init.theta
    name = cfg.experiment.model
    if init == ["mle"] or (not init and name == "ma1"):
        return np.array([ma1_mle(obs.raw)])
    if init == ["truth"]:
        if obs.truth is None:
            raise ConfigurationError("init theta = truth needs synthetic data or [report] truth")
        return obs.truth.copy()
    if init:
        return np.array([float(v) for v in init])
    if name == "toad":
        return obs.truth.copy() if obs.truth is not None else np.array(TOAD_START)
    return np.zeros(1)


# ---------------------------------------------------------------------------
# Tasks


@dataclass(frozen=True)
class Task:
    cfg: ExperimentConfig
    point: int
    value: float | None
    replicate: int
    method: str
    rel_dir: str
    base_dir: str | None = None

    @property
    def label(self) -> str:
        return self.rel_dir or "."


@dataclass
class RunResult:
    task: Task
    files: dict[str, str] = field(default_factory=dict)
    row: dict[str, object] = field(default_factory=dict)
    posterior: object = None  # Trace or ImportanceSample, for accuracy tables
    truth: np.ndarray | None = None
    error: dict | None = None


def _fmt_value(v: float) -> str:
    return f"{v:g}"


def plan_tasks(cfg: ExperimentConfig, base_dir=None) -> list[Task]:
    tasks = []
    points = cfg.grid_points()
    nested = cfg.is_grid or cfg.grid.replicates > 1 or len(cfg.methods) > 1
    for g, value in enumerate(points):
        point_cfg = cfg if value is None else cfg.override(cfg.grid.parameter, value)
        for r in range(cfg.grid.replicates):
            for method in cfg.methods:
                parts = []
                if value is not None:
                    parts.append(f"point{g:02d}_{cfg.grid.parameter}={_fmt_value(value)}")
                if cfg.grid.replicates > 1:
                    parts.append(f"rep{r:03d}")
                if len(cfg.methods) > 1:
                    parts.append(method)
                rel = "/".join(parts) if nested else ""
                tasks.append(Task(point_cfg, g, value, r, method, rel, base_dir))
    return tasks


def _quantile_rows(names, draws, weights) -> list[str]:
    rows = []
    for j, name in enumerate(names):
        x = draws[:, j]
        mean = float(weights @ x)
        qs = diagnostics.weighted_quantile(x, weights, QUANTILES)
        rows.append(",".join([name, fmt_float(mean)] + [fmt_float(q) for q in qs]))
    return rows


def quantile_csv(trace_or_is, names) -> str:
    draws, w = trace_or_is.posterior_draws()
    header = "parameter,mean," + ",".join(f"q{q:g}" for q in QUANTILES)
    lines = [header] + _quantile_rows(names, np.asarray(draws), np.asarray(w))
    if isinstance(trace_or_is, Trace) and trace_or_is.has_gamma:
        g = trace_or_is.gamma[~trace_or_is.burnin_mask]
        if len(g):
            gw = np.full(len(g), 1.0 / len(g))
            lines += _quantile_rows([f"gamma_{j + 1}" for j in range(g.shape[1])], g, gw)
    return "\n".join(lines) + "\n"


def density_csv(draws, weights, names, n_points: int) -> str | None:
    """Gaussian kernel density of each marginal on an evenly spaced grid."""
    cols, grids = [], []
    for j in range(draws.shape[1]):
        x = draws[:, j]
        keep = weights > 0
        if np.ptp(x[keep]) == 0 or keep.sum() < 2:
            return None
        kde = gaussian_kde(x[keep], weights=weights[keep])
        pad = 3.0 * math.sqrt(float(kde.covariance[0, 0]))
        grid = np.linspace(x[keep].min() - pad, x[keep].max() + pad, n_points)
        grids.append(grid)
        cols.append(kde(grid))
    header = ",".join(f"{n}_grid,{n}_density" for n in names)
    lines = [header]
    for i in range(n_points):
        lines.append(
            ",".join(f"{fmt_float(grids[j][i])},{fmt_float(cols[j][i])}" for j in range(len(names)))
        )
    return "\n".join(lines) + "\n"


def format_report(sections: dict[str, dict[str, object]]) -> str:
    out = []
    for name, body in sections.items():
        out.append(f"[{name}]")
        for k, v in body.items():
            out.append(f"{k} = {_fmt_report_value(v)}")
        out.append("")
    return "\n".join(out)


def _fmt_report_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest string that round-trips
    if isinstance(v, (list, tuple, np.ndarray)):
        return ", ".join(_fmt_report_value(x) for x in (v.tolist() if isinstance(v, np.ndarray) else v))
    if isinstance(v, np.generic):
        return _fmt_report_value(v.item())
    return str(v)


def diagnostics_text(diags) -> str:
    lines = ["component,ks_statistic,q025,q50,q975,flag"]
    for d in diags:
        lines.append(
            f"gamma_{d.component},{fmt_float(d.ks_statistic)},{fmt_float(d.q025)},"
            f"{fmt_float(d.q50)},{fmt_float(d.q975)},{d.flag}"
        )
    return "\n".join(lines) + "\n"


def execute(task: Task, timing: bool = False) -> RunResult:
    """Run one (grid point, replicate, method) cell; never raises."""
    result = RunResult(task)
    try:
        _execute(task, result, timing)
    except Exception as exc:  # reported through error.json
        result.error = {
            "run": task.label,
            "type": type(exc).__name__,
            "message": str(exc),
            "traceback": traceback.format_exc(limit=8),
        }
    return result


def _execute(task: Task, result: RunResult, timing: bool) -> None:
    cfg = task.cfg
    ex = cfg.experiment
    started = time.perf_counter()
    master = ex.seed
    data_base = cfg.data.seed if cfg.data.seed >= 0 else master
    data_seed = derive_seed(data_base, task.point, task.replicate, DATA_KEY)
    chain_seed = derive_seed(
        master, task.point, task.replicate, CHAIN_KEY, METHODS.index(task.method)
    )
    model = build_model(cfg)
    prior = build_theta_prior(cfg)
    obs = observed_data(cfg, model, data_seed, task.base_dir)
    names = [f"theta_{j + 1}" for j in range(model.d_theta)]
    result.truth = obs.truth

    run_info: dict[str, object] = {
        "method": task.method,
        "model": model.name,
        "model_args": model_args(model),
        "chain_seed": chain_seed,
        "data_seed": data_seed if cfg.data.source == "synthetic" else "file",
        "eta_obs": obs.eta,
    }
    if task.value is not None:
        run_info[cfg.grid.parameter] = task.value
    if cfg.grid.replicates > 1:
        run_info["replicate"] = task.replicate
    report: dict[str, dict[str, object]] = {}
    row: dict[str, object] = {
        "point": task.point,
        "value": "" if task.value is None else task.value,
        "replicate": task.replicate,
        "method": task.method,
    }

    if task.method == "bsl-is":
        m_is = ex.is_m or ex.m
        post = importance_sample_bsl(prior, ex.draws, m_is, model, obs.eta, chain_seed)
        run_info["draws"] = ex.draws
        run_info["m"] = m_is
        run_info["ess"] = post.ess
        run_info["simulations"] = ex.draws * m_is
        lines = [",".join(names + ["log_weight", "weight"])]
        for k in range(len(post.weights)):
            lines.append(
                ",".join(
                    [fmt_float(v) for v in post.theta[k]]
                    + [fmt_float(post.log_weights[k]), fmt_float(post.weights[k])]
                )
            )
        result.files["weights.csv"] = "\n".join(lines) + "\n"
        row["acceptance_rate"] = ""
        row["ess"] = post.ess
    else:
        gprior = build_gamma_prior(cfg, task.method)
        theta0 = initial_theta(cfg, obs)
        settings = ChainSettings(
            method=MethodKind(task.method),
            m=ex.m,
            iterations=ex.iterations,
            theta0=theta0,
            proposal_cov=proposal_matrix(cfg, model.d_theta),
            seed=chain_seed,
            burn_in=ex.burn_in,
            gamma_prior=gprior,
            width=ex.width,
        )
        post = run_chain(obs.eta, model, prior, settings)
        post.meta["model_args"] = model_args(model)
        result.files["trace.csv"] = post.to_csv(thin=ex.thin)
        cs = diagnostics.chain_summary(post)
        run_info["theta0"] = theta0
        run_info["acceptance_rate"] = cs.acceptance_rate
        run_info["longest_rejection_run"] = cs.longest_rejection_run
        run_info["simulations"] = post.meta["simulations"]
        run_info["simulation_failures"] = post.meta["simulation_failures"]
        run_info["post_burnin_rows"] = cs.n_post
        row["acceptance_rate"] = cs.acceptance_rate
        row["ess"] = ""
        if post.has_gamma:
            try:
                diags = diagnostics.gamma_prior_divergence(
                    post, gprior, cfg.report.reference_n,
                    np.random.default_rng([chain_seed, 0, 5]), cfg.report.threshold,
                )
            except ConfigurationError as exc:
                report["gamma_diagnostics"] = {"skipped": str(exc)}
            else:
                result.files["diagnostics.csv"] = diagnostics_text(diags)
                report["gamma_diagnostics"] = {
                    f"gamma_{d.component}": f"ks={fmt_float(d.ks_statistic)} "
                    f"median={fmt_float(d.q50)} flag={d.flag}"
                    for d in diags
                }
                row["max_gamma_ks"] = max(d.ks_statistic for d in diags)
        if cfg.report.predictive_draws:
            pc = diagnostics.posterior_predictive(
                post, model, cfg.report.predictive_draws,
                np.random.default_rng([chain_seed, 0, 4]), eta_obs=obs.eta,
            )
            lines = ["statistic,observed,q025,q50,q975,percentile"]
            for j in range(model.d_eta):
                lines.append(
                    f"{j + 1},{fmt_float(obs.eta[j])},{fmt_float(pc.lower[j])},"
                    f"{fmt_float(pc.median[j])},{fmt_float(pc.upper[j])},"
                    f"{fmt_float(pc.percentile[j])}"
                )
            result.files["predictive.csv"] = "\n".join(lines) + "\n"

    draws, w = post.posterior_draws()
    draws = np.asarray(draws)
    result.files["quantiles.csv"] = quantile_csv(post, names)
    dens = density_csv(draws, np.asarray(w), names, cfg.report.density_points)
    if dens is not None:
        result.files["density.csv"] = dens
    for j, n in enumerate(names):
        x = draws[:, j]
        mean = float(np.asarray(w) @ x)
        q = diagnostics.weighted_quantile(x, np.asarray(w), [0.025, 0.5, 0.975])
        report[n] = {"mean": mean, "q025": float(q[0]), "median": float(q[1]), "q975": float(q[2])}
        row[f"{n}_mean"] = mean
        row[f"{n}_median"] = float(q[1])
    if timing:
        run_info["runtime_seconds"] = round(time.perf_counter() - started, 3)

    echo = {f"config.{k}": v for k, v in cfg.echo().items()}
    result.files["summary.txt"] = format_report({**echo, "run": run_info, **report})
    result.row = row
    result.posterior = post


# ---------------------------------------------------------------------------
# Aggregation and writing


def grid_summary_csv(results: list[RunResult]) -> str:
    keys: list[str] = []
    for r in results:
        for k in r.row:
            if k not in keys:
                keys.append(k)
    lines = [",".join(keys)]
    for r in results:
        lines.append(",".join(_cell(r.row.get(k, "")) for k in keys))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def accuracy_csv(cfg: ExperimentConfig, results: list[RunResult]) -> str | None:
    if cfg.grid.replicates < 2:
        return None
    lines = ["point,value,method,component,bias,rmse,length,coverage,runs"]
    groups: dict[tuple, list] = {}
    for r in results:
        if r.truth is None or r.posterior is None:
            continue
        groups.setdefault((r.task.point, r.task.method), []).append(r)
    if not groups:
        return None
    for (point, method), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], METHODS.index(kv[0][1]))):
        if len(rs) < 2:
            continue
        value = "" if rs[0].task.value is None else _cell(rs[0].task.value)
        for c in range(len(rs[0].truth)):
            row = diagnostics.accuracy_table(
                [(r.posterior, r.truth) for r in rs], label=method, component=c
            )
            lines.append(
                f"{point},{value},{method},{row.component},{fmt_float(row.bias)},"
                f"{fmt_float(row.rmse)},{fmt_float(row.length)},{fmt_float(row.coverage)},{row.runs}"
            )
    return "\n".join(lines) + "\n"


def _run_tasks(tasks: list[Task], threads: int, timing: bool) -> list[RunResult]:
    if threads <= 1 or len(tasks) <= 1:
        return [execute(t, timing) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(execute, tasks, [timing] * len(tasks)))


def run_experiment(
    cfg: ExperimentConfig, out_dir=None, threads: int = 1, base_dir=None
) -> int:
    """Run every task in ``cfg`` and write the artifact tree. Returns an exit status."""
    out = Path(out_dir if out_dir is not None else cfg.experiment.output)
    out.mkdir(parents=True, exist_ok=True)
    tasks = plan_tasks(cfg, base_dir)
    results = _run_tasks(tasks, threads, cfg.report.timing)

    (out / "config.ini").write_text(cfg.source_text)
    for r in results:
        target = out / r.task.rel_dir if r.task.rel_dir else out
        target.mkdir(parents=True, exist_ok=True)
        for name, text in r.files.items():
            (target / name).write_text(text)
    ok = [r for r in results if r.error is None]
    if len(tasks) > 1 and ok:
        (out / "grid_summary.csv").write_text(grid_summary_csv(ok))
        acc = accuracy_csv(cfg, ok)
        if acc is not None:
            (out / "accuracy.csv").write_text(acc)
    failures = [r.error for r in results if r.error is not None]
    if failures:
        write_error(out, failures)
        return 1
    return 0


def write_error(out: Path, failures: list[dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "error.json").write_text(json.dumps({"failures": failures}, indent=2) + "\n")
