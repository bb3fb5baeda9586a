"""Experiment configuration: a small sectioned key-value format.

Grammar::

    # comment
    [section]
    key = value            # trailing comments allowed
    list_key = 1.0, 2.0    # comma-separated arrays
    range_key = 1.0:0.1:2.0  # inclusive start:step:stop (grid values only)

Every problem found (unknown keys, bad types, violated constraints) is
reported together with its line number.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rbsl.errors import ConfigurationError

METHODS = ("bsl", "rbsl-mean", "rbsl-var", "bsl-is")
MODEL_IDS = ("normal", "ma1", "toad")
DEFAULT_GAMMA_KIND = {"rbsl-mean": "laplace", "rbsl-var": "exponential"}


class ConfigError(ConfigurationError):
    """All validation problems in one exception; ``errors`` keeps them separate."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def _opt(default, kind: str, choices=None):
    meta = {"kind": kind, "choices": choices}
    if isinstance(default, list):
        return field(default_factory=lambda: list(default), metadata=meta)
    return field(default=default, metadata=meta)


@dataclass(frozen=True)
class ExperimentSection:
    model: str = _opt("", "str", MODEL_IDS)
    method: str = _opt("", "str", METHODS)
    m: int = _opt(100, "int")
    iterations: int = _opt(1000, "int")
    burn_in: int = _opt(0, "int")
    thin: int = _opt(1, "int")
    seed: int = _opt(1, "int")
    output: str = _opt("runs", "str")
    width: float = _opt(1.0, "float")
    draws: int = _opt(10_000, "int")  # importance-sampling prior draws
    is_m: int = _opt(0, "int")  # simulations per importance draw; 0 reuses m


@dataclass(frozen=True)
class DataSection:
    source: str = _opt("synthetic", "str", ("synthetic", "file"))
    path: str = _opt("", "str")
    seed: int = _opt(-1, "int")  # -1: derive from the master seed
    size: int = _opt(100, "int")  # n for the normal model, T for MA(1)
    dgp: str = _opt("", "str", ("", "contaminated", "normal", "sv", "ma1", "toad"))
    mean: float = _opt(1.0, "float")
    sd: float = _opt(1.0, "float")
    omega: float = _opt(0.8, "float")
    standardize: bool = _opt(True, "bool")
    theta: list = _opt([], "floats")
    sv_omega: float = _opt(-0.76, "float")
    sv_rho: float = _opt(0.9, "float")
    sv_sigma: float = _opt(0.36, "float")
    n_toads: int = _opt(66, "int")
    n_days: int = _opt(63, "int")


@dataclass(frozen=True)
class ThetaPriorSection:
    kind: list = _opt([], "strs")
    lower: list = _opt([], "floats")
    upper: list = _opt([], "floats")
    mean: list = _opt([], "floats")
    variance: list = _opt([], "floats")
    transform: list = _opt([], "strs")


@dataclass(frozen=True)
class GammaPriorSection:
    kind: str = _opt("", "str", ("", "laplace", "exponential"))
    scale: float = _opt(0.5, "float")


@dataclass(frozen=True)
class ProposalSection:
    cov: list = _opt([0.01], "floats")


@dataclass(frozen=True)
class InitSection:
    theta: list = _opt([], "strs")  # numbers, or "mle" / "truth"


@dataclass(frozen=True)
class GridSection:
    parameter: str = _opt("", "str")
    values: list = _opt([], "range")
    replicates: int = _opt(1, "int")
    methods: list = _opt([], "strs")


@dataclass(frozen=True)
class ReportSection:
    truth: list = _opt([], "floats")
    density_points: int = _opt(201, "int")
    predictive_draws: int = _opt(0, "int")
    threshold: float = _opt(0.3, "float")
    reference_n: int = _opt(100_000, "int")
    timing: bool = _opt(False, "bool")


SECTIONS = {
    "experiment": ExperimentSection,
    "data": DataSection,
    "theta_prior": ThetaPriorSection,
    "gamma_prior": GammaPriorSection,
    "proposal": ProposalSection,
    "init": InitSection,
    "grid": GridSection,
    "report": ReportSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSection
    data: DataSection
    theta_prior: ThetaPriorSection
    gamma_prior: GammaPriorSection
    proposal: ProposalSection
    init: InitSection
    grid: GridSection
    report: ReportSection
    source_text: str = ""

    @property
    def methods(self) -> list[str]:
        return list(self.grid.methods) or [self.experiment.method]

    @property
    def is_grid(self) -> bool:
        return bool(self.grid.parameter)

    def grid_points(self) -> list[float | None]:
        return list(self.grid.values) if self.is_grid else [None]

    def gamma_prior_for(self, method: str) -> tuple[str, float] | None:
        if method not in DEFAULT_GAMMA_KIND:
            return None
        kind = self.gamma_prior.kind or DEFAULT_GAMMA_KIND[method]
        return kind, self.gamma_prior.scale

    def override(self, dotted: str, value) -> "ExperimentConfig":
        """Copy with ``section.key`` replaced (used to expand grid points)."""
        sec, key = dotted.split(".", 1)
        section = getattr(self, sec)
        kind = _field_kinds(type(section))[key]
        if kind == "int":
            value = int(round(value))
        return dataclasses.replace(self, **{sec: dataclasses.replace(section, **{key: value})})

    def echo(self) -> dict[str, dict[str, object]]:
        """Nested key-value view of every setting (defaults included)."""
        return {
            name: {f.name: getattr(getattr(self, name), f.name) for f in dataclasses.fields(cls)}
            for name, cls in SECTIONS.items()
        }


def _field_kinds(cls) -> dict[str, str]:
    return {f.name: f.metadata["kind"] for f in dataclasses.fields(cls)}


def _split_list(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


def parse_range(raw: str) -> list[float]:
    """``a:h:b`` inclusive arithmetic sequence, or a plain comma list."""
    if ":" not in raw:
        return [float(v) for v in _split_list(raw)]
    parts = [float(p) for p in raw.split(":")]
    if len(parts) != 3:
        raise ValueError("ranges take the form start:step:stop")
    a, h, b = parts
    if h <= 0 or b < a:
        raise ValueError("range needs a positive step and stop >= start")
    n = int(math.floor((b - a) / h + 1e-9)) + 1
    # round away the accumulated float noise of a + k*h
    return [float(round(a + k * h, 12)) for k in range(n)]


def _convert(raw: str, kind: str):
    if kind == "str":
        return raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "floats":
        return [float(v) for v in _split_list(raw)]
    if kind == "strs":
        return _split_list(raw)
    if kind == "range":
        return parse_range(raw)
    raise AssertionError(kind)


def parse_config(text: str) -> ExperimentConfig:
    errors: list[str] = []
    values: dict[str, dict[str, object]] = {s: {} for s in SECTIONS}
    lines_of: dict[tuple[str, str], int] = {}
    section = None
    in_bad_section = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                errors.append(f"line {lineno}: malformed section header {body!r}")
                section, in_bad_section = None, True
                continue
            section = body[1:-1].strip()
            in_bad_section = section not in SECTIONS
            if in_bad_section:
                errors.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in body:
            errors.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, raw = (p.strip() for p in body.split("=", 1))
        if section is None:
            if not in_bad_section:  # keys under a rejected header are already covered
                errors.append(f"line {lineno}: '{key}' appears before any section")
            continue
        kinds = _field_kinds(SECTIONS[section])
        if key not in kinds:
            errors.append(f"line {lineno}: unknown key '{key}' in [{section}]")
            continue
        if (section, key) in lines_of:
            errors.append(
                f"line {lineno}: duplicate key '{key}' in [{section}] "
                f"(first set on line {lines_of[section, key]})"
            )
            continue
        lines_of[section, key] = lineno
        try:
            value = _convert(raw, kinds[key])
        except ValueError as exc:
            errors.append(f"line {lineno}: [{section}] {key}: {exc}")
            continue
        choices = dataclasses.fields(SECTIONS[section])
        allowed = next(f.metadata["choices"] for f in choices if f.name == key)
        if allowed is not None and value not in allowed:
            errors.append(
                f"line {lineno}: [{section}] {key} must be one of "
                f"{', '.join(repr(c) for c in allowed if c)}; got {value!r}"
            )
            continue
        values[section][key] = value

    cfg = ExperimentConfig(
        **{s: SECTIONS[s](**values[s]) for s in SECTIONS}, source_text=text
    )
    errors += _validate(cfg, lines_of)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _where(lines_of, section: str, key: str) -> str:
    n = lines_of.get((section, key))
    return f"line {n}" if n else f"[{section}] {key} (default)"


def _validate(cfg: ExperimentConfig, lines_of) -> list[str]:
    errs: list[str] = []

    def err(section, key, msg):
        errs.append(f"{_where(lines_of, section, key)}: [{section}] {key}: {msg}")

    ex = cfg.experiment
    if not ex.model:
        err("experiment", "model", "required")
    if not ex.method and not cfg.grid.methods:
        err("experiment", "method", "required (or list [grid] methods)")
    for meth in cfg.grid.methods:
        if meth not in METHODS:
            err("grid", "methods", f"unknown method {meth!r}")
    if ex.m < 2:
        err("experiment", "m", "must be at least 2")
    elif ex.model in D_ETA and ex.m < D_ETA[ex.model] + 1:
        err("experiment", "m", f"must exceed the {D_ETA[ex.model]} summaries of {ex.model}")
    if ex.iterations < 0:
        err("experiment", "iterations", "must be >= 0")
    if not 0 <= ex.burn_in <= max(ex.iterations, 0):
        err("experiment", "burn_in", f"must lie in [0, iterations={ex.iterations}]")
    if ex.thin < 1:
        err("experiment", "thin", "must be >= 1")
    if ex.seed < 0:
        err("experiment", "seed", "must be non-negative")
    if not ex.width > 0:
        err("experiment", "width", "must be positive")
    if ex.draws < 1:
        err("experiment", "draws", "must be at least 1")
    if ex.is_m == 1 or ex.is_m < 0:
        err("experiment", "is_m", "use 0 (same as m) or at least 2")

    for meth in cfg.methods:
        if meth not in DEFAULT_GAMMA_KIND or not cfg.gamma_prior.kind:
            continue
        if cfg.gamma_prior.kind != DEFAULT_GAMMA_KIND[meth]:
            key_line = _where(lines_of, "gamma_prior", "kind")
            meth_line = _where(lines_of, "experiment", "method")
            errs.append(
                f"{key_line}: [gamma_prior] kind={cfg.gamma_prior.kind} is inconsistent "
                f"with method={meth} ({meth_line}); {meth} needs "
                f"kind={DEFAULT_GAMMA_KIND[meth]}"
            )
    if not cfg.gamma_prior.scale > 0:
        err("gamma_prior", "scale", "must be positive")

    d = cfg.data
    if d.source == "file" and not d.path:
        err("data", "path", "required when source = file")
    if d.size < 3:
        err("data", "size", "must be at least 3")
    if ex.model == "normal":
        if d.dgp not in ("", "contaminated", "normal"):
            err("data", "dgp", "normal model data come from 'contaminated' or 'normal'")
        if not 0 < d.omega < 1:
            err("data", "omega", "must lie in (0, 1)")
        if not d.sd > 0:
            err("data", "sd", "must be positive")
        elif (d.dgp or "contaminated") == "contaminated" and d.sd**2 <= d.omega:
            err("data", "sd", f"sd^2 must exceed omega={d.omega}")
    elif ex.model == "ma1":
        if d.dgp not in ("", "sv", "ma1"):
            err("data", "dgp", "MA(1) data come from 'sv' or 'ma1'")
        if d.dgp == "ma1" and len(d.theta) != 1:
            err("data", "theta", "the ma1 data-generating process needs one theta")
        if not 0 < d.sv_rho < 1:
            err("data", "sv_rho", "must lie in (0, 1)")
        if not 0 < d.sv_sigma < 1:
            err("data", "sv_sigma", "must lie in (0, 1)")
    elif ex.model == "toad":
        if d.source == "synthetic" and len(d.theta) != 3:
            err("data", "theta", "synthetic toad data need (alpha, delta, p0)")
        if d.n_days < 9 or d.n_toads < 1:
            err("data", "n_days", "need at least 9 days and one toad")

    errs += _validate_prior(cfg, lines_of)

    if cfg.is_grid:
        g = cfg.grid
        if "." not in g.parameter:
            err("grid", "parameter", "use section.key, e.g. data.sd")
        else:
            sec, key = g.parameter.split(".", 1)
            kinds = _field_kinds(SECTIONS[sec]) if sec in SECTIONS else {}
            if kinds.get(key) not in ("int", "float"):
                err("grid", "parameter", f"{g.parameter} is not a numeric setting")
        if not g.values:
            err("grid", "values", "required when a grid parameter is set")
    if cfg.grid.replicates < 1:
        err("grid", "replicates", "must be at least 1")
    if cfg.report.density_points < 2:
        err("report", "density_points", "must be at least 2")
    if cfg.report.predictive_draws and cfg.report.predictive_draws < 100:
        err("report", "predictive_draws", "use 0 to disable or at least 100")
    if not 0 < cfg.report.threshold <= 1:
        err("report", "threshold", "must lie in (0, 1]")
    return errs


D_THETA = {"normal": 1, "ma1": 1, "toad": 3}
D_ETA = {"normal": 2, "ma1": 3, "toad": 48}
# theta priors used when [theta_prior] leaves a field out
DEFAULT_PRIORS = {
    "normal": {"kind": ["normal"], "mean": [0.0], "variance": [10.0]},
    "ma1": {"kind": ["uniform"], "lower": [-1.0], "upper": [1.0]},
    "toad": {"kind": ["uniform"], "lower": [1.0, 0.0, 0.0], "upper": [2.0, 100.0, 0.9]},
}


def prior_components(cfg: ExperimentConfig) -> list[dict]:
    """Per-component prior specs with model defaults and length-1 broadcasting."""
    dt = D_THETA[cfg.experiment.model]
    defaults = DEFAULT_PRIORS[cfg.experiment.model]
    out = []
    for j in range(dt):
        comp = {}
        for name in ("kind", "lower", "upper", "mean", "variance", "transform"):
            vals = getattr(cfg.theta_prior, name) or defaults.get(name, [])
            comp[name] = _pick(vals, j)
        comp["transform"] = comp["transform"] or "default"
        out.append(comp)
    return out


def _validate_prior(cfg: ExperimentConfig, lines_of) -> list[str]:
    errs: list[str] = []
    model = cfg.experiment.model
    if model not in D_THETA:
        return errs
    dt = D_THETA[model]
    tp = cfg.theta_prior

    def err(section, key, msg):
        errs.append(f"{_where(lines_of, section, key)}: [{section}] {key}: {msg}")

    bad_len = False
    for name in ("kind", "lower", "upper", "mean", "variance", "transform"):
        if len(getattr(tp, name)) not in (0, 1, dt):
            err("theta_prior", name, f"give 1 or {dt} entries")
            bad_len = True
    if bad_len:
        return errs
    for j, comp in enumerate(prior_components(cfg)):
        k = comp["kind"]
        if k == "uniform":
            lo, hi = comp["lower"], comp["upper"]
            if lo is None or hi is None:
                err("theta_prior", "lower", f"component {j + 1} needs lower and upper")
            elif not lo < hi:
                err("theta_prior", "upper", f"component {j + 1}: upper must exceed lower")
        elif k == "normal":
            if comp["mean"] is None or comp["variance"] is None:
                err("theta_prior", "mean", f"component {j + 1} needs mean and variance")
            elif not comp["variance"] > 0:
                err("theta_prior", "variance", "must be positive")
        else:
            err("theta_prior", "kind", f"unknown prior kind {k!r}")
    for t in tp.transform:
        if t not in ("default", "identity", "log", "logit"):
            err("theta_prior", "transform", f"unknown transform {t!r}")

    n_cov = len(cfg.proposal.cov)
    if n_cov not in (1, dt, dt * dt):
        err("proposal", "cov", f"give 1, {dt} or {dt * dt} entries")
    else:
        cov = np.asarray(cfg.proposal.cov, dtype=float)
        cov = np.eye(dt) * cov[0] if n_cov == 1 else np.diag(cov) if n_cov == dt else cov.reshape(dt, dt)
        if not np.allclose(cov, cov.T):
            err("proposal", "cov", "matrix must be symmetric")
        else:
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                err("proposal", "cov", "must be positive definite")

    init = cfg.init.theta
    if init and not (len(init) == 1 and init[0] in ("mle", "truth")):
        if len(init) != dt:
            err("init", "theta", f"give {dt} numbers, 'mle' or 'truth'")
        else:
            try:
                [float(v) for v in init]
            except ValueError:
                err("init", "theta", "values must be numbers")
    if init == ["mle"] and model != "ma1":
        err("init", "theta", "'mle' initialisation is only available for ma1")
    if cfg.report.truth and len(cfg.report.truth) != dt:
        err("report", "truth", f"give {dt} values")
    return errs


def _pick(vals: list, j: int):
    if not vals:
        return None
    return vals[0] if len(vals) == 1 else vals[j]
