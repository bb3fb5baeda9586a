"""Command-line entry point: ``rbsl run | diagnose | predictive``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from rbsl import diagnostics
from rbsl.config import ConfigError, load_config
from rbsl.errors import RBSLError
from rbsl.harness import diagnostics_text, run_experiment, write_error
from rbsl.models import MODELS
from rbsl.models.io import load_matrix, load_series
from rbsl.priors import GammaPrior
from rbsl.trace import Trace, fmt_float


def _model_from(name: str, trace: Trace):
    """Rebuild the simulator, picking up sizes recorded in the trace metadata."""
    kwargs = {}
    spec = str(trace.meta.get("model_args", ""))
    for item in filter(None, spec.split(",")):
        k, v = item.split(":", 1)
        kwargs[k] = int(v)
    if trace.meta.get("model") not in (None, name):
        kwargs = {}  # sizes belong to a different model
    return MODELS[name](**kwargs)


def _emit(text: str, out: str | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    print(f"wrote {path / name}")


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        if args.out:
            write_error(Path(args.out), [{"run": ".", "type": "ConfigError", "errors": exc.errors}])
        return 2
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, experiment=dataclasses.replace(cfg.experiment, seed=args.seed)
        )
    if args.timing:
        cfg = dataclasses.replace(cfg, report=dataclasses.replace(cfg.report, timing=True))
    out = args.out or cfg.experiment.output
    status = run_experiment(
        cfg, out_dir=out, threads=args.threads, base_dir=str(Path(args.config).parent)
    )
    if status:
        print(f"one or more runs failed; see {Path(out) / 'error.json'}", file=sys.stderr)
    else:
        print(f"artifacts written to {out}")
    return status


def cmd_diagnose(args) -> int:
    trace = Trace.from_csv(args.trace)
    prior = GammaPrior.parse(args.prior)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    diags = diagnostics.gamma_prior_divergence(
        trace, prior, args.reference_n, rng, args.threshold
    )
    _emit(diagnostics_text(diags), args.out, "diagnostics.csv")
    return 0


def cmd_predictive(args) -> int:
    trace = Trace.from_csv(args.trace)
    model = _model_from(args.model, trace)
    eta = None
    if args.data:
        raw = load_matrix(args.data) if args.model == "toad" else load_series(args.data)
        eta = model.summarize(raw)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    pc = diagnostics.posterior_predictive(
        trace, model, args.draws, rng, eta_obs=eta, adjusted=args.adjusted
    )
    lines = ["statistic,observed,q025,q50,q975,percentile"]
    for j in range(model.d_eta):
        obs = "" if eta is None else fmt_float(eta[j])
        pct = "" if pc.percentile is None else fmt_float(pc.percentile[j])
        lines.append(
            f"{j + 1},{obs},{fmt_float(pc.lower[j])},{fmt_float(pc.median[j])},"
            f"{fmt_float(pc.upper[j])},{pct}"
        )
    _emit("\n".join(lines) + "\n", args.out, "predictive.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rbsl", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--timing", action="store_true", help="record wall-clock runtimes")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("diagnose", parents=[common], help="compare gamma posterior and prior")
    d.add_argument("trace")
    d.add_argument("--prior", required=True, help="e.g. laplace:0.5 or exponential:0.5")
    d.add_argument("--threshold", type=float, default=diagnostics.DEFAULT_THRESHOLD)
    d.add_argument("--reference-n", type=int, default=100_000)
    d.set_defaults(func=cmd_diagnose)

    q = sub.add_parser("predictive", parents=[common], help="posterior predictive bands")
    q.add_argument("trace")
    q.add_argument("--model", required=True, choices=sorted(MODELS))
    q.add_argument("--draws", type=int, required=True)
    q.add_argument("--data", default=None, help="observed data file for percentiles")
    q.add_argument("--adjusted", action="store_true", help="apply the fitted adjustments")
    q.set_defaults(func=cmd_predictive)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (RBSLError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
