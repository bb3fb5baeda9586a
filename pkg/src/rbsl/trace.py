"""Chain traces and their CSV representation.

CSV layout::

    # key=value;key=value;...           (metadata, one line)
    iter,accepted,loglike,theta_1,...[,gamma_1,...],burnin
    0,0,-3.1400000000000001,...

Floats are written with 17 significant digits so a round trip is exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rbsl.errors import ConfigurationError


def fmt_float(v: float) -> str:
    return f"{v:.17g}"


@dataclass
class Trace:
    iters: np.ndarray  # int, recorded iteration indices
    theta: np.ndarray  # (rows, d_theta)
    loglike: np.ndarray
    accepted: np.ndarray  # bool; row for iteration 0 is False
    gamma: np.ndarray | None = None  # (rows, d_eta)
    burn_in: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.iters = np.asarray(self.iters, dtype=np.int64)
        self.theta = np.asarray(self.theta, dtype=float).reshape(len(self.iters), -1)
        self.loglike = np.asarray(self.loglike, dtype=float)
        self.accepted = np.asarray(self.accepted, dtype=bool)
        if self.gamma is not None:
            self.gamma = np.asarray(self.gamma, dtype=float).reshape(
                len(self.iters), -1
            )

    def __len__(self) -> int:
        return len(self.iters)

    @property
    def d_theta(self) -> int:
        return self.theta.shape[1]

    @property
    def has_gamma(self) -> bool:
        return self.gamma is not None

    @property
    def burnin_mask(self) -> np.ndarray:
        return self.iters <= self.burn_in

    @property
    def acceptance_count(self) -> int:
        if "acceptance_count" in self.meta:
            return int(self.meta["acceptance_count"])
        return int(self.accepted[self.iters > 0].sum())

    @property
    def iterations(self) -> int:
        if "iterations" in self.meta:
            return int(self.meta["iterations"])
        return int(self.iters.max()) if len(self.iters) else 0

    @property
    def acceptance_rate(self) -> float:
        n = self.iterations
        return self.acceptance_count / n if n else float("nan")

    def post_burnin(self) -> "Trace":
        keep = ~self.burnin_mask
        return self.select(keep)

    def select(self, keep) -> "Trace":
        return Trace(
            iters=self.iters[keep],
            theta=self.theta[keep],
            loglike=self.loglike[keep],
            accepted=self.accepted[keep],
            gamma=None if self.gamma is None else self.gamma[keep],
            burn_in=self.burn_in,
            meta=dict(self.meta),
        )

    def thinned(self, thin: int) -> "Trace":
        """Keep iteration 0 and every ``thin``-th iteration."""
        if thin < 1:
            raise ValueError("thin must be >= 1")
        return self.select(self.iters % thin == 0)

    def posterior_draws(self):
        """Post-burn-in theta draws with uniform weights."""
        post = self.theta[~self.burnin_mask]
        return post, np.full(len(post), 1.0 / max(len(post), 1))

    # -- CSV ---------------------------------------------------------------

    def header(self) -> list[str]:
        cols = ["iter", "accepted", "loglike"]
        cols += [f"theta_{i + 1}" for i in range(self.d_theta)]
        if self.gamma is not None:
            cols += [f"gamma_{i + 1}" for i in range(self.gamma.shape[1])]
        cols.append("burnin")
        return cols

    def to_csv(self, path=None, thin: int = 1) -> str:
        tr = self if thin == 1 else self.thinned(thin)
        meta = dict(tr.meta)
        meta.setdefault("acceptance_count", self.acceptance_count)
        meta.setdefault("iterations", self.iterations)
        meta["burn_in"] = self.burn_in
        meta["thin"] = thin
        buf = io.StringIO()
        buf.write("# " + ";".join(f"{k}={meta[k]}" for k in sorted(meta)) + "\n")
        buf.write(",".join(tr.header()) + "\n")
        burn = tr.burnin_mask
        for r in range(len(tr)):
            fields = [str(int(tr.iters[r])), "1" if tr.accepted[r] else "0"]
            fields.append(fmt_float(tr.loglike[r]))
            fields += [fmt_float(v) for v in tr.theta[r]]
            if tr.gamma is not None:
                fields += [fmt_float(v) for v in tr.gamma[r]]
            fields.append("1" if burn[r] else "0")
            buf.write(",".join(fields) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "Trace":
        text = Path(source).read_text() if not _looks_like_csv(source) else source
        lines = text.splitlines()
        meta: dict = {}
        if lines and lines[0].startswith("#"):
            for item in lines[0][1:].strip().split(";"):
                if "=" in item:
                    k, v = item.split("=", 1)
                    meta[k.strip()] = _parse_meta(v.strip())
            lines = lines[1:]
        if not lines:
            raise ConfigurationError("trace file has no header")
        header = lines[0].split(",")
        if header[:3] != ["iter", "accepted", "loglike"] or header[-1] != "burnin":
            raise ConfigurationError(f"unrecognised trace header {header}")
        theta_cols = [i for i, h in enumerate(header) if h.startswith("theta_")]
        gamma_cols = [i for i, h in enumerate(header) if h.startswith("gamma_")]
        rows = [ln.split(",") for ln in lines[1:] if ln]
        iters = np.array([int(r[0]) for r in rows], dtype=np.int64)
        accepted = np.array([r[1] == "1" for r in rows], dtype=bool)
        loglike = np.array([float(r[2]) for r in rows])
        theta = np.array([[float(r[i]) for i in theta_cols] for r in rows]).reshape(
            len(rows), len(theta_cols)
        )
        gamma = None
        if gamma_cols:
            gamma = np.array([[float(r[i]) for i in gamma_cols] for r in rows]).reshape(
                len(rows), len(gamma_cols)
            )
        burn_in = int(meta.pop("burn_in", 0))
        meta.pop("thin", None)
        return cls(
            iters=iters,
            theta=theta,
            loglike=loglike,
            accepted=accepted,
            gamma=gamma,
            burn_in=burn_in,
            meta=meta,
        )


def _looks_like_csv(source) -> bool:
    return isinstance(source, str) and "\n" in source


def _parse_meta(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v
