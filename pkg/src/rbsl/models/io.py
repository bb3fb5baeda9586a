"""Plain-text loaders for observed data."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from rbsl.errors import ConfigurationError


def load_series(path) -> np.ndarray:
    """One value per line; blank lines and ``#`` comments are skipped."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: not a number: {text!r}")
    if not values:
        raise ConfigurationError(f"{path}: no values found")
    return np.array(values)


def load_matrix(path, delimiter: str | None = None) -> np.ndarray:
    """Delimited matrix, rows = days, columns = toads. Empty fields are rejected."""
    text = Path(path).read_text()
    if delimiter is None:
        first = next((ln for ln in text.splitlines() if ln.strip()), "")
        delimiter = "," if "," in first else ("\t" if "\t" in first else " ")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if delimiter == " ":
            fields = line.split()
        else:
            fields = next(csv.reader([line], delimiter=delimiter))
        row = []
        for col, f in enumerate(fields, start=1):
            f = f.strip()
            if not f:
                raise ConfigurationError(
                    f"{path}:{lineno}: empty field in column {col} (missing data "
                    "is not supported)"
                )
            try:
                row.append(float(f))
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: not a number: {f!r}")
        rows.append(row)
    if not rows:
        raise ConfigurationError(f"{path}: no rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigurationError(f"{path}: rows have differing lengths {sorted(widths)}")
    return np.array(rows)


def save_series(path, values) -> None:
    Path(path).write_text("".join(f"{v:.17g}\n" for v in np.ravel(values)))


def save_matrix(path, Y) -> None:
    Y = np.asarray(Y)
    Path(path).write_text(
        "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in Y)
    )
