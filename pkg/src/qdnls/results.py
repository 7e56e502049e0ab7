"""Tagged result tables, deterministic CSV output and plot-data series."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = ["ResultTable", "config_hash", "format_value", "emit_plot_data", "fit_loglog_slope"]


def format_value(v) -> str:
    """Canonical text for a CSV cell: shortest round-trip floats, ``p/q`` rationals."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    if isinstance(v, (tuple, list)):
        return "(" + ",".join(format_value(x) for x in v) + ("," if len(v) == 1 else "") + ")"
    return str(v)


def config_hash(params: dict) -> str:
    """Short SHA-256 of a canonical text rendering of ``params``."""
    canon = json.dumps({str(k): format_value(v) for k, v in params.items()}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class ResultTable:
    columns: tuple
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")
        for r in self.rows:
            self._check(r)

    @classmethod
    def for_params(cls, columns, params: dict, seed=None) -> "ResultTable":
        return cls(columns, [], {"config_hash": config_hash(params), "seed": seed})

    def _check(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, schema has {len(self.columns)}")

    def add(self, *values, **named):
        if named:
            if values:
                raise ValueError("give positional or named values, not both")
            missing = set(self.columns) - set(named)
            if missing:
                raise ValueError(f"missing columns {sorted(missing)}")
            values = tuple(named[c] for c in self.columns)
        self._check(values)
        self.rows.append(tuple(values))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise KeyError(f"no column {name!r}")
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def where(self, **match) -> "ResultTable":
        idx = {k: self.columns.index(k) for k in match}
        rows = [r for r in self.rows if all(r[idx[k]] == v for k, v in match.items())]
        return ResultTable(self.columns, rows, dict(self.provenance), dict(self.meta))

    def to_csv(self, fh=None) -> str:
        """Write the table; the first line is a ``#`` provenance comment."""
        buf = io.StringIO()
        prov = " ".join(f"{k}={format_value(v)}" for k, v in sorted(self.provenance.items()))
        buf.write(f"# provenance: {prov}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(v) for v in r])
        text = buf.getvalue()
        if fh is not None:
            if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
                with open(fh, "w", newline="") as out:
                    out.write(text)
            else:
                fh.write(text)
        return text


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def emit_plot_data(table: ResultTable, x: str, y: str, transform: str = "linear", path=None):
    """Two-column whitespace series of ``(x, y)``.

    ``log-log`` takes natural logs and drops rows where either value is not
    positive, warning with the count. Returns ``(text, n_dropped)`` and writes
    ``path`` when given.
    """
    for c in (x, y):
        if c not in table.columns:
            raise KeyError(f"no column {c!r}")
    if transform not in ("linear", "log-log"):
        raise ValueError(f"unknown transform {transform!r}")
    lines = []
    dropped = 0
    for xv, yv in zip(table.column(x), table.column(y)):
        try:
            a, b = float(xv), float(yv)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"non-numeric value in ({x}, {y})") from exc
        if transform == "log-log":
            if not (a > 0 and b > 0):
                dropped += 1
                continue
            a, b = math.log(a), math.log(b)
        lines.append(f"{a!r} {b!r}")
    if not lines:
        warnings.warn("plot series is empty", RuntimeWarning, stacklevel=2)
    if dropped:
        warnings.warn(f"dropped {dropped} nonpositive point(s) under log-log", RuntimeWarning, stacklevel=2)
    text = "".join(line + "\n" for line in lines)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text, dropped
