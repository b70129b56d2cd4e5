"""CSV ingestion and table emission."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .data import CrossTab, ObservedSample
from .errors import MissingColumn, NonBinaryValue, ParseError

REQUIRED = ("z", "d", "y")


def load_csv(path) -> ObservedSample:
    """Read ``z,d,y,<covariates...>`` from a UTF-8 CSV with a header row."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        for col in REQUIRED:
            if col not in header:
                raise MissingColumn(f"required column {col!r} missing from header {header}")
        pos = {c: header.index(c) for c in REQUIRED}
        cov_cols = [j for j, h in enumerate(header) if h not in REQUIRED]
        cols = {c: [] for c in REQUIRED}
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not v.strip() for v in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"line {lineno}: expected {len(header)} fields, got {len(rec)}", line=lineno
                )
            for c in REQUIRED:
                raw = rec[pos[c]].strip()
                try:
                    v = float(raw)
                except ValueError:
                    raise ParseError(f"line {lineno}, column {c}: cannot parse {raw!r}",
                                     line=lineno, column=c) from None
                if v not in (0.0, 1.0):
                    raise NonBinaryValue(f"line {lineno}, column {c}: value {raw!r} is not 0/1")
                cols[c].append(v)
            row = []
            for j in cov_cols:
                raw = rec[j].strip()
                try:
                    v = float(raw)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise ParseError(f"line {lineno}, column {header[j]}: {raw!r} is not a finite number",
                                     line=lineno, column=header[j])
                row.append(v)
            rows.append(row)
    if len(rows) < 2:
        raise ParseError(f"need at least two data rows, found {len(rows)}")
    x = np.array(rows, dtype=np.float64).reshape(len(rows), len(cov_cols))
    return ObservedSample(
        z=np.array(cols["z"]), d=np.array(cols["d"]), y=np.array(cols["y"]), x=x,
        covariate_names=tuple(header[j] for j in cov_cols),
    )


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def fmt(v) -> str:
    """Machine format: 10 significant digits for floats."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def human(v, digits=3) -> str:
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "NA"
        s = f"{v:.{digits}f}"
        return s
    return str(v)


def render_table(header, rows) -> str:
    cells = [list(map(str, header))] + [[human(v) for v in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_crosstab(ct: CrossTab) -> str:
    return render_table(
        ["", "D=1", "D=0"],
        [["Z=1", ct.n11, ct.n10], ["Z=0", ct.n01, ct.n00]],
    )


@dataclass
class AnalysisRow:
    estimand: str
    method: str
    point: float
    ci_lo: float
    ci_hi: float
    sigma2_hat: float
    se: float
    denom_hat: float
    variance_reduction: float
    warnings: tuple = ()
    error: str = ""


ANALYSIS_COLUMNS = (
    "estimand", "method", "point", "ci_lo", "ci_hi", "sigma2_hat", "se",
    "denom_hat", "variance_reduction", "n_warnings", "error",
)


@dataclass
class AnalysisReport:
    rows: list
    crosstab: CrossTab
    n_defiers_possible: int = 0
    warnings: list = field(default_factory=list)

    def table_rows(self):
        return [
            (r.estimand, r.method, r.point, r.ci_lo, r.ci_hi, r.sigma2_hat, r.se,
             r.denom_hat, r.variance_reduction, len(r.warnings), r.error)
            for r in self.rows
        ]

    def render(self) -> str:
        human_rows = [
            (r.estimand, r.method, r.point, f"[{human(r.ci_lo)},{human(r.ci_hi)}]", r.variance_reduction)
            for r in self.rows
        ]
        parts = [
            "Assignment by treatment received",
            render_crosstab(self.crosstab),
            "",
            render_table(["effect", "method", "point", "95% CI", "variance_reduction"], human_rows),
        ]
        if self.warnings:
            parts += ["", "warnings:"] + [f"  - {w}" for w in self.warnings]
        return "\n".join(parts)


SUMMARY_COLUMNS = (
    "method", "estimand", "rho", "n1_frac", "bias", "sd", "rmse", "rmse_ratio",
    "cp", "ci_length", "length_ratio", "n_failed",
)
REPLICATION_COLUMNS = ("rho", "n1_frac", "rep", "method", "estimand", "point", "ci_lo", "ci_hi", "failed")


def summary_table_rows(rows):
    return [tuple(getattr(r, c) for c in SUMMARY_COLUMNS) for r in rows]


def render_summary(rows) -> str:
    cols = ("method", "estimand", "rho", "n1_frac", "bias", "sd", "rmse", "rmse_ratio",
            "cp", "ci_length", "length_ratio", "n_failed")
    return render_table(cols, summary_table_rows(rows))


def read_summary(path):
    """Parse a summary CSV back into dicts of floats (strings for labels)."""
    with open(path, encoding="utf-8", newline="") as fh:
        out = []
        for rec in csv.DictReader(fh):
            out.append({
                k: (v if k in ("method", "estimand") else float(v))
                for k, v in rec.items()
            })
    return out
