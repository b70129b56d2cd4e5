"""Command-line front end: ``complier {analyze,simulate,replay}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 estimation
failure in strict mode.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from . import reporting
from .config import RunConfig, load_config, override
from .data import compliance_crosstab, true_estimands, validate_observed
from .errors import ComplierError, ConfigError, DataError, EstimationError, InvalidArmSize
from .estimators import estimate
from .simulation import (
    generate_population,
    population_truth,
    replay_synthetic_population,
    simulate_records,
    summarize,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATION = 0, 2, 3, 4

log = logging.getLogger("complier")


def _load_sample(cfg: RunConfig):
    return validate_observed(reporting.load_csv(cfg.input_path))


def _output_dir(cfg):
    if cfg.output_path:
        os.makedirs(cfg.output_path, exist_ok=True)
    return cfg.output_path


def analyze_command(cfg: RunConfig, stream=None) -> reporting.AnalysisReport:
    """Run every requested estimator on the input CSV and print a report.

    ``variance_reduction`` is ``1 - sigma2 / sigma2_wald`` against the Wald
    estimate of the same estimand.  In lenient mode a failing estimator leaves
    a row with NaNs and its error message; in strict mode the error propagates.
    """
    sample = _load_sample(cfg)
    rows, notes = [], []
    kw = dict(threshold=cfg.weak_denom_threshold, strict=cfg.strict)
    for estimand in cfg.estimands:
        cache: dict = {}
        try:
            base = estimate(sample, "wald", estimand, cfg.alpha, fit_cache=cache, **kw)
        except EstimationError as exc:
            if cfg.strict:
                raise
            base = None
            notes.append(f"{estimand}/wald: {type(exc).__name__}: {exc}")
        for method in cfg.estimators:
            try:
                est = base if method == "wald" and base is not None else estimate(
                    sample, method, estimand, cfg.alpha, fit_cache=cache, **kw
                )
            except EstimationError as exc:
                if cfg.strict:
                    raise
                msg = f"{type(exc).__name__}: {exc}"
                if method != "wald":
                    notes.append(f"{estimand}/{method}: {msg}")
                nan = float("nan")
                rows.append(reporting.AnalysisRow(estimand, method, nan, nan, nan, nan, nan, nan, nan, error=msg))
                continue
            vr = 1.0 - est.sigma2_hat / base.sigma2_hat if base is not None else float("nan")
            rows.append(reporting.AnalysisRow(
                estimand, method, est.point, est.ci_lo, est.ci_hi, est.sigma2_hat, est.se,
                est.denom_hat, vr, est.warnings,
            ))
            notes.extend(f"{estimand}/{method}: {w}" for w in est.warnings)
    report = reporting.AnalysisReport(rows=rows, crosstab=compliance_crosstab(sample), warnings=notes)
    print(report.render(), file=stream or sys.stdout)
    out = _output_dir(cfg)
    if out:
        reporting.write_csv(os.path.join(out, "analysis.csv"), reporting.ANALYSIS_COLUMNS, report.table_rows())
    return report


def _write_mc(out, rows, labelled_records):
    reporting.write_csv(os.path.join(out, "summary.csv"), reporting.SUMMARY_COLUMNS,
                        reporting.summary_table_rows(rows))
    reporting.write_csv(
        os.path.join(out, "replications.csv"), reporting.REPLICATION_COLUMNS,
        [(rho, frac, r.rep, r.method, r.estimand, r.point, r.ci_lo, r.ci_hi, r.failed)
         for rho, frac, r in labelled_records],
    )


def _mc_kw(cfg):
    return dict(workers=cfg.workers, threshold=cfg.weak_denom_threshold, strict=cfg.strict)


def simulate_command(cfg: RunConfig, stream=None):
    """Monte Carlo over the (rho, n1_frac) grid; returns ``(summary_rows, labelled_records)``."""
    rows, labelled = [], []
    for dgp in cfg.dgp_grid():
        pop = generate_population(dgp)
        records = simulate_records(
            pop, cfg.reps, dgp.n1, cfg.estimators, cfg.alpha, cfg.seed, cfg.estimands, **_mc_kw(cfg)
        )
        rows += [dataclasses.replace(r, rho=dgp.rho, n1_frac=dgp.n1_frac)
                 for r in summarize(records, population_truth(pop))]
        labelled += [(dgp.rho, dgp.n1_frac, r) for r in records]
    print(reporting.render_summary(rows), file=stream or sys.stdout)
    out = _output_dir(cfg)
    if out:
        _write_mc(out, rows, labelled)
    return rows, labelled


def replay_command(cfg: RunConfig, stream=None):
    """Monte Carlo on a synthetic population imputed from the input CSV."""
    sample = _load_sample(cfg)
    pop = replay_synthetic_population(sample, cfg.seed, strict=cfg.strict)
    te = true_estimands(pop)
    tau_m = te.tau_m if te.tau_m is not None else float("nan")
    print(
        "synthetic true values: CATE {}, MCATE {}, complier proportion {}".format(
            reporting.human(te.tau), reporting.human(tau_m), reporting.human(te.strata_props["complier"])
        ),
        file=stream or sys.stdout,
    )
    records = simulate_records(
        pop, cfg.reps, sample.n1, cfg.estimators, cfg.alpha, cfg.seed, cfg.estimands, **_mc_kw(cfg)
    )
    frac = sample.n1 / sample.n
    rows = [dataclasses.replace(r, rho=float("nan"), n1_frac=frac)
            for r in summarize(records, population_truth(pop))]
    print(reporting.render_summary(rows), file=stream or sys.stdout)
    out = _output_dir(cfg)
    if out:
        _write_mc(out, rows, [(float("nan"), frac, r) for r in records])
    return rows, te


COMMANDS = {"analyze": analyze_command, "simulate": simulate_command, "replay": replay_command}


def _csv_list(conv):
    def parse(text):
        try:
            return tuple(conv(v.strip()) for v in text.split(",") if v.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="complier", description=__doc__.splitlines()[0])
    p.add_argument("mode", nargs="?", choices=sorted(COMMANDS), help="overrides the config file's mode")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--input", dest="input_path", help="input CSV (z,d,y,covariates...)")
    p.add_argument("--output", dest="output_path", help="output directory for CSV files")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--estimand", choices=("cate", "mcate", "both"))
    p.add_argument("--estimators", type=_csv_list(str.lower), help="comma list from wald,ils,ob,cob")
    p.add_argument("--rho", type=_csv_list(float), help="comma list")
    p.add_argument("--n1-frac", dest="n1_frac", type=_csv_list(float), help="comma list")
    p.add_argument("--weak-denom-threshold", dest="weak_denom_threshold", type=float)
    p.add_argument("--strict", action="store_const", const="strict", dest="strictness")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = override(cfg, **vars(args))
        if cfg.mode is None:
            raise ConfigError("mode", "no mode given on the command line or in the config")
        COMMANDS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"config error [{exc.key}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DataError, InvalidArmSize) as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ComplierError as exc:
        print(f"estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
