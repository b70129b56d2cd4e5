"""Monte Carlo harness: fixed finite population, repeated complete randomization."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from . import glm
from .data import PotentialTable, ValidatedSample, true_estimands
from .errors import ComplierError, InvalidArmSize, InvalidCovariance
from .estimators import METHODS, WEAK_DENOMINATOR, estimate
from .randomizer import POPULATION_STREAM, RngStream, complete_randomization

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DgpParams:
    """Bivariate-normal covariates with variance ``var`` and covariance ``rho``."""

    n: int = 500
    n1_frac: float = 0.3
    rho: float = 0.0
    seed: int = 20230101
    var: float = 2.0

    def __post_init__(self):
        if not 0 < self.n1_frac < 1:
            raise InvalidArmSize(f"n1_frac must lie in (0, 1), got {self.n1_frac}")
        if self.n < 2:
            raise InvalidArmSize(f"population needs n >= 2, got {self.n}")
        if not (self.var > 0 and abs(self.rho) < self.var):
            raise InvalidCovariance(
                f"covariance [[{self.var}, {self.rho}], [{self.rho}, {self.var}]] is not positive definite"
            )

    @property
    def n1(self) -> int:
        n1 = int(round(self.n1_frac * self.n))
        if not 0 < n1 < self.n:
            raise InvalidArmSize(f"n1 = {n1} leaves an arm empty for n = {self.n}")
        return n1


def generate_population(params: DgpParams) -> PotentialTable:
    """Draw the fixed finite population of the benchmark design.

    ``x ~ N(0, [[var, rho], [rho, var]])`` via Cholesky of the covariance and
    numpy's ziggurat ``standard_normal`` on the Philox stream
    ``(params.seed, POPULATION_STREAM)``.  ``D(0) = 1[2 x1 - 1 > 0]``, ``D(1) = 1[2 x1 + 3 > 0]``;
    two latent outcomes ``y0 ~ Bern(expit(-3 x2))`` and
    ``y1 ~ Bern(expit(-3 x2 + 1))`` are drawn once per unit, and
    ``Y(z) = y1 if D(z) = 1 else y0``, so exclusion and monotonicity hold by
    construction.
    """
    gen = RngStream(params.seed, POPULATION_STREAM).generator()
    cov = np.array([[params.var, params.rho], [params.rho, params.var]])
    chol = np.linalg.cholesky(cov)
    x = gen.standard_normal((params.n, 2)) @ chol.T
    d0 = (2 * x[:, 0] - 1 > 0).astype(np.int8)
    d1 = (2 * x[:, 0] + 3 > 0).astype(np.int8)
    u = gen.random((params.n, 2))
    lat0 = (u[:, 0] < expit(-3 * x[:, 1])).astype(np.int8)
    lat1 = (u[:, 1] < expit(-3 * x[:, 1] + 1)).astype(np.int8)
    y0 = np.where(d0 == 1, lat1, lat0)
    y1 = np.where(d1 == 1, lat1, lat0)
    return PotentialTable(y0=y0, y1=y1, d0=d0, d1=d1, x=x)


class ReplicationRecord(NamedTuple):
    rep: int
    method: str
    estimand: str
    point: float
    ci_lo: float
    ci_hi: float
    failed: bool
    reason: str = ""
    n_warnings: int = 0


def run_replication(
    pop: PotentialTable,
    n1: int,
    rng: RngStream,
    methods: Sequence[str] = METHODS,
    alpha: float = 0.05,
    estimands: Sequence[str] = ("cate",),
    *,
    threshold: float = WEAK_DENOMINATOR,
    strict: bool = False,
) -> list:
    """One randomized experiment on ``pop``; estimator failures are recorded, not raised."""
    z = complete_randomization(pop.n, n1, rng)
    sample = pop.observe(z)
    cache: dict = {}
    out = []
    for estimand in estimands:
        for method in methods:
            try:
                est = estimate(
                    sample, method, estimand, alpha,
                    threshold=threshold, strict=strict, fit_cache=cache,
                )
            except ComplierError as exc:
                out.append(ReplicationRecord(
                    rng.stream_index, method, estimand, math.nan, math.nan, math.nan,
                    True, f"{type(exc).__name__}: {exc}",
                ))
                continue
            out.append(ReplicationRecord(
                rng.stream_index, method, estimand, est.point, est.ci_lo, est.ci_hi,
                False, "", len(est.warnings),
            ))
    return out


def _run_chunk(args):
    pop, n1, reps, master_seed, methods, alpha, estimands, threshold, strict = args
    out = []
    for rep in reps:
        out.extend(run_replication(
            pop, n1, RngStream(master_seed, rep), methods, alpha, estimands,
            threshold=threshold, strict=strict,
        ))
    return out


def simulate_records(
    pop: PotentialTable,
    reps: int,
    n1: int,
    methods: Sequence[str] = METHODS,
    alpha: float = 0.05,
    master_seed: int = 0,
    estimands: Sequence[str] = ("cate",),
    *,
    workers: int = 1,
    threshold: float = WEAK_DENOMINATOR,
    strict: bool = False,
) -> list:
    """All replication records, ordered by replication index.

    Replication ``k`` always uses stream ``(master_seed, k)``, and chunks are
    reassembled in index order, so the output does not depend on ``workers``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    methods, estimands = tuple(methods), tuple(estimands)
    if workers <= 1:
        return _run_chunk((pop, n1, range(reps), master_seed, methods, alpha, estimands, threshold, strict))
    bounds = np.linspace(0, reps, min(reps, workers * 4) + 1).astype(int)
    chunks = [
        (pop, n1, range(lo, hi), master_seed, methods, alpha, estimands, threshold, strict)
        for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [rec for part in parts for rec in part]


@dataclass(frozen=True)
class McSummaryRow:
    method: str
    estimand: str
    truth: float
    bias: float
    sd: float
    rmse: float
    rmse_ratio: float
    cp: float
    ci_length: float
    length_ratio: float
    n_failed: int
    reps: int
    rho: float = math.nan
    n1_frac: float = math.nan


def summarize(records, truth: dict) -> list:
    """Collapse replication records into one row per (estimand, method).

    ``truth`` maps estimand name to its true value.  Failed replications are
    left out of every moment and counted in ``n_failed``.  ``sd`` uses the
    ``reps - 1`` divisor and ``rmse`` is the root of the mean squared error,
    so ``rmse^2 = bias^2 + (m - 1) / m * sd^2`` over the ``m`` completed runs.
    """
    keys = []
    for r in records:
        if (r.estimand, r.method) not in keys:
            keys.append((r.estimand, r.method))
    raw = {}
    for estimand, method in keys:
        rs = [r for r in records if r.estimand == estimand and r.method == method]
        ok = [r for r in rs if not r.failed]
        tv = truth[estimand]
        m = len(ok)
        if m == 0:
            raw[estimand, method] = (tv, math.nan, math.nan, math.nan, math.nan, math.nan, len(rs), len(rs))
            continue
        pts = np.array([r.point for r in ok])
        lo = np.array([r.ci_lo for r in ok])
        hi = np.array([r.ci_hi for r in ok])
        err = pts - tv
        if m < 2:
            log.warning("%s/%s: one completed replication, SD reported as 0", estimand, method)
            sd = 0.0
        else:
            sd = float(np.std(pts, ddof=1))
        raw[estimand, method] = (
            tv,
            float(err.mean()),
            sd,
            float(np.sqrt(np.mean(err**2))),
            float(np.mean((lo <= tv) & (tv <= hi))),
            float(np.mean(hi - lo)),
            len(rs) - m,
            len(rs),
        )
    rows = []
    for estimand, method in keys:
        tv, bias, sd, rmse, cp, length, failed, reps = raw[estimand, method]
        base = raw.get((estimand, "wald"))
        rmse_ratio = rmse / base[3] if base and base[3] else math.nan
        length_ratio = length / base[5] if base and base[5] else math.nan
        rows.append(McSummaryRow(
            method=method, estimand=estimand, truth=tv, bias=bias, sd=sd, rmse=rmse,
            rmse_ratio=rmse_ratio, cp=cp, ci_length=length, length_ratio=length_ratio,
            n_failed=failed, reps=reps,
        ))
    return rows


def population_truth(pop: PotentialTable) -> dict:
    te = true_estimands(pop)
    return {"cate": te.tau, "mcate": te.tau_m if te.tau_m is not None else math.nan}


def monte_carlo(
    pop: PotentialTable,
    reps: int,
    n1: int,
    methods: Sequence[str] = METHODS,
    alpha: float = 0.05,
    master_seed: int = 0,
    estimands: Sequence[str] = ("cate",),
    **kw,
) -> list:
    """Summary table of ``reps`` randomized experiments on ``pop``."""
    records = simulate_records(pop, reps, n1, methods, alpha, master_seed, estimands, **kw)
    return summarize(records, population_truth(pop))


# ---------------------------------------------------------------------------
# synthetic population from observed data


def _arm_probability(sample, r, idx, strict):
    """P(r = 1 | x) from units ``idx``; exact when ``r`` is constant there."""
    vals = r[idx]
    if vals.min() == vals.max():
        return np.full(sample.n, float(vals[0]))
    fit = glm.fit_logistic(sample.x[idx], vals, strict=strict)
    if fit.separation_flag:
        log.warning("replay: separated logistic fit on %d units", idx.size)
    return fit.predict(sample.x)


def replay_synthetic_population(sample: ValidatedSample, seed: int = 0, *, strict: bool = False) -> PotentialTable:
    """Fill in every missing potential outcome of ``sample`` by logistic imputation.

    Treatment received: with ``m1(x)``, ``m0(x)`` the within-arm fitted
    probabilities of ``D = 1``, a control unit with ``D(0) = 0`` gets
    ``D(1) ~ Bern((m1 - m0) / (1 - m0))`` and a treated unit with ``D(1) = 1``
    gets ``D(0) ~ Bern(m0 / m1)`` (both clipped to [0, 1]); the other cases are
    forced by monotonicity.  Outcomes: units with ``D(0) = D(1)`` share one
    outcome (exclusion restriction).  A complier's missing ``Y(1)`` is drawn
    from a logistic fit among treated units that took treatment, and a missing
    ``Y(0)`` from a fit among control units that did not.  Observed cells are
    never altered.
    """
    gen = RngStream(seed, POPULATION_STREAM).generator()
    zb = sample.z.astype(bool)
    t, c = sample.treated, sample.control
    d, y = sample.d, sample.y
    m1 = _arm_probability(sample, d, t, strict)
    m0 = _arm_probability(sample, d, c, strict)

    u = gen.random(sample.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_d1 = np.clip(np.where(m0 < 1, (m1 - m0) / (1 - m0), 1.0), 0, 1)
        p_d0 = np.clip(np.where(m1 > 0, m0 / m1, 0.0), 0, 1)
    d1 = np.where(zb, d, np.where(d == 1, 1.0, (u < p_d1).astype(float)))
    d0 = np.where(~zb, d, np.where(d == 0, 0.0, (u < p_d0).astype(float)))

    took = t[d[t] == 1]
    refused = c[d[c] == 0]
    k = sample.p + 2
    q1 = _arm_probability(sample, y, took if took.size >= k else t, strict)
    q0 = _arm_probability(sample, y, refused if refused.size >= k else c, strict)
    v = gen.random(sample.n)
    complier = (d0 == 0) & (d1 == 1)
    y1 = np.where(zb, y, np.where(complier, (v < q1).astype(float), y))
    y0 = np.where(~zb, y, np.where(complier, (v < q0).astype(float), y))
    return PotentialTable(y0=y0, y1=y1, d0=d0, d1=d1, x=sample.x)
