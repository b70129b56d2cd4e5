"""Ratio estimators of the complier average treatment effect.

Every estimator here has the same shape.  Two intention-to-treat effects are
estimated, one for the numerator outcome and one for the denominator outcome
(``y`` and ``d`` for the CATE; ``g = y*d`` and ``-h = -y*(1-d)`` for the
multiplicative CATE).  The point estimate is their ratio.  The variance comes
from the per-arm sample variances of the transformed outcomes

    a_i = (num_i - adj_num_i) - point * (den_i - adj_den_i),

where ``adj`` is what the method's working model in unit ``i``'s own arm
predicts for it: nothing (Wald), a linear projection on ``x`` (ILS), a
logistic fitted probability (OB), or a linear projection on the fitted
probabilities (COB).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np

from . import glm
from .data import ValidatedSample
from .errors import (
    DegenerateCalibration,
    DegenerateDesign,
    EstimationError,
    InsufficientArmSize,
    NonPositiveDf,
    SeparationDetected,
    WeakDenominator,
)

METHODS = ("wald", "ils", "ob", "cob")
ESTIMANDS = ("cate", "mcate")
WEAK_DENOMINATOR = 0.01
CLIP = 1e-6

# numerator key, denominator key, denominator sign
_OUTCOMES = {"cate": ("y", "d", 1.0), "mcate": ("g", "h", -1.0)}


@dataclass(frozen=True)
class TransformedOutcomes:
    a1: np.ndarray
    a0: np.ndarray
    df1: int
    df0: int


@dataclass(frozen=True)
class Estimate:
    method: str
    estimand: str
    point: float
    sigma2_hat: float
    se: float
    ci_lo: float
    ci_hi: float
    denom_hat: float
    alpha: float
    n: int
    num_hat: float = float("nan")
    warnings: tuple = ()
    transformed: Optional[TransformedOutcomes] = field(default=None, repr=False, compare=False)

    @property
    def ci(self):
        return self.ci_lo, self.ci_hi

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_hi - self.ci_lo)


@dataclass(frozen=True)
class _Adjusted:
    """One ITT effect plus each unit's own-arm model adjustment."""

    tau: float
    adj: np.ndarray
    df1: int
    df0: int
    slopes1: np.ndarray
    slopes0: np.ndarray
    warnings: tuple = ()


def itt_difference_in_means(sample: ValidatedSample, outcome: str = "y") -> float:
    """Treated-arm mean minus control-arm mean of ``y``, ``d``, ``g`` or ``h``."""
    r = sample.outcome(outcome)
    return float(r[sample.treated].mean() - r[sample.control].mean())


def _ss(a):
    # shift by a[0] first so constant vectors give exactly zero
    c = a - a[0]
    return float(np.sum((c - c.mean()) ** 2))


def conservative_variance(t: TransformedOutcomes, denom_hat: float, n: int) -> float:
    """``n / denom^2 * (s1^2 / n1 + s0^2 / n0)`` with caller-chosen variance divisors.

    The variance is n-scaled: the standard error is ``sqrt(result / n)``.
    """
    if denom_hat == 0:
        raise WeakDenominator("denominator estimate is exactly zero")
    if t.df1 < 1 or t.df0 < 1:
        raise NonPositiveDf(f"variance divisors must be >= 1, got {t.df1}, {t.df0}")
    a1 = np.asarray(t.a1, dtype=np.float64)
    a0 = np.asarray(t.a0, dtype=np.float64)
    s1 = _ss(a1) / t.df1
    s0 = _ss(a0) / t.df0
    return float(n / denom_hat**2 * (s1 / a1.size + s0 / a0.size))


def normal_quantile(alpha: float) -> float:
    """Upper ``alpha/2`` quantile of the standard normal."""
    return NormalDist().inv_cdf(1.0 - alpha / 2.0)


def confidence_interval(point: float, sigma2_hat: float, n: int, alpha: float = 0.05):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if sigma2_hat < 0:
        raise ValueError("variance estimate is negative")
    half = normal_quantile(alpha) * np.sqrt(sigma2_hat / n)
    return point - half, point + half


# ---------------------------------------------------------------------------
# ITT adjusters


def _adjust_dim(sample: ValidatedSample, r: np.ndarray) -> _Adjusted:
    tau = r[sample.treated].mean() - r[sample.control].mean()
    return _Adjusted(
        tau=float(tau), adj=np.zeros(sample.n),
        df1=sample.n1 - 1, df0=sample.n0 - 1,
        slopes1=np.zeros(0), slopes0=np.zeros(0),
    )


def _adjust_ols(sample: ValidatedSample, r: np.ndarray, x: np.ndarray, label: str) -> _Adjusted:
    """Within-arm OLS adjustment; ``x`` is centred at its full-sample mean."""
    x_bar = x.mean(axis=0)
    tau = 0.0
    adj = np.empty(sample.n)
    dfs, slopes, notes = {}, {}, []
    for z, idx in ((1, sample.treated), (0, sample.control)):
        fit = glm.fit_ols(x[idx], r[idx])
        # tau piece: arm mean of r shifted to the full-sample covariate mean
        piece = r[idx].mean() - (x[idx].mean(axis=0) - x_bar) @ fit.slopes
        tau += piece if z == 1 else -piece
        adj[idx] = (x[idx] - x_bar) @ fit.slopes
        dfs[z] = idx.size - fit.rank - 1
        slopes[z] = fit.slopes
        if fit.dropped_columns:
            notes.append(f"{label}: arm z={z} dropped collinear columns {list(fit.dropped_columns)}")
    return _Adjusted(
        tau=float(tau), adj=adj, df1=dfs[1], df0=dfs[0],
        slopes1=slopes[1], slopes0=slopes[0], warnings=tuple(notes),
    )


def _adjust_impute(sample: ValidatedSample, r: np.ndarray, pred1: np.ndarray, pred0: np.ndarray) -> _Adjusted:
    """Double imputation: observed value in its own arm, model prediction in the other."""
    zb = sample.z.astype(bool)
    r1 = np.where(zb, r, pred1)
    r0 = np.where(zb, pred0, r)
    p = sample.p
    return _Adjusted(
        tau=float(np.mean(r1 - r0)),
        adj=np.where(zb, pred1, pred0),
        df1=sample.n1 - p - 1, df0=sample.n0 - p - 1,
        slopes1=np.zeros(0), slopes0=np.zeros(0),
    )


def _predictions(sample, key, working_model, strict, cache):
    """Per-arm working-model predictions of outcome ``key`` for all n units."""
    ck = (key, working_model)
    if cache is not None and ck in cache:
        return cache[ck]
    r = sample.outcome(key)
    preds, notes = {}, []
    for z, idx in ((1, sample.treated), (0, sample.control)):
        if working_model == "logistic":
            try:
                fit = glm.fit_logistic(sample.x[idx], r[idx], strict=strict)
            except SeparationDetected as exc:
                raise SeparationDetected(f"logistic fit of {key} in arm z={z}: {exc}") from exc
            except EstimationError as exc:
                raise type(exc)(f"logistic fit of {key} in arm z={z}: {exc}") from exc
            if fit.separation_flag:
                notes.append(f"separation in logistic fit of {key}, arm z={z}")
            if fit.ridge_used:
                notes.append(f"ridge fallback in logistic fit of {key}, arm z={z}")
            preds[z] = fit.predict(sample.x)
        elif working_model == "linear":
            preds[z] = glm.fit_ols(sample.x[idx], r[idx]).predict(sample.x)
        else:
            raise ValueError(f"unknown working model {working_model!r}")
    out = (preds[1], preds[0], tuple(notes))
    if cache is not None:
        cache[ck] = out
    return out


# ---------------------------------------------------------------------------
# generic ratio engine


def _check_arm_sizes(sample, k, method):
    for z, nz in ((1, sample.n1), (0, sample.n0)):
        if nz <= k + 1:
            raise InsufficientArmSize(
                f"{method}: arm z={z} has {nz} units, needs more than {k + 1}"
            )


def _adjusters(sample, method, estimand, working_model, strict, cache):
    num_key, den_key, sign = _OUTCOMES[estimand]
    num = sample.outcome(num_key)
    den = sign * sample.outcome(den_key)
    if method == "wald":
        return num, den, _adjust_dim(sample, num), _adjust_dim(sample, den), ()
    if method == "ils":
        _check_arm_sizes(sample, sample.p, "ils")
        a_num = _adjust_ols(sample, num, sample.x, f"ils/{num_key}")
        a_den = _adjust_ols(sample, den, sample.x, f"ils/{den_key}")
        notes = a_num.warnings + a_den.warnings
        if strict and notes:
            raise DegenerateDesign("; ".join(notes))
        return num, den, a_num, a_den, notes
    if method not in ("ob", "cob"):
        raise ValueError(f"unknown method {method!r}")

    _check_arm_sizes(sample, sample.p, method)
    p1n, p0n, notes_n = _predictions(sample, num_key, working_model, strict, cache)
    p1d, p0d, notes_d = _predictions(sample, den_key, working_model, strict, cache)
    notes = notes_n + notes_d
    if method == "ob":
        a_num = _adjust_impute(sample, num, p1n, p0n)
        a_den = _adjust_impute(sample, den, sign * p1d, sign * p0d)
        return num, den, a_num, a_den, notes

    _check_arm_sizes(sample, 4, "cob")
    w = np.column_stack([p1n, p0n, p1d, p0d])
    if not np.all(np.isfinite(w)):
        raise DegenerateCalibration("non-finite fitted probabilities in calibration covariates")
    clipped = int(np.sum((w < CLIP) | (w > 1 - CLIP)))
    w = np.clip(w, CLIP, 1 - CLIP)
    if clipped:
        notes += (f"cob: clipped {clipped} fitted probabilities to [{CLIP:g}, {1 - CLIP:g}]",)
    a_num = _adjust_ols(sample, num, w, f"cob/{num_key}")
    a_den = _adjust_ols(sample, den, w, f"cob/{den_key}")
    notes += a_num.warnings + a_den.warnings
    if strict and (a_num.warnings or a_den.warnings):
        raise DegenerateCalibration("; ".join(a_num.warnings + a_den.warnings))
    return num, den, a_num, a_den, notes


def estimate(
    sample: ValidatedSample,
    method: str = "wald",
    estimand: str = "cate",
    alpha: float = 0.05,
    *,
    threshold: float = WEAK_DENOMINATOR,
    strict: bool = False,
    working_model: str = "logistic",
    fit_cache: Optional[dict] = None,
) -> Estimate:
    """Run one method for one estimand.

    ``working_model="linear"`` swaps the logistic fits of OB/COB for
    within-arm OLS fits; OB then coincides with ILS.  ``fit_cache`` lets OB
    and COB share their logistic fits on the same sample; never reuse a cache
    across samples.
    """
    if estimand not in _OUTCOMES:
        raise ValueError(f"unknown estimand {estimand!r}")
    num, den, a_num, a_den, notes = _adjusters(
        sample, method, estimand, working_model, strict, fit_cache
    )
    if not abs(a_den.tau) >= threshold:
        raise WeakDenominator(
            f"{method}/{estimand}: denominator estimate {a_den.tau:.4g} "
            f"is below the threshold {threshold:g} in absolute value"
        )
    point = a_num.tau / a_den.tau
    a = (num - a_num.adj) - point * (den - a_den.adj)
    t = TransformedOutcomes(
        a1=a[sample.treated], a0=a[sample.control], df1=a_den.df1, df0=a_den.df0
    )
    sigma2 = conservative_variance(t, a_den.tau, sample.n)
    lo, hi = confidence_interval(point, sigma2, sample.n, alpha)
    return Estimate(
        method=method,
        estimand=estimand,
        point=float(point),
        sigma2_hat=sigma2,
        se=float(np.sqrt(sigma2 / sample.n)),
        ci_lo=float(lo),
        ci_hi=float(hi),
        denom_hat=a_den.tau,
        alpha=alpha,
        n=sample.n,
        num_hat=a_num.tau,
        warnings=tuple(notes),
        transformed=t,
    )


def wald(sample: ValidatedSample, alpha: float = 0.05, **kw) -> Estimate:
    return estimate(sample, "wald", "cate", alpha, **kw)


def ils_interactions(sample: ValidatedSample, alpha: float = 0.05, **kw) -> Estimate:
    """Ratio of per-arm OLS-adjusted ITT effects (Lin-style interactions).

    With no covariates this is exactly the Wald estimator.
    """
    return estimate(sample, "ils", "cate", alpha, **kw)


def ob_logistic(sample: ValidatedSample, alpha: float = 0.05, **kw) -> Estimate:
    return estimate(sample, "ob", "cate", alpha, **kw)


def cob(sample: ValidatedSample, alpha: float = 0.05, **kw) -> Estimate:
    """Calibrated Oaxaca-Blinder: OLS of each outcome on the four OB fitted
    probabilities, within arm, in place of OLS on the raw covariates."""
    return estimate(sample, "cob", "cate", alpha, **kw)


def mcate(sample: ValidatedSample, method: str = "wald", alpha: float = 0.05, **kw) -> Estimate:
    """Multiplicative CATE ``-tau_G / tau_H``.

    Computed as the ratio ``tau_G / (-tau_H)``, so ``denom_hat`` on the
    result is ``-tau_H`` and the transformed outcomes are ``g + point * h``.
    """
    return estimate(sample, method, "mcate", alpha, **kw)


# ---------------------------------------------------------------------------
# variance-gain diagnostics


@dataclass(frozen=True)
class DiagnosticsReport:
    tau_plugin: float
    denom: float
    delta1: np.ndarray
    delta0: np.ndarray
    phi1: Optional[np.ndarray]
    phi0: Optional[np.ndarray]
    variance_reduction_ils: float
    variance_reduction_cob: Optional[float]
    variance_reduction_ils_pooled: float
    variance_reduction_cob_pooled: Optional[float]
    sigma2_wald_oracle: float
    sigma2_ils_oracle: float
    sigma2_cob_oracle: Optional[float]


def _oracle_parts(sample, num, den, tau, x):
    """Per-arm slope of ``num - tau*den`` on ``x`` and the variance it explains."""
    out = {}
    for z, idx in ((1, sample.treated), (0, sample.control)):
        b_num = glm.fit_ols(x[idx], num[idx]).slopes
        b_den = glm.fit_ols(x[idx], den[idx]).slopes
        delta = b_num - tau * b_den
        cov = np.atleast_2d(np.cov(x[idx], rowvar=False, ddof=1)) if x.shape[1] else np.zeros((0, 0))
        out[z] = (delta, float(delta @ cov @ delta) if delta.size else 0.0)
    return out


def _pooled(x, delta):
    if not delta.size:
        return 0.0
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return float(delta @ cov @ delta)


def variance_gain_diagnostics(
    sample: ValidatedSample,
    tau: Optional[float] = None,
    estimand: str = "cate",
    *,
    include_cob: bool = True,
) -> DiagnosticsReport:
    """Variance reductions of ILS and COB over Wald, in "oracle mode".

    All three variances share one plug-in ``tau`` (default: the Wald point),
    the Wald denominator and the divisor ``n_z - 1``.  Under that convention
    the drop from Wald to ILS is exactly

        n / denom^2 * sum_z delta(z)' S_x(z) delta(z) / n_z,

    with ``delta(z) = beta_num(z) - tau * beta_den(z)`` the within-arm OLS
    slopes and ``S_x(z)`` the within-arm covariance of ``x``; likewise for COB
    with the fitted-probability covariates.  The ``*_pooled`` variants use the
    full-sample covariance instead and only agree asymptotically.
    """
    num_key, den_key, sign = _OUTCOMES[estimand]
    num = sample.outcome(num_key)
    den = sign * sample.outcome(den_key)
    denom = _adjust_dim(sample, den).tau
    if denom == 0:
        raise WeakDenominator("Wald denominator is zero")
    if tau is None:
        tau = _adjust_dim(sample, num).tau / denom
    n = sample.n
    u = num - tau * den
    t = TransformedOutcomes(u[sample.treated], u[sample.control], sample.n1 - 1, sample.n0 - 1)
    s2_wald = conservative_variance(t, denom, n)

    def oracle_variance(x, parts):
        red = n / denom**2 * (parts[1][1] / sample.n1 + parts[0][1] / sample.n0)
        pooled = n / denom**2 * (
            _pooled(x, parts[1][0]) / sample.n1 + _pooled(x, parts[0][0]) / sample.n0
        )
        a = np.empty(n)
        for z, idx in ((1, sample.treated), (0, sample.control)):
            xc = x[idx] - x[idx].mean(axis=0)
            a[idx] = u[idx] - xc @ parts[z][0]
        tt = TransformedOutcomes(a[sample.treated], a[sample.control], sample.n1 - 1, sample.n0 - 1)
        return red, pooled, conservative_variance(tt, denom, n)

    parts_x = _oracle_parts(sample, num, den, tau, sample.x)
    red_ils, pooled_ils, s2_ils = oracle_variance(sample.x, parts_x)

    phi1 = phi0 = red_cob = pooled_cob = s2_cob = None
    if include_cob:
        p1n, p0n, _ = _predictions(sample, num_key, "logistic", False, None)
        p1d, p0d, _ = _predictions(sample, den_key, "logistic", False, None)
        w = np.clip(np.column_stack([p1n, p0n, p1d, p0d]), CLIP, 1 - CLIP)
        parts_w = _oracle_parts(sample, num, den, tau, w)
        red_cob, pooled_cob, s2_cob = oracle_variance(w, parts_w)
        phi1, phi0 = parts_w[1][0], parts_w[0][0]

    return DiagnosticsReport(
        tau_plugin=float(tau),
        denom=float(denom),
        delta1=parts_x[1][0],
        delta0=parts_x[0][0],
        phi1=phi1,
        phi0=phi0,
        variance_reduction_ils=red_ils,
        variance_reduction_cob=red_cob,
        variance_reduction_ils_pooled=pooled_ils,
        variance_reduction_cob_pooled=pooled_cob,
        sigma2_wald_oracle=s2_wald,
        sigma2_ils_oracle=s2_ils,
        sigma2_cob_oracle=s2_cob,
    )
