"""Small dense regression engine: OLS with rank detection, logistic MLE by Newton.

Both fitters include an intercept.  Designs here are tall and skinny (a few
hundred rows, a handful of columns), so everything is plain numpy/scipy on
dense arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import expit

from .errors import (
    DegenerateDesign,
    NoConvergence,
    NonFiniteInput,
    SeparationDetected,
    SingularHessian,
)

RANK_TOL = 1e-10
GRAD_TOL = 1e-10
REL_LOSS_TOL = 1e-12
MAX_ITER = 100
SEPARATION_LINPRED = 30.0
# mean loss this close to the infimum 0 means every label is fitted almost surely
SEPARATION_LOSS = 1e-8
RIDGE_SCALE = 1e-8
MAX_HALVINGS = 60

_P_LO = np.finfo(float).tiny
_P_HI = 1.0 - np.finfo(float).epsneg


def _as_design(xmat, n=None):
    x = np.asarray(xmat, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if x.size else x.reshape(n or 0, 0)
    return x


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slopes: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    rank: int
    dropped_columns: tuple = ()
    x_mean: np.ndarray = field(default=None, repr=False)

    def predict(self, xmat) -> np.ndarray:
        x = _as_design(xmat)
        return self.intercept + x @ self.slopes


def fit_ols(xmat, y) -> LinearFit:
    """Least squares of ``y`` on ``[1, xmat]``.

    Columns that are (numerically) linear combinations of the intercept and
    earlier-pivoted columns get slope 0 and are listed in ``dropped_columns``.
    Rank is decided on the column-pivoted QR of the centred design: a diagonal
    entry of ``R`` below ``1e-10`` times the largest counts as zero.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    x = _as_design(xmat, n)
    if x.shape[0] != n:
        raise ValueError(f"design has {x.shape[0]} rows but y has {n}")
    if n < 1:
        raise DegenerateDesign("cannot fit a regression on zero rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("non-finite value in regression data")
    p = x.shape[1]
    x_mean = x.mean(axis=0) if p else np.zeros(0)
    y_mean = y.mean()
    slopes = np.zeros(p)
    rank = 0
    dropped = tuple(range(p))
    if p and n >= 2:
        xc = x - x_mean
        q, r, piv = scipy.linalg.qr(xc, mode="economic", pivoting=True, check_finite=False)
        diag = np.abs(np.diag(r))
        if diag.size and diag[0] > 0:
            rank = int(np.sum(diag > RANK_TOL * diag[0]))
        if rank:
            coef = scipy.linalg.solve_triangular(
                r[:rank, :rank], q[:, :rank].T @ (y - y_mean), check_finite=False
            )
            slopes[piv[:rank]] = coef
        dropped = tuple(sorted(int(j) for j in piv[rank:]))
    elif p and n < 2:
        raise DegenerateDesign("all covariate columns dropped and fewer than two rows")
    intercept = float(y_mean - x_mean @ slopes) if p else float(y_mean)
    fitted = intercept + x @ slopes
    return LinearFit(
        intercept=intercept,
        slopes=slopes,
        fitted=fitted,
        residuals=y - fitted,
        rank=rank,
        dropped_columns=dropped,
        x_mean=x_mean,
    )


def _with_intercept(x):
    return np.column_stack([np.ones(x.shape[0]), x])


def _is_binary(y):
    return bool(np.all((y == 0) | (y == 1)))


def _residual(eta, y, binary):
    # mu - y, without cancellation when the fitted label is nearly certain
    if binary:
        return np.where(y > 0.5, -expit(-eta), expit(eta))
    return expit(eta) - y


def _mean_loss(eta, y, binary):
    if binary:
        return float(np.mean(np.logaddexp(0.0, np.where(y > 0.5, -eta, eta))))
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def logistic_loss_grad(theta, xmat_tilde, y):
    """Mean logistic loss and its gradient.

    ``xmat_tilde`` already carries the leading column of ones.  Returns
    ``(loss, grad)`` with ``loss = mean(log(1 + exp(eta)) - y * eta)`` and
    ``grad = X~^T (mu - y) / n``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    xt = np.asarray(xmat_tilde, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(xt)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("non-finite input to the logistic loss")
    binary = _is_binary(y)
    eta = xt @ theta
    loss = _mean_loss(eta, y, binary)
    grad = xt.T @ _residual(eta, y, binary) / y.size
    return loss, grad


@dataclass(frozen=True)
class LogisticFit:
    theta: np.ndarray
    converged: bool
    iterations: int
    max_abs_linpred: float
    separation_flag: bool
    loss: float = float("nan")
    grad_norm: float = float("nan")
    ridge_used: bool = False
    loss_path: tuple = ()

    def predict(self, xmat) -> np.ndarray:
        return predict_logistic(self, xmat)


def predict_logistic(fit: LogisticFit, xmat) -> np.ndarray:
    """Fitted probabilities ``expit([1, x] @ theta)``, kept strictly inside (0, 1)."""
    x = _as_design(xmat)
    eta = fit.theta[0] + x @ fit.theta[1:]
    return np.clip(expit(eta), _P_LO, _P_HI)


def _newton_direction(xt, eta, grad, n):
    w = expit(eta) * expit(-eta)
    hess = (xt * w[:, None]).T @ xt / n
    try:
        c = scipy.linalg.cho_factor(hess, check_finite=False)
        step = scipy.linalg.cho_solve(c, grad, check_finite=False)
        if np.all(np.isfinite(step)):
            return step, False
    except (np.linalg.LinAlgError, ValueError):
        pass
    lam = RIDGE_SCALE * np.trace(hess) / hess.shape[0]
    if not lam > 0:
        raise SingularHessian("logistic Hessian vanished")
    try:
        c = scipy.linalg.cho_factor(hess + lam * np.eye(hess.shape[0]), check_finite=False)
        step = scipy.linalg.cho_solve(c, grad, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularHessian("logistic Hessian singular even after ridge") from exc
    if not np.all(np.isfinite(step)):
        raise SingularHessian("non-finite Newton step")
    return step, True


def fit_logistic(xmat, y, *, strict: bool = False, max_iter: int = MAX_ITER) -> LogisticFit:
    """Logistic regression of binary ``y`` on ``[1, xmat]`` by damped Newton.

    Stops when the gradient max-norm drops to 1e-10 or an accepted step
    changes the loss by a relative 1e-12.  Separation (linear predictor
    beyond +-30, or loss within 1e-8 of zero) is flagged on the result; with
    ``strict=True`` it raises :class:`SeparationDetected` instead.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    x = _as_design(xmat, n)
    if x.shape[0] != n or n == 0:
        raise ValueError(f"design has {x.shape[0]} rows but y has {n}")
    xt = _with_intercept(x)
    if not (np.all(np.isfinite(xt)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("non-finite value in logistic regression data")
    binary = _is_binary(y)

    theta = np.zeros(xt.shape[1])
    ybar = min(max(y.mean(), 1e-3), 1 - 1e-3)
    theta[0] = np.log(ybar / (1 - ybar))
    eta = xt @ theta
    loss = _mean_loss(eta, y, binary)
    grad = xt.T @ _residual(eta, y, binary) / n
    path = [loss]
    max_eta = float(np.max(np.abs(eta)))
    converged = False
    ridge_used = False
    it = 0
    while it < max_iter:
        if np.max(np.abs(grad)) <= GRAD_TOL:
            converged = True
            break
        try:
            step, ridged = _newton_direction(xt, eta, grad, n)
        except SingularHessian:
            if max_eta > SEPARATION_LINPRED or loss < SEPARATION_LOSS:
                break
            raise
        ridge_used |= ridged
        it += 1
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            cand = theta - t * step
            cand_eta = xt @ cand
            cand_loss = _mean_loss(cand_eta, y, binary)
            if cand_loss <= loss:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no representable descent left along the Newton direction
            converged = True
            break
        rel = (loss - cand_loss) / max(loss, np.finfo(float).tiny)
        theta, eta, loss = cand, cand_eta, cand_loss
        grad = xt.T @ _residual(eta, y, binary) / n
        path.append(loss)
        max_eta = max(max_eta, float(np.max(np.abs(eta))))
        if rel <= REL_LOSS_TOL:
            converged = True
            break
    if not converged and np.max(np.abs(grad)) <= GRAD_TOL:
        converged = True

    separated = max_eta > SEPARATION_LINPRED or loss < SEPARATION_LOSS
    if separated and strict:
        raise SeparationDetected(
            f"logistic fit separated (max |linear predictor| {max_eta:.3g}, loss {loss:.3g})"
        )
    if not converged and not separated:
        raise NoConvergence(f"Newton did not converge in {max_iter} iterations")
    return LogisticFit(
        theta=theta,
        converged=converged,
        iterations=it,
        max_abs_linpred=max_eta,
        separation_flag=separated,
        loss=loss,
        grad_norm=float(np.max(np.abs(grad))),
        ridge_used=ridge_used,
        loss_path=tuple(path),
    )
