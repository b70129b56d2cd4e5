"""Finite-population and observed-sample containers.

A :class:`PotentialTable` holds every potential outcome of a fixed finite
population and is what the simulation side works with.  The analysis side
only ever sees a :class:`ValidatedSample`: one realised assignment ``z``,
the treatment actually received ``d`` and the binary outcome ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    EmptyArm,
    LengthMismatch,
    NoCompliers,
    NonBinaryValue,
    NonFiniteInput,
    ZeroDenominator,
)

STRATA = ("complier", "always_taker", "never_taker", "defier")


def _binary(name, values):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise LengthMismatch(f"{name} must be a vector, got shape {arr.shape}")
    if arr.size and not np.all(np.isin(arr, (0, 1))):
        bad = np.flatnonzero(~np.isin(arr, (0, 1)))[0]
        raise NonBinaryValue(f"{name}[{bad}] = {arr[bad]!r} is not 0/1")
    out = arr.astype(np.float64)
    out.flags.writeable = False
    return out


def _covariates(x, n):
    if x is None:
        x = np.empty((n, 0))
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(n, -1) if arr.size else np.empty((n, 0))
    if arr.ndim != 2 or arr.shape[0] != n:
        raise LengthMismatch(f"covariate matrix has shape {arr.shape}, expected ({n}, p)")
    if not np.all(np.isfinite(arr)):
        row = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0])
        raise NonFiniteInput(f"covariate row {row} contains a non-finite value")
    arr = np.asfortranarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PotentialTable:
    """All potential outcomes ``Y(0), Y(1), D(0), D(1)`` plus covariates."""

    y0: np.ndarray
    y1: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        vecs = {}
        for name in ("y0", "y1", "d0", "d1"):
            vecs[name] = _binary(name, getattr(self, name))
        lengths = {v.size for v in vecs.values()}
        if len(lengths) != 1:
            raise LengthMismatch(f"potential outcome vectors differ in length: {sorted(lengths)}")
        (n,) = lengths
        if n < 2:
            raise LengthMismatch("a population needs at least two units")
        for name, v in vecs.items():
            object.__setattr__(self, name, v)
        object.__setattr__(self, "x", _covariates(self.x, n))

    @property
    def n(self) -> int:
        return self.y0.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def stratum_masks(self) -> dict:
        d0 = self.d0.astype(bool)
        d1 = self.d1.astype(bool)
        return {
            "complier": ~d0 & d1,
            "always_taker": d0 & d1,
            "never_taker": ~d0 & ~d1,
            "defier": d0 & ~d1,
        }

    def strata_counts(self) -> dict:
        return {k: int(m.sum()) for k, m in self.stratum_masks().items()}

    @property
    def n_defiers(self) -> int:
        return int(np.sum((self.d0 == 1) & (self.d1 == 0)))

    @property
    def monotone(self) -> bool:
        return self.n_defiers == 0

    @property
    def exclusion_holds(self) -> bool:
        same_d = self.d0 == self.d1
        return bool(np.all(self.y0[same_d] == self.y1[same_d]))

    def observe(self, z) -> "ValidatedSample":
        """Reveal the observed data for assignment ``z``."""
        z = np.asarray(z)
        if z.shape != (self.n,):
            raise LengthMismatch(f"assignment has shape {z.shape}, expected ({self.n},)")
        zb = z.astype(bool)
        d = np.where(zb, self.d1, self.d0)
        y = np.where(zb, self.y1, self.y0)
        return validate_observed(ObservedSample(z=z, d=d, y=y, x=self.x))


@dataclass(frozen=True)
class ObservedSample:
    """Raw analysis data; call :func:`validate_observed` before estimating."""

    z: np.ndarray
    d: np.ndarray
    y: np.ndarray
    x: Optional[np.ndarray] = None
    covariate_names: tuple = ()


@dataclass(frozen=True)
class ValidatedSample:
    z: np.ndarray
    d: np.ndarray
    y: np.ndarray
    x: np.ndarray
    n1: int
    n0: int
    treated: np.ndarray
    control: np.ndarray
    covariate_names: tuple = ()

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def outcome(self, name: str) -> np.ndarray:
        """Observed outcome by selector: ``y``, ``d``, ``g = y*d`` or ``h = y*(1-d)``."""
        if name == "y":
            return self.y
        if name == "d":
            return self.d
        if name == "g":
            return self.y * self.d
        if name == "h":
            return self.y * (1.0 - self.d)
        raise KeyError(f"unknown outcome selector {name!r}")

    def with_outcome(self, y) -> "ValidatedSample":
        return validate_observed(
            ObservedSample(z=self.z, d=self.d, y=y, x=self.x, covariate_names=self.covariate_names)
        )

    def without_covariates(self) -> "ValidatedSample":
        return validate_observed(ObservedSample(z=self.z, d=self.d, y=self.y, x=None))


def validate_observed(raw: ObservedSample) -> ValidatedSample:
    """Check binarity, lengths and that both arms are nonempty."""
    z = _binary("z", raw.z)
    d = _binary("d", raw.d)
    y = _binary("y", raw.y)
    n = z.size
    if n == 0:
        raise LengthMismatch("empty sample")
    if d.size != n or y.size != n:
        raise LengthMismatch(f"z, d, y lengths differ: {n}, {d.size}, {y.size}")
    x = _covariates(raw.x, n)
    zb = z.astype(bool)
    treated = np.flatnonzero(zb)
    control = np.flatnonzero(~zb)
    if treated.size == 0:
        raise EmptyArm("treatment arm is empty")
    if control.size == 0:
        raise EmptyArm("control arm is empty")
    names = tuple(raw.covariate_names) or tuple(f"x{k + 1}" for k in range(x.shape[1]))
    return ValidatedSample(
        z=z, d=d, y=y, x=x,
        n1=int(treated.size), n0=int(control.size),
        treated=treated, control=control,
        covariate_names=names,
    )


class CrossTab(NamedTuple):
    """Counts of assignment by treatment received."""

    n11: int  # z=1, d=1
    n10: int  # z=1, d=0
    n01: int  # z=0, d=1
    n00: int  # z=0, d=0

    @property
    def n(self) -> int:
        return self.n11 + self.n10 + self.n01 + self.n00

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.n11, self.n10], [self.n01, self.n00]])


def compliance_crosstab(sample: ValidatedSample) -> CrossTab:
    zb = sample.z.astype(bool)
    db = sample.d.astype(bool)
    return CrossTab(
        n11=int(np.sum(zb & db)),
        n10=int(np.sum(zb & ~db)),
        n01=int(np.sum(~zb & db)),
        n00=int(np.sum(~zb & ~db)),
    )


def transform_mcate_outcomes(sample: ValidatedSample):
    """Return ``(g_sample, h_sample)`` with ``y`` replaced by ``y*d`` and ``y*(1-d)``."""
    return sample.with_outcome(sample.outcome("g")), sample.with_outcome(sample.outcome("h"))


@dataclass(frozen=True)
class TrueEstimands:
    tau: float
    tau_m: Optional[float]
    tau_y: float
    tau_d: float
    tau_g: float
    tau_h: float
    strata_props: dict = field(default_factory=dict)
    n_compliers: int = 0

    def require_tau_m(self) -> float:
        if self.tau_m is None:
            raise ZeroDenominator("tau_H = 0, the multiplicative effect is not identified")
        return self.tau_m


def true_estimands(pop: PotentialTable) -> TrueEstimands:
    masks = pop.stratum_masks()
    compliers = masks["complier"]
    n_c = int(compliers.sum())
    if n_c == 0:
        raise NoCompliers("population has no compliers")
    tau = float(np.mean(pop.y1[compliers] - pop.y0[compliers]))
    tau_y = float(np.mean(pop.y1 - pop.y0))
    tau_d = float(np.mean(pop.d1 - pop.d0))
    tau_g = float(np.mean(pop.y1 * pop.d1 - pop.y0 * pop.d0))
    tau_h = float(np.mean(pop.y1 * (1 - pop.d1) - pop.y0 * (1 - pop.d0)))
    tau_m = -tau_g / tau_h if tau_h != 0 else None
    props = {k: float(m.mean()) for k, m in masks.items()}
    return TrueEstimands(
        tau=tau, tau_m=tau_m, tau_y=tau_y, tau_d=tau_d, tau_g=tau_g, tau_h=tau_h,
        strata_props=props, n_compliers=n_c,
    )
