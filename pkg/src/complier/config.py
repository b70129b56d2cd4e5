"""Run configuration: a flat ``key = value`` file.

Recognised keys (all optional)::

    mode                  analyze | simulate | replay
    estimators            comma list from wald, ils, ob, cob   (default: all four)
    estimand              cate | mcate | both                  (default: cate)
    alpha                 significance level in (0, 1)         (default: 0.05)
    reps                  Monte Carlo replications             (default: 1000)
    n                     population size for simulate         (default: 500)
    n1_frac               comma list of treated fractions      (default: 0.3)
    rho                   comma list of covariate covariances  (default: 0)
    seed                  integer master seed                  (default: 20230101)
    input                 CSV path for analyze / replay
    output                output directory (CSV files land here)
    strictness            strict | lenient                     (default: lenient)
    weak_denom_threshold  minimum |denominator estimate|       (default: 0.01)
    workers               worker processes for Monte Carlo     (default: 1)

Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from typing import Optional

from .errors import ConfigError, InvalidArmSize, InvalidCovariance
from .estimators import ESTIMANDS, METHODS, WEAK_DENOMINATOR
from .simulation import DgpParams

MODES = ("analyze", "simulate", "replay")


@dataclass(frozen=True)
class RunConfig:
    mode: Optional[str] = None
    estimators: tuple = METHODS
    estimand: str = "cate"
    alpha: float = 0.05
    reps: int = 1000
    n: int = 500
    n1_frac: tuple = (0.3,)
    rho: tuple = (0.0,)
    seed: int = 20230101
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    strictness: str = "lenient"
    weak_denom_threshold: float = WEAK_DENOMINATOR
    workers: int = 1

    @property
    def strict(self) -> bool:
        return self.strictness == "strict"

    @property
    def estimands(self) -> tuple:
        return ESTIMANDS if self.estimand == "both" else (self.estimand,)

    def dgp_grid(self):
        """One :class:`DgpParams` per (rho, n1_frac) pair, rho-major."""
        return [
            DgpParams(n=self.n, n1_frac=f, rho=r, seed=self.seed)
            for r in self.rho for f in self.n1_frac
        ]

    @property
    def dgp(self) -> DgpParams:
        return self.dgp_grid()[0]

    def validate(self) -> "RunConfig":
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError("mode", f"mode must be one of {MODES}, got {self.mode!r}")
        bad = [m for m in self.estimators if m not in METHODS]
        if bad or not self.estimators:
            raise ConfigError("estimators", f"unknown estimators {bad}; choose from {METHODS}")
        if self.estimand not in ESTIMANDS + ("both",):
            raise ConfigError("estimand", f"estimand must be cate, mcate or both, got {self.estimand!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha", f"alpha must lie in (0, 1), got {self.alpha}")
        if self.reps < 1:
            raise ConfigError("reps", "reps must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "workers must be >= 1")
        if self.strictness not in ("strict", "lenient"):
            raise ConfigError("strictness", "strictness must be strict or lenient")
        if not self.weak_denom_threshold >= 0:
            raise ConfigError("weak_denom_threshold", "threshold must be nonnegative")
        try:
            self.dgp_grid()
        except InvalidArmSize as exc:
            key = "n" if self.n < 2 else "n1_frac"
            raise ConfigError(key, str(exc)) from exc
        except InvalidCovariance as exc:
            raise ConfigError("rho", str(exc)) from exc
        if self.mode in ("analyze", "replay") and not self.input_path:
            raise ConfigError("input", f"mode {self.mode} needs an input CSV")
        return self


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


_PARSERS = {
    "mode": str.strip,
    "estimators": lambda s: tuple(v.strip().lower() for v in s.split(",") if v.strip()),
    "estimand": lambda s: s.strip().lower(),
    "alpha": float,
    "reps": int,
    "n": int,
    "n1_frac": _floats,
    "rho": _floats,
    "seed": int,
    "input": str.strip,
    "output": str.strip,
    "strictness": lambda s: s.strip().lower(),
    "weak_denom_threshold": float,
    "workers": int,
}
_FIELD = {"input": "input_path", "output": "output_path"}


def parse_config(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"malformed config: {exc}") from exc
    updates = {}
    for key, raw in cp["run"].items():
        if key not in _PARSERS:
            raise ConfigError(key, f"unknown config key {key!r}")
        try:
            updates[_FIELD.get(key, key)] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {key} = {raw!r}") from exc
    return replace(base, **updates).validate()


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def override(cfg: RunConfig, **kw) -> RunConfig:
    """Apply non-None keyword overrides (e.g. from command-line flags)."""
    names = {f.name for f in fields(RunConfig)}
    updates = {k: v for k, v in kw.items() if v is not None and k in names}
    return replace(cfg, **updates).validate()
