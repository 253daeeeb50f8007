"""Experiment configuration: a dataclass, a key=value file format, validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .channel import ChannelModel, DomainError, FadingModel


class ConfigError(ValueError):
    """Raised with a field-level message when a configuration is unusable."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"{fieldname}: {message}")
        self.field = fieldname


MODES = ("simulate", "sweep", "analytic", "verify", "export")


@dataclass
class ExperimentConfig:
    mode: str = "sweep"
    n: list = field(default_factory=lambda: [1e4, 4e4, 1.6e5, 6.4e5])
    gamma: list = field(default_factory=lambda: [0.0, 0.3, 0.6])
    alpha_c: float = 3.0
    alpha_s: float = 2.0
    varsigma: float = 1.5
    varsigma_anchor_n: Optional[float] = 1e4  # None: one varsigma for every gamma
    M: int = 4
    kappa: float = 8.0
    eta: Optional[float] = None  # None: the admissible maximum at the smallest n
    delta: float = 0.3
    beta_s: float = 0.1
    beta_c: float = 8.0
    sigma0: float = 1.0
    N0: float = 1.0
    zeta: Optional[float] = None  # None: chosen so that q1 * zeta' = zeta_target
    zeta_target: float = 2.5
    fading: str = "none"
    nakagami_m: float = 2.0
    rician_K: float = 3.0
    q0: Optional[float] = None
    q1: Optional[float] = None
    g0: Optional[float] = None
    g_tau: float = 0.002
    I_tau: Optional[float] = None  # None: I_tau_factor times the mean-interference constant
    I_tau_factor: float = 1000.0
    replicates: int = 20
    seed: int = 20240607
    output: str = "results"
    workers: int = 1
    unroutable_ceiling: float = 0.05
    near_field: int = 2
    analytic_n: float = 1e8
    analytic_pairs: list = field(default_factory=lambda: [(3.0, 2.0), (4.0, 2.0), (3.0, 3.0)])
    gamma_grid_step: float = 0.05

    # -- derived objects -------------------------------------------------
    def fading_model(self) -> FadingModel:
        return FadingModel(self.fading, m=self.nakagami_m, K=self.rician_K, q0=self.q0, q1=self.q1, g0=self.g0)

    def channel(self) -> ChannelModel:
        return ChannelModel(self.alpha_c, self.alpha_s, self.N0, self.sigma0, self.beta_s, self.beta_c,
                            self.fading_model())

    def varsigma_for(self, gamma: float) -> float:
        """Cell constant used at exponent gamma.

        With an anchor size n0 the constant is varsigma * n0^(-gamma/alpha_c), so
        the cell side at n0 is the same for every gamma. It is still a constant
        in n, so the scaling orders are untouched."""
        if self.varsigma_anchor_n is None:
            return float(self.varsigma)
        return float(self.varsigma * self.varsigma_anchor_n ** (-gamma / self.alpha_c))

    def gamma_grid(self) -> np.ndarray:
        k = int(np.floor(1.25 / self.gamma_grid_step + 1e-9))
        g = self.gamma_grid_step * np.arange(1, k + 1)
        return g[g < 1.25 - 1e-12]

    # -- validation ------------------------------------------------------
    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}")
        if self.alpha_c <= 2:
            raise ConfigError("alpha_c", "must exceed 2")
        if self.alpha_s <= 0:
            raise ConfigError("alpha_s", "must be positive")
        if not self.n or any(v < 1 for v in self.n):
            raise ConfigError("n", "every size must be >= 1")
        for g in self.gamma:
            if g < 0 or g > self.alpha_c / 2:
                raise ConfigError("gamma", f"{g} outside [0, alpha_c/2]")
        if self.varsigma <= 0:
            raise ConfigError("varsigma", "must be positive")
        if self.varsigma_anchor_n is not None and self.varsigma_anchor_n < 1:
            raise ConfigError("varsigma_anchor_n", "must be >= 1")
        if int(self.M) != self.M or self.M <= 2:
            raise ConfigError("M", "must be an integer > 2")
        if self.kappa <= 0:
            raise ConfigError("kappa", "must be positive")
        if self.eta is not None and not (0 < self.eta < 1):
            raise ConfigError("eta", "must lie in (0, 1)")
        if self.delta <= 0:
            raise ConfigError("delta", "must be positive")
        for name in ("beta_s", "sigma0", "N0", "zeta_target", "I_tau_factor"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")
        if self.beta_c <= 1:
            raise ConfigError("beta_c", "must exceed 1")
        if self.g_tau < 0:
            raise ConfigError("g_tau", "must be nonnegative")
        if self.I_tau is not None and self.I_tau <= 0:
            raise ConfigError("I_tau", "must be positive")
        if self.replicates < 1:
            raise ConfigError("replicates", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        try:
            self.fading_model()
        except DomainError as e:
            raise ConfigError("fading", str(e)) from None
        return self

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        cfg = cls()
        for k, v in d.items():
            setattr(cfg, k, _coerce(k, v))
        return cfg

    def override(self, pairs: dict) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(pairs)
        return ExperimentConfig.from_dict(d)


_LISTS = {"n": float, "gamma": float}


def _coerce(key: str, value):
    f = {f.name: f for f in fields(ExperimentConfig)}[key]
    if value is None:
        return None
    try:
        if key in _LISTS:
            if isinstance(value, str):
                value = [v for v in value.replace(";", ",").split(",") if v.strip()]
            elif not isinstance(value, (list, tuple)):
                value = [value]
            return [float(v) for v in value]
        if key == "analytic_pairs":
            if isinstance(value, str):
                out = []
                for chunk in value.split(";"):
                    a, b = chunk.split(",")
                    out.append((float(a), float(b)))
                return out
            return [tuple(map(float, p)) for p in value]
        default = f.default if f.default is not dataclasses.MISSING else None
        if key in ("fading", "mode", "output"):
            return str(value).strip()
        if isinstance(value, str) and value.strip().lower() in ("none", "null", ""):
            return None
        if isinstance(default, bool):
            return str(value).lower() in ("1", "true", "yes")
        if isinstance(default, int) and key != "seed":
            return int(float(value))
        if key == "seed":
            return int(value)
        if isinstance(default, float) or default is None and key not in ("fading", "mode", "output"):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot parse {value!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key = value")
        k, v = (p.strip() for p in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    d = {}
    if path:
        with open(path) as fh:
            d.update(parse_config_text(fh.read()))
    d.update(overrides or {})
    return ExperimentConfig.from_dict(d).validate()
