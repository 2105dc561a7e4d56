"""Declarative experiment configuration (INI file, one section per concern).

Defaults reproduce the headline comparison: standard normal prior, uniform
types on [0, 1], N from 3 to 19, posted-contract design points 0.2 / 0.5 /
0.8, 50000 trials per cell.  serialize/parse round-trip exactly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from typing import List, Tuple

from .costs import LINEAR, QUADRATIC, linear_cost, quadratic_cost
from .engine import MechanismSpec, homogeneous_spec
from .model import CostTypeDistribution, GaussianPrior


class ConfigError(ValueError):
    """Unusable configuration (bad value, wrong type, missing file)."""


@dataclass(frozen=True)
class ExperimentConfig:
    mu0: float = 0.0
    var0: float = 1.0
    theta_lo: float = 0.0
    theta_hi: float = 1.0
    cost: str = LINEAR
    n_agents_list: Tuple[int, ...] = tuple(range(3, 20))
    n_trials: int = 50_000
    master_seed: int = 0
    tie_break: str = "lowest-index"
    use_cope: bool = True
    use_centralized: bool = True
    use_homogeneous: bool = True
    theta_dagger_list: Tuple[float, ...] = (0.2, 0.5, 0.8)
    hom_denominator: str = "participants"
    output_path: str = "results"
    output_format: str = "csv"

    def validate(self) -> "ExperimentConfig":
        if not self.var0 > 0:
            raise ConfigError(f"var0 must be positive, got {self.var0}")
        if not (0 <= self.theta_lo < self.theta_hi):
            raise ConfigError(
                f"need 0 <= theta_lo < theta_hi, got [{self.theta_lo}, {self.theta_hi}]")
        if self.cost not in (LINEAR, QUADRATIC):
            raise ConfigError(f"cost must be linear or quadratic, got {self.cost!r}")
        if not self.n_agents_list:
            raise ConfigError("n_agents list is empty")
        if any(n < 1 for n in self.n_agents_list):
            raise ConfigError(f"every N must be >= 1, got {self.n_agents_list}")
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.tie_break not in ("lowest-index", "seeded-random"):
            raise ConfigError(f"unknown tie_break {self.tie_break!r}")
        if self.hom_denominator not in ("participants", "full-n"):
            raise ConfigError(f"unknown denominator {self.hom_denominator!r}")
        if self.use_homogeneous:
            if not self.theta_dagger_list:
                raise ConfigError("homogeneous mechanism enabled with no theta_dagger")
            if any(td <= 0 for td in self.theta_dagger_list):
                raise ConfigError(
                    f"theta_dagger must be positive, got {self.theta_dagger_list}")
        if not (self.use_cope or self.use_centralized or self.use_homogeneous):
            raise ConfigError("no mechanism enabled")
        if self.output_format != "csv":
            raise ConfigError(f"unsupported output format {self.output_format!r}")
        return self

    # -- object builders -----------------------------------------------------

    def prior(self) -> GaussianPrior:
        return GaussianPrior(self.mu0, self.var0)

    def type_dist(self) -> CostTypeDistribution:
        return CostTypeDistribution.uniform(self.theta_lo, self.theta_hi)

    def cost_model(self):
        return linear_cost() if self.cost == LINEAR else quadratic_cost()

    def mechanisms(self) -> List[MechanismSpec]:
        mechs: List[MechanismSpec] = []
        if self.use_cope:
            mechs.append(MechanismSpec(f"cope-{self.cost}"))
        if self.use_centralized:
            mechs.append(MechanismSpec("centralized"))
        if self.use_homogeneous:
            mechs.extend(homogeneous_spec(td) for td in self.theta_dagger_list)
        return mechs


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_list(values, fmt) -> str:
    return ", ".join(fmt(v) for v in values)


def serialize_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser()
    parser["model"] = {
        "mu0": _fmt_float(cfg.mu0),
        "var0": _fmt_float(cfg.var0),
        "theta_lo": _fmt_float(cfg.theta_lo),
        "theta_hi": _fmt_float(cfg.theta_hi),
        "cost": cfg.cost,
    }
    parser["run"] = {
        "n_agents": _fmt_list(cfg.n_agents_list, str),
        "n_trials": str(cfg.n_trials),
        "master_seed": str(cfg.master_seed),
        "tie_break": cfg.tie_break,
        "output": cfg.output_path,
        "format": cfg.output_format,
    }
    parser["mechanism.cope"] = {"enabled": str(cfg.use_cope).lower()}
    parser["mechanism.centralized"] = {"enabled": str(cfg.use_centralized).lower()}
    parser["mechanism.homogeneous"] = {
        "enabled": str(cfg.use_homogeneous).lower(),
        "theta_dagger": _fmt_list(cfg.theta_dagger_list, _fmt_float),
        "denominator": cfg.hom_denominator,
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _parse_int_list(text: str) -> Tuple[int, ...]:
    out: List[int] = []
    for part in text.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:  # range like 3-19 (minus sign of a negative excluded)
            idx = part.index("-", 1)
            lo, hi = int(part[:idx]), int(part[idx + 1:])
            if hi < lo:
                raise ConfigError(f"bad range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(p) for p in text.replace(";", ",").split(",") if p.strip())


def _get(parser: configparser.ConfigParser, section: str, key: str,
         default: str) -> str:
    if parser.has_option(section, key):
        return parser.get(section, key).strip()
    return default


def _get_bool(parser, section, key, default: bool) -> bool:
    raw = _get(parser, section, key, str(default)).lower()
    if raw in ("true", "1", "yes", "on"):
        return True
    if raw in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key} must be a boolean, got {raw!r}")


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    base = ExperimentConfig()
    try:
        cfg = ExperimentConfig(
            mu0=float(_get(parser, "model", "mu0", _fmt_float(base.mu0))),
            var0=float(_get(parser, "model", "var0", _fmt_float(base.var0))),
            theta_lo=float(_get(parser, "model", "theta_lo", _fmt_float(base.theta_lo))),
            theta_hi=float(_get(parser, "model", "theta_hi", _fmt_float(base.theta_hi))),
            cost=_get(parser, "model", "cost", base.cost),
            n_agents_list=_parse_int_list(
                _get(parser, "run", "n_agents", _fmt_list(base.n_agents_list, str))),
            n_trials=int(_get(parser, "run", "n_trials", str(base.n_trials))),
            master_seed=int(_get(parser, "run", "master_seed", str(base.master_seed))),
            tie_break=_get(parser, "run", "tie_break", base.tie_break),
            output_path=_get(parser, "run", "output", base.output_path),
            output_format=_get(parser, "run", "format", base.output_format),
            use_cope=_get_bool(parser, "mechanism.cope", "enabled", base.use_cope),
            use_centralized=_get_bool(parser, "mechanism.centralized", "enabled",
                                      base.use_centralized),
            use_homogeneous=_get_bool(parser, "mechanism.homogeneous", "enabled",
                                      base.use_homogeneous),
            theta_dagger_list=_parse_float_list(
                _get(parser, "mechanism.homogeneous", "theta_dagger",
                     _fmt_list(base.theta_dagger_list, _fmt_float))),
            hom_denominator=_get(parser, "mechanism.homogeneous", "denominator",
                                 base.hom_denominator),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg.validate()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
