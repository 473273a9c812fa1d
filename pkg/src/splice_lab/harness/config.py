"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..cutoffs import PROFILES, R0, VARIANTS, length_center, snap_R
from ..grid import TWO_PI
from ..norms import WeightedNormParams

EXPERIMENTS = ("determinant", "roundtrip", "regions", "decay", "derivative_check", "c1_limit",
               "commutativity", "estimates", "smoke")
ALL = "all"


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = ALL
    n: int = 1
    k: int = 3
    p: float = 3.0
    delta: float = 0.5
    delta_prime: float = 0.8
    variant: str = "desk"
    m: int = 1
    R_list: tuple[float, ...] = (36.0, 49.0, 64.0, 81.0, 100.0)
    theta_list: tuple[float, ...] = (0.0, 3.0 * TWO_PI / 32.0)
    h_t: float = 0.25
    ns: int = 32
    seed: int = 20240601
    J: str = "conjugated"
    epsilon: float = 0.3
    radius: float = 2.0
    J_seed: int = 7
    n_pairs: int = 50
    n_probes: int = 16
    n_op_probes: int = 64
    envelope: str = "exp"
    modes: tuple[tuple[int, float], ...] = ((1, 1.0), (2, 0.5), (-1, 0.5))
    profile: str = "offset"
    r0: float = 1.0
    fd_h: float = 0.2
    derivative_h_t: float = 1.0 / 64.0
    smoke_R: float = 1.0e6
    smoke_h_t: float = 256.0
    smoke_ns: int = 16
    smoke_delta: float = 1.0e-5
    smoke_delta_prime: float = 2.0e-5
    output_dir: str = "results"
    snapped: dict = field(default_factory=dict, compare=False)

    @property
    def params(self) -> WeightedNormParams:
        return WeightedNormParams(self.k, self.p, self.delta)

    def experiments(self) -> tuple[str, ...]:
        return EXPERIMENTS if self.experiment == ALL else (self.experiment,)

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["R_list"] = list(self.R_list)
        out["theta_list"] = list(self.theta_list)
        out["modes"] = [list(m) for m in self.modes]
        return out


def _list(value: str, cast) -> tuple:
    items = [x.strip() for x in value.split(",") if x.strip()]
    if not items:
        raise ConfigError("empty list")
    return tuple(cast(x) for x in items)


def _modes(value: str) -> tuple[tuple[int, float], ...]:
    """``1:1.0, 2:0.5`` -> ((1, 1.0), (2, 0.5))."""
    out = []
    for item in _list(value, str):
        m, _, a = item.partition(":")
        out.append((int(m), float(a) if a else 1.0))
    return tuple(out)


def _theta(x: str) -> float:
    x = x.strip().lower()
    if x.endswith("pi"):
        coef = x[:-2].rstrip("*").strip()
        return (float(coef) if coef else 1.0) * math.pi
    return float(x)


_CASTS = {
    "experiment": str, "n": int, "k": int, "p": float, "delta": float, "delta_prime": float,
    "variant": str, "m": int, "R_list": lambda v: _list(v, float),
    "theta_list": lambda v: _list(v, _theta), "h_t": float, "ns": int, "seed": int, "J": str,
    "epsilon": float, "radius": float, "J_seed": int, "n_pairs": int, "n_probes": int,
    "n_op_probes": int, "envelope": str, "modes": _modes, "profile": str, "r0": float,
    "fd_h": float, "derivative_h_t": float, "smoke_R": float, "smoke_h_t": float,
    "smoke_ns": int, "smoke_delta": float, "smoke_delta_prime": float, "output_dir": str,
}
_ALIASES = {"grid.h_t": "h_t", "grid.ns": "ns", "j": "J", "j_spec": "J", "r_list": "R_list",
            "output": "output_dir"}


def parse_config_text(text: str) -> ExperimentConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        key = _ALIASES.get(key, _ALIASES.get(key.lower(), key))
        if key not in _CASTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CASTS[key](value.strip())
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return validate(ExperimentConfig(**values))


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check ranges and snap every R (and theta) to the lattice; snapped values are kept."""
    if cfg.experiment not in EXPERIMENTS + (ALL,):
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.variant not in VARIANTS:
        raise ConfigError(f"unknown length variant {cfg.variant!r}")
    if cfg.profile not in PROFILES:
        raise ConfigError(f"unknown profile {cfg.profile!r}")
    if cfg.J not in ("standard", "conjugated"):
        raise ConfigError(f"J must be 'standard' or 'conjugated', got {cfg.J!r}")
    if not abs(cfg.epsilon) < 0.5:
        raise ConfigError("epsilon must satisfy |epsilon| < 0.5")
    if cfg.n < 1 or cfg.m < 1 or cfg.n_pairs < 1 or cfg.n_probes < 1 or cfg.n_op_probes < 1:
        raise ConfigError("n, m, n_pairs and probe counts must be positive")
    if cfg.ns < 16 or cfg.ns % 2:
        raise ConfigError("ns must be even and >= 16")
    for h in (cfg.h_t, cfg.derivative_h_t, cfg.smoke_h_t):
        if not h > 0:
            raise ConfigError("grid steps must be positive")
    try:
        params = cfg.params
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not params.embeds_in_c1:
        raise ConfigError(f"need k - 2/p > 1, got k = {cfg.k}, p = {cfg.p}")
    if params.k < 1:
        raise ConfigError("k must be >= 1")
    if not cfg.delta_prime > cfg.delta:
        raise ConfigError("test maps need delta_prime > delta")
    if len(cfg.R_list) < 1:
        raise ConfigError("R_list is empty")
    snapped = {}
    Rs = []
    for R in cfg.R_list:
        if R < R0[cfg.variant]:
            raise ConfigError(f"R = {R} below R0 = {R0[cfg.variant]:g} for the {cfg.variant} variant")
        Rs_ = snap_R(R, cfg.h_t, cfg.variant)
        if Rs_ < R0[cfg.variant]:
            raise ConfigError(f"R = {R} below R0 for the {cfg.variant} variant")
        try:
            length_center(Rs_, cfg.m, cfg.variant)
        except ValueError as exc:
            raise ConfigError(f"R = {R}: {exc}") from exc
        snapped[str(R)] = Rs_
        Rs.append(Rs_)
    h_s = TWO_PI / cfg.ns
    thetas = tuple(round(th / h_s) * h_s for th in cfg.theta_list)
    return replace(cfg, R_list=tuple(Rs), theta_list=thetas, snapped=snapped)
