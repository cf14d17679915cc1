"""Run configuration: YAML file, command-line overrides and validation."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .density import parse_density
from .errors import ConfigError, ScalelabError
from .functionals import parse_functional
from .quadrature import QuadratureSpec
from .scaling import DEFAULT_LAMBDAS, DEFAULT_M_SET

CHECKS = ("homogeneity", "invariance", "euler", "representation", "pde", "box", "forms")

DEFAULT_THRESHOLDS = {
    "homogeneity_p": 1e-6,
    "homogeneity_rms": 1e-8,
    "m0": 1e-6,
    "q": 1e-6,
    "invariance_condition": 1e-6,
    "euler": 1e-6,
    "representation": 1e-6,
    "pde": 1e-8,
    "pde_power": 1e-2,
    "box": 1e-6,
    "form_spread": 1e-8,
    "form_identity": 1e-10,
}

_QUAD_KEYS = ("r_max", "panels", "nodes_per_panel", "box_panels", "box_nodes", "tail_tolerance",
              "hartree_box_nodes")


@dataclass
class RunConfig:
    functionals: list = field(default_factory=lambda: ["ne", "ext(z=1)", "hartree", "tf", "vw"])
    densities: list = field(default_factory=lambda: ["gaussian:alpha=1,n=1", "slater:zeta=1,n=1"])
    m_set: list = field(default_factory=lambda: list(DEFAULT_M_SET))
    lambda_set: list = field(default_factory=lambda: list(DEFAULT_LAMBDAS))
    representation_m: list = field(default_factory=lambda: [0.0, 4.0])
    box_lambdas: list = field(default_factory=lambda: [0.5, 2.0])
    checks: list = field(default_factory=lambda: list(CHECKS))
    seed: int = 0
    points: int = 200
    pairs: int = 100
    boxes: int = 3
    quadrature: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    json_out: str | None = None
    csv_out: str | None = None

    def quad_spec(self) -> QuadratureSpec:
        try:
            return QuadratureSpec().with_overrides(**self.quadrature)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad quadrature settings {self.quadrature}: {exc}") from None

    def validate(self):
        if not self.checks:
            raise ConfigError("no checks requested")
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
        if not self.functionals:
            raise ConfigError("no functionals given")
        if not self.densities:
            raise ConfigError("no densities given")
        for name in self.functionals:
            try:
                parse_functional(name)
            except ScalelabError as exc:
                raise ConfigError(str(exc)) from None
        for text in self.densities:
            try:
                parse_density(text)
            except ScalelabError as exc:
                raise ConfigError(str(exc)) from None
        for key in ("m_set", "lambda_set", "representation_m", "box_lambdas"):
            vals = getattr(self, key)
            if not vals or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
                raise ConfigError(f"{key} must be a non-empty list of finite numbers, got {vals}")
        for key in ("points", "pairs", "boxes"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive")
        bad = [k for k in self.quadrature if k not in _QUAD_KEYS]
        if bad:
            raise ConfigError(f"unknown quadrature keys {bad}; allowed {list(_QUAD_KEYS)}")
        bad = [k for k in self.thresholds if k not in DEFAULT_THRESHOLDS]
        if bad:
            raise ConfigError(f"unknown threshold keys {bad}")
        self.quad_spec()
        return self

    def to_dict(self):
        return asdict(self)


def _floats(value, key):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a list of numbers, got {value!r}") from None


def config_from_mapping(data: dict) -> RunConfig:
    """Build a config from the YAML layout documented in the README."""
    cfg = RunConfig()
    data = dict(data or {})
    known = {"functionals", "densities", "sweep", "checks", "seed", "sampling", "quadrature",
             "thresholds", "output", "representation_m", "box_lambdas"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")
    if "functionals" in data:
        cfg.functionals = [str(x) for x in data["functionals"]]
    if "densities" in data:
        cfg.densities = [str(x) for x in data["densities"]]
    sweep = data.get("sweep") or {}
    if "m" in sweep:
        cfg.m_set = _floats(sweep["m"], "sweep.m")
    if "lambdas" in sweep:
        cfg.lambda_set = _floats(sweep["lambdas"], "sweep.lambdas")
    if "representation_m" in data:
        cfg.representation_m = _floats(data["representation_m"], "representation_m")
    if "box_lambdas" in data:
        cfg.box_lambdas = _floats(data["box_lambdas"], "box_lambdas")
    if "checks" in data:
        cfg.checks = list(data["checks"] or [])
    if "seed" in data:
        cfg.seed = int(data["seed"])
    sampling = data.get("sampling") or {}
    for key in ("points", "pairs", "boxes"):
        if key in sampling:
            setattr(cfg, key, int(sampling[key]))
    cfg.quadrature = dict(data.get("quadrature") or {})
    cfg.thresholds = {**DEFAULT_THRESHOLDS, **(data.get("thresholds") or {})}
    output = data.get("output") or {}
    cfg.json_out = output.get("json")
    cfg.csv_out = output.get("csv")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return config_from_mapping(data or {})


def apply_env(cfg: RunConfig, environ=None) -> RunConfig:
    """SCALELAB_SEED overrides the configured seed."""
    environ = os.environ if environ is None else environ
    raw = environ.get("SCALELAB_SEED")
    if raw is not None:
        try:
            cfg.seed = int(raw)
        except ValueError:
            raise ConfigError(f"SCALELAB_SEED must be an integer, got {raw!r}") from None
    return cfg
