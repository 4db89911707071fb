"""
Run configuration: one JSON document per run.

    {
      "model": "ev",
      "ansatz": {"c": 1.0, "k": 1.0, "l": 0.0, "F0": 0.0, "E0": 0.9},
      "central": -0.5,
      "tolerances": {"ode_rel": 1e-8, "ode_abs": 1e-10,
                     "quad_tol": 1e-10, "root_tol": 1e-12},
      "n_nodes": 401,
      "scan": {"param": "central", "start": -0.05, "stop": -0.8,
               "count": 10, "log": false},
      "boosts": [[0.1, 0.0, 0.0]],
      "random_boosts": {"count": 20, "seed": 0, "max_speed": 0.5},
      "output": {"format": "csv", "path": "scan.csv"}
    }

``central`` is the model's central parameter: the depth E0 - U(0) > 0 for
vp, the field phi(0) < 0 for nv (null means shoot at fixed ``ansatz.E0``)
and the shifted potential mu(0) - ln E0 < 0 for ev. Only ``model`` is
required; everything else has a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .ansatz import MODELS, AnsatzProfile
from .numerics import DEFAULT_TOL, Tolerances

DEFAULT_CENTRAL = {"vp": 1.0, "nv": -0.5, "ev": -0.5}
CENTRAL_ALIASES = {"vp": "central_depth", "nv": "central_field", "ev": "z_central"}
ANSATZ_PARAMS = ("c", "k", "l", "F0", "E0")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration (exit code 2)."""


@dataclass(frozen=True)
class ScanSpec:
    param: str = "central"
    start: float = -0.05
    stop: float = -0.8
    count: int = 10
    log: bool = False

    def values(self) -> np.ndarray:
        if self.count < 2:
            raise ConfigError("scan count must be at least 2")
        if not self.log:
            return np.linspace(self.start, self.stop, self.count)
        if self.start * self.stop <= 0:
            raise ConfigError("log-spaced scan needs start and stop of one sign")
        sign = math.copysign(1.0, self.start)
        return sign * np.geomspace(abs(self.start), abs(self.stop), self.count)


@dataclass(frozen=True)
class RandomBoosts:
    count: int = 0
    seed: int = 0
    max_speed: float = 0.5

    def draw(self) -> list:
        rng = np.random.default_rng(self.seed)
        return [tuple(v) for v in rng.uniform(-self.max_speed, self.max_speed,
                                              size=(self.count, 3))]


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    model: str
    ansatz: AnsatzProfile = field(default_factory=AnsatzProfile)
    central: Optional[float] = None
    tolerances: Tolerances = DEFAULT_TOL
    n_nodes: int = 401
    scan: Optional[ScanSpec] = None
    boosts: tuple = ()
    random_boosts: RandomBoosts = field(default_factory=RandomBoosts)
    output: OutputSpec = field(default_factory=OutputSpec)

    def all_boosts(self) -> list:
        return [tuple(map(float, b)) for b in self.boosts] + self.random_boosts.draw()

    def point(self, value: float) -> "RunConfig":
        """The single-build config at one scan value."""
        name = self.scan.param if self.scan else "central"
        if name in ("central", CENTRAL_ALIASES[self.model]):
            return replace(self, central=float(value), scan=None)
        return replace(self, ansatz=replace(self.ansatz, **{name: float(value)}),
                       scan=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["boosts"] = [list(b) for b in self.boosts]
        return d


def _check_model(model):
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")


def validate(cfg: RunConfig) -> RunConfig:
    """Range checks for the model's central parameter and scan parameter."""
    _check_model(cfg.model)
    if cfg.n_nodes < 16:
        raise ConfigError("n_nodes must be at least 16")
    if cfg.output.format not in FORMATS:
        raise ConfigError(f"output format must be one of {FORMATS}")
    try:
        if cfg.model in ("vp", "nv") and not cfg.ansatz.isotropic:
            raise ConfigError(f"{cfg.model} supports only the isotropic ansatz")
        points = [cfg] if cfg.scan is None else [cfg.point(v) for v in cfg.scan.values()]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.scan is not None:
        allowed = ("central", CENTRAL_ALIASES[cfg.model]) + ANSATZ_PARAMS
        if cfg.scan.param not in allowed:
            raise ConfigError(f"scan parameter must be one of {allowed}")
    for p in points:
        x = p.central
        if cfg.model == "vp" and not (x is not None and x > 0):
            raise ConfigError("vp central depth must be positive")
        if cfg.model == "ev" and not (x is not None and x < 0):
            raise ConfigError("ev shifted central potential must be negative")
        if cfg.model == "nv":
            if x is None and not 0 < p.ansatz.E0 < 1:
                raise ConfigError("nv cutoff E0 must lie in (0, 1)")
            if x is not None and not x < 0:
                raise ConfigError("nv central field must be negative")
        if cfg.model == "vp" and p.ansatz.k >= 3.5:
            raise ConfigError("vp needs k < 7/2 for compact support")
    return cfg


def _sub(cls, data, what):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be an object")
    known = set(cls.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown {what} keys: {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def from_dict(data: dict, model: Optional[str] = None) -> RunConfig:
    """
    Parse a config document. ``model`` (from the command line) fills a
    missing ``model`` key and must agree with it when both are present.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    m = data.get("model", model)
    if model is not None and m != model:
        raise ConfigError(f"--model {model} disagrees with config model {m}")
    _check_model(m)
    central = data.get("central", DEFAULT_CENTRAL[m])
    boosts = data.get("boosts", [])
    try:
        boosts = tuple(tuple(float(x) for x in b) for b in boosts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"boosts: {exc}") from exc
    if any(len(b) != 3 for b in boosts):
        raise ConfigError("each boost must be a 3-vector")
    cfg = RunConfig(
        model=m,
        ansatz=_sub(AnsatzProfile, data.get("ansatz"), "ansatz"),
        central=None if central is None else float(central),
        tolerances=_sub(Tolerances, data.get("tolerances"), "tolerances"),
        n_nodes=int(data.get("n_nodes", 401)),
        scan=None if data.get("scan") is None else _sub(ScanSpec, data["scan"], "scan"),
        boosts=boosts,
        random_boosts=_sub(RandomBoosts, data.get("random_boosts"), "random_boosts"),
        output=_sub(OutputSpec, data.get("output"), "output"),
    )
    return validate(cfg)


def load_config(path, model: Optional[str] = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return from_dict(data, model)


__all__ = ["RunConfig", "ScanSpec", "RandomBoosts", "OutputSpec", "ConfigError",
           "from_dict", "load_config", "validate", "DEFAULT_CENTRAL",
           "CENTRAL_ALIASES"]
