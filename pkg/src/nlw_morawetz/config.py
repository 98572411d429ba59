"""Run configuration: a flat ``key = value`` text format with strict key checking.

Grammar (one assignment per line)::

    # comment
    experiment = "morawetz_identity"
    lambda = -1
    dr = 0.02
    data.kind = "gaussian"
    schedule.radii = [5, 10, 20, 40]

Values are JSON (numbers, strings in double quotes, lists, true/false/null);
a bare word that is not valid JSON is read as a string. Dotted keys address
the ``data``, ``weight`` and ``schedule`` groups. Unset optional keys (null)
mean "use the experiment's default".
"""
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .solver import CFL_MAX

SCHEMA_VERSION = 1
BOUNDARY_MARGIN = 5.0


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class DataSpec:
    kind: Optional[str] = None  # gaussian | compact | ground_state
    amplitude: Optional[float] = None
    width: Optional[float] = None
    rho: Optional[float] = None
    mode: Optional[str] = None  # displacement | velocity
    alpha: Optional[float] = None


@dataclass
class WeightSpec:
    name: Optional[str] = None  # bracket | smoothed_abs | psi | phi
    k: Optional[int] = None
    R: Optional[float] = None
    eps: Optional[float] = None


@dataclass
class ScheduleSpec:
    radii: Optional[list] = None
    margin: float = 20.0
    times: Optional[list] = None


@dataclass
class RunConfig:
    experiment: str = ""
    n_dim: int = 3
    lam: Optional[float] = None
    dr: float = 0.02
    dt: Optional[float] = None
    cfl: Optional[float] = None
    r_max: float = 150.0
    t_max: Optional[float] = None
    data: DataSpec = field(default_factory=DataSpec)
    weight: WeightSpec = field(default_factory=WeightSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    refine: Optional[list] = None
    alphas: Optional[list] = None
    scales: Optional[list] = None
    out_dir: str = "."
    stride: int = 0

    # ------------------------------------------------------------ helpers
    def cfl_for(self, default):
        """dt/dr used by the run: from dt if given, then cfl, then ``default``."""
        if self.dt is not None:
            return self.dt / self.dr
        return self.cfl if self.cfl is not None else default

    def to_flat(self):
        return flatten(self)

    def canonical(self):
        """Config without output placement, as canonical JSON (the hash input)."""
        flat = {k: v for k, v in self.to_flat().items() if k != "out_dir"}
        return json.dumps(flat, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


_KEY_ALIASES = {"lambda": "lam"}
_GROUPS = {"data": DataSpec, "weight": WeightSpec, "schedule": ScheduleSpec}


def _external(name):
    return "lambda" if name == "lam" else name


def flatten(cfg):
    out = {}
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if f.name in _GROUPS:
            for g in dataclasses.fields(val):
                out[f"{f.name}.{g.name}"] = getattr(val, g.name)
        else:
            out[_external(f.name)] = val
    return out


def valid_keys():
    return list(flatten(RunConfig()))


def _coerce(key, value, target):
    """Light type normalization so that round trips are exact."""
    if value is None:
        return None
    if target in ("float", "Optional[float]"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if target in ("int", "Optional[int]"):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if target in ("str", "Optional[str]"):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if target == "Optional[list]":
        if not isinstance(value, list):
            value = [value]
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a list of numbers, got {value!r}") from None
    return value


def _type_name(tp):
    return tp.__name__ if isinstance(tp, type) else str(tp).replace("typing.", "")


def _field_types(cls):
    return {f.name: _type_name(f.type) for f in dataclasses.fields(cls)}


def assign(cfg, key, value):
    """Set a flat key on ``cfg`` in place; unknown keys raise ConfigError."""
    head, _, tail = key.partition(".")
    head = _KEY_ALIASES.get(head, head)
    if tail:
        if head not in _GROUPS:
            raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(valid_keys())}")
        obj, name, types = getattr(cfg, head), tail, _field_types(_GROUPS[head])
    else:
        if head in _GROUPS:
            raise ConfigError(f"{key!r} is a group; set {key}.<field> instead")
        obj, name, types = cfg, head, _field_types(RunConfig)
    if name not in types:
        raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(valid_keys())}")
    setattr(obj, name, _coerce(key, value, types[name]))


def parse_value(text):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text, cfg=None):
    cfg = cfg or RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        assign(cfg, key.strip(), parse_value(value))
    return cfg


def serialize(cfg):
    lines = []
    for key, val in cfg.to_flat().items():
        lines.append(f"{key} = {json.dumps(val)}")
    return "\n".join(lines) + "\n"


def validate(cfg, registry=None):
    """Re-check solver invariants and names; returns cfg or raises ConfigError."""
    if registry is not None and cfg.experiment not in registry:
        raise ConfigError(f"experiment: unknown name {cfg.experiment!r}; "
                          f"registered: {', '.join(sorted(registry))}")
    if cfg.n_dim < 3:
        raise ConfigError(f"n_dim: must be >= 3, got {cfg.n_dim}")
    if not cfg.dr > 0:
        raise ConfigError(f"dr: must be positive, got {cfg.dr}")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError(f"dt: must be positive, got {cfg.dt}")
    ratio = cfg.cfl_for(0.5)
    if ratio > CFL_MAX:
        raise ConfigError(f"dt: dt/dr = {ratio:.3g} violates the CFL bound {CFL_MAX}")
    if not cfg.r_max >= 10 * cfg.dr:
        raise ConfigError(f"r_max: must be at least 10*dr, got {cfg.r_max}")
    if cfg.t_max is not None and cfg.t_max < 0:
        raise ConfigError(f"t_max: must be non-negative, got {cfg.t_max}")
    d = cfg.data
    if d.kind not in (None, "gaussian", "compact", "ground_state"):
        raise ConfigError(f"data.kind: unknown generator {d.kind!r}")
    if d.mode not in (None, "displacement", "velocity"):
        raise ConfigError(f"data.mode: expected displacement or velocity, got {d.mode!r}")
    if d.kind == "compact" and cfg.t_max is not None:
        need = (d.rho if d.rho is not None else 1.0) + cfg.t_max + BOUNDARY_MARGIN
        if need > cfg.r_max:
            raise ConfigError(f"r_max: {cfg.r_max} < support + t_max + margin = {need:g}")
    if cfg.weight.name not in (None, "bracket", "smoothed_abs", "psi", "phi"):
        raise ConfigError(f"weight.name: unknown weight {cfg.weight.name!r}")
    if cfg.weight.k is not None and cfg.weight.k < 1:
        raise ConfigError(f"weight.k: must be >= 1, got {cfg.weight.k}")
    if cfg.weight.R is not None and not cfg.weight.R > 0:
        raise ConfigError(f"weight.R: must be positive, got {cfg.weight.R}")
    if cfg.schedule.radii is not None and any(
            not (0 < R <= cfg.r_max) or math.isinf(R) for R in cfg.schedule.radii):
        raise ConfigError(f"schedule.radii: radii must lie in (0, r_max], got {cfg.schedule.radii}")
    if cfg.stride < 0:
        raise ConfigError(f"stride: must be non-negative, got {cfg.stride}")
    return cfg
