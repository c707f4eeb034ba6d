"""Run and model configuration (JSON files plus command-line overrides)."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .camis import PRESET_SLIP, CamisModel, PhysicalParams, RollWeight, SlipModel

MODEL_KEYS = {"rho", "mass", "gravity", "speed", "alpha_margin_deg", "slip", "roll_weight_k",
              "compat_rho_squared"}
SLIP_KEYS = {"family", "c_r", "c_a", "epsilon"}
RUN_KEYS = {"terrain", "format", "synthetic", "seed", "hex_res", "smooth_radius", "model",
            "start", "goal", "mode", "out", "step", "backend"}
RUN_MODES = ("anisotropic", "isotropic-equivalent", "both")


class ConfigError(ValueError):
    pass


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def model_from_dict(d):
    """Build a CamisModel; ``slip`` is a preset name or a parameter object."""
    d = dict(d or {})
    _check_keys(d, MODEL_KEYS, "model")
    try:
        defaults = PhysicalParams()
        params = PhysicalParams(
            rho=float(d.get("rho", defaults.rho)),
            mass=float(d.get("mass", defaults.mass)),
            gravity=float(d.get("gravity", defaults.gravity)),
            speed=float(d.get("speed", defaults.speed)),
            alpha_margin=math.radians(float(d.get("alpha_margin_deg",
                                                  math.degrees(defaults.alpha_margin)))),
        )
        slip = d.get("slip", "none")
        if isinstance(slip, str):
            if slip not in PRESET_SLIP:
                raise ConfigError(f"unknown slip preset {slip!r}; choose from {sorted(PRESET_SLIP)}")
            slip = PRESET_SLIP[slip]
        else:
            _check_keys(slip, SLIP_KEYS, "slip")
            slip = SlipModel(**slip)
        return CamisModel(params=params, slip=slip,
                          roll_weight=RollWeight(float(d.get("roll_weight_k", 0.0))),
                          compat_rho_squared=bool(d.get("compat_rho_squared", False)))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model config: {exc}") from exc


def model_to_dict(model):
    p = model.params
    slip = asdict(model.slip)
    for name, preset in PRESET_SLIP.items():
        if preset == model.slip:
            slip = name
    return {
        "rho": p.rho, "mass": p.mass, "gravity": p.gravity, "speed": p.speed,
        "alpha_margin_deg": math.degrees(p.alpha_margin), "slip": slip,
        "roll_weight_k": model.roll_weight.k, "compat_rho_squared": model.compat_rho_squared,
    }


def _point(v, name):
    if v is None:
        return None
    if isinstance(v, str):
        v = v.split(",")
    try:
        x, y = (float(c) for c in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be 'x,y', got {v!r}") from None
    return (x, y)


@dataclass
class RunConfig:
    terrain: str = None
    format: str = None
    synthetic: str = None
    seed: int = 0
    hex_res: float = 0.5
    smooth_radius: int = 0
    model: dict = field(default_factory=dict)
    start: tuple = None
    goal: tuple = None
    mode: str = "anisotropic"
    out: str = "out"
    step: float = None
    backend: str = None

    def __post_init__(self):
        self.start = _point(self.start, "start")
        self.goal = _point(self.goal, "goal")
        try:
            self.hex_res = float(self.hex_res)
            self.seed = int(self.seed)
            self.smooth_radius = int(self.smooth_radius)
            self.step = None if self.step is None else float(self.step)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not self.hex_res > 0:
            raise ConfigError(f"hex_res must be positive, got {self.hex_res}")
        if self.smooth_radius < 0:
            raise ConfigError("smooth_radius must be >= 0")
        if self.mode not in RUN_MODES:
            raise ConfigError(f"mode must be one of {RUN_MODES}, got {self.mode!r}")
        if self.step is not None and not 0 < self.step <= self.hex_res:
            raise ConfigError("step must lie in (0, hex_res]")
        _check_keys(self.model, MODEL_KEYS, "model")

    def camis_model(self):
        return model_from_dict(self.model)

    def to_dict(self):
        d = asdict(self)
        d["model"] = model_to_dict(self.camis_model())
        for k in ("start", "goal"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def load_config(path):
    """Read a JSON run config (an empty dict when ``path`` is None)."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    # a relative terrain path is relative to the config file
    terrain = data.get("terrain")
    if isinstance(terrain, str) and not Path(terrain).is_absolute():
        data["terrain"] = str(Path(path).parent / terrain)
    return data


def build_run_config(data, **overrides):
    """Merge a config dict with non-None overrides (flags win)."""
    data = dict(data)
    _check_keys(data, RUN_KEYS, "config")
    for k, v in overrides.items():
        if v is not None:
            data[k] = v
    return RunConfig(**data)
