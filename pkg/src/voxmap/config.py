"""``key = value`` configuration files for the pipeline."""
from __future__ import annotations

from pathlib import Path

from .geometry import CameraModel
from .integrator import IntegratorConfig
from .pipeline import PipelineConfig

DEFAULTS = {
    "grid_size_x": 15.0,
    "grid_size_y": 15.0,
    "grid_size_z": 3.0,
    "vox_size": 0.15,
    "fov_x_deg": 85.0,
    "fov_y_deg": 101.0,
    "width": 320,
    "height": 240,
    "depth": 6.5,
    "vox_inf": 2,
    "tracer_mode": "bundled",
    "parallelism": "sequential",
    "seed": 0,
}
# max_depth defaults to depth
OPTIONAL = {"max_depth"}


def parse_config(text: str, source: str = "<config>") -> dict:
    values = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = line.split("=", 1)
        elif ":" in line:
            key, val = line.split(":", 1)
        else:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = key.strip(), val.strip()
        if key not in DEFAULTS and key not in OPTIONAL:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        default = DEFAULTS.get(key, 0.0)
        try:
            values[key] = type(default)(val) if not isinstance(default, str) else val
        except ValueError:
            raise ValueError(f"{source}:{lineno}: bad value {val!r} for {key}") from None
    return values


def config_from_values(values: dict) -> PipelineConfig:
    cam = CameraModel.from_degrees(
        values["fov_x_deg"],
        values["fov_y_deg"],
        values["width"],
        values["height"],
        values.get("max_depth", values["depth"]),
    )
    return PipelineConfig(
        grid_size=(values["grid_size_x"], values["grid_size_y"], values["grid_size_z"]),
        vox_size=values["vox_size"],
        camera=cam,
        integrator=IntegratorConfig(values["vox_inf"]),
        depth=values["depth"],
        tracer_mode=values["tracer_mode"],
        parallelism=values["parallelism"],
        seed=values["seed"],
    )


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return config_from_values(dict(DEFAULTS))
    return config_from_values(parse_config(Path(path).read_text(), str(path)))
