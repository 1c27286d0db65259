"""Key-value text configuration for dataset generation.

Format: one `key = value` per line, `#` comments, blank lines ignored.
Every key is optional and falls back to the documented default; unknown
keys are rejected. Vector values are comma-separated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Box3D, ConfigError, Position3D, SceneConfig, UpaConfig


@dataclass(frozen=True)
class GridSpec:
    """User grid: length x width at fixed spacing, repeated per height."""

    length: float = 9.6
    width: float = 5.8
    spacing: float = 0.2
    heights: tuple = (1.4, 1.5, 1.6)
    origin: Position3D = field(default_factory=lambda: Position3D(-14.8, 0.0, 0.0))


@dataclass(frozen=True)
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    split_fraction: float = 0.8
    split_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.split_fraction < 1.0):
            raise ConfigError("split_fraction must lie in (0, 1)")


def parse_kv_lines(text: str, source: str = "<config>") -> dict:
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in items:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        items[key] = value
    return items


def format_kv_lines(items: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())


def _floats(value: str) -> tuple:
    try:
        return tuple(float(v.strip()) for v in value.split(","))
    except ValueError as e:
        raise ConfigError(f"bad numeric list '{value}'") from e


def _position(value: str) -> Position3D:
    xs = _floats(value)
    if len(xs) != 3:
        raise ConfigError(f"expected 3 coordinates, got '{value}'")
    return Position3D(*xs)


def scene_to_items(scene: SceneConfig) -> dict:
    """Flatten a SceneConfig to config/manifest key-value form."""
    items = {
        "scene.wavelength": repr(scene.wavelength),
        "scene.n_paths_mu_ris": str(scene.n_paths_mu_ris),
        "scene.n_paths_ris_ap": str(scene.n_paths_ris_ap),
        "scene.tx_power_dbm": repr(scene.tx_power_dbm),
        "scene.noise_power_dbm": repr(scene.noise_power_dbm),
        "scene.pilot_length": str(scene.pilot_length),
        "scene.rng_seed": str(scene.rng_seed),
        "scene.scatter_bounds.lo": _pos_str(scene.scatter_bounds.lo),
        "scene.scatter_bounds.hi": _pos_str(scene.scatter_bounds.hi),
    }
    for name, upa in (("ap", scene.ap), ("ris", scene.ris)):
        items[f"scene.{name}.count_a"] = str(upa.count_a)
        items[f"scene.{name}.count_b"] = str(upa.count_b)
        items[f"scene.{name}.spacing"] = repr(upa.spacing)
        items[f"scene.{name}.center"] = _pos_str(upa.center)
        items[f"scene.{name}.axis_a"] = upa.axis_a
        items[f"scene.{name}.axis_b"] = upa.axis_b
    return items


def _pos_str(p: Position3D) -> str:
    return f"{p.x!r}, {p.y!r}, {p.z!r}"


def scene_from_items(items: dict) -> SceneConfig:
    """Build a SceneConfig from flattened items, consuming the scene.* keys."""
    default = SceneConfig()

    def take(key, conv, fallback):
        if key in items:
            return conv(items.pop(key))
        return fallback

    def take_upa(prefix, d):
        return UpaConfig(
            count_a=take(f"{prefix}.count_a", int, d.count_a),
            count_b=take(f"{prefix}.count_b", int, d.count_b),
            spacing=take(f"{prefix}.spacing", float, d.spacing),
            center=take(f"{prefix}.center", _position, d.center),
            axis_a=take(f"{prefix}.axis_a", str, d.axis_a),
            axis_b=take(f"{prefix}.axis_b", str, d.axis_b),
        )

    bounds = Box3D(
        take("scene.scatter_bounds.lo", _position, default.scatter_bounds.lo),
        take("scene.scatter_bounds.hi", _position, default.scatter_bounds.hi),
    )
    return SceneConfig(
        wavelength=take("scene.wavelength", float, default.wavelength),
        ap=take_upa("scene.ap", default.ap),
        ris=take_upa("scene.ris", default.ris),
        n_paths_mu_ris=take("scene.n_paths_mu_ris", int, default.n_paths_mu_ris),
        n_paths_ris_ap=take("scene.n_paths_ris_ap", int, default.n_paths_ris_ap),
        scatter_bounds=bounds,
        tx_power_dbm=take("scene.tx_power_dbm", float, default.tx_power_dbm),
        noise_power_dbm=take("scene.noise_power_dbm", float, default.noise_power_dbm),
        pilot_length=take("scene.pilot_length", int, default.pilot_length),
        rng_seed=take("scene.rng_seed", int, default.rng_seed),
    )


def load_run_config(path) -> RunConfig:
    """Read a run configuration file; unknown keys are errors."""
    with open(path, "r", encoding="utf-8") as f:
        items = parse_kv_lines(f.read(), source=str(path))
    scene = scene_from_items(items)

    grid_default = GridSpec()
    heights = grid_default.heights
    if "grid.heights" in items:
        heights = _floats(items.pop("grid.heights"))
    grid = GridSpec(
        length=float(items.pop("grid.length", grid_default.length)),
        width=float(items.pop("grid.width", grid_default.width)),
        spacing=float(items.pop("grid.spacing", grid_default.spacing)),
        heights=heights,
        origin=(_position(items.pop("grid.origin"))
                if "grid.origin" in items else grid_default.origin),
    )
    split_fraction = float(items.pop("dataset.split_fraction", 0.8))
    split_seed = int(items.pop("dataset.split_seed", 0))
    if items:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(items))}")
    return RunConfig(scene=scene, grid=grid,
                     split_fraction=split_fraction, split_seed=split_seed)
