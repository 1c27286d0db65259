"""Scene geometry: array placement, line-of-sight angles, and multipath synthesis.

Positions are in meters. Angles follow the array-local convention: the
elevation is measured against the array's first axis (axis_a) and the
azimuth against the second (axis_b), both in [0, pi].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Invalid geometric input (degenerate direction, out-of-bounds position)."""


class ConfigError(ValueError):
    """Invalid scene or run configuration."""


_AXIS_VECTORS = {
    "X": np.array([1.0, 0.0, 0.0]),
    "Y": np.array([0.0, 1.0, 0.0]),
    "Z": np.array([0.0, 0.0, 1.0]),
}

# Below this sin(elevation) the azimuth is undefined; pi/2 by convention.
_DEGENERATE_SIN = 1e-9


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise GeometryError("position coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True)
class Box3D:
    """Axis-aligned box, used to bound scatterer placement."""

    lo: Position3D
    hi: Position3D

    def __post_init__(self):
        lo, hi = self.lo.as_array(), self.hi.as_array()
        if not np.all(lo < hi):
            raise ConfigError("box must have positive extent on every axis")

    def contains(self, p: Position3D) -> bool:
        a = p.as_array()
        return bool(np.all(a >= self.lo.as_array()) and np.all(a <= self.hi.as_array()))

    def sample(self, rng: np.random.Generator) -> Position3D:
        lo, hi = self.lo.as_array(), self.hi.as_array()
        pt = rng.uniform(lo, hi)
        return Position3D(float(pt[0]), float(pt[1]), float(pt[2]))


@dataclass(frozen=True)
class UpaConfig:
    """Uniform planar array: count_a x count_b elements on axes (axis_a, axis_b)."""

    count_a: int
    count_b: int
    spacing: float
    center: Position3D
    axis_a: str = "Y"
    axis_b: str = "Z"

    def __post_init__(self):
        if self.count_a < 1 or self.count_b < 1:
            raise ConfigError("array element counts must be >= 1")
        if self.spacing <= 0:
            raise ConfigError("element spacing must be positive")
        if self.axis_a not in _AXIS_VECTORS or self.axis_b not in _AXIS_VECTORS:
            raise ConfigError("array axes must be one of X, Y, Z")
        if self.axis_a == self.axis_b:
            raise ConfigError("array axes must differ")

    @property
    def size(self) -> int:
        return self.count_a * self.count_b

    def axis_a_vector(self) -> np.ndarray:
        return _AXIS_VECTORS[self.axis_a]

    def axis_b_vector(self) -> np.ndarray:
        return _AXIS_VECTORS[self.axis_b]


@dataclass(frozen=True)
class AnglePair:
    """Elevation/azimuth pair, both constrained to [0, pi]."""

    elevation: float
    azimuth: float

    def __post_init__(self):
        if not (0.0 <= self.elevation <= math.pi):
            raise GeometryError(f"elevation {self.elevation} outside [0, pi]")
        if not (0.0 <= self.azimuth <= math.pi):
            raise GeometryError(f"azimuth {self.azimuth} outside [0, pi]")


@dataclass(frozen=True)
class MuRisPath:
    gain: complex
    arrival_at_ris: AnglePair


@dataclass(frozen=True)
class RisApPath:
    gain: complex
    departure_at_ris: AnglePair
    arrival_at_ap: AnglePair


@dataclass(frozen=True)
class SceneConfig:
    """Full propagation scene: arrays, path counts, powers, pilot length, seed.

    Defaults reproduce the reference indoor layout: AP on the left wall,
    RIS on the front wall, user grid between them. The wavelength default
    is chosen so the fingerprint varies smoothly across the 0.2 m user
    grid (see README for how to override it).
    """

    wavelength: float = 1.0
    ap: UpaConfig = field(default_factory=lambda: UpaConfig(
        16, 16, 0.2, Position3D(-10.0, -5.0, 2.5), axis_a="X", axis_b="Z"))
    ris: UpaConfig = field(default_factory=lambda: UpaConfig(
        16, 16, 0.2, Position3D(-5.10, -1.43, 2.0), axis_a="Y", axis_b="Z"))
    n_paths_mu_ris: int = 1
    n_paths_ris_ap: int = 16
    scatter_bounds: Box3D = field(default_factory=lambda: Box3D(
        Position3D(-15.0, -0.5, 0.0), Position3D(-5.0, 6.0, 3.0)))
    tx_power_dbm: float = 10.0
    # Default noise gives ~20 dB post-processing SNR at the grid center
    # after pilot averaging (see README).
    noise_power_dbm: float = -34.0
    pilot_length: int = 64
    rng_seed: int = 0

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if self.n_paths_mu_ris < 1:
            raise ConfigError("n_paths_mu_ris must be >= 1")
        if self.n_paths_ris_ap < 1:
            raise ConfigError("n_paths_ris_ap must be >= 1")
        if self.pilot_length < 1:
            raise ConfigError("pilot_length must be >= 1")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def direction_angles(frm: Position3D, to: Position3D, array: UpaConfig) -> AnglePair:
    """Line-of-sight elevation/azimuth of the direction frm->to in array axes.

    elevation = arccos(k . axis_a), azimuth = arccos(k . axis_b / sin(el));
    when the direction is (anti)parallel to axis_a the azimuth is pi/2.
    """
    d = to.as_array() - frm.as_array()
    norm = float(np.linalg.norm(d))
    if norm < 1e-15:
        raise GeometryError("degenerate direction: coincident positions")
    k = d / norm
    cos_el = float(np.clip(k @ array.axis_a_vector(), -1.0, 1.0))
    elevation = math.acos(cos_el)
    sin_el = math.sin(elevation)
    if sin_el < _DEGENERATE_SIN:
        azimuth = math.pi / 2.0
    else:
        cos_az = float(np.clip((k @ array.axis_b_vector()) / sin_el, -1.0, 1.0))
        azimuth = math.acos(cos_az)
    return AnglePair(elevation, azimuth)


def free_space_gain(distance: float, wavelength: float) -> complex:
    """Complex free-space amplitude lambda/(4 pi d) with propagation phase."""
    amp = wavelength / (4.0 * math.pi * distance)
    phase = -2.0 * math.pi * distance / wavelength
    return amp * complex(math.cos(phase), math.sin(phase))


def synth_mu_ris_paths(scene: SceneConfig, mu: Position3D,
                       rng: np.random.Generator) -> list[MuRisPath]:
    """Synthesize the MU->RIS multipath set: one direct path plus single bounces.

    Scatterers are drawn uniformly in scene.scatter_bounds; bounce paths get
    the free-space gain over the total distance, scaled by a random
    reflection factor in [0.1, 0.5] with uniform phase. Deterministic given
    the generator state.
    """
    if not scene.scatter_bounds.contains(mu):
        raise GeometryError("MU position outside scene scatter bounds")
    ris_c = scene.ris.center
    d_direct = float(np.linalg.norm(mu.as_array() - ris_c.as_array()))
    paths = [MuRisPath(
        gain=free_space_gain(d_direct, scene.wavelength),
        arrival_at_ris=direction_angles(ris_c, mu, scene.ris),
    )]
    for _ in range(scene.n_paths_mu_ris - 1):
        sc = scene.scatter_bounds.sample(rng)
        refl = rng.uniform(0.1, 0.5)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        d_total = (float(np.linalg.norm(mu.as_array() - sc.as_array()))
                   + float(np.linalg.norm(sc.as_array() - ris_c.as_array())))
        gain = free_space_gain(d_total, scene.wavelength) * refl * complex(
            math.cos(phase), math.sin(phase))
        paths.append(MuRisPath(
            gain=gain, arrival_at_ris=direction_angles(ris_c, sc, scene.ris)))
    return paths


def synth_ris_ap_paths(scene: SceneConfig, rng: np.random.Generator) -> list[RisApPath]:
    """Synthesize the RIS->AP multipath set; same construction as the MU link."""
    ris_c, ap_c = scene.ris.center, scene.ap.center
    d_direct = float(np.linalg.norm(ap_c.as_array() - ris_c.as_array()))
    paths = [RisApPath(
        gain=free_space_gain(d_direct, scene.wavelength),
        departure_at_ris=direction_angles(ris_c, ap_c, scene.ris),
        arrival_at_ap=direction_angles(ap_c, ris_c, scene.ap),
    )]
    for _ in range(scene.n_paths_ris_ap - 1):
        sc = scene.scatter_bounds.sample(rng)
        refl = rng.uniform(0.1, 0.5)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        d_total = (float(np.linalg.norm(ris_c.as_array() - sc.as_array()))
                   + float(np.linalg.norm(sc.as_array() - ap_c.as_array())))
        gain = free_space_gain(d_total, scene.wavelength) * refl * complex(
            math.cos(phase), math.sin(phase))
        paths.append(RisApPath(
            gain=gain,
            departure_at_ris=direction_angles(ris_c, sc, scene.ris),
            arrival_at_ap=direction_angles(ap_c, sc, scene.ap)))
    return paths


def grid_positions(length_m: float, width_m: float, spacing_m: float,
                   heights_m, origin: Position3D) -> list[Position3D]:
    """Regular user grid: height outermost, then length index, then width index."""
    if spacing_m <= 0:
        raise ConfigError("grid spacing must be positive")
    if length_m < 0 or width_m < 0:
        raise ConfigError("grid extents must be non-negative")
    # +1e-9 guards against 9.6/0.2 landing just below an integer.
    ni = int(math.floor(length_m / spacing_m + 1e-9)) + 1
    nj = int(math.floor(width_m / spacing_m + 1e-9)) + 1
    out = []
    for h in heights_m:
        for i in range(ni):
            for j in range(nj):
                out.append(Position3D(origin.x + i * spacing_m,
                                      origin.y + j * spacing_m,
                                      origin.z + h))
    return out
