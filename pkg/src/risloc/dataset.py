"""Fingerprint dataset: STCRV -> real/imag channel-response matrices, labeled
samples over the user grid, normalization, split, and binary serialization.

Directory layout:
    manifest    -- key = value text, format_version 1
    inputs.bin  -- little-endian float32, shape [N, 2, M_x, M_z], row-major
    labels.bin  -- little-endian float32, shape [N, 3]
Samples are stored train split first, then test split.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from .config import GridSpec, format_kv_lines, parse_kv_lines, scene_from_items, scene_to_items
from .geometry import (Position3D, SceneConfig, dbm_to_watts, grid_positions,
                       synth_mu_ris_paths, synth_ris_ap_paths)

FORMAT_VERSION = "1"


class DatasetError(ValueError):
    pass


class ManifestMissingError(DatasetError):
    pass


class ManifestFormatError(DatasetError):
    pass


class VersionMismatchError(DatasetError):
    pass


class SampleCountMismatchError(DatasetError):
    pass


@dataclass(frozen=True)
class Sample:
    """One fingerprint: [2, M_x, M_z] float32 input and normalized 3D label."""

    input: np.ndarray
    label: np.ndarray

    def __post_init__(self):
        if self.input.ndim != 3 or self.input.shape[0] != 2:
            raise DatasetError(f"sample input must be [2, M_x, M_z], got {self.input.shape}")
        if self.label.shape != (3,):
            raise DatasetError("sample label must have 3 coordinates")


@dataclass
class Dataset:
    """Batched sample storage: inputs [N, 2, M_x, M_z], labels [N, 3]."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise DatasetError("inputs and labels disagree on sample count")

    def __len__(self):
        return self.inputs.shape[0]

    def subset(self, indices) -> "Dataset":
        return Dataset(self.inputs[indices], self.labels[indices])


@dataclass
class DatasetManifest:
    """Everything needed to interpret the binary files and undo normalization."""

    sample_count: int
    train_count: int
    input_shape: tuple       # (2, M_x, M_z)
    label_dim: int
    scene: SceneConfig
    channel_mean: np.ndarray      # per input channel, float64
    channel_std: np.ndarray
    label_center: np.ndarray      # per coordinate, float64
    label_half_range: np.ndarray
    split_seed: int
    split_fraction: float
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        if np.any(self.channel_std <= 0) or not np.all(np.isfinite(self.channel_std)):
            raise DatasetError("channel std must be finite and positive")
        if not np.all(np.isfinite(self.channel_mean)):
            raise DatasetError("channel mean must be finite")

    def normalize_label(self, position: np.ndarray) -> np.ndarray:
        return (position - self.label_center) / self.label_half_range

    def denormalize_label(self, label: np.ndarray) -> np.ndarray:
        return label * self.label_half_range + self.label_center


def decompose_complex(h: np.ndarray):
    """Split a complex vector into (real, imag); recomposition is exact."""
    return h.real.copy(), h.imag.copy()


def reshape_to_stcrm(v: np.ndarray, m_x: int, m_z: int) -> np.ndarray:
    """Row-major reshape of a length M_x*M_z vector into an M_x x M_z matrix."""
    if v.shape != (m_x * m_z,):
        raise DatasetError(f"vector length {v.shape} does not match {m_x}x{m_z}")
    return v.reshape(m_x, m_z)


def assemble_sample(h_est: np.ndarray, position: Position3D,
                    manifest: DatasetManifest) -> Sample:
    """Stack the real/imag response matrices, standardize, normalize the label."""
    _, m_x, m_z = manifest.input_shape
    re, im = decompose_complex(h_est)
    stack = np.stack([reshape_to_stcrm(re, m_x, m_z),
                      reshape_to_stcrm(im, m_x, m_z)])
    normed = (stack - manifest.channel_mean[:, None, None]) / manifest.channel_std[:, None, None]
    label = manifest.normalize_label(position.as_array())
    return Sample(normed.astype(np.float32), label.astype(np.float32))


def _fingerprint(scene: SceneConfig, H: np.ndarray, psi: np.ndarray,
                 mu: Position3D, rng: np.random.Generator) -> np.ndarray:
    """Simulate the receiver for one user: paths, pilots, noisy estimate."""
    g = ch.mu_ris_channel(synth_mu_ris_paths(scene, mu, rng), scene.ris,
                          scene.wavelength)
    h = ch.stcrv(H, psi, g)
    p_w = dbm_to_watts(scene.tx_power_dbm)
    n_w = dbm_to_watts(scene.noise_power_dbm)
    pilots = [1.0 + 0.0j] * scene.pilot_length
    obs = [ch.received_signal(h, p_w, s, n_w, rng) for s in pilots]
    return ch.estimate_stcrv(obs, pilots, p_w)


def build_dataset(scene: SceneConfig, grid: GridSpec, split_fraction: float,
                  seed: int):
    """Synthesize the full labeled grid and split it.

    Returns (train, test, manifest). Normalization constants come from the
    train split only. Per-sample RNG streams are derived from
    (scene.rng_seed, sample index), so generation is order-independent.
    """
    if not (0.0 < split_fraction < 1.0):
        raise DatasetError("split_fraction must lie in (0, 1)")
    positions = grid_positions(grid.length, grid.width, grid.spacing,
                               grid.heights, grid.origin)
    n = len(positions)
    if n == 0:
        raise DatasetError("empty user grid")

    ris_ap_rng = np.random.default_rng([scene.rng_seed, 0])
    H = ch.ris_ap_channel(synth_ris_ap_paths(scene, ris_ap_rng), scene.ris,
                          scene.ap, scene.wavelength)
    psi = np.eye(scene.ris.size, dtype=np.complex128)

    m_x, m_z = scene.ap.count_a, scene.ap.count_b
    raw = np.empty((n, 2, m_x, m_z), dtype=np.float64)
    labels = np.empty((n, 3), dtype=np.float64)
    for i, mu in enumerate(positions):
        rng = np.random.default_rng([scene.rng_seed, 1 + i])
        h_est = _fingerprint(scene, H, psi, mu, rng)
        re, im = decompose_complex(h_est)
        raw[i, 0] = reshape_to_stcrm(re, m_x, m_z)
        raw[i, 1] = reshape_to_stcrm(im, m_x, m_z)
        labels[i] = mu.as_array()

    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(n * split_fraction))
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    lo, hi = labels.min(axis=0), labels.max(axis=0)
    half = (hi - lo) / 2.0
    half[half == 0.0] = 1.0  # degenerate axis: keep the map invertible
    manifest = DatasetManifest(
        sample_count=n,
        train_count=n_train,
        input_shape=(2, m_x, m_z),
        label_dim=3,
        scene=scene,
        channel_mean=raw[train_idx].mean(axis=(0, 2, 3)),
        channel_std=raw[train_idx].std(axis=(0, 2, 3)),
        label_center=(hi + lo) / 2.0,
        label_half_range=half,
        split_seed=seed,
        split_fraction=split_fraction,
    )

    normed = ((raw - manifest.channel_mean[None, :, None, None])
              / manifest.channel_std[None, :, None, None]).astype(np.float32)
    norm_labels = manifest.normalize_label(labels).astype(np.float32)
    full = Dataset(normed, norm_labels)
    return full.subset(train_idx), full.subset(test_idx), manifest


def _floats_str(arr) -> str:
    return ", ".join(repr(float(v)) for v in arr)


def _parse_floats(value: str) -> np.ndarray:
    return np.array([float(v.strip()) for v in value.split(",")], dtype=np.float64)


def serialize(train: Dataset, test: Dataset, manifest: DatasetManifest,
              directory) -> None:
    """Write manifest + binary inputs/labels (train rows first, then test)."""
    os.makedirs(directory, exist_ok=True)
    if len(train) != manifest.train_count:
        raise SampleCountMismatchError("train split size disagrees with manifest")
    if len(train) + len(test) != manifest.sample_count:
        raise SampleCountMismatchError("total sample count disagrees with manifest")
    items = {
        "format_version": manifest.format_version,
        "sample_count": str(manifest.sample_count),
        "train_count": str(manifest.train_count),
        "input_shape": ", ".join(str(d) for d in manifest.input_shape),
        "label_dim": str(manifest.label_dim),
        "split_seed": str(manifest.split_seed),
        "split_fraction": repr(manifest.split_fraction),
        "channel_mean": _floats_str(manifest.channel_mean),
        "channel_std": _floats_str(manifest.channel_std),
        "label_center": _floats_str(manifest.label_center),
        "label_half_range": _floats_str(manifest.label_half_range),
    }
    items.update(scene_to_items(manifest.scene))
    with open(os.path.join(directory, "manifest"), "w", encoding="utf-8") as f:
        f.write(format_kv_lines(items))
    inputs = np.concatenate([train.inputs, test.inputs], axis=0)
    labels = np.concatenate([train.labels, test.labels], axis=0)
    inputs.astype("<f4").tofile(os.path.join(directory, "inputs.bin"))
    labels.astype("<f4").tofile(os.path.join(directory, "labels.bin"))


def read_manifest(directory) -> DatasetManifest:
    path = os.path.join(directory, "manifest")
    if not os.path.exists(path):
        raise ManifestMissingError(f"manifest missing in {directory}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            items = parse_kv_lines(f.read(), source=path)
        except ValueError as e:
            raise ManifestFormatError(str(e)) from e
    try:
        version = items.pop("format_version")
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"manifest format version {version!r}, expected {FORMAT_VERSION!r}")
        scene = scene_from_items(items)
        manifest = DatasetManifest(
            sample_count=int(items.pop("sample_count")),
            train_count=int(items.pop("train_count")),
            input_shape=tuple(int(v) for v in items.pop("input_shape").split(",")),
            label_dim=int(items.pop("label_dim")),
            scene=scene,
            channel_mean=_parse_floats(items.pop("channel_mean")),
            channel_std=_parse_floats(items.pop("channel_std")),
            label_center=_parse_floats(items.pop("label_center")),
            label_half_range=_parse_floats(items.pop("label_half_range")),
            split_seed=int(items.pop("split_seed")),
            split_fraction=float(items.pop("split_fraction")),
            format_version=version,
        )
    except VersionMismatchError:
        raise
    except (KeyError, ValueError) as e:
        raise ManifestFormatError(f"malformed manifest: {e}") from e
    if items:
        raise ManifestFormatError(f"unknown manifest keys: {', '.join(sorted(items))}")
    return manifest


def deserialize(directory):
    """Read a dataset directory; returns (train, test, manifest)."""
    manifest = read_manifest(directory)
    n = manifest.sample_count
    in_elems = n * int(np.prod(manifest.input_shape))
    lab_elems = n * manifest.label_dim
    inputs_path = os.path.join(directory, "inputs.bin")
    labels_path = os.path.join(directory, "labels.bin")
    for path, expect in ((inputs_path, in_elems), (labels_path, lab_elems)):
        if not os.path.exists(path):
            raise DatasetError(f"missing dataset file {path}")
        if os.path.getsize(path) != 4 * expect:
            raise SampleCountMismatchError(
                f"{path}: {os.path.getsize(path)} bytes, expected {4 * expect}")
    inputs = np.fromfile(inputs_path, dtype="<f4").reshape((n,) + manifest.input_shape)
    labels = np.fromfile(labels_path, dtype="<f4").reshape(n, manifest.label_dim)
    full = Dataset(inputs, labels)
    k = manifest.train_count
    return full.subset(slice(0, k)), full.subset(slice(k, n)), manifest
