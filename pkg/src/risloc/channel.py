"""Narrowband cascaded channel: UPA responses, link channels, and the
space-time channel response vector (STCRV) used as the positioning
fingerprint.

All arrays are complex128; shapes follow h = H @ Psi @ g with
H: (M_ap, N_ris), Psi: (N_ris, N_ris), g: (N_ris,).
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geometry import AnglePair, MuRisPath, RisApPath, UpaConfig


class ChannelError(ValueError):
    """Dimension mismatch or empty path list."""


def upa_response(array: UpaConfig, angles: AnglePair, wavelength: float) -> np.ndarray:
    """Array response vector, Kronecker product of the two axis factors.

    Entry (n, m) sits at index n * count_b + m; the axis_a factor carries
    cos(elevation), the axis_b factor sin(elevation) * cos(azimuth).
    """
    if wavelength <= 0:
        raise ChannelError("wavelength must be positive")
    coef = -2j * math.pi * array.spacing / wavelength
    n = np.arange(array.count_a)
    m = np.arange(array.count_b)
    e = np.exp(coef * n * math.cos(angles.elevation))
    a = np.exp(coef * m * math.sin(angles.elevation) * math.cos(angles.azimuth))
    return np.kron(e, a)


def mu_ris_channel(paths: Sequence[MuRisPath], ris: UpaConfig,
                   wavelength: float) -> np.ndarray:
    """MU->RIS channel g: gain-weighted sum of arrival responses."""
    if len(paths) == 0:
        raise ChannelError("mu_ris_channel requires at least one path")
    g = np.zeros(ris.size, dtype=np.complex128)
    for p in paths:
        g += p.gain * upa_response(ris, p.arrival_at_ris, wavelength)
    return g


def ris_ap_channel(paths: Sequence[RisApPath], ris: UpaConfig, ap: UpaConfig,
                   wavelength: float) -> np.ndarray:
    """RIS->AP channel H = sum_j beta_j a_ap a_ris^H, shape (M_ap, N_ris)."""
    if len(paths) == 0:
        raise ChannelError("ris_ap_channel requires at least one path")
    H = np.zeros((ap.size, ris.size), dtype=np.complex128)
    for p in paths:
        a_ap = upa_response(ap, p.arrival_at_ap, wavelength)
        a_ris = upa_response(ris, p.departure_at_ris, wavelength)
        H += p.gain * np.outer(a_ap, np.conj(a_ris))
    return H


def stcrv(H: np.ndarray, psi: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Fingerprint h = H @ psi @ g."""
    if H.ndim != 2 or psi.ndim != 2 or g.ndim != 1:
        raise ChannelError("stcrv expects H (2d), psi (2d), g (1d)")
    if H.shape[1] != psi.shape[0]:
        raise ChannelError(
            f"H columns ({H.shape[1]}) do not match psi rows ({psi.shape[0]})")
    if psi.shape[1] != g.shape[0]:
        raise ChannelError(
            f"psi columns ({psi.shape[1]}) do not match g length ({g.shape[0]})")
    return H @ (psi @ g)


def received_signal(h: np.ndarray, tx_power_w: float, pilot: complex,
                    noise_power_w: float, rng: np.random.Generator) -> np.ndarray:
    """One pilot slot: y = sqrt(p) * s * h + n, n ~ CN(0, noise_power I)."""
    if tx_power_w < 0 or noise_power_w < 0:
        raise ChannelError("powers must be non-negative")
    if abs(abs(pilot) - 1.0) > 1e-9:
        raise ChannelError("pilot must have unit modulus")
    m = h.shape[0]
    # Per-entry complex variance noise_power_w: each component gets half.
    sigma = math.sqrt(noise_power_w / 2.0)
    noise = sigma * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return math.sqrt(tx_power_w) * pilot * h + noise


def estimate_stcrv(observations: Sequence[np.ndarray], pilots: Sequence[complex],
                   tx_power_w: float) -> np.ndarray:
    """Pilot-matched average: h_hat = (1 / (tau sqrt(p))) sum_t y_t conj(s_t).

    Residual noise variance per entry is noise_power / (tau * p).
    """
    if len(observations) == 0 or len(pilots) == 0:
        raise ChannelError("estimate_stcrv requires at least one observation")
    if len(observations) != len(pilots):
        raise ChannelError("observations and pilots must have equal length")
    tau = len(observations)
    acc = np.zeros_like(observations[0], dtype=np.complex128)
    for y, s in zip(observations, pilots):
        acc += y * np.conj(s)
    return acc / (tau * math.sqrt(tx_power_w))
