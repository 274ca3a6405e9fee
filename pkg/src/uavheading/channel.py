"""Correlated Rician ground-to-air channel for a half-wavelength ULA.

Channel vectors are plain complex ``numpy`` arrays of length M; correlation
matrices are complex (M, M) arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import LosGeometry


@dataclass(frozen=True)
class RicianParams:
    k_factor: float
    m_antennas: int
    sigma_r_sq: float = 0.05
    path_loss_exp: float = 1.0

    def __post_init__(self):
        if not self.k_factor >= 0:
            raise ValueError("k_factor must be >= 0")
        if int(self.m_antennas) != self.m_antennas or self.m_antennas < 1:
            raise ValueError("m_antennas must be a positive integer")
        if not self.sigma_r_sq >= 0:
            raise ValueError("sigma_r_sq must be >= 0")
        if not self.path_loss_exp > 0:
            raise ValueError("path_loss_exp must be > 0")

    @property
    def los_power(self) -> float:
        """K/(1+K); equals 1 for an infinite K-factor."""
        if math.isinf(self.k_factor):
            return 1.0
        return self.k_factor / (1.0 + self.k_factor)

    @property
    def scatter_power(self) -> float:
        """1/(1+K); equals 0 for an infinite K-factor."""
        return 1.0 - self.los_power


def steering_vector(phase, m: int) -> np.ndarray:
    """Unit-modulus ULA response ``exp(1j * k * phase)``, k = 0..m-1.

    ``phase`` may be an array; the antenna axis is appended last.
    """
    k = np.arange(m)
    return np.exp(1j * np.multiply.outer(np.asarray(phase, dtype=float), k))


def los_vector(geom: LosGeometry, params: RicianParams) -> np.ndarray:
    return math.sqrt(params.los_power) * steering_vector(geom.phase_delay, params.m_antennas)


def spread_kernel(cos_el, sin_az, m: int, sigma_r_sq: float) -> np.ndarray:
    """Angle-spread taper B(theta, sigma_r) with shape ``(..., m, m)``."""
    cos_el = np.asarray(cos_el, dtype=float)[..., None, None]
    cos_az_sq = 1.0 - np.asarray(sin_az, dtype=float)[..., None, None] ** 2
    lag = np.pi * np.subtract.outer(np.arange(m), np.arange(m))
    lag_sq = lag * lag
    cos_el_sq = cos_el * cos_el
    one_plus_cos2phi = 2.0 * cos_el_sq
    sin2phi_sq = 4.0 * cos_el_sq * (1.0 - cos_el_sq)
    inner = one_plus_cos2phi - 0.5 * sigma_r_sq**2 * sin2phi_sq * lag_sq * cos_az_sq
    return np.exp(-0.25 * lag_sq * sigma_r_sq * cos_az_sq * inner)


def correlation_arrays(phase, cos_el, sin_az, m: int, sigma_r_sq: float) -> np.ndarray:
    """Unclamped receive correlation ``a a^H * B`` for broadcast geometries.

    The (1 + 1/K) prefactor cancels the K/(1+K) LOS amplitude, so only the
    unit-modulus steering vector ``a`` appears.
    """
    a = steering_vector(phase, m)
    outer = a[..., :, None] * a[..., None, :].conj()
    return outer * spread_kernel(cos_el, sin_az, m, sigma_r_sq)


def clamp_psd(mat: np.ndarray) -> np.ndarray:
    """Nearest-PSD repair of the Hermitian part of ``mat`` (batched).

    Negative eigenvalues are set to zero and the rest rescaled so the trace
    is unchanged.
    """
    herm = 0.5 * (mat + np.swapaxes(mat, -1, -2).conj())
    w, v = np.linalg.eigh(herm)
    if np.all(w >= 0):
        return herm
    clipped = np.clip(w, 0.0, None)
    total = clipped.sum(axis=-1, keepdims=True)
    scale = np.divide(w.sum(axis=-1, keepdims=True), total, out=np.ones_like(total), where=total > 0)
    clipped = clipped * scale
    out = (v * clipped[..., None, :]) @ np.swapaxes(v, -1, -2).conj()
    # leave already-PSD matrices in the batch untouched
    ok = np.all(w >= 0, axis=-1)[..., None, None]
    return np.where(ok, herm, out)


def correlation_matrix(geom: LosGeometry, params: RicianParams) -> np.ndarray:
    if params.k_factor == 0:
        raise ValueError("correlation model is undefined for K = 0 (pure Rayleigh)")
    r = correlation_arrays(
        geom.phase_delay, geom.cos_elevation, geom.sin_azimuth,
        params.m_antennas, params.sigma_r_sq,
    )
    return clamp_psd(r)


def sqrt_psd(mat: np.ndarray) -> np.ndarray:
    """Hermitian square root via eigendecomposition, clamping eigenvalues at 0."""
    herm = 0.5 * (mat + np.swapaxes(mat, -1, -2).conj())
    w, v = np.linalg.eigh(herm)
    s = np.sqrt(np.clip(w, 0.0, None))
    return (v * s[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts each have variance 1/2."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def sample_channel(geom: LosGeometry, params: RicianParams, rng: np.random.Generator,
                   size=None) -> np.ndarray:
    """Draw normalized channel(s) h' = h_los + sqrt(1/(1+K)) R^(1/2) g.

    With ``size`` given, returns an array of shape ``(size, M)``.
    """
    hbar = los_vector(geom, params)
    if params.scatter_power == 0.0:
        return hbar if size is None else np.broadcast_to(hbar, (size, hbar.size)).copy()
    root = sqrt_psd(correlation_matrix(geom, params))
    shape = (params.m_antennas,) if size is None else (size, params.m_antennas)
    g = complex_normal(rng, shape)
    return hbar + math.sqrt(params.scatter_power) * (g @ root.T)


def apply_pathloss(h_prime: np.ndarray, d: float, params: RicianParams) -> np.ndarray:
    if not d > 0:
        raise ValueError("distance must be positive")
    return h_prime / d**params.path_loss_exp


def dirichlet_abs(delta, m: int):
    """|sin(m*delta/2) / sin(delta/2)|, with the limit m at delta in 2*pi*Z.

    Equals ``|a(p1)^H a(p2)|`` for unit-modulus steering vectors whose phase
    delays differ by ``delta``.
    """
    delta = np.asarray(delta, dtype=float)
    # reduce to (-pi, pi]; |ratio| is 2*pi periodic
    red = np.mod(delta + np.pi, 2 * np.pi) - np.pi
    half = np.sin(0.5 * red)
    small = np.abs(half) < 1e-8
    safe = np.where(small, 1.0, half)
    direct = np.abs(np.sin(0.5 * m * red) / safe)
    series = m * np.abs(1.0 - (m * m - 1) * red * red / 24.0)
    out = np.where(small, series, direct)
    if out.ndim == 0:
        return float(out)
    return out


def los_correlation(geom_i: LosGeometry, geom_j: LosGeometry, m: int) -> float:
    if m < 1:
        raise ValueError("m must be >= 1")
    return dirichlet_abs(geom_i.phase_delay - geom_j.phase_delay, m)
