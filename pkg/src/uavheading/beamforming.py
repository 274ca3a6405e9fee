"""Max-SINR receive beamforming, the Jensen SINR bound and ergodic rates.

Noise power is normalized to one throughout: a :class:`LinkBudget` carries
only the ratio P_t / sigma^2, so ``Q_i = rho * sum_{j != i} h_j h_j^H + I``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import kernels
from .channel import (
    RicianParams,
    clamp_psd,
    complex_normal,
    correlation_arrays,
    correlation_matrix,
    los_vector,
    sqrt_psd,
    steering_vector,
)
from .geometry import LosGeometry

MC_BLOCK = 256
MAX_CONDITION = 1e13


class IllConditionedError(np.linalg.LinAlgError):
    def __init__(self, condition: float):
        super().__init__(f"interference-plus-noise matrix is ill-conditioned (cond ~ {condition:.3g})")
        self.condition = condition


@dataclass(frozen=True)
class LinkBudget:
    pt_over_sigma2: float
    n_users: int

    def __post_init__(self):
        if not self.pt_over_sigma2 > 0:
            raise ValueError("pt_over_sigma2 must be positive")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")

    @classmethod
    def from_db(cls, snr_db: float, n_users: int) -> "LinkBudget":
        return cls(10.0 ** (snr_db / 10.0), n_users)


def _check_user(i: int, n: int):
    if not 0 <= i < n:
        raise IndexError(f"user index {i} out of range for {n} users")


def interference_matrix(channels: Sequence[np.ndarray], i: int, budget: LinkBudget) -> np.ndarray:
    h = np.asarray(channels, dtype=complex)
    _check_user(i, len(h))
    others = np.delete(h, i, axis=0)
    q = budget.pt_over_sigma2 * (others.T @ others.conj()) + np.eye(h.shape[1])
    return q


def _cho(q: np.ndarray):
    try:
        factor = scipy.linalg.cho_factor(q, lower=True)
    except np.linalg.LinAlgError:
        raise IllConditionedError(np.linalg.cond(q)) from None
    diag = np.abs(np.diag(factor[0])) ** 2
    if diag.max() / diag.min() > MAX_CONDITION:
        raise IllConditionedError(np.linalg.cond(q))
    return factor


def max_sinr_weights(channels: Sequence[np.ndarray], i: int, budget: LinkBudget) -> np.ndarray:
    """Beamformer w = Q_i^{-1} h_i."""
    h = np.asarray(channels, dtype=complex)
    q = interference_matrix(h, i, budget)
    return scipy.linalg.cho_solve(_cho(q), h[i])


def output_sinr(w: np.ndarray, channels: Sequence[np.ndarray], i: int, budget: LinkBudget) -> float:
    """SINR at the output of an arbitrary beamformer ``w`` for user ``i``."""
    h = np.asarray(channels, dtype=complex)
    rho = budget.pt_over_sigma2
    signal = rho * abs(np.vdot(w, h[i])) ** 2
    interf = sum(rho * abs(np.vdot(w, h[j])) ** 2 for j in range(len(h)) if j != i)
    return signal / (interf + np.vdot(w, w).real)


def sinr(channels: Sequence[np.ndarray], i: int, budget: LinkBudget) -> float:
    h = np.asarray(channels, dtype=complex)
    w = max_sinr_weights(h, i, budget)
    return budget.pt_over_sigma2 * np.vdot(h[i], w).real


def expected_interference_matrix(geoms: Sequence[LosGeometry], i: int, params: RicianParams,
                                 budget: LinkBudget) -> np.ndarray:
    _check_user(i, len(geoms))
    m = params.m_antennas
    eq = np.eye(m, dtype=complex)
    for j, g in enumerate(geoms):
        if j == i:
            continue
        a = steering_vector(g.phase_delay, m)
        cov = params.los_power * np.outer(a, a.conj())
        if params.scatter_power:
            cov = cov + params.scatter_power * correlation_matrix(g, params)
        eq += budget.pt_over_sigma2 / g.distance ** (2 * params.path_loss_exp) * cov
    return eq


def expected_sinr_lower_bound(geoms: Sequence[LosGeometry], i: int, params: RicianParams,
                              budget: LinkBudget) -> float:
    """Jensen bound E{SINR_i} >= gain_i (K/(K+1) a^H E{Q}^-1 a + 1/(K+1) tr(R E{Q}^-1)).

    ``a`` is the unit-modulus steering vector; the K/(K+1) factor carries the
    LOS amplitude.
    """
    eq = expected_interference_matrix(geoms, i, params, budget)
    g = geoms[i]
    a = steering_vector(g.phase_delay, params.m_antennas)
    factor = _cho(eq)
    value = params.los_power * np.vdot(a, scipy.linalg.cho_solve(factor, a)).real
    if params.scatter_power:
        r = correlation_matrix(g, params)
        value += params.scatter_power * np.trace(scipy.linalg.cho_solve(factor, r)).real
    return budget.pt_over_sigma2 / g.distance ** (2 * params.path_loss_exp) * value


def bound_arrays(dist, phase, cos_el, sin_az, params: RicianParams, budget: LinkBudget) -> np.ndarray:
    """Jensen bounds for a batch of scenarios.

    Inputs have shape (G, N) (one row per candidate UAV pose); returns (G, N).
    """
    if params.k_factor == 0:
        raise ValueError("bound requires K > 0")
    m = params.m_antennas
    a = steering_vector(phase, m)
    if params.scatter_power:
        r = clamp_psd(correlation_arrays(phase, cos_el, sin_az, m, params.sigma_r_sq))
    else:
        r = np.zeros(a.shape + (m,), dtype=complex)
    gain = budget.pt_over_sigma2 / np.asarray(dist, dtype=float) ** (2 * params.path_loss_exp)
    out = kernels.jensen_bound_batch(a, r, gain, params.los_power, params.scatter_power)
    if np.isnan(out).any():
        raise IllConditionedError(float("inf"))
    return out


def tdma_expected_snr(d: float, params: RicianParams, budget: LinkBudget) -> float:
    if not d > 0:
        raise ValueError("distance must be positive")
    return budget.pt_over_sigma2 * params.m_antennas / d ** (2 * params.path_loss_exp)


# --- Monte Carlo -----------------------------------------------------------


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("UAVSIM_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


@dataclass(frozen=True)
class RateSamples:
    """Per-realization SINR (max-SINR beamformer) and MRC SNR, shape (S, N)."""

    sinr: np.ndarray
    snr: np.ndarray


def rate_samples(geoms: Sequence[LosGeometry], params: RicianParams, budget: LinkBudget,
                 n_samples: int, rng: np.random.Generator, workers: int | None = None) -> RateSamples:
    """Draw ``n_samples`` independent channel sets and evaluate every user.

    One 63-bit key is taken from ``rng``; realizations are generated in fixed
    blocks of ``MC_BLOCK`` whose streams derive from (key, block index), so
    results do not depend on the number of worker threads.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n, m = len(geoms), params.m_antennas
    key = int(rng.integers(0, 2**63))
    hbar = np.stack([los_vector(g, params) for g in geoms])
    scale = np.array([g.distance ** -params.path_loss_exp for g in geoms])
    if params.scatter_power:
        root = np.stack([sqrt_psd(correlation_matrix(g, params)) for g in geoms])
        root *= math.sqrt(params.scatter_power)
    else:
        root = None
    rho = budget.pt_over_sigma2

    def block(b):
        size = min(MC_BLOCK, n_samples - b * MC_BLOCK)
        if root is None:
            h = np.broadcast_to(hbar, (size, n, m))
        else:
            stream = np.random.Generator(np.random.Philox(np.random.SeedSequence([key, b])))
            g = complex_normal(stream, (size, n, m))
            h = hbar + np.einsum("nmk,snk->snm", root, g)
        h = h * scale[:, None]
        snr = rho * np.einsum("snm,snm->sn", h.conj(), h).real
        return kernels.sinr_batch(h, rho), snr

    n_blocks = -(-n_samples // MC_BLOCK)
    nw = min(worker_count(workers), n_blocks)
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    s = np.concatenate([p[0] for p in parts])
    if np.isnan(s).any():
        raise IllConditionedError(float("inf"))
    return RateSamples(s, np.concatenate([p[1] for p in parts]))


@dataclass(frozen=True)
class ErgodicRates:
    rates: np.ndarray
    stderr: np.ndarray
    sum_rate: float
    sum_stderr: float


def summarize_rates(per_sample: np.ndarray) -> ErgodicRates:
    """Mean and standard error of a (S, N) array of per-realization rates."""
    s = per_sample.shape[0]
    total = per_sample.sum(axis=1)
    if s > 1:
        se = per_sample.std(axis=0, ddof=1) / math.sqrt(s)
        sum_se = float(total.std(ddof=1) / math.sqrt(s))
    else:
        se = np.zeros(per_sample.shape[1])
        sum_se = 0.0
    return ErgodicRates(per_sample.mean(axis=0), se, float(total.mean()), sum_se)


RATE_MODES = ("sdma", "tdma", "interference_free")


def rates_from_samples(samples: RateSamples, mode: str = "sdma") -> ErgodicRates:
    n = samples.sinr.shape[1]
    if mode == "sdma":
        return summarize_rates(np.log2(1.0 + samples.sinr))
    if mode == "tdma":
        return summarize_rates(np.log2(1.0 + samples.snr) / n)
    if mode == "interference_free":
        return summarize_rates(np.log2(1.0 + samples.snr))
    raise ValueError(f"unknown rate mode {mode!r}; expected one of {RATE_MODES}")


def ergodic_rates(geoms: Sequence[LosGeometry], params: RicianParams, budget: LinkBudget,
                  n_samples: int, rng: np.random.Generator, workers: int | None = None,
                  mode: str = "sdma") -> ErgodicRates:
    """Monte Carlo estimate of E{log2(1 + SINR_i)} per user, with standard errors.

    ``mode='tdma'`` reports (1/N) E{log2(1 + SNR_i)} with MRC and one slot per
    user; ``mode='interference_free'`` reports E{log2(1 + SNR_i)}.
    """
    return rates_from_samples(rate_samples(geoms, params, budget, n_samples, rng, workers), mode)
