"""Ground-node mobility (first-order AR, constant velocity) and Kalman prediction.

State layout is ``[x, y, vx, vy]``; measurements are noisy ``[x, y]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEASUREMENT = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class NodeState:
    x: float
    y: float
    vx: float
    vy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy], dtype=float)

    @classmethod
    def from_array(cls, s) -> "NodeState":
        return cls(float(s[0]), float(s[1]), float(s[2]), float(s[3]))

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


@dataclass(frozen=True)
class NoiseParams:
    sigma_w_sq: float
    sigma_u_sq: float
    dt: float = 1.0

    def __post_init__(self):
        if self.sigma_w_sq < 0 or self.sigma_u_sq < 0:
            raise ValueError("noise variances must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def transition(self) -> np.ndarray:
        t = np.eye(4)
        t[0, 2] = t[1, 3] = self.dt
        return t


@dataclass(frozen=True)
class KalmanEstimate:
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def position(self) -> tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])

    @classmethod
    def initial(cls, state: NodeState, velocity_var: float = 1.0) -> "KalmanEstimate":
        """Exact starting position, uncertain velocity."""
        return cls(state.as_array(), np.diag([0.0, 0.0, velocity_var, velocity_var]))


def mobility_step(state: NodeState, noise: NoiseParams, rng: np.random.Generator) -> NodeState:
    s = noise.transition @ state.as_array()
    if noise.sigma_w_sq:
        s = s + np.sqrt(noise.sigma_w_sq) * rng.standard_normal(4)
    return NodeState.from_array(s)


def measure(state: NodeState, noise: NoiseParams, rng: np.random.Generator) -> np.ndarray:
    z = MEASUREMENT @ state.as_array()
    if noise.sigma_u_sq:
        z = z + np.sqrt(noise.sigma_u_sq) * rng.standard_normal(2)
    return z


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def kf_predict(est: KalmanEstimate, noise: NoiseParams) -> KalmanEstimate:
    t = noise.transition
    cov = t @ est.covariance @ t.T + noise.sigma_w_sq * np.eye(4)
    return KalmanEstimate(t @ est.mean, _symmetrize(cov))


def kf_update(est: KalmanEstimate, z, noise: NoiseParams, allow_singular: bool = False) -> KalmanEstimate:
    """Measurement update. A singular innovation covariance raises unless
    ``allow_singular``, in which case the pseudo-inverse gain is used (the
    conditional mean of a degenerate Gaussian, e.g. noiseless reports)."""
    f = MEASUREMENT
    p = est.covariance
    innov_cov = f @ p @ f.T + noise.sigma_u_sq * np.eye(2)
    try:
        gain = np.linalg.solve(innov_cov, f @ p).T
    except np.linalg.LinAlgError:
        if not allow_singular:
            raise np.linalg.LinAlgError(
                "singular innovation covariance (sigma_u_sq = 0 with zero position variance)"
            ) from None
        gain = p @ f.T @ np.linalg.pinv(innov_cov)
    mean = est.mean + gain @ (np.asarray(z, dtype=float) - f @ est.mean)
    cov = (np.eye(4) - gain @ f) @ p
    return KalmanEstimate(mean, _symmetrize(cov))
