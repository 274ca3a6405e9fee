"""Closed-loop simulation: node mobility, tracking, heading control and rates.

Per step n the controller decides a heading from Kalman predictions made at
n-1, the UAV flies it, the nodes move, the ergodic rates are evaluated at the
true node positions, and the new position reports update the filters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .beamforming import LinkBudget, rate_samples, rates_from_samples
from .channel import RicianParams
from .geometry import GroundPosition, UavPose, circular_distance, los_geometry
from .heading import (
    GRID_POINTS,
    PF_WEIGHT_MODES,
    STRATEGIES,
    FairnessState,
    HeadingConstraint,
    HeadingDecision,
    decide_heading,
    predict_positions,
    update_fairness,
)
from .tracking import KalmanEstimate, NodeState, NoiseParams, kf_predict, kf_update, measure, mobility_step


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    """Initial state of one ground node plus optional turn-event overrides."""

    x: float
    y: float
    vx: float = 10.0
    vy: float = 0.0
    turn_ratio: float | None = None
    turn_x_sign: float | None = None

    @property
    def state(self) -> NodeState:
        return NodeState(self.x, self.y, self.vx, self.vy)


DEFAULT_NODES = (NodeSpec(0, 25), NodeSpec(240, 20), NodeSpec(610, 30), NodeSpec(1240, 20))


@dataclass(frozen=True)
class SimConfig:
    m_antennas: int = 4
    n_users: int = 4
    k_factor: float = 10.0
    snr_db: float = 45.0
    path_loss_exp: float = 1.0
    sigma_r_sq: float = 0.05
    h_uav: float = 350.0
    v_uav: float = 50.0
    dt: float = 1.0
    delta_max: float = math.pi / 6
    l_steps: int = 300
    sigma_w_sq: float = 0.5
    sigma_u_sq: float = 0.1
    n_w: int = 4
    d_max: float = 300.0
    mc_samples: int = 1000
    strategy: str = "sdma_max"
    pf_weight_mode: str = "inverse"
    seed: int = 2013
    initial_nodes: tuple = DEFAULT_NODES
    uav_x: float = 50.0
    uav_y: float = 100.0
    uav_heading: float = 0.0
    turn_step: int = 150
    turn_ratio: float = -1.8856
    turn_x_sign: float = 1.0
    velocity_var: float = 1.0
    grid_points: int = GRID_POINTS
    workers: int | None = None

    def validate(self) -> "SimConfig":
        problems = []
        if self.strategy not in STRATEGIES:
            problems.append(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.pf_weight_mode not in PF_WEIGHT_MODES:
            problems.append(f"pf_weight_mode must be one of {PF_WEIGHT_MODES}")
        if self.n_users < 1 or self.n_users > self.m_antennas:
            problems.append("need 1 <= n_users <= m_antennas")
        if len(self.initial_nodes) != self.n_users:
            problems.append(f"{len(self.initial_nodes)} initial nodes given for n_users={self.n_users}")
        if self.l_steps < 1:
            problems.append("l_steps must be >= 1")
        if self.mc_samples < 1:
            problems.append("mc_samples must be >= 1")
        for name in ("sigma_w_sq", "sigma_u_sq", "sigma_r_sq", "velocity_var", "k_factor"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.k_factor == 0:
            problems.append("k_factor must be > 0")
        if not (self.h_uav > 0 and self.dt > 0 and self.v_uav >= 0):
            problems.append("need h_uav > 0, dt > 0, v_uav >= 0")
        if not 0 < self.delta_max <= math.pi:
            problems.append("delta_max must lie in (0, pi]")
        if not self.d_max > 0:
            problems.append("d_max must be > 0")
        if self.n_w < 1:
            problems.append("n_w must be >= 1")
        if self.grid_points < 8:
            problems.append("grid_points must be >= 8")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    @property
    def params(self) -> RicianParams:
        return RicianParams(self.k_factor, self.m_antennas, self.sigma_r_sq, self.path_loss_exp)

    @property
    def budget(self) -> LinkBudget:
        return LinkBudget.from_db(self.snr_db, self.n_users)

    @property
    def constraint(self) -> HeadingConstraint:
        return HeadingConstraint(self.delta_max, self.v_uav, self.dt)

    @property
    def noise(self) -> NoiseParams:
        return NoiseParams(self.sigma_w_sq, self.sigma_u_sq, self.dt)

    @property
    def rate_mode(self) -> str:
        if self.strategy.startswith("tdma"):
            return "tdma"
        if self.strategy == "no_interference_baseline":
            return "interference_free"
        return "sdma"


@dataclass(frozen=True)
class StepRecord:
    step: int
    uav: UavPose
    true_positions: np.ndarray
    predicted_positions: np.ndarray
    decision: HeadingDecision
    rates: np.ndarray
    sum_rate: float
    rate_stderr: np.ndarray
    sum_stderr: float
    interference_free_sum: float


@dataclass
class SimResult:
    config: SimConfig
    records: list = field(default_factory=list)

    @property
    def avg_rates(self) -> np.ndarray:
        return np.mean([r.rates for r in self.records], axis=0)

    @property
    def avg_sum_rate(self) -> float:
        return float(np.mean([r.sum_rate for r in self.records]))

    @property
    def avg_sum_stderr(self) -> float:
        se = np.array([r.sum_stderr for r in self.records])
        return float(np.sqrt(np.sum(se**2)) / len(se))

    @property
    def avg_interference_free_sum(self) -> float:
        return float(np.mean([r.interference_free_sum for r in self.records]))

    @property
    def headings(self) -> np.ndarray:
        return np.array([r.uav.heading for r in self.records])


def _turned(state: NodeState, spec: NodeSpec, cfg: SimConfig) -> NodeState:
    ratio = cfg.turn_ratio if spec.turn_ratio is None else spec.turn_ratio
    sign = cfg.turn_x_sign if spec.turn_x_sign is None else spec.turn_x_sign
    angle = math.atan(ratio)
    if sign < 0:
        angle += math.pi
    speed = state.speed
    return NodeState(state.x, state.y, speed * math.cos(angle), speed * math.sin(angle))


def run(config: SimConfig) -> SimResult:
    """Simulate ``config.l_steps`` steps; deterministic given ``config.seed``.

    Node mobility, position reports and channel draws come from independent
    streams, so strategies sharing a seed see identical node trajectories.
    """
    cfg = config.validate()
    params, budget, constraint, noise = cfg.params, cfg.budget, cfg.constraint, cfg.noise
    mobility_rng, measure_rng, channel_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    fair_mode = "prop_fair" if cfg.strategy.endswith("_pf") else "max_sum"

    uav = UavPose(cfg.uav_x, cfg.uav_y, cfg.h_uav, cfg.uav_heading)
    states = [spec.state for spec in cfg.initial_nodes]
    estimates = [KalmanEstimate.initial(s, cfg.velocity_var) for s in states]
    fairness = FairnessState.uniform(cfg.n_users, cfg.n_w)
    result = SimResult(cfg)

    for n in range(1, cfg.l_steps + 1):
        predicted = predict_positions(estimates, noise)
        decision = decide_heading(cfg.strategy, uav, estimates, fairness, params, budget,
                                  constraint, cfg.d_max, noise, cfg.grid_points)
        uav = uav.moved(decision.heading, constraint.step)

        if n == cfg.turn_step:
            states = [_turned(s, spec, cfg) for s, spec in zip(states, cfg.initial_nodes)]
        states = [mobility_step(s, noise, mobility_rng) for s in states]

        geoms = [los_geometry(uav, GroundPosition(s.x, s.y)) for s in states]
        samples = rate_samples(geoms, params, budget, cfg.mc_samples, channel_rng, cfg.workers)
        rates = rates_from_samples(samples, cfg.rate_mode)
        free = rates_from_samples(samples, "interference_free")

        reports = [measure(s, noise, measure_rng) for s in states]
        exact = cfg.sigma_u_sq == 0.0
        estimates = [kf_update(kf_predict(e, noise), z, noise, allow_singular=exact)
                     for e, z in zip(estimates, reports)]
        fairness = update_fairness(fairness, rates.rates, fair_mode, cfg.pf_weight_mode)

        result.records.append(StepRecord(
            step=n,
            uav=uav,
            true_positions=np.array([[s.x, s.y] for s in states]),
            predicted_positions=np.array([[p.x, p.y] for p in predicted]),
            decision=decision,
            rates=rates.rates,
            sum_rate=rates.sum_rate,
            rate_stderr=rates.stderr,
            sum_stderr=rates.sum_stderr,
            interference_free_sum=free.sum_rate,
        ))
    return result


def max_turn(result: SimResult, initial_heading: float) -> float:
    """Largest heading change between consecutive steps."""
    h = np.concatenate([[initial_heading], result.headings])
    return float(np.max(circular_distance(h[1:], h[:-1])))


def reference_snr_to_link_db(snr_db_at_1km: float, path_loss_exp: float) -> float:
    """P_t/sigma^2 in dB giving ``snr_db_at_1km`` at 1 km range."""
    return snr_db_at_1km + 2.0 * path_loss_exp * 10.0 * math.log10(1000.0)


@dataclass(frozen=True)
class SweepRow:
    snr_db_at_1km: float
    strategy: str
    avg_sum_rate: float
    stderr: float


def snr_sweep(config: SimConfig, snr_points_db: Sequence[float],
              strategies: Sequence[str]) -> list[SweepRow]:
    """Average sum rate for each (1-km reference SNR, strategy), shared seed."""
    if not snr_points_db or not strategies:
        raise ConfigError("snr_points_db and strategies must be nonempty")
    rows = []
    for snr in snr_points_db:
        link_db = reference_snr_to_link_db(snr, config.path_loss_exp)
        for strategy in strategies:
            res = run(replace(config, snr_db=link_db, strategy=strategy))
            rows.append(SweepRow(float(snr), strategy, res.avg_sum_rate, res.avg_sum_stderr))
    return rows
