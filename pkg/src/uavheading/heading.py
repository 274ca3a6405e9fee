"""Adaptive UAV heading control.

Each step the controller predicts node positions with the Kalman filter,
maximizes a rate objective over the full circle, projects the optimum onto
the turn-rate window and finally applies the centre-of-gravity guard.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import asymptotic
from .beamforming import LinkBudget, bound_arrays
from .channel import RicianParams
from .geometry import TWO_PI, GroundPosition, UavPose, circular_distance, los_arrays, wrap_angle
from .tracking import KalmanEstimate, NoiseParams, kf_predict

STRATEGIES = (
    "sdma_max",
    "sdma_pf",
    "tdma_max",
    "tdma_pf",
    "low_snr",
    "high_snr",
    "no_interference_baseline",
)
FAIRNESS_MODES = ("max_sum", "prop_fair")
PF_WEIGHT_MODES = ("inverse", "direct")
RATE_FLOOR = 1e-6
GRID_POINTS = 720
REFINE_TOL = 1e-4
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class HeadingConstraint:
    delta_max: float
    v_u: float
    dt: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta_max <= math.pi:
            raise ValueError("delta_max must lie in (0, pi]")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def step(self) -> float:
        """Distance flown per time step."""
        return self.v_u * self.dt


@dataclass(frozen=True)
class HeadingDecision:
    heading: float
    objective_value: float
    clamped: bool = False
    cog_guard_fired: bool = False
    degenerate: bool = False


@dataclass(frozen=True)
class FairnessState:
    avg_rates: np.ndarray
    weights: np.ndarray
    steps_since_refresh: int = 0
    n_w: int = 4
    n_steps: int = 0

    @classmethod
    def uniform(cls, n_users: int, n_w: int = 4) -> "FairnessState":
        if n_w < 1:
            raise ValueError("n_w must be >= 1")
        return cls(np.zeros(n_users), np.full(n_users, 1.0 / n_users), 0, n_w, 0)


def update_fairness(state: FairnessState, latest_rates, mode: str = "prop_fair",
                    weight_mode: str = "inverse") -> FairnessState:
    """Fold one step's rates into the running means; refresh weights every n_w steps."""
    if mode not in FAIRNESS_MODES:
        raise ValueError(f"unknown fairness mode {mode!r}")
    if weight_mode not in PF_WEIGHT_MODES:
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    rates = np.asarray(latest_rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("rates must be nonnegative")
    n = state.n_steps + 1
    avg = state.avg_rates + (rates - state.avg_rates) / n
    since = state.steps_since_refresh + 1
    weights = state.weights
    if mode == "prop_fair" and since >= state.n_w:
        floored = np.maximum(avg, RATE_FLOOR)
        raw = 1.0 / floored if weight_mode == "inverse" else floored
        weights = raw / raw.sum()
        since = 0
    elif mode == "max_sum" and since >= state.n_w:
        since = 0
    return FairnessState(avg, weights, since, state.n_w, n)


def predicted_uav_position(uav: UavPose, candidate_heading, constraint: HeadingConstraint):
    step = constraint.step
    return (uav.x + step * np.cos(candidate_heading), uav.y + step * np.sin(candidate_heading))


def _node_xy(nodes: Sequence[GroundPosition]):
    return np.array([n.x for n in nodes]), np.array([n.y for n in nodes])


def _as_output(values, scalar: bool):
    return float(values[0]) if scalar else values


def sdma_objective(candidate_heading, uav: UavPose, predicted_nodes: Sequence[GroundPosition],
                   params: RicianParams, budget: LinkBudget, constraint: HeadingConstraint,
                   weights=None):
    """Weighted sum of log2(1 + Jensen bound) at the pose reached under each heading.

    ``candidate_heading`` may be a scalar or a 1-D array of headings.
    """
    scalar = np.ndim(candidate_heading) == 0
    delta = np.atleast_1d(np.asarray(candidate_heading, dtype=float))
    nx, ny = _node_xy(predicted_nodes)
    if len(nx) > params.m_antennas:
        raise ValueError("number of users exceeds number of antennas")
    w = np.ones(len(nx)) if weights is None else np.asarray(weights, dtype=float)
    ux, uy = predicted_uav_position(uav, delta, constraint)
    dist, cos_el, _, sin_az, phase = los_arrays(
        ux[:, None], uy[:, None], uav.h, delta[:, None], nx[None, :], ny[None, :]
    )
    bounds = bound_arrays(dist, phase, cos_el, sin_az, params, budget)
    return _as_output((w * np.log2(1.0 + bounds)).sum(axis=1), scalar)


def tdma_objective(candidate_heading, uav: UavPose, predicted_nodes: Sequence[GroundPosition],
                   params: RicianParams, budget: LinkBudget, constraint: HeadingConstraint,
                   weights=None):
    """(1/N) sum_i w_i log2(1 + rho M / d_i^(2 alpha)) at the reached pose."""
    scalar = np.ndim(candidate_heading) == 0
    delta = np.atleast_1d(np.asarray(candidate_heading, dtype=float))
    nx, ny = _node_xy(predicted_nodes)
    w = np.ones(len(nx)) if weights is None else np.asarray(weights, dtype=float)
    ux, uy = predicted_uav_position(uav, delta, constraint)
    d_sq = (ux[:, None] - nx) ** 2 + (uy[:, None] - ny) ** 2 + uav.h**2
    snr = budget.pt_over_sigma2 * params.m_antennas / d_sq**params.path_loss_exp
    return _as_output((w * np.log2(1.0 + snr)).sum(axis=1) / len(nx), scalar)


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = REFINE_TOL):
    """Golden-section search for a maximum of a unimodal ``f`` on [a, b]."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def _evaluate(objective, x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Call ``objective`` on the whole array, or point by point for scalar-only callables.

    Also reports whether the vectorized call worked.
    """
    try:
        values = np.asarray(objective(x), dtype=float)
    except (TypeError, ValueError):
        values = None
    if values is not None and values.shape == x.shape:
        return values, True
    return np.array([float(objective(float(v))) for v in x]), False


def global_line_search(objective: Callable, grid_points: int = GRID_POINTS,
                       tol: float = REFINE_TOL) -> tuple[float, float]:
    """Maximize a 2*pi-periodic objective of the heading.

    A uniform grid over [0, 2*pi) picks the best cell (first maximum wins,
    i.e. the smallest angle on ties); golden-section search then refines
    within one grid spacing either side. The refined point is accepted only
    if it strictly improves on the grid value.
    """
    if grid_points < 8:
        raise ValueError("grid_points must be >= 8")
    grid = np.arange(grid_points) * (TWO_PI / grid_points)
    values, vectorized = _evaluate(objective, grid)
    k = int(np.argmax(values))
    best_x, best_v = float(grid[k]), float(values[k])
    spacing = TWO_PI / grid_points
    if vectorized:
        def point(t):
            return float(objective(np.array([t]))[0])
    else:
        def point(t):
            return float(objective(t))
    x, v = golden_section_max(point, best_x - spacing, best_x + spacing, tol)
    if v > best_v:
        best_x, best_v = wrap_angle(x), v
    return best_x, best_v


def clamp_heading(unconstrained: float, previous: float, constraint: HeadingConstraint) -> float:
    """Project a heading onto the window previous +/- delta_max (circularly)."""
    if circular_distance(unconstrained, previous) <= constraint.delta_max:
        return wrap_angle(unconstrained)
    lo = previous - constraint.delta_max
    hi = previous + constraint.delta_max
    if circular_distance(lo, unconstrained) < circular_distance(hi, unconstrained):
        return wrap_angle(lo)
    return wrap_angle(hi)


def centre_of_gravity(nodes: Sequence[GroundPosition]) -> tuple[float, float]:
    nx, ny = _node_xy(nodes)
    return float(nx.mean()), float(ny.mean())


def cog_guard(clamped: float, uav: UavPose, predicted_nodes: Sequence[GroundPosition],
              constraint: HeadingConstraint, d_max: float, previous: float) -> HeadingDecision:
    """Turn back toward the nodes' centre of gravity when straying beyond d_max."""
    if not d_max > 0:
        raise ValueError("d_max must be positive")
    gx, gy = centre_of_gravity(predicted_nodes)
    px, py = predicted_uav_position(uav, clamped, constraint)
    if math.hypot(px - gx, py - gy) < d_max:
        return HeadingDecision(wrap_angle(clamped), math.nan, False, False)
    if gx == uav.x and gy == uav.y:
        toward = previous
    else:
        toward = math.atan2(gy - uav.y, gx - uav.x)
    heading = clamp_heading(toward, previous, constraint)
    return HeadingDecision(heading, math.nan, circular_distance(heading, toward) > 1e-12, True)


def predict_positions(estimates: Sequence[KalmanEstimate], noise: NoiseParams) -> list[GroundPosition]:
    out = []
    for est in estimates:
        x, y = kf_predict(est, noise).position
        out.append(GroundPosition(x, y))
    return out


def _line_search_heading(strategy, uav, nodes, weights, params, budget, constraint, grid_points):
    objective_fn = tdma_objective if strategy.startswith("tdma") else sdma_objective

    def objective(delta):
        return objective_fn(delta, uav, nodes, params, budget, constraint, weights)

    best, _ = global_line_search(objective, grid_points)
    heading = clamp_heading(best, uav.heading, constraint)
    value = float(objective(heading))
    return HeadingDecision(heading, value, circular_distance(heading, best) > 1e-12, False)


def decide_heading(strategy: str, uav: UavPose, kalman_estimates: Sequence[KalmanEstimate],
                   fairness: FairnessState, params: RicianParams, budget: LinkBudget,
                   constraint: HeadingConstraint, d_max: float, noise: NoiseParams,
                   grid_points: int = GRID_POINTS) -> HeadingDecision:
    """Four-step heading decision for the next time step.

    1. Kalman-predict node positions. 2. Optimize the strategy's objective
    over the full circle and clamp to the turn window (the asymptotic
    strategies solve their own surrogate instead). 3. Apply the CoG guard.
    4. Return the decision; the caller flies it.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    nodes = predict_positions(kalman_estimates, noise)
    if strategy == "low_snr":
        decision = asymptotic.low_snr_heading(uav, nodes, params, budget, constraint)
    elif strategy == "high_snr":
        decision = asymptotic.high_snr_heading(uav, nodes, params, constraint)
    else:
        weights = fairness.weights if strategy.endswith("_pf") else None
        decision = _line_search_heading(strategy, uav, nodes, weights, params, budget,
                                        constraint, grid_points)
    guard = cog_guard(decision.heading, uav, nodes, constraint, d_max, uav.heading)
    if guard.cog_guard_fired:
        decision = replace(decision, heading=guard.heading, clamped=guard.clamped,
                           cog_guard_fired=True)
    return decision
