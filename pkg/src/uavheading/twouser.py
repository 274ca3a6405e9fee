"""Static two-user case: orientation of a rectangular UAV trajectory.

Users sit at (-d, 0) and (+d, 0); the rectangle is centred at the origin
with its longer side (C_a) at angle ``delta`` from the user axis. Along the
C_a sides the UAV heads delta or delta + pi, along the C_b sides
delta +/- pi/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import dirichlet_abs
from .heading import golden_section_max

ORIENTATION_GRID = 2000


@dataclass(frozen=True)
class RectangleScenario:
    d: float
    h_u: float
    c_min: float
    c_max: float
    m_antennas: int
    pt_over_sigma2: float
    path_loss_exp: float = 1.0

    def __post_init__(self):
        if not 0 < self.c_min <= self.c_max:
            raise ValueError("need 0 < c_min <= c_max")
        if not (self.d > 0 and self.h_u > 0):
            raise ValueError("d and h_u must be positive")
        if self.m_antennas < 1:
            raise ValueError("m_antennas must be >= 1")

    @property
    def cos_elevation(self) -> float:
        """Elevation cosine to either user from the rectangle centre."""
        return self.d / math.hypot(self.d, self.h_u)

    @property
    def side_ratio(self) -> float:
        return self.c_max / self.c_min


def _s_terms(delta, scenario: RectangleScenario):
    c = scenario.cos_elevation
    m = scenario.m_antennas
    delta = np.asarray(delta, dtype=float)
    s1 = dirichlet_abs(2.0 * math.pi * c * np.cos(delta), m) ** 2
    s2 = dirichlet_abs(2.0 * math.pi * c * np.sin(delta), m) ** 2
    return s1, s2


def averaged_correlation(delta, c_a: float, c_b: float, scenario: RectangleScenario):
    """Perimeter-averaged |h1^H h2|^2 with piecewise-constant angles."""
    s1, s2 = _s_terms(delta, scenario)
    w = c_a / (c_a + c_b)
    return w * s1 + (1.0 - w) * s2


def orientation_objective(delta, scenario: RectangleScenario):
    rc = scenario.side_ratio
    s1, s2 = _s_terms(delta, scenario)
    return rc / (1.0 + rc) * s1 + s2 / (1.0 + rc)


@dataclass(frozen=True)
class OrientationResult:
    delta: float
    c_a: float
    c_b: float
    objective: float
    constant: bool = False


def optimal_orientation(scenario: RectangleScenario, grid_points: int = ORIENTATION_GRID,
                        tol: float = 1e-7) -> OrientationResult:
    """Line search of the averaged-correlation objective over [0, pi/2].

    Always uses C_a = C_max and C_b = C_min.
    """
    grid = np.linspace(0.0, math.pi / 2, grid_points)
    values = orientation_objective(grid, scenario)
    k = int(np.argmin(values))
    best_x, best_v = float(grid[k]), float(values[k])
    constant = bool(np.ptp(values) <= 1e-12 * max(1.0, abs(best_v)))
    if not constant:
        step = grid[1] - grid[0]
        lo, hi = max(0.0, best_x - step), min(math.pi / 2, best_x + step)
        x, neg = golden_section_max(lambda t: -float(orientation_objective(t, scenario)), lo, hi, tol)
        if -neg < best_v:
            best_x, best_v = x, -neg
    return OrientationResult(best_x, scenario.c_max, scenario.c_min, best_v, constant)


def perimeter_samples(delta: float, c_a: float, c_b: float, n_points: int = 200):
    """Arc-length uniform points (segment midpoints) around the rectangle.

    Returns ``(x, y, heading)`` arrays in flight order.
    """
    total = 2.0 * (c_a + c_b)
    s = (np.arange(n_points) + 0.5) * (total / n_points)
    u = np.array([math.cos(delta), math.sin(delta)])
    v = np.array([-math.sin(delta), math.cos(delta)])
    corners = [(-c_a / 2) * u - (c_b / 2) * v, (c_a / 2) * u - (c_b / 2) * v,
               (c_a / 2) * u + (c_b / 2) * v, (-c_a / 2) * u + (c_b / 2) * v]
    dirs = [u, v, -u, -v]
    lengths = [c_a, c_b, c_a, c_b]
    headings = [delta, delta + math.pi / 2, delta + math.pi, delta + 1.5 * math.pi]
    edges = np.cumsum([0.0] + lengths)
    side = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, 3)
    offset = s - edges[side]
    start = np.array(corners)[side]
    pos = start + offset[:, None] * np.array(dirs)[side]
    return pos[:, 0], pos[:, 1], np.mod(np.array(headings)[side], 2 * math.pi)


def _pair_sinr(x, y, heading, scenario: RectangleScenario):
    """Exact two-user LOS SINRs (unit-amplitude steering) at UAV positions."""
    m = scenario.m_antennas
    rho = scenario.pt_over_sigma2
    h2 = scenario.h_u**2
    gains, phases = [], []
    for ux in (-scenario.d, scenario.d):
        dx = ux - x
        dy = -y
        horiz_sq = dx * dx + dy * dy
        dist_sq = horiz_sq + h2
        eps = np.arctan2(dy, dx)
        phases.append(math.pi * np.sqrt(horiz_sq / dist_sq) * np.cos(heading - eps))
        gains.append(rho / dist_sq**scenario.path_loss_exp)
    corr_sq = dirichlet_abs(phases[0] - phases[1], m) ** 2
    g1, g2 = gains
    sinr1 = g1 * (m - g2 * corr_sq / (1.0 + g2 * m))
    sinr2 = g2 * (m - g1 * corr_sq / (1.0 + g1 * m))
    return sinr1, sinr2


def trajectory_rate(delta: float, c_a: float, c_b: float, scenario: RectangleScenario,
                    n_points: int = 200) -> float:
    """Perimeter-averaged sum rate log2(1+SINR1) + log2(1+SINR2)."""
    x, y, hd = perimeter_samples(delta, c_a, c_b, n_points)
    s1, s2 = _pair_sinr(x, y, hd, scenario)
    return float(np.mean(np.log2(1.0 + s1) + np.log2(1.0 + s2)))


def perimeter_correlation(delta: float, c_a: float, c_b: float, scenario: RectangleScenario,
                          n_points: int = 200) -> float:
    """Perimeter average of |h1^H h2|^2 with exact geometry at each point."""
    x, y, hd = perimeter_samples(delta, c_a, c_b, n_points)
    phases = []
    for ux in (-scenario.d, scenario.d):
        dx, dy = ux - x, -y
        horiz = np.hypot(dx, dy)
        cos_el = horiz / np.sqrt(horiz**2 + scenario.h_u**2)
        phases.append(math.pi * cos_el * np.cos(hd - np.arctan2(dy, dx)))
    return float(np.mean(dirichlet_abs(phases[0] - phases[1], scenario.m_antennas) ** 2))


@dataclass(frozen=True)
class ExhaustiveResult:
    delta: float
    c_a: float
    c_b: float
    sum_rate: float
    delta_grid: np.ndarray
    best_rate_per_delta: np.ndarray


def side_grid(scenario: RectangleScenario, side_step: float = 50.0) -> np.ndarray:
    sides = np.arange(scenario.c_min, scenario.c_max + 1e-9 * scenario.c_max, side_step)
    if sides[-1] < scenario.c_max - 1e-9:
        sides = np.append(sides, scenario.c_max)
    return sides


def exhaustive_search(scenario: RectangleScenario, delta_step: float = 0.01,
                      side_step: float = 50.0, n_points: int = 200) -> ExhaustiveResult:
    """Brute-force maximization of the perimeter-averaged sum rate.

    Searches every (delta, C_a, C_b) with C_min <= C_b <= C_a <= C_max on the
    given grids. Ties resolve to the first triple in (delta, C_a, C_b) order.
    """
    deltas = np.arange(0.0, math.pi / 2 + 1e-12, delta_step)
    sides = side_grid(scenario, side_step)
    pairs = [(ca, cb) for ca in sides for cb in sides if cb <= ca]
    best_per_delta = np.empty(len(deltas))
    arg_per_delta = []
    for k, delta in enumerate(deltas):
        xs, ys, hs = zip(*(perimeter_samples(delta, ca, cb, n_points) for ca, cb in pairs))
        s1, s2 = _pair_sinr(np.stack(xs), np.stack(ys), np.stack(hs), scenario)
        rates = np.mean(np.log2(1.0 + s1) + np.log2(1.0 + s2), axis=1)
        j = int(np.argmax(rates))
        best_per_delta[k] = rates[j]
        arg_per_delta.append(pairs[j])
    k = int(np.argmax(best_per_delta))
    ca, cb = arg_per_delta[k]
    return ExhaustiveResult(float(deltas[k]), float(ca), float(cb), float(best_per_delta[k]),
                            deltas, best_per_delta)
