"""High-K asymptotic heading rules that avoid the global line search.

Low SNR: the sum of mean SINRs is approximately sinusoidal in the heading,
so the optimum is closed form. High SNR: the sum rate is driven by the
inter-user LOS correlations, whose minimum over the turn window lies on the
window edges or on a Dirichlet-kernel zero.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .channel import RicianParams, dirichlet_abs
from .geometry import GroundPosition, UavPose, circular_distance, los_arrays, wrap_angle

if TYPE_CHECKING:
    from .beamforming import LinkBudget
    from .heading import HeadingConstraint, HeadingDecision

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class LowSnrCoeffs:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    corr: np.ndarray
    A: float
    B: float
    D: float
    psi: float

    def surrogate(self, delta):
        """A - B cos(delta) - D sin(delta)."""
        return self.A - self.B * np.cos(delta) - self.D * np.sin(delta)


@dataclass(frozen=True)
class HighSnrCoeffs:
    e: np.ndarray
    f: np.ndarray
    candidates: list


def pathloss_coeffs(uav: UavPose, node: GroundPosition, params: RicianParams,
                    constraint: "HeadingConstraint") -> tuple[float, float, float]:
    """First-order expansion 1/d^(2 alpha) ~ a - b cos(delta) - c sin(delta).

    ``d`` is the distance from the pose reached after one step along delta.
    """
    v = constraint.step
    dx = uav.x - node.x
    dy = uav.y - node.y
    base = dx * dx + dy * dy + v * v + uav.h**2
    alpha = params.path_loss_exp
    scale = 2.0 * alpha * v * base ** -(alpha + 1.0)
    return base**-alpha, scale * dx, scale * dy


def frozen_correlations(uav: UavPose, nodes: Sequence[GroundPosition], m: int) -> np.ndarray:
    """Pairwise |a_i^H a_j| at the current pose and heading (diagonal = m)."""
    nx = np.array([n.x for n in nodes])
    ny = np.array([n.y for n in nodes])
    phase = los_arrays(uav.x, uav.y, uav.h, uav.heading, nx, ny)[4]
    return dirichlet_abs(np.subtract.outer(phase, phase), m)


def low_snr_coeffs(uav: UavPose, predicted_nodes: Sequence[GroundPosition], params: RicianParams,
                   budget: "LinkBudget", constraint: "HeadingConstraint") -> LowSnrCoeffs:
    rho = budget.pt_over_sigma2
    m = params.m_antennas
    abc = np.array([pathloss_coeffs(uav, n, params, constraint) for n in predicted_nodes])
    a, b, c = abc[:, 0], abc[:, 1], abc[:, 2]
    corr = frozen_correlations(uav, predicted_nodes, m)
    c2 = corr**2
    np.fill_diagonal(c2, 0.0)
    big_a = rho * m * a.sum() - rho**2 * (c2 * np.outer(a, a)).sum()
    big_b = rho * m * b.sum() - rho**2 * (c2 * (np.outer(a, b) + np.outer(b, a))).sum()
    big_d = rho * m * c.sum() - rho**2 * (c2 * (np.outer(a, c) + np.outer(c, a))).sum()
    psi = wrap_angle(math.atan2(big_d, big_b))
    return LowSnrCoeffs(a, b, c, corr, float(big_a), float(big_b), float(big_d), psi)


def _window_pick(target: float, previous: float, delta_max: float) -> tuple[float, bool]:
    """Keep ``target`` inside the turn window, else the nearer window edge."""
    if circular_distance(target, previous) <= delta_max:
        return wrap_angle(target), False
    lo, hi = previous - delta_max, previous + delta_max
    if circular_distance(lo, target) < circular_distance(hi, target):
        return wrap_angle(lo), True
    return wrap_angle(hi), True


def low_snr_heading(uav: UavPose, predicted_nodes: Sequence[GroundPosition], params: RicianParams,
                    budget: "LinkBudget", constraint: "HeadingConstraint") -> "HeadingDecision":
    """Closed-form maximizer of the sinusoidal low-SNR sum-SINR surrogate."""
    from .heading import HeadingDecision

    co = low_snr_coeffs(uav, predicted_nodes, params, budget, constraint)
    if co.B == 0.0 and co.D == 0.0:
        log.warning("degenerate low-SNR surrogate (B = D = 0); keeping previous heading")
        return HeadingDecision(uav.heading, co.A, False, False, degenerate=True)
    best = wrap_angle(co.psi + math.pi)
    heading, clamped = _window_pick(best, uav.heading, constraint.delta_max)
    return HeadingDecision(heading, float(co.surrogate(heading)), clamped, False)


def phase_linearization(uav: UavPose, node: GroundPosition, previous_heading: float) -> tuple[float, float]:
    """Phase delay p(previous + x) ~ e + f x, geometry frozen at the current position."""
    _, cos_el, eps, _, _ = los_arrays(uav.x, uav.y, uav.h, previous_heading, node.x, node.y)
    u = float(eps) - previous_heading
    scale = math.pi * float(cos_el)
    return scale * math.cos(u), scale * math.sin(u)


def correlation_sum(headings, uav: UavPose, nodes: Sequence[GroundPosition], m: int):
    """sum_{i<j} |a_i^H a_j| for each heading, UAV held at its current position."""
    headings = np.atleast_1d(np.asarray(headings, dtype=float))
    nx = np.array([n.x for n in nodes])
    ny = np.array([n.y for n in nodes])
    phase = los_arrays(uav.x, uav.y, uav.h, headings[:, None], nx[None, :], ny[None, :])[4]
    i, j = np.triu_indices(len(nodes), k=1)
    return dirichlet_abs(phase[:, i] - phase[:, j], m).sum(axis=1)


def exact_pair_points(prev: float, amp_i: float, eps_i: float, amp_j: float, eps_j: float,
                     m: int, delta_max: float) -> list[float]:
    """Offsets x in [-delta_max, delta_max] where |a_i^H a_j| vanishes exactly,
    plus the turning points of the phase difference.

    With the UAV position frozen, p_i - p_j = R cos(prev + x + theta) is a
    single sinusoid in the heading, so each Dirichlet zero 2k*pi/m (k not a
    multiple of m) is reached in closed form. Between turning points the
    phase difference is monotone, so together with the window edges these
    offsets contain the minimizer of the pair correlation.
    """
    c = amp_i * complex(math.cos(eps_i), -math.sin(eps_i)) - amp_j * complex(math.cos(eps_j), -math.sin(eps_j))
    r = abs(c)
    if r < 1e-12:
        return []
    theta = math.atan2(c.imag, c.real)
    out = []
    for k in range(-(m - 1), m):
        if k == 0:
            continue
        t = 2.0 * k * math.pi / m
        if abs(t) > r:
            continue
        base = math.acos(t / r)
        for d in (base - theta, -base - theta):
            x = math.remainder(d - prev, 2.0 * math.pi)
            if abs(x) <= delta_max:
                out.append(x)
    for d in (-theta, math.pi - theta):
        x = math.remainder(d - prev, 2.0 * math.pi)
        if abs(x) <= delta_max:
            out.append(x)
    return out


def high_snr_candidates(uav: UavPose, nodes: Sequence[GroundPosition], m: int,
                        delta_max: float) -> HighSnrCoeffs:
    """Window edges plus Dirichlet zeros of every user pair inside the window.

    The linearized zeros z_k are kept as candidates. Exact zeros and turning
    points of the frozen phase-difference sinusoid are added because the
    linear model can push a true in-window zero outside the window, and
    because the phase difference may turn back before reaching a zero.
    """
    prev = uav.heading
    ef = np.array([phase_linearization(uav, n, prev) for n in nodes])
    e, f = ef[:, 0], ef[:, 1]
    nx = np.array([n.x for n in nodes])
    ny = np.array([n.y for n in nodes])
    _, cos_el, eps, _, _ = los_arrays(uav.x, uav.y, uav.h, prev, nx, ny)
    amp = math.pi * cos_el
    offsets = [-delta_max, delta_max]
    ks = [k for k in range(-(2 * m - 1), 2 * m) if k != 0 and k % m != 0]
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            slope = f[i] - f[j]
            if abs(slope) >= 1e-9:
                for k in ks:
                    z = (2.0 * k * math.pi / m - e[i] + e[j]) / slope
                    if abs(z) <= delta_max:
                        offsets.append(z)
            offsets.extend(exact_pair_points(prev, amp[i], eps[i], amp[j], eps[j], m, delta_max))
    return HighSnrCoeffs(e, f, [wrap_angle(prev + z) for z in offsets])


GOLDEN_STEPS = 40
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def refine_between(candidates: np.ndarray, prev: float, uav: UavPose, nodes: Sequence[GroundPosition],
                   m: int) -> np.ndarray:
    """Golden-section minima of the correlation sum on every gap between
    consecutive candidates, all gaps searched at once."""
    off = np.unique(np.round(circular_offsets(candidates, prev), 15))
    if len(off) < 2:
        return np.empty(0)
    lo, hi = off[:-1].copy(), off[1:].copy()
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1 = correlation_sum(prev + x1, uav, nodes, m)
    f2 = correlation_sum(prev + x2, uav, nodes, m)
    for _ in range(GOLDEN_STEPS):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = hi - _INV_PHI * (hi - lo)
        nx2 = lo + _INV_PHI * (hi - lo)
        x1, x2 = np.where(left, nx1, x2), np.where(left, x1, nx2)
        fx = correlation_sum(prev + np.where(left, x1, x2), uav, nodes, m)
        f1, f2 = np.where(left, fx, f2), np.where(left, f1, fx)
    return np.mod(prev + 0.5 * (lo + hi), 2.0 * math.pi)


def circular_offsets(headings, prev: float) -> np.ndarray:
    """Signed offsets of ``headings`` from ``prev`` in [-pi, pi)."""
    return np.mod(np.asarray(headings, dtype=float) - prev + math.pi, 2.0 * math.pi) - math.pi


def high_snr_heading(uav: UavPose, predicted_nodes: Sequence[GroundPosition], params: RicianParams,
                     constraint: "HeadingConstraint") -> "HeadingDecision":
    """Candidate heading with the smallest total pairwise LOS correlation."""
    from .heading import HeadingDecision

    prev = uav.heading
    if len(predicted_nodes) == 1:
        node = predicted_nodes[0]
        if node.x == uav.x and node.y == uav.y:
            return HeadingDecision(prev, 0.0, False, False)
        toward = math.atan2(node.y - uav.y, node.x - uav.x)
        heading, clamped = _window_pick(toward, prev, constraint.delta_max)
        return HeadingDecision(heading, 0.0, clamped, False)
    co = high_snr_candidates(uav, predicted_nodes, params.m_antennas, constraint.delta_max)
    cand = np.array(co.candidates)
    if len(predicted_nodes) > 2:
        # with three or more users the summed correlation can dip between candidates
        cand = np.concatenate([cand, refine_between(cand, prev, uav, predicted_nodes, params.m_antennas)])
    values = correlation_sum(cand, uav, predicted_nodes, params.m_antennas)
    offsets = circular_distance(cand, prev)
    # lexicographic: smallest correlation, then smallest turn
    order = np.lexsort((offsets, np.round(values, 12)))
    k = int(order[0])
    on_edge = abs(offsets[k] - constraint.delta_max) < 1e-12
    return HeadingDecision(float(cand[k]), float(values[k]), bool(on_edge), False)
