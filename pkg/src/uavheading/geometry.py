"""UAV / ground-node geometry: distances, bearings and ULA phase delays.

All angles are radians. Headings and bearings are measured counter-clockwise
from the +x axis and normalized to [0, 2*pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Normalize an angle (scalar or array) to [0, 2*pi)."""
    out = np.mod(angle, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def circular_distance(a, b):
    """Smallest absolute angular difference between ``a`` and ``b``, in [0, pi]."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi)
    if np.ndim(d) == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class UavPose:
    x: float
    y: float
    h: float
    heading: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"UAV altitude must be positive, got {self.h}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    def moved(self, heading: float, step: float) -> "UavPose":
        """Pose after flying ``step`` meters along ``heading``."""
        return UavPose(
            self.x + step * math.cos(heading),
            self.y + step * math.sin(heading),
            self.h,
            heading,
        )


@dataclass(frozen=True)
class GroundPosition:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("ground position must be finite")


@dataclass(frozen=True)
class LosGeometry:
    """Line-of-sight state of one ground node as seen from the UAV array."""

    distance: float
    cos_elevation: float
    bearing_epsilon: float
    sin_azimuth: float
    phase_delay: float


def distance(uav: UavPose, node: GroundPosition) -> float:
    return math.sqrt((uav.x - node.x) ** 2 + (uav.y - node.y) ** 2 + uav.h**2)


def bearing_epsilon(uav: UavPose, node: GroundPosition) -> float:
    """Bearing of the node from the UAV, in [0, 2*pi).

    A node horizontally coincident with the UAV gets bearing 0.
    """
    dx = node.x - uav.x
    dy = node.y - uav.y
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return wrap_angle(math.atan2(dy, dx))


def bearing_epsilon_branches(uav: UavPose, node: GroundPosition) -> float:
    """Three-branch arctangent form of :func:`bearing_epsilon`.

    Kept as a cross-check; undefined on the vertical ray ``dx == 0`` where the
    arctangent argument is infinite, so the atan2 limit is used there.
    """
    dx = node.x - uav.x
    dy = node.y - uav.y
    if dx == 0.0:
        if dy == 0.0:
            return 0.0
        return math.pi / 2 if dy > 0 else 3 * math.pi / 2
    zeta = math.atan(dy / dx)
    if dy >= 0 and dx >= 0:
        eps = zeta
    elif dx <= 0:
        eps = zeta + math.pi
    else:
        eps = zeta + TWO_PI
    return wrap_angle(eps)


def los_geometry(uav: UavPose, node: GroundPosition) -> LosGeometry:
    dx = node.x - uav.x
    dy = node.y - uav.y
    horiz_sq = dx * dx + dy * dy
    dist = math.sqrt(horiz_sq + uav.h**2)
    cos_el = math.sqrt(horiz_sq) / dist
    eps = bearing_epsilon(uav, node)
    sin_az = math.cos(uav.heading - eps)
    return LosGeometry(dist, cos_el, eps, sin_az, math.pi * cos_el * sin_az)


def los_arrays(ux, uy, h, heading, nx, ny):
    """Vectorized LOS geometry with full numpy broadcasting.

    Returns ``(distance, cos_elevation, bearing, sin_azimuth, phase_delay)``
    arrays with the broadcast shape of the inputs.
    """
    dx = np.asarray(nx, dtype=float) - ux
    dy = np.asarray(ny, dtype=float) - uy
    horiz = np.hypot(dx, dy)
    dist = np.sqrt(horiz**2 + np.square(h))
    cos_el = horiz / dist
    eps = np.mod(np.arctan2(dy, dx), TWO_PI)
    sin_az = np.cos(heading - eps)
    return dist, cos_el, eps, sin_az, np.pi * cos_el * sin_az
