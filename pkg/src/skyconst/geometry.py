"""Polar/Cartesian coordinates in the sensor plane and distance metrics.

The sensor sits at the origin looking along +y. Azimuth ``theta`` is measured
in degrees from that boresight (positive towards +x) and range ``rho`` in
meters, so ``x = rho*sin(theta)`` and ``y = rho*cos(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_FOV_DEG = 90.0


@dataclass(frozen=True)
class PolarPoint:
    """A position in the sensor's polar frame.

    ``fov`` is the half-width of the admissible azimuth interval; it takes no
    part in equality or hashing.
    """

    theta: float
    rho: float
    fov: float = field(default=DEFAULT_FOV_DEG, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and math.isfinite(self.rho)):
            raise ValueError(f"non-finite polar point ({self.theta}, {self.rho})")
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if abs(self.theta) > self.fov + 1e-9:
            raise ValueError(
                f"theta={self.theta} deg outside field of view [-{self.fov}, {self.fov}]"
            )

    def to_cartesian(self) -> "CartesianPoint":
        t = math.radians(self.theta)
        return CartesianPoint(self.rho * math.sin(t), self.rho * math.cos(t))


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float

    def to_polar(self, fov: float = DEFAULT_FOV_DEG) -> PolarPoint:
        """Inverse of :meth:`PolarPoint.to_cartesian`; the origin maps to (0, 0)."""
        rho = math.hypot(self.x, self.y)
        if rho == 0.0:
            return PolarPoint(0.0, 0.0, fov)
        return PolarPoint(math.degrees(math.atan2(self.x, self.y)), rho, fov)


def to_cartesian(p: PolarPoint) -> CartesianPoint:
    return p.to_cartesian()


def to_polar(c: CartesianPoint, fov: float = DEFAULT_FOV_DEG) -> PolarPoint:
    return c.to_polar(fov)


def polar_to_xy(theta_deg, rho):
    """Vectorized polar -> (x, y) on arrays."""
    t = np.radians(np.asarray(theta_deg, dtype=float))
    rho = np.asarray(rho, dtype=float)
    return rho * np.sin(t), rho * np.cos(t)


def xy_to_polar(x, y):
    """Vectorized (x, y) -> (theta_deg, rho)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.degrees(np.arctan2(x, y)), np.hypot(x, y)


def distance(p1: PolarPoint, p2: PolarPoint) -> float:
    """Straight-line (chord) distance in meters between two polar points."""
    d2 = (
        p1.rho * p1.rho
        + p2.rho * p2.rho
        - 2.0 * p1.rho * p2.rho * math.cos(math.radians(p1.theta - p2.theta))
    )
    return math.sqrt(max(d2, 0.0))


def pairwise_distances(points: Sequence[PolarPoint]) -> np.ndarray:
    """Full symmetric chord-distance matrix."""
    theta = np.array([p.theta for p in points], dtype=float)
    rho = np.array([p.rho for p in points], dtype=float)
    x, y = polar_to_xy(theta, rho)
    return np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])


def mean_pairwise_distance(points: Sequence[PolarPoint]) -> float:
    """Mean chord distance over all unordered pairs; 0 for fewer than two points."""
    n = len(points)
    if n < 2:
        return 0.0
    d = pairwise_distances(points)
    iu = np.triu_indices(n, k=1)
    return float(d[iu].mean())

