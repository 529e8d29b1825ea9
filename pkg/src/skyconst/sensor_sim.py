"""Synthetic mmWave radar point clouds of a hovering UAV.

Detection density follows an exponential law in range,
``count = rate_r * t_meas * exp(decay_b * d)``, and target returns scatter
more in azimuth than in range. The defaults below are illustrative
configuration values, not measured ground truth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .error_model import HoverModel
from .geometry import PolarPoint

CLOUD_HEADER = ("t_s", "theta_deg", "rho_m", "power")


@dataclass(frozen=True)
class SensorModel:
    rate_r: float = 50.0  # detections/s at zero range
    decay_b: float = -0.2  # 1/m
    scatter_sigma_theta: float = 1.5  # deg
    scatter_sigma_rho: float = 0.04  # m
    clutter_rate: float = 10.0  # points/s over the whole sector
    dist_max: float = 12.0  # m
    fov: float = 90.0  # half-width, deg
    power_mean: float = 10.0
    power_spread: float = 0.5
    clutter_power_mean: float = 1.0
    clutter_power_spread: float = 0.5

    def __post_init__(self) -> None:
        if not (self.rate_r > 0 and self.dist_max > 0):
            raise ValueError("rate_r and dist_max must be positive")
        if not (self.scatter_sigma_theta > 0 and self.scatter_sigma_rho > 0):
            raise ValueError("scatter sigmas must be positive")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be >= 0")
        if not (0 < self.fov <= 180):
            raise ValueError("fov must be in (0, 180]")
        if min(self.power_mean, self.clutter_power_mean) <= 0:
            raise ValueError("power medians must be positive")
        if min(self.power_spread, self.clutter_power_spread) < 0:
            raise ValueError("power spreads must be >= 0")
        arc = math.radians(self.scatter_sigma_theta) * self.dist_max / 2
        if arc <= self.scatter_sigma_rho:
            raise ValueError(
                "azimuth scatter at mid-range must exceed range scatter "
                f"({arc:.4f} m vs {self.scatter_sigma_rho} m)"
            )


@dataclass(frozen=True)
class CloudPoint:
    t: float
    theta: float
    rho: float
    power: float


@dataclass
class PointCloud:
    """Detections collected over one window of ``t_meas`` seconds.

    ``center`` records where the (hover-displaced) UAV actually was while the
    cloud was synthesized; it is ``None`` for clouds read from files.
    """

    points: list[CloudPoint]
    t_meas: float
    center: PolarPoint | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for p in self.points:
            if not (0.0 <= p.t <= self.t_meas):
                raise ValueError(f"timestamp {p.t} outside [0, {self.t_meas}]")

    def __len__(self) -> int:
        return len(self.points)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(theta, rho, power) as float arrays."""
        if not self.points:
            e = np.zeros(0)
            return e, e.copy(), e.copy()
        a = np.array([(p.theta, p.rho, p.power) for p in self.points], dtype=float)
        return a[:, 0], a[:, 1], a[:, 2]


def expected_point_count(model: SensorModel, t_meas: float, d: float) -> float:
    """Mean number of target detections for a UAV at range ``d``."""
    if t_meas <= 0:
        raise ValueError("t_meas must be positive")
    if d < 0 or d > model.dist_max:
        raise ValueError(f"range {d} m outside sensing range [0, {model.dist_max}]")
    return model.rate_r * t_meas * math.exp(model.decay_b * d)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def synthesize_cloud(
    true_pos: PolarPoint,
    model: SensorModel,
    hover: HoverModel | None,
    t_meas: float,
    rng=None,
) -> PointCloud:
    """Draw one radar window for a UAV commanded to hover at ``true_pos``.

    One hover displacement is drawn for the whole window; every target return
    then scatters around the displaced center. Returns nearer that center get
    more power. ``hover=None`` models a rigidly mounted (tripod) target.
    Clutter is uniform by area over the sensing sector.
    """
    if abs(true_pos.theta) > model.fov or true_pos.rho > model.dist_max:
        raise ValueError(f"{true_pos} outside the sensor's field of view or range")
    gen = _as_generator(rng)

    c_theta, c_rho = true_pos.theta, true_pos.rho
    if hover is not None:
        c_theta += gen.normal(0.0, hover.sigma_theta)
        c_rho += gen.normal(0.0, hover.sigma_rho)
    c_theta = float(np.clip(c_theta, -model.fov, model.fov))
    c_rho = float(np.clip(c_rho, 0.0, model.dist_max))

    n_target = gen.poisson(expected_point_count(model, t_meas, true_pos.rho))
    zt = gen.standard_normal(n_target)
    zr = gen.standard_normal(n_target)
    theta_t = c_theta + model.scatter_sigma_theta * zt
    rho_t = c_rho + model.scatter_sigma_rho * zr
    median = model.power_mean * np.exp(model.decay_b * np.clip(rho_t, 0.0, None))
    power_t = (
        median
        * np.exp(-0.5 * (zt * zt + zr * zr))
        * np.exp(model.power_spread * gen.standard_normal(n_target))
    )
    t_t = gen.uniform(0.0, t_meas, n_target)

    t_c, theta_c, rho_c, power_c = _clutter(model, t_meas, gen)
    pts = _merge(
        model,
        np.concatenate([t_t, t_c]),
        np.concatenate([theta_t, theta_c]),
        np.concatenate([rho_t, rho_c]),
        np.concatenate([power_t, power_c]),
    )
    return PointCloud(pts, t_meas, PolarPoint(c_theta, c_rho, model.fov))


def synthesize_clutter(model: SensorModel, t_meas: float, rng=None) -> PointCloud:
    """A window containing clutter only (no UAV in view)."""
    if t_meas <= 0:
        raise ValueError("t_meas must be positive")
    return PointCloud(_merge(model, *_clutter(model, t_meas, _as_generator(rng))), t_meas)


def _clutter(model: SensorModel, t_meas: float, gen: np.random.Generator):
    n = gen.poisson(model.clutter_rate * t_meas)
    theta = gen.uniform(-model.fov, model.fov, n)
    rho = model.dist_max * np.sqrt(gen.uniform(0.0, 1.0, n))
    power = model.clutter_power_mean * np.exp(model.clutter_power_spread * gen.standard_normal(n))
    t = gen.uniform(0.0, t_meas, n)
    return t, theta, rho, power


def _merge(model: SensorModel, t, theta, rho, power) -> list[CloudPoint]:
    keep = (np.abs(theta) <= model.fov) & (rho >= 0.0) & (rho <= model.dist_max) & (power > 0)
    order = np.argsort(t[keep], kind="stable")
    return [
        CloudPoint(float(a), float(b), float(c), float(d))
        for a, b, c, d in zip(
            t[keep][order], theta[keep][order], rho[keep][order], power[keep][order]
        )
    ]


def write_cloud_csv(cloud: PointCloud, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CLOUD_HEADER)
    for p in cloud.points:
        w.writerow([repr(p.t), repr(p.theta), repr(p.rho), repr(p.power)])


def _data_lines(lines: Iterable[str]) -> Iterable[str]:
    for line in lines:
        if line.strip() and not line.lstrip().startswith("#"):
            yield line


def read_cloud_csv(fh: TextIO, t_meas: float | None = None) -> PointCloud:
    """Parse the ``t_s,theta_deg,rho_m,power`` format; ``#`` lines are comments.

    ``t_meas`` defaults to the latest timestamp in the file.
    """
    reader = csv.reader(_data_lines(fh))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CLOUD_HEADER:
        raise ValueError(f"expected header {','.join(CLOUD_HEADER)}, got {header}")
    pts = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise ValueError(f"data row {lineno}: expected 4 fields, got {len(row)}")
        t, th, r, pw = (float(v) for v in row)
        if pw <= 0:
            raise ValueError(f"data row {lineno}: power must be positive")
        pts.append(CloudPoint(t, th, r, pw))
    if t_meas is None:
        t_meas = max((p.t for p in pts), default=0.0)
    return PointCloud(pts, t_meas)


def cloud_to_csv_text(cloud: PointCloud) -> str:
    buf = io.StringIO()
    write_cloud_csv(cloud, buf)
    return buf.getvalue()
