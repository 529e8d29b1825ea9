"""PID velocity control of a point-mass UAV flying between constellation points."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from typing import TextIO

from .constellation import Constellation
from .geometry import CartesianPoint, PolarPoint

TRAJECTORY_HEADER = ("t_s", "x_m", "y_m", "speed_mps")


class FlightError(RuntimeError):
    """The controller did not settle on the target within ``max_sim_time``."""


@dataclass(frozen=True)
class PidParams:
    kp: float = 0.6
    kd: float = 0.12
    ki: float = 0.05

    def __post_init__(self) -> None:
        if self.kp <= 0 or self.kd < 0 or self.ki < 0:
            raise ValueError("need kp > 0 and kd, ki >= 0")


@dataclass(frozen=True)
class FlightConfig:
    dt: float = 0.01
    v_max: float = 5.0
    arrival_radius: float = 0.05
    settle_time: float = 0.5
    max_sim_time: float = 300.0

    def __post_init__(self) -> None:
        if min(self.dt, self.v_max, self.arrival_radius, self.settle_time, self.max_sim_time) <= 0:
            raise ValueError("flight configuration values must be positive")
        if self.dt * 10 > self.settle_time:
            raise ValueError("dt must be much smaller than settle_time")


@dataclass
class Trajectory:
    samples: list[tuple[float, CartesianPoint, float]]
    travel_time: float

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for t, p, v in self.samples:
            w.writerow([repr(t), repr(p.x), repr(p.y), repr(v)])


def fly_to(
    start: PolarPoint,
    target: PolarPoint,
    pid: PidParams = PidParams(),
    cfg: FlightConfig = FlightConfig(),
    record: bool = True,
) -> Trajectory:
    """Simulate one leg and report its travel time.

    The commanded velocity is ``kp*e + kd*de/dt + ki*int(e)`` on the 2-D
    position error, clamped to ``v_max``; the integral is clamped so that
    ``ki*|int(e)| <= v_max``. Travel time is the instant the UAV enters the
    arrival circle for the stay that then lasts ``settle_time``.
    """
    a, b = start.to_cartesian(), target.to_cartesian()
    x, y = a.x, a.y
    tx, ty = b.x, b.y
    dt = cfg.dt
    r2 = cfg.arrival_radius**2
    i_cap = cfg.v_max / pid.ki if pid.ki > 0 else math.inf

    ex, ey = tx - x, ty - y
    prev_ex, prev_ey = ex, ey
    ix = iy = 0.0
    samples = [(0.0, CartesianPoint(x, y), 0.0)] if record else []
    inside_since = 0.0 if ex * ex + ey * ey <= r2 else None
    if inside_since is not None:
        return Trajectory(samples, 0.0)

    steps = int(math.ceil(cfg.max_sim_time / dt))
    for k in range(1, steps + 1):
        ix += ex * dt
        iy += ey * dt
        mag = math.hypot(ix, iy)
        if mag > i_cap:
            ix *= i_cap / mag
            iy *= i_cap / mag
        dex = (ex - prev_ex) / dt
        dey = (ey - prev_ey) / dt
        vx = pid.kp * ex + pid.kd * dex + pid.ki * ix
        vy = pid.kp * ey + pid.kd * dey + pid.ki * iy
        speed = math.hypot(vx, vy)
        if speed > cfg.v_max:
            vx *= cfg.v_max / speed
            vy *= cfg.v_max / speed
            speed = cfg.v_max
        x += vx * dt
        y += vy * dt
        t = k * dt
        if record:
            samples.append((t, CartesianPoint(x, y), speed))
        prev_ex, prev_ey = ex, ey
        ex, ey = tx - x, ty - y
        if ex * ex + ey * ey <= r2:
            if inside_since is None:
                inside_since = t
            elif t - inside_since >= cfg.settle_time - 1e-9:
                return Trajectory(samples, inside_since)
        else:
            inside_since = None
    raise FlightError(
        f"did not settle within {cfg.arrival_radius} m of {target} in {cfg.max_sim_time} s"
    )


def leg_time(
    start: PolarPoint, target: PolarPoint, pid: PidParams, cfg: FlightConfig
) -> float:
    return fly_to(start, target, pid, cfg, record=False).travel_time


def mean_travel_time(
    constellation: Constellation, pid: PidParams = PidParams(), cfg: FlightConfig = FlightConfig()
) -> float:
    """Mean leg time over all ordered symbol pairs (uniform random transitions)."""
    if constellation.n < 2:
        return 0.0
    times = [
        leg_time(a, b, pid, cfg) for a, b in combinations(constellation.symbols, 2)
    ]
    # each unordered leg stands for both directions, which take equal time
    return math.fsum(times) / len(times)
