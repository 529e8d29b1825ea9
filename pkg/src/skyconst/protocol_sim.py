"""End-to-end jamming and recovery through a spatial constellation.

Timeline of one run:

1. UAV and base station share a channel; goodput is near 1.
2. A jammer covers that channel and goodput collapses. After ``jam_windows``
   consecutive windows below ``jam_threshold`` the UAV picks the next
   unjammed channel (round-robin), flies to that channel's constellation
   point and hovers for ``t_meas`` while the radar collects a point cloud.
3. The base station localizes the UAV, decodes the symbol, both ends
   retune, and goodput recovers on the new channel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Sequence, TextIO

import numpy as np

from .constellation import Constellation
from .error_model import HoverModel, nearest_symbol
from .flight_sim import FlightConfig, PidParams, leg_time
from .geometry import PolarPoint
from .localization import DbscanParams, HistogramConfig, compute_min_pts, localize
from .sensor_sim import SensorModel, synthesize_cloud

TIMELINE_HEADER = ("t_s", "goodput", "channel_mhz", "event")

JAM_DETECTED = "jam_detected"
MOVE_STARTED = "move_started"
SYMBOL_DECODED = "symbol_decoded"
CHANNEL_SWITCHED = "channel_switched"


@dataclass(frozen=True)
class JamInterval:
    t_start: float
    t_end: float
    channels: frozenset

    def covers(self, channel: Any, t: float) -> bool:
        return channel in self.channels and self.t_start <= t < self.t_end


@dataclass
class ScenarioConfig:
    channels: tuple[Any, ...]
    constellation: Constellation
    sensor: SensorModel = field(default_factory=SensorModel)
    hover: HoverModel = field(default_factory=HoverModel)
    dbscan: DbscanParams | None = None
    hist: HistogramConfig = field(default_factory=HistogramConfig)
    pid: PidParams = field(default_factory=PidParams)
    flight: FlightConfig = field(default_factory=FlightConfig)
    jammer_schedule: tuple[JamInterval, ...] = ()
    goodput_window: float = 1.0
    jam_threshold: float = 0.5
    jam_windows: int = 3
    t_meas: float = 2.0
    duration: float = 60.0
    goodput_jitter: float = 0.02
    switch_delay: float = 0.0
    max_sense_attempts: int = 3
    alpha: float = 0.5
    epsilon: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        self.channels = tuple(self.channels)
        self.jammer_schedule = tuple(self.jammer_schedule)
        if not (0 < self.jam_threshold < 1):
            raise ValueError("jam_threshold must lie in (0, 1)")
        if set(self.constellation.channel_map) != set(self.channels):
            raise ValueError("constellation channel_map must cover exactly the channel list")
        if self.jam_windows < 1 or self.goodput_window <= 0 or self.t_meas <= 0:
            raise ValueError("jam_windows, goodput_window and t_meas must be positive")
        if not (0 <= self.goodput_jitter < 0.5):
            raise ValueError("goodput_jitter must lie in [0, 0.5)")
        if self.dbscan is None:
            self.dbscan = DbscanParams(
                self.epsilon,
                compute_min_pts(self.alpha, self.sensor, self.t_meas),
                self.sensor.dist_max,
            )


@dataclass(frozen=True)
class GoodputSample:
    t: float
    goodput: float
    active_channel: Any


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    payload: dict


@dataclass
class ScenarioTimeline:
    samples: list[GoodputSample]
    events: list[Event]
    status: str = "ok"
    components: dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status != "ok"

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def write_csv(self, fh: TextIO) -> None:
        """One row per goodput sample; events at the same time go in ``event``."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMELINE_HEADER)
        rows: list[tuple[float, int, list]] = []
        for s in self.samples:
            rows.append((s.t, 0, [repr(s.t), f"{s.goodput:.6f}", s.active_channel, ""]))
        for e in self.events:
            rows.append((e.t, 1, [repr(e.t), "", e.payload.get("channel", ""), e.kind]))
        rows.sort(key=lambda r: (r[0], r[1]))
        for _, _, row in rows:
            w.writerow(row)


def decode_symbol(estimate: PolarPoint, constellation: Constellation) -> int:
    """Symbol whose decision region contains ``estimate``; ties go to the lower index."""
    return int(nearest_symbol(estimate.theta, estimate.rho, constellation)[0])


def _jammed(cfg: ScenarioConfig, channel: Any, t: float) -> bool:
    return any(j.covers(channel, t) for j in cfg.jammer_schedule)


def _link_fraction(cfg: ScenarioConfig, t0: float, t1: float, link) -> float:
    """Fraction of [t0, t1) in which ``link(t)`` reports a working link."""
    cuts = {t0, t1}
    for j in cfg.jammer_schedule:
        for c in (j.t_start, j.t_end):
            if t0 < c < t1:
                cuts.add(c)
    for c in link.changes:
        if t0 < c < t1:
            cuts.add(c)
    edges = sorted(cuts)
    ok = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if link(0.5 * (a + b)):
            ok += b - a
    return ok / (t1 - t0)


class _Link:
    """Piecewise-constant channel history of both ends."""

    def __init__(self, cfg: ScenarioConfig, channel: Any):
        self.cfg = cfg
        self.history: list[tuple[float, Any, Any]] = [(-math.inf, channel, channel)]
        self.changes: list[float] = []

    def set(self, t: float, uav: Any, bs: Any) -> None:
        self.history.append((t, uav, bs))
        self.changes.append(t)

    def at(self, t: float) -> tuple[Any, Any]:
        uav, bs = self.history[0][1:]
        for ts, u, b in self.history:
            if ts <= t:
                uav, bs = u, b
        return uav, bs

    def __call__(self, t: float) -> bool:
        uav, bs = self.at(t)
        return uav == bs and not _jammed(self.cfg, uav, t)


def run_scenario(cfg: ScenarioConfig) -> ScenarioTimeline:
    """Simulate one jamming/recovery run, fully determined by ``cfg.seed``."""
    const = cfg.constellation
    goodput_seq, sense_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    goodput_rng = np.random.default_rng(goodput_seq)
    sense_rng = np.random.default_rng(sense_seq)

    uav_channel = cfg.channels[0]
    link = _Link(cfg, uav_channel)
    position = const.symbols[const.symbol_for_channel(uav_channel)]
    events: list[Event] = []
    samples: list[GoodputSample] = []
    components: dict[str, float] = {}

    low_streak = 0
    busy_until = -math.inf  # UAV is signalling; no new detection until done
    n_windows = int(round(cfg.duration / cfg.goodput_window))
    status = "ok"

    for k in range(n_windows):
        t0, t1 = k * cfg.goodput_window, (k + 1) * cfg.goodput_window
        frac = _link_fraction(cfg, t0, t1, link)
        u1, u2 = goodput_rng.uniform(0.0, cfg.goodput_jitter, 2)
        g = float(np.clip(frac * (1.0 - u1) + (1.0 - frac) * u2, 0.0, 1.0))
        samples.append(GoodputSample(t1, g, link.at(t1)[1]))

        if t1 < busy_until:
            continue
        low_streak = low_streak + 1 if g < cfg.jam_threshold else 0
        if low_streak < cfg.jam_windows:
            continue
        low_streak = 0
        t_det = t1
        events.append(Event(t_det, JAM_DETECTED, {"channel": uav_channel}))
        if _jammed(cfg, uav_channel, t_det):
            new_channel = _next_free_channel(cfg, uav_channel, t_det)
        else:
            # link lost to a decoding mismatch: signal the same channel again
            new_channel = uav_channel
        if new_channel is None:
            status = "failed: every channel is jammed"
            busy_until = math.inf
            continue
        target = const.symbols[const.symbol_for_channel(new_channel)]
        t_fly = leg_time(position, target, cfg.pid, cfg.flight)
        events.append(
            Event(t_det, MOVE_STARTED, {"channel": new_channel, "to": (target.theta, target.rho)})
        )
        position = target
        t_now = t_det + t_fly
        decoded = None
        for _ in range(cfg.max_sense_attempts):
            t_now += cfg.t_meas
            cloud = synthesize_cloud(target, cfg.sensor, cfg.hover, cfg.t_meas, sense_rng)
            estimates = localize(cloud, cfg.dbscan, cfg.hist, cfg.sensor.fov)
            if estimates:
                decoded = decode_symbol(estimates[0], const)
                break
        intended = const.symbol_for_channel(new_channel)
        if decoded is None:
            # BS never saw the UAV; UAV retunes alone and the link stays down
            uav_channel = new_channel
            link.set(t_now, uav_channel, link.at(t_now)[1])
            busy_until = t_now
            continue
        events.append(
            Event(
                t_now,
                SYMBOL_DECODED,
                {"symbol": decoded, "intended": intended, "channel": const.channel_map[decoded]},
            )
        )
        t_sw = t_now + cfg.switch_delay
        uav_channel = new_channel
        link.set(t_sw, uav_channel, const.channel_map[decoded])
        bs_channel = const.channel_map[decoded]
        events.append(Event(t_sw, CHANNEL_SWITCHED, {"channel": bs_channel, "uav": uav_channel}))
        busy_until = t_sw
        if not components:
            components = {
                "detection_s": t_det - _last_jam_start(cfg, t_det),
                "flight_s": t_fly,
                "sensing_s": t_now - t_det - t_fly,
                "switch_s": cfg.switch_delay,
                "decoded_symbol": decoded,
                "intended_symbol": intended,
            }

    if status == "ok":
        last = samples[-1] if samples else None
        if last is not None and last.goodput < cfg.jam_threshold:
            status = "failed: link not recovered"
    events.sort(key=lambda e: e.t)
    return ScenarioTimeline(samples, events, status, components)


def _last_jam_start(cfg: ScenarioConfig, t: float) -> float:
    starts = [j.t_start for j in cfg.jammer_schedule if j.t_start <= t]
    return max(starts) if starts else 0.0


def _next_free_channel(cfg: ScenarioConfig, current: Any, t: float) -> Any | None:
    n = len(cfg.channels)
    i = cfg.channels.index(current)
    for step in range(1, n + 1):
        ch = cfg.channels[(i + step) % n]
        if ch != current and not _jammed(cfg, ch, t):
            return ch
    return None


def outage_duration(timeline: ScenarioTimeline, threshold: float = 0.5) -> float | None:
    """Time from the end of the last good window to the start of the next good one.

    ``None`` when the link never comes back.
    """
    s = timeline.samples
    drop = next((i for i, x in enumerate(s) if x.goodput < threshold), None)
    if drop is None:
        return 0.0
    back = next((i for i in range(drop, len(s)) if s[i].goodput >= threshold), None)
    if back is None:
        return None
    t_prev = s[drop - 1].t if drop > 0 else 0.0
    # sample times mark window ends
    return s[back - 1].t - t_prev


def reference_scenario(
    seed: int = 0,
    jam_at: float = 10.0,
    jam_channels: Sequence[Any] = (900.0,),
    **overrides,
) -> ScenarioConfig:
    """Two channels, 900 MHz at (0 deg, 6 m) and 905 MHz at (0 deg, 5 m).

    Spacings are 20x the RTK hover sigmas; 900 MHz is jammed from ``jam_at``.
    """
    hover = overrides.pop("hover", HoverModel(0.9, 0.05))
    const = Constellation(
        (PolarPoint(0.0, 6.0), PolarPoint(0.0, 5.0)),
        delta_theta=18.0,
        delta_rho=1.0,
        channel_map=(900.0, 905.0),
    )
    return ScenarioConfig(
        channels=(900.0, 905.0),
        constellation=const,
        hover=hover,
        jammer_schedule=(JamInterval(jam_at, math.inf, frozenset(jam_channels)),),
        seed=seed,
        **overrides,
    )
