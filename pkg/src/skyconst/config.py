"""Run configuration: JSON documents validated against a closed schema."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import jsonschema

from .constellation import Constellation
from .error_model import HoverModel
from .flight_sim import FlightConfig, PidParams
from .geometry import PolarPoint
from .localization import DbscanParams, HistogramConfig, compute_min_pts
from .protocol_sim import JamInterval, ScenarioConfig
from .sensor_sim import SensorModel


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line when known."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_channel = {"type": ["number", "string"]}


def _obj(props: dict, required: Iterable[str] = ()) -> dict:
    return {
        "type": "object",
        "properties": props,
        "required": list(required),
        "additionalProperties": False,
    }


_point = _obj({"theta_deg": _num, "rho_m": _nonneg}, ["theta_deg", "rho_m"])

SCHEMA: dict = _obj(
    {
        "seed": {"type": "integer", "minimum": 0},
        "hover": _obj({"sigma_theta": _pos, "sigma_rho": _pos}),
        "sensor": _obj(
            {
                "rate_r": _pos,
                "decay_b": _num,
                "scatter_sigma_theta": _pos,
                "scatter_sigma_rho": _pos,
                "clutter_rate": _nonneg,
                "dist_max": _pos,
                "fov": _pos,
                "power_mean": _pos,
                "power_spread": _nonneg,
                "clutter_power_mean": _pos,
                "clutter_power_spread": _nonneg,
            }
        ),
        "dbscan": _obj(
            {
                "epsilon": _pos,
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "min_pts": {"type": "integer", "minimum": 1},
            }
        ),
        "histogram": _obj({"bin_width_theta": _pos, "bin_width_rho": _pos}),
        "pid": _obj({"kp": _pos, "kd": _nonneg, "ki": _nonneg}),
        "flight": _obj(
            {
                "dt": _pos,
                "v_max": _pos,
                "arrival_radius": _pos,
                "settle_time": _pos,
                "max_sim_time": _pos,
            }
        ),
        "design": _obj(
            {
                "channels": {"type": "array", "items": _channel, "minItems": 1},
                "center": _point,
                "mode": {"enum": ["exhaustive", "heuristic"]},
                "xi": _prob,
                "quotient_db": _num,
                "delta_theta_deg": _pos,
                "delta_rho_m": _pos,
                "budget": {"type": "integer", "minimum": 1},
            }
        ),
        "sweep": _obj(
            {
                "N": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "delta_theta_deg": {"type": "array", "items": _pos, "minItems": 1},
                "delta_rho_m": {"type": "array", "items": _pos, "minItems": 1},
                "center": _point,
                "mode": {"enum": ["exhaustive", "heuristic"]},
            }
        ),
        "montecarlo": _obj(
            {
                "trials": {"type": "integer", "minimum": 1},
                "workers": {"type": "integer", "minimum": 1},
                "decision": {"enum": ["region", "nearest"]},
            }
        ),
        "localize": _obj({"input": {"type": "string"}, "t_meas": _pos}),
        "synth": _obj({"position": _point, "t_meas": _pos, "static": {"type": "boolean"}}),
        "scenario": _obj(
            {
                "channels": {"type": "array", "items": _channel, "minItems": 1},
                "constellation_file": {"type": "string"},
                "jammer_schedule": {
                    "type": "array",
                    "items": _obj(
                        {
                            "t_start": _nonneg,
                            "t_end": {"type": ["number", "null"]},
                            "channels": {"type": "array", "items": _channel},
                        },
                        ["t_start", "channels"],
                    ),
                },
                "goodput_window": _pos,
                "jam_threshold": _prob,
                "jam_windows": {"type": "integer", "minimum": 1},
                "t_meas": _pos,
                "duration": _pos,
                "goodput_jitter": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                "switch_delay": _nonneg,
                "max_sense_attempts": {"type": "integer", "minimum": 1},
            }
        ),
        "output": {"type": "string"},
    }
)

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _locate(text: str, path: Iterable[Any]) -> int | None:
    """Best-effort 1-based line of the JSON node at ``path``."""
    pos = 0
    for key in path:
        if isinstance(key, int):
            continue
        i = text.find(json.dumps(key), pos)
        if i < 0:
            return None
        pos = i + 1
    return text.count("\n", 0, pos) + 1 if pos else 1


def _check(doc: Any, text: str | None, origin: str) -> None:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path += extra[:1]
    where = "/".join(str(p) for p in path) or "<root>"
    line = _locate(text, path) if text is not None else None
    at = f"{origin}:{line}" if line is not None else origin
    raise ConfigError(f"{at}: {where}: {err.message}")


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(doc: dict, overrides: Iterable[str]) -> dict:
    doc = copy.deepcopy(doc)
    for item in overrides:
        path, value = parse_override(item)
        node = doc
        for k in path[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {k} is not a section")
        node[path[-1]] = value
    return doc


@dataclass
class RunConfig:
    doc: dict
    path: Path | None = None

    @classmethod
    def load(cls, path: str | Path | None, overrides: Iterable[str] = ()) -> "RunConfig":
        text, origin, doc = None, "<defaults>", {}
        if path is not None:
            path = Path(path)
            origin = str(path)
            try:
                text = path.read_text()
            except OSError as e:
                raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
            _check(doc, text, origin)
        overrides = list(overrides)
        if overrides:
            doc = apply_overrides(doc, overrides)
            _check(doc, None, f"{origin} (after --set overrides)")
        return cls(doc, path)

    def section(self, name: str) -> dict:
        return dict(self.doc.get(name, {}))

    @property
    def seed(self) -> int | None:
        return self.doc.get("seed")

    def digest(self) -> str:
        canon = json.dumps(self.doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def _build(self, factory, name: str):
        try:
            return factory(**self.section(name))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{name}: {e}") from None

    def hover(self) -> HoverModel:
        return self._build(HoverModel, "hover")

    def sensor(self) -> SensorModel:
        return self._build(SensorModel, "sensor")

    def histogram(self) -> HistogramConfig:
        return self._build(HistogramConfig, "histogram")

    def pid(self) -> PidParams:
        return self._build(PidParams, "pid")

    def flight(self) -> FlightConfig:
        return self._build(FlightConfig, "flight")

    def dbscan(self, t_meas: float) -> DbscanParams:
        sec = self.section("dbscan")
        sensor = self.sensor()
        min_pts = sec.get("min_pts")
        if min_pts is None:
            min_pts = compute_min_pts(sec.get("alpha", 0.5), sensor, t_meas)
        return DbscanParams(sec.get("epsilon", 0.5), min_pts, sensor.dist_max)

    def center(self, section: str) -> PolarPoint:
        c = self.section(section).get("center", {"theta_deg": 0.0, "rho_m": 5.0})
        try:
            return PolarPoint(c["theta_deg"], c["rho_m"], self.sensor().fov)
        except ValueError as e:
            raise ConfigError(f"{section}.center: {e}") from None

    def scenario(self, constellation: Constellation, seed: int) -> ScenarioConfig:
        sec = self.section("scenario")
        channels = tuple(sec.pop("channels", constellation.channel_map))
        sec.pop("constellation_file", None)
        schedule = tuple(
            JamInterval(
                j["t_start"],
                math.inf if j.get("t_end") is None else j["t_end"],
                frozenset(j["channels"]),
            )
            for j in sec.pop("jammer_schedule", [])
        )
        t_meas = sec.get("t_meas", 2.0)
        try:
            return ScenarioConfig(
                channels=channels,
                constellation=constellation,
                sensor=self.sensor(),
                hover=self.hover(),
                dbscan=self.dbscan(t_meas),
                hist=self.histogram(),
                pid=self.pid(),
                flight=self.flight(),
                jammer_schedule=schedule,
                seed=seed,
                **sec,
            )
        except ValueError as e:
            raise ConfigError(f"scenario: {e}") from None
