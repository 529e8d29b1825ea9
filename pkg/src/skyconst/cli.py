"""Command-line front end.

Every command reads an optional JSON config (``-c``), applies ``--set
section.key=value`` overrides, and writes its result atomically to ``-o`` (or
stdout). Outputs start with ``#`` comment lines carrying the config digest and
seed so a run can be reproduced exactly.

Exit codes: 0 success, 2 configuration error, 3 scenario failure,
4 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .constellation import Constellation
from .designer import (
    DesignError,
    SearchBudgetExceeded,
    build_grid,
    design,
    exhaustive_search,
    heuristic_search,
)
from .error_model import constellation_error_probability, monte_carlo_pe
from .flight_sim import FlightError, mean_travel_time
from .geometry import PolarPoint, mean_pairwise_distance
from .localization import localize_clusters, write_estimates_csv
from .protocol_sim import outage_duration, run_scenario
from .sensor_sim import read_cloud_csv, synthesize_cloud, write_cloud_csv

EXIT_OK, EXIT_CONFIG, EXIT_SCENARIO, EXIT_GUARD = 0, 2, 3, 4


class ScenarioFailed(RuntimeError):
    pass


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename; no partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(command: str, cfg: RunConfig, seed: int | None, extra: dict | None = None) -> str:
    lines = [
        f"# skyconst {__version__} {command}",
        f"# config_sha256={cfg.digest()}",
        f"# seed={'none' if seed is None else seed}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}={v}")
    return "\n".join(lines) + "\n"


def _seed(cfg: RunConfig) -> int:
    # a missing seed is drawn once and reported in the output header
    if cfg.seed is not None:
        return cfg.seed
    return int(np.random.SeedSequence().entropy % (2**63))


def _csv(header: tuple[str, ...], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def _sweep(cfg: RunConfig):
    sec = cfg.section("sweep")
    ns = sec.get("N", [1, 2, 4, 8])
    dts = sec.get("delta_theta_deg", [18.0])
    drs = sec.get("delta_rho_m", [1.0])
    mode = sec.get("mode", "exhaustive")
    center = cfg.center("sweep")
    return list(itertools.product(ns, dts, drs)), mode, center


def _search(center: PolarPoint, n: int, dt: float, dr: float, mode: str, cfg: RunConfig):
    sensor = cfg.sensor()
    try:
        grid = build_grid(center, n, dt, dr, sensor.fov, sensor.dist_max)
    except ValueError as e:
        raise ConfigError(f"sweep: {e}") from None
    if mode == "heuristic":
        return heuristic_search(grid, n)
    return exhaustive_search(grid, n, cfg.section("design").get("budget", 10**8))


def _load_constellation(path: str, cfg: RunConfig) -> Constellation:
    try:
        return Constellation.loads(Path(path).read_text(), cfg.sensor().fov)
    except OSError as e:
        raise ConfigError(f"{path}: cannot read constellation: {e.strerror}") from None
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}: invalid constellation file: {e}") from None


def cmd_design(cfg: RunConfig, args) -> str:
    sec = cfg.section("design")
    sensor = cfg.sensor()
    kwargs = {}
    if "xi" in sec:
        kwargs["xi"] = sec["xi"]
    elif "delta_theta_deg" in sec or "delta_rho_m" in sec:
        if not ("delta_theta_deg" in sec and "delta_rho_m" in sec):
            raise ConfigError("design: give both delta_theta_deg and delta_rho_m")
        kwargs["deltas"] = (sec["delta_theta_deg"], sec["delta_rho_m"])
    else:
        kwargs["quotient_db"] = sec.get("quotient_db", 13.0)
    try:
        const, report = design(
            channels=sec.get("channels", [900.0, 905.0]),
            hover=cfg.hover(),
            p_c=cfg.center("design"),
            mode=sec.get("mode", "exhaustive"),
            fov=sensor.fov,
            dist_max=sensor.dist_max,
            budget=sec.get("budget", 10**8),
            **kwargs,
        )
    except ValueError as e:
        raise ConfigError(f"design: {e}") from None
    doc = const.to_dict(report.as_dict())
    doc["provenance"] = {"config_sha256": cfg.digest(), "seed": cfg.seed}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_pe(cfg: RunConfig, args) -> str:
    hover = cfg.hover()
    rows = []
    if args.constellation:
        const = _load_constellation(args.constellation, cfg)
        pe = constellation_error_probability(const, hover)
        rows.append([const.n, _fmt(const.delta_theta), _fmt(const.delta_rho), "file",
                     _fmt(mean_pairwise_distance(const.symbols)), _fmt(pe)])
    else:
        points, mode, center = _sweep(cfg)
        for n, dt, dr in points:
            const = _search(center, n, dt, dr, mode, cfg)
            pe = constellation_error_probability(const, hover)
            rows.append([n, _fmt(dt), _fmt(dr), mode,
                         _fmt(mean_pairwise_distance(const.symbols)), _fmt(pe)])
    head = ("N", "delta_theta_deg", "delta_rho_m", "mode", "mean_distance_m", "pe_analytic")
    return _header("pe", cfg, cfg.seed) + _csv(head, rows)


def cmd_montecarlo(cfg: RunConfig, args) -> str:
    hover = cfg.hover()
    seed = _seed(cfg)
    mc = cfg.section("montecarlo")
    trials = mc.get("trials", 10**6)
    if args.constellation:
        jobs = [(_load_constellation(args.constellation, cfg), "file")]
    else:
        points, mode, center = _sweep(cfg)
        jobs = [(_search(center, n, dt, dr, mode, cfg), mode) for n, dt, dr in points]
    seeds = np.random.SeedSequence(seed).spawn(len(jobs))
    rows = []
    for (const, mode), ss in zip(jobs, seeds):
        analytic = constellation_error_probability(const, hover)
        est, half = monte_carlo_pe(
            const, hover, trials, ss, mc.get("decision", "region"), mc.get("workers", 1)
        )
        rows.append([const.n, _fmt(const.delta_theta), _fmt(const.delta_rho), mode,
                     _fmt(analytic), _fmt(est), _fmt(half), trials])
    head = ("N", "delta_theta_deg", "delta_rho_m", "mode", "pe_analytic", "pe_mc",
            "ci95_half_width", "trials")
    return _header("montecarlo", cfg, seed) + _csv(head, rows)


def cmd_synth(cfg: RunConfig, args) -> str:
    sec = cfg.section("synth")
    seed = _seed(cfg)
    sensor = cfg.sensor()
    pos = sec.get("position", {"theta_deg": 0.0, "rho_m": 6.0})
    try:
        target = PolarPoint(pos["theta_deg"], pos["rho_m"], sensor.fov)
        hover = None if sec.get("static", False) else cfg.hover()
        cloud = synthesize_cloud(target, sensor, hover, sec.get("t_meas", 2.0), seed)
    except ValueError as e:
        raise ConfigError(f"synth: {e}") from None
    buf = io.StringIO()
    write_cloud_csv(cloud, buf)
    return _header("synth", cfg, seed, {"t_meas": cloud.t_meas}) + buf.getvalue()


def cmd_localize(cfg: RunConfig, args) -> str:
    sec = cfg.section("localize")
    src = args.input or sec.get("input")
    if not src:
        raise ConfigError("localize: no input point cloud (use --input or localize.input)")
    try:
        with open(src, newline="") as fh:
            cloud = read_cloud_csv(fh, sec.get("t_meas"))
    except OSError as e:
        raise ConfigError(f"{src}: cannot read point cloud: {e.strerror}") from None
    except ValueError as e:
        raise ConfigError(f"{src}: {e}") from None
    t_meas = sec.get("t_meas") or cloud.t_meas
    if not t_meas > 0:
        raise ConfigError(f"{src}: cannot infer t_meas; set localize.t_meas")
    params = cfg.dbscan(t_meas)
    clusters = localize_clusters(cloud, params, cfg.histogram(), cfg.sensor().fov)
    buf = io.StringIO()
    write_estimates_csv(clusters, buf)
    extra = {"min_pts": params.min_pts, "epsilon": params.epsilon, "t_meas": t_meas}
    return _header("localize", cfg, cfg.seed, extra) + buf.getvalue()


def cmd_traveltime(cfg: RunConfig, args) -> str:
    pid, flight = cfg.pid(), cfg.flight()
    points, mode, center = _sweep(cfg)
    rows = []
    for n, dt, dr in points:
        const = _search(center, n, dt, dr, mode, cfg)
        rows.append([n, _fmt(math.log2(n)), _fmt(dt), _fmt(dr), mode,
                     _fmt(mean_pairwise_distance(const.symbols)),
                     _fmt(mean_travel_time(const, pid, flight))])
    head = ("N", "log2N", "delta_theta_deg", "delta_rho_m", "mode", "mean_distance_m",
            "travel_time_s")
    return _header("traveltime", cfg, cfg.seed) + _csv(head, rows)


def cmd_compare(cfg: RunConfig, args) -> str:
    pid, flight = cfg.pid(), cfg.flight()
    points, _, center = _sweep(cfg)
    rows = []
    for n, dt, dr in points:
        ex = _search(center, n, dt, dr, "exhaustive", cfg)
        he = _search(center, n, dt, dr, "heuristic", cfg)
        d_ex = mean_pairwise_distance(ex.symbols)
        d_he = mean_pairwise_distance(he.symbols)
        ratio = d_he / d_ex if d_ex > 0 else 1.0
        rows.append([n, _fmt(dt), _fmt(dr), _fmt(d_ex), _fmt(d_he), _fmt(ratio),
                     _fmt(mean_travel_time(ex, pid, flight)),
                     _fmt(mean_travel_time(he, pid, flight))])
    head = ("N", "delta_theta_deg", "delta_rho_m", "exhaustive_mean_m", "heuristic_mean_m",
            "ratio", "exhaustive_travel_s", "heuristic_travel_s")
    return _header("compare-search", cfg, cfg.seed) + _csv(head, rows)


def cmd_scenario(cfg: RunConfig, args) -> str:
    seed = _seed(cfg)
    src = args.constellation
    if src is None and cfg.section("scenario").get("constellation_file"):
        src = cfg.section("scenario")["constellation_file"]
        if cfg.path is not None:
            # relative to the config file, not the working directory
            src = str(cfg.path.parent / src)
    if src:
        const = _load_constellation(src, cfg)
    else:
        doc = json.loads(cmd_design(cfg, args))
        const = Constellation.from_dict(doc, cfg.sensor().fov)
    timeline = run_scenario(cfg.scenario(const, seed))
    buf = io.StringIO()
    timeline.write_csv(buf)
    extra = {"status": timeline.status.replace("\n", " ")}
    out = outage_duration(timeline)
    extra["outage_s"] = "none" if out is None else repr(out)
    for k, v in timeline.components.items():
        extra[k] = repr(v)
    text = _header("scenario", cfg, seed, extra) + buf.getvalue()
    if timeline.failed:
        raise ScenarioFailed(text, timeline.status)
    return text


COMMANDS: dict[str, tuple[Callable, str]] = {
    "design": (cmd_design, "design a constellation and write it as JSON"),
    "pe": (cmd_pe, "analytic symbol error probability over a sweep"),
    "montecarlo": (cmd_montecarlo, "Monte Carlo symbol error rate with 95% CI"),
    "synth": (cmd_synth, "synthesize a radar point cloud CSV"),
    "localize": (cmd_localize, "localize UAVs in a point cloud CSV"),
    "traveltime": (cmd_traveltime, "mean PID travel time over a sweep"),
    "compare-search": (cmd_compare, "exhaustive vs heuristic search over a sweep"),
    "scenario": (cmd_scenario, "jamming/recovery timeline"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skyconst", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("-c", "--config", help="JSON run configuration")
        s.add_argument("-o", "--output", help="output file (default: config 'output' or stdout)")
        s.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config value by dotted path")
        s.add_argument("--seed", type=int, help="shorthand for --set seed=N")
        if name in ("pe", "montecarlo", "scenario"):
            s.add_argument("--constellation", help="constellation JSON file to evaluate")
        if name == "localize":
            s.add_argument("--input", help="point cloud CSV")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    func = COMMANDS[args.command][0]
    code = EXIT_OK
    try:
        cfg = RunConfig.load(args.config, overrides)
        text = func(cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SearchBudgetExceeded, FlightError, DesignError) as e:
        print(f"numerical guard: {e}", file=sys.stderr)
        return EXIT_GUARD
    except ScenarioFailed as e:
        text, status = e.args
        code = EXIT_SCENARIO
    dest = args.output or cfg.doc.get("output")
    if dest:
        atomic_write(dest, text)
    else:
        sys.stdout.write(text)
    if code == EXIT_SCENARIO:
        print(f"scenario {status}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
