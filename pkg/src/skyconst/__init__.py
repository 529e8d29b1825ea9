"""Spatial constellations for UAV channel signalling under jamming."""

__version__ = "0.1.0"

from .constellation import Constellation, OffLatticeError
from .designer import (
    build_grid,
    design,
    exhaustive_search,
    heuristic_search,
    solve_deltas,
    spacing_from_quotient_db,
)
from .error_model import (
    HoverModel,
    NeighborProfile,
    constellation_error_probability,
    monte_carlo_pe,
    neighbor_counts,
    q_function,
    symbol_error_probability,
)
from .flight_sim import FlightConfig, PidParams, fly_to, mean_travel_time
from .geometry import CartesianPoint, PolarPoint, distance, mean_pairwise_distance
from .localization import (
    DbscanParams,
    HistogramConfig,
    compute_min_pts,
    dbscan,
    estimate_position,
    localize,
)
from .protocol_sim import ScenarioConfig, decode_symbol, reference_scenario, run_scenario
from .sensor_sim import SensorModel, expected_point_count, synthesize_cloud

__all__ = [
    "CartesianPoint",
    "Constellation",
    "DbscanParams",
    "FlightConfig",
    "HistogramConfig",
    "HoverModel",
    "NeighborProfile",
    "OffLatticeError",
    "PidParams",
    "PolarPoint",
    "ScenarioConfig",
    "SensorModel",
    "build_grid",
    "compute_min_pts",
    "constellation_error_probability",
    "dbscan",
    "decode_symbol",
    "design",
    "distance",
    "estimate_position",
    "exhaustive_search",
    "expected_point_count",
    "fly_to",
    "heuristic_search",
    "localize",
    "mean_pairwise_distance",
    "mean_travel_time",
    "monte_carlo_pe",
    "neighbor_counts",
    "reference_scenario",
    "q_function",
    "run_scenario",
    "solve_deltas",
    "spacing_from_quotient_db",
    "symbol_error_probability",
    "synthesize_cloud",
]
