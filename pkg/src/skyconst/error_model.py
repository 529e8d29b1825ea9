"""Symbol error probability of a hovering UAV on a polar constellation.

The hover position around symbol ``s`` is modeled as independent Gaussians on
each polar axis, ``theta ~ N(s_theta, sigma_theta)`` and
``rho ~ N(s_rho, sigma_rho)``. A symbol is in error when the position leaves
its rectangular decision region, whose sides sit halfway to the lattice
neighbors and are open (infinite) where no neighbor exists.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .constellation import Constellation

MC_BLOCK = 1 << 16


@dataclass(frozen=True)
class HoverModel:
    """Per-axis standard deviation of the hover position (degrees, meters)."""

    sigma_theta: float = 0.9
    sigma_rho: float = 0.05

    def __post_init__(self) -> None:
        if not (self.sigma_theta > 0 and self.sigma_rho > 0):
            raise ValueError("hover sigmas must be positive")


@dataclass(frozen=True)
class SymbolRegion:
    theta_low: float
    theta_high: float
    rho_low: float
    rho_high: float

    def __post_init__(self) -> None:
        if not (self.theta_low < self.theta_high and self.rho_low < self.rho_high):
            raise ValueError("region bounds must satisfy low < high on each axis")

    def contains(self, theta: float, rho: float) -> bool:
        return self.theta_low < theta < self.theta_high and self.rho_low < rho < self.rho_high


class NeighborProfile(NamedTuple):
    n_theta: int
    n_rho: int


def q_function(x):
    """Gaussian upper-tail probability Q(x) = P(Z > x), Z ~ N(0, 1)."""
    return ndtr(np.negative(x)) if np.ndim(x) else float(ndtr(-x))


def neighbor_counts(constellation: Constellation, symbol_index: int) -> NeighborProfile:
    """Number of lattice neighbors of one symbol along each axis."""
    coords = constellation.lattice()
    occupied = {tuple(c) for c in coords}
    a, b = coords[symbol_index]
    n_theta = ((a - 1, b) in occupied) + ((a + 1, b) in occupied)
    n_rho = ((a, b - 1) in occupied) + ((a, b + 1) in occupied)
    return NeighborProfile(int(n_theta), int(n_rho))


def symbol_regions(constellation: Constellation) -> list[SymbolRegion]:
    coords = constellation.lattice()
    occupied = {tuple(c) for c in coords}
    half_t = constellation.delta_theta / 2
    half_r = constellation.delta_rho / 2
    regions = []
    for (a, b), s in zip(coords, constellation.symbols):
        regions.append(
            SymbolRegion(
                s.theta - half_t if (a - 1, b) in occupied else -math.inf,
                s.theta + half_t if (a + 1, b) in occupied else math.inf,
                s.rho - half_r if (a, b - 1) in occupied else -math.inf,
                s.rho + half_r if (a, b + 1) in occupied else math.inf,
            )
        )
    return regions


def _table(qt: float, qr: float) -> dict[tuple[int, int], float]:
    # qt = Q((dtheta/2)/sigma_theta), qr = Q((drho/2)/sigma_rho)
    return {
        (2, 2): 1 - (1 - 2 * qt) * (1 - 2 * qr),
        (2, 1): 1 - (1 - 2 * qt) * (1 - qr),
        (2, 0): 2 * qt,
        (1, 2): 1 - (1 - qt) * (1 - 2 * qr),
        (1, 1): 1 - (1 - qt) * (1 - qr),
        (1, 0): qt,
        (0, 2): 2 * qr,
        (0, 1): qr,
        (0, 0): 0.0,
    }


def symbol_error_probability(
    profile: NeighborProfile | tuple[int, int],
    delta_theta: float,
    delta_rho: float,
    hover: HoverModel,
) -> float:
    """Per-symbol error probability for a given neighbor profile."""
    if not (delta_theta > 0 and delta_rho > 0):
        raise ValueError("spacings must be positive")
    key = (int(profile[0]), int(profile[1]))
    if not (0 <= key[0] <= 2 and 0 <= key[1] <= 2):
        raise ValueError(f"neighbor counts must lie in 0..2, got {key}")
    qt = q_function((delta_theta / 2) / hover.sigma_theta)
    qr = q_function((delta_rho / 2) / hover.sigma_rho)
    return _table(qt, qr)[key]


def constellation_error_probability(constellation: Constellation, hover: HoverModel) -> float:
    """Average symbol error probability over equiprobable symbols."""
    per_symbol = [
        symbol_error_probability(
            neighbor_counts(constellation, i),
            constellation.delta_theta,
            constellation.delta_rho,
            hover,
        )
        for i in range(constellation.n)
    ]
    return math.fsum(per_symbol) / constellation.n


def _region_arrays(constellation: Constellation) -> np.ndarray:
    regions = symbol_regions(constellation)
    return np.array(
        [[r.theta_low, r.theta_high, r.rho_low, r.rho_high] for r in regions], dtype=float
    )


def nearest_symbol(theta, rho, constellation: Constellation) -> np.ndarray:
    """Vectorized nearest-symbol decision in spacing-normalized coordinates.

    Exact ties resolve to the lowest symbol index.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    dt = (theta[:, None] - constellation.theta_array()[None, :]) / constellation.delta_theta
    dr = (rho[:, None] - constellation.rho_array()[None, :]) / constellation.delta_rho
    return np.argmin(dt * dt + dr * dr, axis=1)


def _mc_block(args) -> int:
    seed, count, constellation, hover, decision = args
    rng = np.random.default_rng(seed)
    sym = rng.integers(0, constellation.n, size=count)
    theta = constellation.theta_array()[sym] + rng.normal(0.0, hover.sigma_theta, size=count)
    rho = constellation.rho_array()[sym] + rng.normal(0.0, hover.sigma_rho, size=count)
    if decision == "region":
        b = _region_arrays(constellation)[sym]
        inside = (b[:, 0] < theta) & (theta < b[:, 1]) & (b[:, 2] < rho) & (rho < b[:, 3])
        return int(count - np.count_nonzero(inside))
    if decision == "nearest":
        return int(np.count_nonzero(nearest_symbol(theta, rho, constellation) != sym))
    raise ValueError(f"unknown decision rule {decision!r}")


def monte_carlo_pe(
    constellation: Constellation,
    hover: HoverModel,
    trials: int,
    rng: int | np.random.SeedSequence | None = 0,
    decision: str = "region",
    workers: int = 1,
) -> tuple[float, float]:
    """Empirical symbol error rate and the half-width of its 95% Wald interval.

    Trials are split into fixed-size blocks, each seeded from the master seed
    by block index, so the result does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ss = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(rng)
    n_blocks = -(-trials // MC_BLOCK)
    seeds = ss.spawn(n_blocks)
    sizes = [MC_BLOCK] * (n_blocks - 1) + [trials - MC_BLOCK * (n_blocks - 1)]
    jobs = [(s, c, constellation, hover, decision) for s, c in zip(seeds, sizes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(_mc_block, jobs))
    else:
        errors = sum(map(_mc_block, jobs))
    p = errors / trials
    half = 1.959963984540054 * math.sqrt(p * (1 - p) / trials)
    return p, half
