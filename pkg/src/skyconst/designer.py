"""Constellation design: spacings from an error budget, candidate grid, subset search.

The selected constellation is the ``N``-subset of an ``N x N`` polar grid with
the smallest mean pairwise chord distance. Two searches are provided: an exact
one, and a linear-time heuristic that keeps the ``N`` candidates nearest the
grid's starting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from .constellation import Constellation
from .error_model import (
    HoverModel,
    NeighborProfile,
    constellation_error_probability,
    q_function,
    symbol_error_probability,
)
from .geometry import (
    DEFAULT_FOV_DEG,
    PolarPoint,
    mean_pairwise_distance,
    pairwise_distances,
)

SUBSET_BUDGET = 10**8
_ENUM_CHUNK = 1 << 15
_TIE_RTOL = 1e-12


class SearchBudgetExceeded(RuntimeError):
    """The exact search would visit more subsets than allowed."""


class DesignError(RuntimeError):
    """A designed constellation failed its post-verification."""


@dataclass(frozen=True)
class CandidateGrid:
    center: PolarPoint
    candidates: tuple[PolarPoint, ...]
    n: int
    delta_theta: float
    delta_rho: float

    def cost_matrix(self) -> np.ndarray:
        return pairwise_distances(self.candidates)


@dataclass
class DesignReport:
    pe_analytic: float
    mean_distance: float
    delta_theta: float
    delta_rho: float
    mode: str
    xi: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        d = {
            "pe_analytic": self.pe_analytic,
            "mean_distance_m": self.mean_distance,
            "delta_theta_deg": self.delta_theta,
            "delta_rho_m": self.delta_rho,
            "mode": self.mode,
            "xi": self.xi,
        }
        d.update(self.extra)
        return d


def spacing_from_quotient_db(sigma: float, quotient_db: float) -> float:
    """Spacing whose ratio to ``sigma`` is ``quotient_db`` in decibels (10*log10)."""
    return sigma * 10.0 ** (quotient_db / 10.0)


def _bisect_half_spacing(n: int, sigma: float, budget: float, rtol: float) -> float:
    """Smallest spacing ``d`` with ``n * Q((d/2)/sigma) <= budget``."""
    target = budget / n
    if target >= 0.5:
        return 0.0
    lo, hi = 0.0, 2.0 * sigma
    while q_function((hi / 2) / sigma) > target:
        lo, hi = hi, hi * 2
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if q_function((mid / 2) / sigma) > target:
            lo = mid
        else:
            hi = mid
    return hi


def solve_deltas(
    hover: HoverModel,
    xi: float,
    worst_profile: NeighborProfile | tuple[int, int] = NeighborProfile(2, 2),
    rtol: float = 1e-6,
) -> tuple[float, float]:
    """Minimal (delta_theta, delta_rho) keeping the worst-profile symbol error <= xi.

    The budget is split equally between the axes that have neighbors; an axis
    without neighbors is unconstrained and gets spacing 0.
    """
    if not (0 < xi < 1):
        raise ValueError("xi must lie strictly between 0 and 1")
    n_theta, n_rho = int(worst_profile[0]), int(worst_profile[1])
    active = (n_theta > 0) + (n_rho > 0)
    if active == 0:
        return 0.0, 0.0
    budget = xi / active
    d_theta = _bisect_half_spacing(n_theta, hover.sigma_theta, budget, rtol) if n_theta else 0.0
    d_rho = _bisect_half_spacing(n_rho, hover.sigma_rho, budget, rtol) if n_rho else 0.0
    return d_theta, d_rho


def build_grid(
    p_c: PolarPoint,
    n: int,
    delta_theta: float,
    delta_rho: float,
    fov: float = DEFAULT_FOV_DEG,
    dist_max: float = math.inf,
) -> CandidateGrid:
    """The ``n*n`` candidate grid; candidates ordered theta-major, then rho."""
    if n < 1:
        raise ValueError("N must be >= 1")
    half = delta_theta * (n - 1) / 2
    thetas = [p_c.theta - half + k * delta_theta for k in range(n)]
    rhos = [p_c.rho + k * delta_rho for k in range(n)]
    problems = []
    if thetas[0] < -fov - 1e-9 or thetas[-1] > fov + 1e-9:
        problems.append(f"theta range [{thetas[0]:.6g}, {thetas[-1]:.6g}] exceeds +/-{fov} deg")
    if rhos[-1] > dist_max:
        problems.append(f"rho max {rhos[-1]:.6g} m exceeds dist_max={dist_max} m")
    if problems:
        raise ValueError("grid escapes the sensing area: " + "; ".join(problems))
    cands = tuple(PolarPoint(t, r, fov) for t in thetas for r in rhos)
    return CandidateGrid(p_c, cands, n, delta_theta, delta_rho)


def _recenter(grid: CandidateGrid, chosen: Sequence[int], channels=None) -> Constellation:
    pts = [grid.candidates[i] for i in sorted(chosen)]
    shift = grid.center.theta - math.fsum(p.theta for p in pts) / len(pts)
    fov = grid.center.fov
    symbols = tuple(PolarPoint(p.theta + shift, p.rho, fov) for p in pts)
    return Constellation(symbols, grid.delta_theta, grid.delta_rho, channels)


def _enumerate_best(d: np.ndarray, n: int) -> tuple[int, ...]:
    """Plain lexicographic enumeration of every n-subset."""
    L = d.shape[0]
    iu = np.triu_indices(n, k=1)
    best_cost, best = math.inf, None
    it = combinations(range(L), n)
    while True:
        block = np.array(list(_take(it, _ENUM_CHUNK)), dtype=np.intp)
        if block.size == 0:
            break
        costs = d[block[:, iu[0]], block[:, iu[1]]].sum(axis=1)
        k = int(np.argmin(costs))
        if costs[k] < best_cost * (1 - _TIE_RTOL):
            best_cost, best = float(costs[k]), tuple(int(v) for v in block[k])
    return best


def _take(it, k):
    for _ in range(k):
        try:
            yield next(it)
        except StopIteration:
            return


def _branch_and_bound(
    d: np.ndarray, n: int, incumbent: float, budget: int
) -> tuple[tuple[int, ...], int]:
    """Exact minimum-sum n-subset by depth-first search in lexicographic order.

    A partial set S with m slots left is pruned when even the cheapest
    completion cannot beat the incumbent. For candidate c the completion cost
    is at least h(c) = sum_{s in S} d(c, s) + 0.5 * (sum of the m-1 smallest
    distances from c to other remaining candidates), and the m smallest h
    bound the whole completion.
    """
    L = d.shape[0]
    best_cost = incumbent * (1 + 1e-9) + 1e-12
    best: tuple[int, ...] | None = None
    visited = 0
    sorted_rows = {}

    def half_nearest(start: int, k: int) -> np.ndarray:
        # 0.5 * sum of the k smallest distances from each c >= start to others >= start
        key = (start, k)
        if key not in sorted_rows:
            if k == 0:
                sorted_rows[key] = np.zeros(L - start)
            else:
                sub = d[start:, start:].copy()
                np.fill_diagonal(sub, np.inf)
                part = np.partition(sub, k - 1, axis=1)[:, :k]
                sorted_rows[key] = 0.5 * part.sum(axis=1)
        return sorted_rows[key]

    chosen: list[int] = []

    def recurse(start: int, cost: float, g: np.ndarray) -> None:
        nonlocal best_cost, best, visited
        visited += 1
        if visited > budget:
            raise SearchBudgetExceeded(
                f"exact search exceeded {budget} visited subsets; use heuristic_search"
            )
        m = n - len(chosen)
        if m == 0:
            if cost < best_cost * (1 - _TIE_RTOL):
                best_cost, best = cost, tuple(chosen)
            return
        avail = L - start
        if avail < m:
            return
        h = g[start:] + half_nearest(start, m - 1)
        if m < avail:
            lb = cost + float(np.partition(h, m - 1)[:m].sum())
        else:
            lb = cost + float(h.sum())
        if lb >= best_cost * (1 - _TIE_RTOL):
            return
        for c in range(start, L - m + 1):
            # c becomes the smallest index of the completion
            rest = np.sort(h[c - start + 1 :])[: m - 1].sum() if m > 1 else 0.0
            if cost + h[c - start] + rest >= best_cost * (1 - _TIE_RTOL):
                continue
            chosen.append(c)
            recurse(c + 1, cost + g[c], g + d[c])
            chosen.pop()

    recurse(0, 0.0, np.zeros(L))
    if best is None:
        raise RuntimeError("branch-and-bound lost the incumbent")
    return best, visited


def _heuristic_indices(grid: CandidateGrid, n: int) -> list[int]:
    dist = pairwise_distances((grid.center,) + grid.candidates)[0, 1:]
    order = np.lexsort((np.arange(len(dist)), np.round(dist, 12)))
    return sorted(int(i) for i in order[:n])


def exhaustive_search(
    grid: CandidateGrid, n: int, budget: int = SUBSET_BUDGET, channels=None
) -> Constellation:
    """Globally optimal ``n``-subset (minimum mean pairwise distance).

    When C(L, n) fits in ``budget`` every subset is scored. Larger grids use an
    exact branch-and-bound over the same lexicographic subset order, which
    returns the identical argmin; ``budget`` then caps the visited nodes.
    Ties go to the lexicographically first subset of candidate indices.
    """
    L = len(grid.candidates)
    if not (1 <= n <= L):
        raise ValueError(f"need 1 <= N <= L={L}")
    d = grid.cost_matrix()
    if math.comb(L, n) <= budget:
        best = _enumerate_best(d, n)
    else:
        heur = _heuristic_indices(grid, n)
        incumbent = float(d[np.ix_(heur, heur)].sum() / 2)
        best, _ = _branch_and_bound(d, n, incumbent, budget)
    return _recenter(grid, best, channels)


def heuristic_search(grid: CandidateGrid, n: int, channels=None) -> Constellation:
    """Keep the ``n`` candidates closest to the grid's starting point (O(L))."""
    L = len(grid.candidates)
    if not (1 <= n <= L):
        raise ValueError(f"need 1 <= N <= L={L}")
    return _recenter(grid, _heuristic_indices(grid, n), channels)


def design(
    channels: Sequence[Any],
    hover: HoverModel,
    p_c: PolarPoint,
    xi: float | None = None,
    quotient_db: float | None = None,
    mode: str = "exhaustive",
    deltas: tuple[float, float] | None = None,
    fov: float = DEFAULT_FOV_DEG,
    dist_max: float = math.inf,
    budget: int = SUBSET_BUDGET,
) -> tuple[Constellation, DesignReport]:
    """Full design pipeline for one symbol per channel.

    Spacings come from exactly one of ``xi`` (worst-case error budget),
    ``quotient_db`` (spacing/sigma ratio in dB) or explicit ``deltas``.
    """
    n = len(channels)
    if n < 1:
        raise ValueError("need at least one channel")
    if sum(v is not None for v in (xi, quotient_db, deltas)) != 1:
        raise ValueError("give exactly one of xi, quotient_db, deltas")
    if xi is not None:
        d_theta, d_rho = solve_deltas(hover, xi)
    elif quotient_db is not None:
        d_theta = spacing_from_quotient_db(hover.sigma_theta, quotient_db)
        d_rho = spacing_from_quotient_db(hover.sigma_rho, quotient_db)
    else:
        d_theta, d_rho = deltas
    grid = build_grid(p_c, n, d_theta, d_rho, fov, dist_max)
    if mode == "exhaustive":
        const = exhaustive_search(grid, n, budget, tuple(channels))
    elif mode == "heuristic":
        const = heuristic_search(grid, n, tuple(channels))
    else:
        raise ValueError(f"unknown search mode {mode!r}")
    pe = constellation_error_probability(const, hover)
    if xi is not None:
        bound = symbol_error_probability((2, 2), d_theta, d_rho, hover)
        if pe > bound * (1 + 1e-12) or pe > xi:
            raise DesignError(f"designed P_e={pe:.3e} exceeds xi={xi:.3e}")
    report = DesignReport(
        pe_analytic=pe,
        mean_distance=mean_pairwise_distance(const.symbols),
        delta_theta=d_theta,
        delta_rho=d_rho,
        mode=mode,
        xi=xi,
        extra={} if quotient_db is None else {"quotient_db": quotient_db},
    )
    return const, report
