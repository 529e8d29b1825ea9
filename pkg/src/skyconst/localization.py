"""Two-stage UAV localization from radar point clouds.

Stage one is DBSCAN with ``min_pts`` derived from the expected detection
density at the edge of the sensing range. Stage two refines each cluster to a
single position by taking the peak of power-weighted histograms along theta
and rho independently.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from typing import TextIO

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PolarPoint, polar_to_xy
from .sensor_sim import PointCloud, SensorModel, expected_point_count

NOISE = -1
ESTIMATE_HEADER = ("object_id", "theta_deg", "rho_m", "mass")


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float = 0.5
    min_pts: int = 5
    dist_max: float = 12.0

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and self.dist_max > 0):
            raise ValueError("epsilon and dist_max must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")


@dataclass(frozen=True)
class HistogramConfig:
    bin_width_theta: float = 1.0
    bin_width_rho: float = 0.05

    def __post_init__(self) -> None:
        if not (self.bin_width_theta > 0 and self.bin_width_rho > 0):
            raise ValueError("bin widths must be positive")


@dataclass
class Cluster:
    member_indices: tuple[int, ...]
    estimate: PolarPoint | None = None
    mass: float = 0.0


def compute_min_pts(alpha: float, model: SensorModel, t_meas: float) -> int:
    """``ceil(alpha * F(t_meas, dist_max))``: density at the far edge bounds the rest."""
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    return max(1, math.ceil(alpha * expected_point_count(model, t_meas, model.dist_max)))


def dbscan_labels(cloud: PointCloud, params: DbscanParams) -> np.ndarray:
    """Cluster label per point (``-1`` for noise), clusters numbered by discovery.

    Points are visited in input order. A border point belongs to the first
    cluster whose expansion reaches it. Points beyond ``dist_max`` are noise
    and never count as anyone's neighbor.
    """
    theta, rho, _ = cloud.arrays()
    n = len(theta)
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels
    valid = np.flatnonzero(rho <= params.dist_max)
    if valid.size == 0:
        return labels
    x, y = polar_to_xy(theta[valid], rho[valid])
    tree = cKDTree(np.column_stack([x, y]))
    local = tree.query_ball_point(np.column_stack([x, y]), r=params.epsilon)
    neighbors = [valid[np.sort(np.asarray(nb, dtype=int))] for nb in local]
    slot = np.full(n, -1, dtype=int)
    slot[valid] = np.arange(valid.size)
    core = np.zeros(n, dtype=bool)
    core[valid] = [len(nb) >= params.min_pts for nb in neighbors]

    visited = np.zeros(n, dtype=bool)
    next_label = 0
    for i in valid:
        if visited[i] or not core[i]:
            continue
        label = next_label
        next_label += 1
        visited[i] = True
        labels[i] = label
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for k in neighbors[slot[j]]:
                if labels[k] == NOISE:
                    labels[k] = label
                if core[k] and not visited[k]:
                    visited[k] = True
                    queue.append(k)
    return labels


def dbscan(cloud: PointCloud, params: DbscanParams) -> tuple[list[Cluster], set[int]]:
    labels = dbscan_labels(cloud, params)
    n_clusters = int(labels.max()) + 1 if labels.size else 0
    clusters = [
        Cluster(tuple(int(i) for i in np.flatnonzero(labels == c))) for c in range(n_clusters)
    ]
    noise = {int(i) for i in np.flatnonzero(labels == NOISE)}
    return clusters, noise


def _weighted_peak(values: np.ndarray, weights: np.ndarray, width: float) -> float:
    # Bins are centered on integer multiples of the width.
    idx = np.rint(values / width).astype(np.int64)
    lo = idx.min()
    mass = np.bincount(idx - lo, weights=weights)
    hist = mass / weights.sum()
    peak = hist.max()
    ties = np.flatnonzero(hist >= peak * (1 - 1e-12))
    if ties.size > 1:
        mean = float(np.dot(values, weights) / weights.sum())
        centers = (ties + lo) * width
        ties = ties[np.argsort(np.abs(centers - mean), kind="stable")]
    return round(float((ties[0] + lo) * width), 12)


def estimate_position(
    cloud: PointCloud, cluster: Cluster, cfg: HistogramConfig, fov: float = 90.0
) -> PolarPoint:
    """Peak of the power-weighted theta and rho histograms of a cluster."""
    if not cluster.member_indices:
        raise ValueError("cannot estimate the position of an empty cluster")
    theta, rho, power = cloud.arrays()
    m = np.asarray(cluster.member_indices, dtype=int)
    th = _weighted_peak(theta[m], power[m], cfg.bin_width_theta)
    r = _weighted_peak(rho[m], power[m], cfg.bin_width_rho)
    return PolarPoint(float(np.clip(th, -fov, fov)), max(r, 0.0), fov)


def localize_clusters(
    cloud: PointCloud, params: DbscanParams, cfg: HistogramConfig, fov: float = 90.0
) -> list[Cluster]:
    """Clusters with estimates and power mass, heaviest first."""
    clusters, _ = dbscan(cloud, params)
    _, _, power = cloud.arrays()
    for c in clusters:
        c.mass = float(power[list(c.member_indices)].sum())
        c.estimate = estimate_position(cloud, c, cfg, fov)
    return sorted(clusters, key=lambda c: -c.mass)


def localize(
    cloud: PointCloud, params: DbscanParams, cfg: HistogramConfig, fov: float = 90.0
) -> list[PolarPoint]:
    """One position estimate per detected object, heaviest cluster first."""
    return [c.estimate for c in localize_clusters(cloud, params, cfg, fov)]


def write_estimates_csv(clusters: list[Cluster], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ESTIMATE_HEADER)
    for i, c in enumerate(clusters):
        w.writerow([i, repr(c.estimate.theta), repr(c.estimate.rho), repr(c.mass)])
