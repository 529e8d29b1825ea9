"""Shared builders and reference oracles for the test suite."""

import math

import numpy as np

from skyconst.constellation import Constellation
from skyconst.geometry import PolarPoint


def lattice(n_theta, n_rho, d_theta=2.0, d_rho=0.1, theta0=0.0, rho0=5.0):
    """Full ``n_theta x n_rho`` lattice, theta-major symbol order."""
    pts = [
        PolarPoint(theta0 + i * d_theta, rho0 + j * d_rho)
        for i in range(n_theta)
        for j in range(n_rho)
    ]
    return Constellation(pts, d_theta, d_rho)


def naive_dbscan(theta, rho, eps, min_pts, dist_max):
    """Textbook DBSCAN with an O(n^2) neighbor scan; -1 marks noise."""
    n = len(theta)
    x = [r * math.sin(math.radians(t)) for t, r in zip(theta, rho)]
    y = [r * math.cos(math.radians(t)) for t, r in zip(theta, rho)]
    ok = [r <= dist_max for r in rho]

    def region(i):
        return [j for j in range(n) if ok[j] and math.hypot(x[i] - x[j], y[i] - y[j]) <= eps]

    labels = [None] * n
    c = -1
    for i in range(n):
        if labels[i] is not None:
            continue
        if not ok[i]:
            labels[i] = -1
            continue
        nb = region(i)
        if len(nb) < min_pts:
            labels[i] = -1
            continue
        c += 1
        labels[i] = c
        seeds = [j for j in nb if j != i]
        while seeds:
            j = seeds.pop(0)
            if labels[j] == -1:
                labels[j] = c
            if labels[j] is not None:
                continue
            labels[j] = c
            nbj = region(j)
            if len(nbj) >= min_pts:
                seeds.extend(nbj)
    return np.array(labels)


def same_partition(a, b):
    if not np.array_equal(a == -1, b == -1):
        return False
    mapping = {}
    for u, v in zip(a, b):
        if u == -1:
            continue
        if mapping.setdefault(u, v) != v:
            return False
    return len(set(mapping.values())) == len(mapping)
