"""Spatial constellations: symbol positions on a polar (theta, rho) lattice."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .geometry import DEFAULT_FOV_DEG, PolarPoint

LATTICE_RTOL = 1e-9


class OffLatticeError(ValueError):
    """Symbols do not differ by integer multiples of the lattice spacings."""


def _integer_steps(offsets: np.ndarray, step: float, axis: str) -> np.ndarray:
    k = np.rint(offsets / step)
    err = np.abs(offsets - k * step)
    tol = LATTICE_RTOL * np.maximum(np.abs(offsets), step)
    bad = np.flatnonzero(err > tol)
    if bad.size:
        raise OffLatticeError(
            f"symbol {int(bad[0])} is {offsets[bad[0]]:.12g} off the first symbol along "
            f"{axis}, not a multiple of the spacing {step:.12g}"
        )
    return k.astype(int)


def lattice_coordinates(
    symbols: Sequence[PolarPoint], delta_theta: float, delta_rho: float
) -> np.ndarray:
    """Integer (theta, rho) lattice indices of each symbol relative to symbol 0.

    Raises :class:`OffLatticeError` when a symbol is not on the lattice.
    """
    if not symbols:
        return np.zeros((0, 2), dtype=int)
    theta = np.array([s.theta for s in symbols], dtype=float)
    rho = np.array([s.rho for s in symbols], dtype=float)
    a = _integer_steps(theta - theta[0], delta_theta, "theta")
    b = _integer_steps(rho - rho[0], delta_rho, "rho")
    return np.column_stack([a, b])


@dataclass(frozen=True)
class Constellation:
    """Ordered symbol positions; the list index is the transmitted symbol value.

    ``channel_map[i]`` is the channel (e.g. center frequency in MHz) encoded by
    symbol ``i``. When omitted it defaults to the symbol indices.
    """

    symbols: tuple[PolarPoint, ...]
    delta_theta: float
    delta_rho: float
    channel_map: tuple[Any, ...] | None = None
    dist_max: float = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            raise ValueError("constellation needs at least one symbol")
        if not (self.delta_theta > 0 and self.delta_rho > 0):
            raise ValueError("lattice spacings must be positive")
        if self.channel_map is None:
            object.__setattr__(self, "channel_map", tuple(range(len(self.symbols))))
        else:
            object.__setattr__(self, "channel_map", tuple(self.channel_map))
        if len(self.channel_map) != len(self.symbols):
            raise ValueError(
                f"channel_map has {len(self.channel_map)} entries for {len(self.symbols)} symbols"
            )
        if len(set(self.channel_map)) != len(self.channel_map):
            raise ValueError("channel_map must map symbols to distinct channels")
        for s in self.symbols:
            if s.rho > self.dist_max:
                raise ValueError(f"symbol {s} beyond dist_max={self.dist_max}")
        coords = lattice_coordinates(self.symbols, self.delta_theta, self.delta_rho)
        if len({tuple(c) for c in coords}) != len(coords):
            raise ValueError("constellation symbols must be pairwise distinct")

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def bits(self) -> int:
        return math.ceil(math.log2(self.n)) if self.n > 1 else 0

    def lattice(self) -> np.ndarray:
        return lattice_coordinates(self.symbols, self.delta_theta, self.delta_rho)

    def theta_array(self) -> np.ndarray:
        return np.array([s.theta for s in self.symbols], dtype=float)

    def rho_array(self) -> np.ndarray:
        return np.array([s.rho for s in self.symbols], dtype=float)

    def symbol_for_channel(self, channel: Any) -> int:
        return self.channel_map.index(channel)

    def to_dict(self, report: dict[str, Any] | None = None) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "N": self.n,
            "delta_theta_deg": self.delta_theta,
            "delta_rho_m": self.delta_rho,
            "symbols": [
                {"index": i, "theta_deg": s.theta, "rho_m": s.rho, "channel": c}
                for i, (s, c) in enumerate(zip(self.symbols, self.channel_map))
            ],
        }
        if math.isfinite(self.dist_max):
            doc["dist_max_m"] = self.dist_max
        if report is not None:
            doc["report"] = report
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any], fov: float = DEFAULT_FOV_DEG) -> "Constellation":
        rows = sorted(doc["symbols"], key=lambda r: r["index"])
        if [r["index"] for r in rows] != list(range(len(rows))):
            raise ValueError("symbol indices must be 0..N-1")
        if "N" in doc and doc["N"] != len(rows):
            raise ValueError(f"N={doc['N']} but {len(rows)} symbols listed")
        return cls(
            symbols=tuple(PolarPoint(r["theta_deg"], r["rho_m"], fov) for r in rows),
            delta_theta=doc["delta_theta_deg"],
            delta_rho=doc["delta_rho_m"],
            channel_map=tuple(r["channel"] for r in rows),
            dist_max=doc.get("dist_max_m", math.inf),
        )

    def dumps(self, report: dict[str, Any] | None = None) -> str:
        return json.dumps(self.to_dict(report), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str, fov: float = DEFAULT_FOV_DEG) -> "Constellation":
        return cls.from_dict(json.loads(text), fov)
