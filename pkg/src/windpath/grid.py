"""Grid geometry: cell layout, coordinate conversions, occupancy maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Regular 3D grid: cell counts, world minimum corner, cell side lengths."""

    dims: tuple[int, int, int]
    mins: tuple[float, float, float] = (0.0, 0.0, 0.0)
    cell: tuple[float, float, float] = (10.0, 10.0, 10.0)

    def __post_init__(self):
        if any(int(d) < 1 for d in self.dims):
            raise ValueError(f"all dims must be >= 1, got {self.dims}")
        if any(c <= 0 for c in self.cell):
            raise ValueError(f"all cell sides must be > 0, got {self.cell}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "mins", tuple(float(m) for m in self.mins))
        object.__setattr__(self, "cell", tuple(float(c) for c in self.cell))

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def maxs(self) -> tuple[float, float, float]:
        return tuple(m + n * c for m, n, c in zip(self.mins, self.dims, self.cell))

    @property
    def diagonal(self) -> float:
        """Euclidean length of the domain box diagonal (m)."""
        return float(np.hypot.reduce([n * c for n, c in zip(self.dims, self.cell)]))

    def flat_index(self, c: tuple[int, int, int]) -> int:
        # x-fastest row-major
        nx, ny, _ = self.dims
        return c[0] + nx * (c[1] + ny * c[2])

    def unflatten(self, i: int) -> tuple[int, int, int]:
        nx, ny, _ = self.dims
        return (i % nx, (i // nx) % ny, i // (nx * ny))

    def in_bounds(self, c: tuple[int, int, int]) -> bool:
        return all(0 <= ci < d for ci, d in zip(c, self.dims))

    def contains_point(self, p) -> bool:
        return all(m <= x <= M for x, m, M in zip(p, self.mins, self.maxs))


def _round_half_away(x: float) -> int:
    # round() and np.round are half-to-even; the conversion uses half away from zero
    if x >= 0.0:
        return int(np.floor(x + 0.5))
    return -int(np.floor(-x + 0.5))


def cell_of(p, spec: GridSpec) -> tuple[int, int, int]:
    """World position -> cell index, per-axis round((p - min)/side)."""
    if not spec.contains_point(p):
        raise ValueError(f"position {tuple(p)} outside domain")
    c = []
    for x, m, s, n in zip(p, spec.mins, spec.cell, spec.dims):
        i = _round_half_away((x - m) / s)
        c.append(min(max(i, 0), n - 1))
    return tuple(c)


def center_of(c, spec: GridSpec) -> tuple[float, float, float]:
    """Cell index -> world coordinates of the cell center."""
    if not spec.in_bounds(c):
        raise ValueError(f"cell {tuple(c)} out of range for dims {spec.dims}")
    return tuple((ci + 0.5) * s + m for ci, s, m in zip(c, spec.cell, spec.mins))


@dataclass
class CityMap:
    """Occupancy grid over a GridSpec; True marks a building cell."""

    spec: GridSpec
    occupied: np.ndarray = field(default=None)  # bool, x-fastest flat

    def __post_init__(self):
        if self.occupied is None:
            self.occupied = np.zeros(self.spec.n_cells, dtype=bool)
        else:
            self.occupied = np.asarray(self.occupied, dtype=bool).reshape(-1)
            if self.occupied.size != self.spec.n_cells:
                raise ValueError(
                    f"occupancy count {self.occupied.size} != n_cells {self.spec.n_cells}"
                )

    def is_occupied(self, c) -> bool:
        return bool(self.occupied[self.spec.flat_index(c)])

    def is_free(self, c) -> bool:
        return self.spec.in_bounds(c) and not self.is_occupied(c)

    def add_box(self, lo, hi) -> None:
        """Mark an axis-aligned cell box [lo, hi] (inclusive indices) occupied."""
        nx, ny, nz = self.spec.dims
        occ = self.occupied.reshape(nz, ny, nx)  # z, y, x for numpy slicing
        x0, y0, z0 = lo
        x1, y1, z1 = hi
        if not (self.spec.in_bounds(lo) and self.spec.in_bounds(hi)):
            raise ValueError(f"building box {lo}..{hi} out of range")
        occ[z0 : z1 + 1, y0 : y1 + 1, x0 : x1 + 1] = True

    def free_cells(self) -> list[tuple[int, int, int]]:
        return [self.spec.unflatten(i) for i in np.flatnonzero(~self.occupied)]
