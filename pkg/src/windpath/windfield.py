"""3D wind vector fields: procedural generation, sampling, and file I/O.

The generator produces a uniform inflow rotated to one of four compass
directions, optionally shaped by a log-law vertical profile and an
exponential wake deficit behind buildings. Externally computed fields can be
imported through the same binary file format.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import CityMap, GridSpec

MAGIC = b"AWND"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIII6d")  # magic, version, nx, ny, nz, mins, cells


class FieldFormatError(ValueError):
    """Malformed field file: bad magic, version, or payload length."""


@dataclass(frozen=True)
class WindConfig:
    """Procedural inflow parameters.

    direction_deg: angle from the positive X-axis, one of 0/90/180/270.
    speed: inflow magnitude (m/s).
    shear_roughness: log-law roughness length z0 in meters; 0 disables the
        vertical profile.
    wake_deficit: fractional speed reduction immediately behind a building.
    wake_decay: e-folding length of wake recovery, in cells.
    """

    direction_deg: int = 0
    speed: float = 4.0
    shear_roughness: float = 0.0
    wake_deficit: float = 0.0
    wake_decay: float = 2.0

    def __post_init__(self):
        if self.direction_deg not in (0, 90, 180, 270):
            raise ValueError(f"direction must be 0/90/180/270, got {self.direction_deg}")
        if self.speed < 0:
            raise ValueError("speed must be >= 0")
        if not 0.0 <= self.wake_deficit <= 1.0:
            raise ValueError("wake_deficit must be in [0, 1]")
        if self.wake_decay <= 0:
            raise ValueError("wake_decay must be > 0")

    @property
    def name(self) -> str:
        return f"D{self.direction_deg}-{self.speed:g}"


def parse_field_name(name: str) -> WindConfig:
    """Parse a 'D<deg>-<speed>' field name like D90-4."""
    if not name.startswith("D") or "-" not in name:
        raise ValueError(f"bad wind field name {name!r}, expected D<deg>-<speed>")
    deg_s, _, speed_s = name[1:].partition("-")
    try:
        deg = int(deg_s)
        speed = float(speed_s)
    except ValueError as e:
        raise ValueError(f"bad wind field name {name!r}") from e
    return WindConfig(direction_deg=deg, speed=speed)


class WindField:
    """Immutable cell-centered wind field over a GridSpec."""

    def __init__(self, spec: GridSpec, vectors: np.ndarray):
        vectors = np.ascontiguousarray(vectors, dtype=np.float32).reshape(-1, 3)
        if vectors.shape[0] != spec.n_cells:
            raise ValueError(
                f"vector count {vectors.shape[0]} != n_cells {spec.n_cells}"
            )
        if not np.all(np.isfinite(vectors)):
            raise ValueError("wind vectors must be finite")
        self.spec = spec
        self.vectors = vectors
        self.vectors.setflags(write=False)

    def at_cell(self, c) -> np.ndarray:
        return self.vectors[self.spec.flat_index(c)]

    def sample(self, p) -> tuple[float, float, float]:
        """Trilinear interpolation at world position p; clamps within the
        outer half-cell margin, errors outside the domain."""
        if not self.spec.contains_point(p):
            raise ValueError(f"position {tuple(p)} outside domain")
        return self.sample_clamped(p)

    def sample_clamped(self, p) -> tuple[float, float, float]:
        """Like sample() but clamps any position into the domain first."""
        nx, ny, nz = self.spec.dims
        return kernels.trilinear_sample(
            self.vectors, nx, ny, nz, *self.spec.mins, *self.spec.cell,
            float(p[0]), float(p[1]), float(p[2]),
        )


# direction -> (axis, sign) of the inflow, and unit vector
_DIRECTIONS = {
    0: (0, 1, (1.0, 0.0, 0.0)),
    90: (1, 1, (0.0, 1.0, 0.0)),
    180: (0, -1, (-1.0, 0.0, 0.0)),
    270: (1, -1, (0.0, -1.0, 0.0)),
}


def generate(config: WindConfig, spec: GridSpec, city: CityMap) -> WindField:
    """Procedural stand-in for a CFD field.

    Free cells carry the inflow vector rotated by direction_deg, scaled by a
    log-law profile when z0 > 0, and reduced by wake_deficit * exp(-d/decay)
    for cells d cells downstream of a building along the inflow axis.
    Building cells carry the zero vector.
    """
    if city.spec != spec:
        raise ValueError("GridSpec mismatch between field spec and city map")
    nx, ny, nz = spec.dims
    axis, sign, unit = _DIRECTIONS[config.direction_deg]

    # per-layer log-law factor, normalized to 1 at the top cell-center height
    shear = np.ones(nz)
    z0 = config.shear_roughness
    if z0 > 0.0:
        z_top = (nz - 0.5) * spec.cell[2]
        for kz in range(nz):
            z = (kz + 0.5) * spec.cell[2]
            shear[kz] = max(0.0, math.log(max(z, z0) / z0)) / math.log(z_top / z0) if z_top > z0 else 1.0

    occ = city.occupied.reshape(nz, ny, nx)
    speed = np.zeros((nz, ny, nx))
    for kz in range(nz):
        speed[kz, :, :] = config.speed * shear[kz]

    if config.wake_deficit > 0.0:
        # sweep each line along the inflow axis, tracking distance since the
        # last building cell
        def line_iter():
            if axis == 0:
                for kz in range(nz):
                    for jy in range(ny):
                        idx = range(nx) if sign > 0 else range(nx - 1, -1, -1)
                        yield [(kz, jy, ix) for ix in idx]
            else:
                for kz in range(nz):
                    for ix in range(nx):
                        idx = range(ny) if sign > 0 else range(ny - 1, -1, -1)
                        yield [(kz, jy, ix) for jy in idx]

        for line in line_iter():
            d = None  # cells since last building; None = no building upstream
            for cell in line:
                if occ[cell]:
                    d = 0
                    continue
                if d is not None:
                    d += 1
                    speed[cell] *= 1.0 - config.wake_deficit * math.exp(-d / config.wake_decay)

    vecs = np.empty((nz, ny, nx, 3), dtype=np.float32)
    for a in range(3):
        vecs[..., a] = (speed * unit[a]).astype(np.float32)
    vecs[occ] = 0.0
    return WindField(spec, vecs.reshape(-1, 3))


def save(field: WindField, path) -> None:
    """Write the binary field file (see load for the format)."""
    nx, ny, nz = field.spec.dims
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, nx, ny, nz,
                          *field.spec.mins, *field.spec.cell)
    with open(path, "wb") as f:
        f.write(header)
        f.write(field.vectors.astype("<f4", copy=False).tobytes())


def load(path) -> WindField:
    """Read a field file: 'AWND' magic, u32 version and dims, doubles for
    mins/cell sizes, then nx*ny*nz little-endian float32 (u, v, w) records."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise FieldFormatError("truncated header")
    magic, version, nx, ny, nz, *geo = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FieldFormatError(f"unsupported format version {version}")
    spec = GridSpec(dims=(nx, ny, nz), mins=tuple(geo[:3]), cell=tuple(geo[3:]))
    payload = raw[_HEADER.size:]
    expect = spec.n_cells * 12
    if len(payload) != expect:
        raise FieldFormatError(f"payload length {len(payload)} != expected {expect}")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(-1, 3)
    return WindField(spec, vectors)
