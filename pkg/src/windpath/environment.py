"""Grid POMDP for wind-aware flight: cost model, stepping, observations.

The aircraft moves between cell centers of a CityMap under a WindField. Each
move costs energy and time from a drag-based model; episodes end on leaving
the domain, collision, battery depletion, step-limit overrun, or arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import CityMap, GridSpec, cell_of, center_of  # noqa: F401  (re-export)
from .windfield import WindField

# The 26 composite moves: every (ax, ay, az) in {-1,0,1}^3 except (0,0,0),
# ordered lexicographically. Hovering is excluded (zero-length move has no
# cost-model support).
ACTIONS: tuple[tuple[int, int, int], ...] = tuple(
    (ax, ay, az)
    for ax in (-1, 0, 1)
    for ay in (-1, 0, 1)
    for az in (-1, 0, 1)
    if (ax, ay, az) != (0, 0, 0)
)
N_ACTIONS = len(ACTIONS)
ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}

OBS_SIZE = 37
WIND_NORM = 20.0  # m/s, the largest inflow speed in the wind-field catalog

# observation stencil offsets: current cell + 6 face neighbors
_STENCIL = np.array([(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                     (0, 0, 1), (0, 0, -1)], dtype=np.float64)

TERMINATION_CAUSES = (
    "running",
    "out_of_bounds",
    "collision",
    "energy_depleted",
    "time_exceeded",
    "success",
)


@dataclass(frozen=True)
class AircraftParams:
    """Physical constants of the energy model plus operating limits.

    Defaults are not published anywhere; every one is scenario-file
    overridable and nothing downstream depends on the specific values.
    """

    M: float = 10.0          # takeoff mass, kg
    S: float = 0.5           # windward area, m^2
    C_D0: float = 0.02       # zero-lift drag coefficient
    k: float = 0.1           # induced drag factor
    rho: float = 1.225       # air density, kg/m^3
    g: float = 9.8           # m/s^2
    eta_P: float = 0.8       # propeller efficiency
    eta_M: float = 0.85      # motor efficiency
    eta_ESC: float = 0.95    # speed-controller efficiency
    s_cmd: float = 10.0      # commanded ground speed, m/s
    V_min: float = 0.5       # airspeed clamp floor, m/s
    E_max: float = 500_000.0  # battery capacity, J

    def __post_init__(self):
        for name in ("M", "S", "C_D0", "k", "rho", "g", "eta_P", "eta_M",
                     "eta_ESC", "s_cmd", "V_min", "E_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("eta_P", "eta_M", "eta_ESC"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must be <= 1")

    @property
    def eta(self) -> float:
        return self.eta_P * self.eta_M * self.eta_ESC

    @property
    def v_opt(self) -> float:
        """Airspeed minimizing energy per meter: (4 k M^2 g^2 / (rho^2 S^2 C_D0))^(1/4)."""
        return (4.0 * self.k * self.M**2 * self.g**2
                / (self.rho**2 * self.S**2 * self.C_D0)) ** 0.25


@dataclass(frozen=True)
class MoveCost:
    L: float  # segment length, m
    T: float  # traversal time, s
    E: float  # energy, J
    V: float  # airspeed used, m/s


@dataclass(frozen=True)
class RewardWeights:
    """Step-reward weights and terminal constants.

    alpha1 is per kJ of move energy, alpha2 per second, alpha3 per meter of
    distance change toward the destination.
    """

    alpha1: float = -3.5
    alpha2: float = -1.25
    alpha3: float = -0.04
    r_success: float = 1000.0
    r_fail: float = -100.0
    shaping_gain: float = 10.0


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    done: bool
    cause: str
    cost_so_far: tuple[float, float]  # (energy J, time s)

    def __post_init__(self):
        assert self.done == (self.cause != "running")


def move_cost(from_cell, to_cell, field: WindField, params: AircraftParams,
              city: CityMap | None = None) -> MoveCost:
    """Energy and time for one move between adjacent cell centers.

    Wind is sampled once at the segment midpoint; airspeed is the magnitude
    of ground velocity minus wind, floored at V_min.
    """
    spec = field.spec
    d = tuple(b - a for a, b in zip(from_cell, to_cell))
    if d == (0, 0, 0):
        raise ValueError("from and to cells must differ")
    if any(abs(x) > 1 for x in d):
        raise ValueError(f"cells {from_cell} -> {to_cell} are not adjacent")
    if not (spec.in_bounds(from_cell) and spec.in_bounds(to_cell)):
        raise ValueError("cells out of bounds")
    if city is not None and (city.is_occupied(from_cell) or city.is_occupied(to_cell)):
        raise ValueError("move endpoints must be free cells")
    p0 = center_of(from_cell, spec)
    p1 = center_of(to_cell, spec)
    dx, dy, dz = (b - a for a, b in zip(p0, p1))
    L = math.sqrt(dx * dx + dy * dy + dz * dz)
    T = L / params.s_cmd
    mid = ((p0[0] + p1[0]) * 0.5, (p0[1] + p1[1]) * 0.5, (p0[2] + p1[2]) * 0.5)
    wu, wv, ww = field.sample_clamped(mid)
    V = kernels.segment_airspeed(dx, dy, dz, T, wu, wv, ww, params.V_min)
    E = kernels.move_energy(L, V, params.rho, params.S, params.C_D0,
                            params.k, params.M, params.g, params.eta)
    return MoveCost(L=L, T=T, E=E, V=V)


def ray_distances(c, city: CityMap) -> tuple[float, ...]:
    """Distance from the cell center to the first building face or domain
    boundary along +X, -X, +Y, -Y, +Z, -Z."""
    if not city.spec.in_bounds(c):
        raise ValueError(f"cell {c} out of bounds")
    if city.is_occupied(c):
        raise ValueError(f"cell {c} is occupied")
    occ = np.ascontiguousarray(city.occupied, dtype=np.uint8)
    nx, ny, nz = city.spec.dims
    return tuple(kernels.ray_distances(occ, nx, ny, nz, *c, *city.spec.cell))


def shaping_adjustment(cost: float, best_so_far: float, gain: float) -> float:
    """Success bonus/penalty: gain * (historical best - this episode's cost)."""
    return gain * (best_so_far - cost)


def reference_move_energy(params: AircraftParams, spec: GridSpec) -> float:
    """Energy of a single X-axis move at s_cmd in still air; used to
    normalize the observation's energy-history slots."""
    L = spec.cell[0]
    V = max(params.V_min, params.s_cmd)
    return kernels.move_energy(L, V, params.rho, params.S, params.C_D0,
                               params.k, params.M, params.g, params.eta)


def default_max_steps(origin, destination) -> int:
    manhattan = sum(abs(b - a) for a, b in zip(origin, destination))
    return max(200, 4 * manhattan)


@dataclass
class Episode:
    """One flight task. Mutable, single-threaded; the map and field are
    shared immutable inputs."""

    field: WindField
    city: CityMap
    params: AircraftParams = field(default_factory=AircraftParams)
    weights: RewardWeights = field(default_factory=RewardWeights)
    max_steps: int | None = None

    def __post_init__(self):
        if self.field.spec != self.city.spec:
            raise ValueError("field and map GridSpec mismatch")
        self._ref_energy = reference_move_energy(self.params, self.city.spec)
        self._occ = np.ascontiguousarray(self.city.occupied, dtype=np.uint8)
        self._started = False

    # -- lifecycle -----------------------------------------------------------

    def reset(self, origin, destination) -> np.ndarray:
        origin = tuple(int(x) for x in origin)
        destination = tuple(int(x) for x in destination)
        if origin == destination:
            raise ValueError("origin and destination must be distinct")
        for name, c in (("origin", origin), ("destination", destination)):
            if not self.city.spec.in_bounds(c):
                raise ValueError(f"{name} {c} out of range")
            if self.city.is_occupied(c):
                raise ValueError(f"{name} {c} is occupied")
        self.origin = origin
        self.destination = destination
        self.cell = origin
        self.energy_used = 0.0
        self.time_used = 0.0
        self.steps = 0
        self.energy_history = [0.0, 0.0, 0.0]  # E_t, E_{t-1}, E_{t-2} in J
        self.done = False
        self.cause = "running"
        self._limit = (self.max_steps if self.max_steps is not None
                       else default_max_steps(origin, destination))
        self._started = True
        return self.observe()

    def step(self, action_index: int, best_so_far: float | None = None,
             shaping_metric: str = "energy") -> tuple[StepOutcome, np.ndarray]:
        """Advance one move. best_so_far is the trainer-owned historical best
        episode cost for shaping; None means no prior success (no shaping)."""
        if not self._started:
            raise RuntimeError("call reset() before step()")
        if self.done:
            raise RuntimeError("episode already finished")
        a = ACTIONS[int(action_index)]
        target = tuple(c + d for c, d in zip(self.cell, a))
        w = self.weights

        if not self.city.spec.in_bounds(target):
            return self._finish("out_of_bounds", w.r_fail)
        if self.city.is_occupied(target):
            return self._finish("collision", w.r_fail)

        cost = move_cost(self.cell, target, self.field, self.params)
        d_current = self._dist_to_goal(self.cell)
        d_next = self._dist_to_goal(target)
        self.cell = target
        self.energy_used += cost.E
        self.time_used += cost.T
        self.steps += 1
        self.energy_history = [cost.E, self.energy_history[0], self.energy_history[1]]

        # termination checks, in order: battery, step limit, arrival
        if self.energy_used > self.params.E_max:
            return self._finish("energy_depleted", w.r_fail)
        if self.steps >= self._limit:
            return self._finish("time_exceeded", w.r_fail)
        if target == self.destination:
            reward = w.r_success
            if best_so_far is not None:
                reward += shaping_adjustment(
                    self.episode_cost(shaping_metric), best_so_far, w.shaping_gain)
            return self._finish("success", reward)

        # non-terminating reward; D_diff = d_next - d_current so the negative
        # weight pays for approaching the destination
        reward = (w.alpha1 * cost.E / 1000.0
                  + w.alpha2 * cost.T
                  + w.alpha3 * (d_next - d_current))
        out = StepOutcome(reward=reward, done=False, cause="running",
                          cost_so_far=(self.energy_used, self.time_used))
        return out, self.observe()

    def _finish(self, cause: str, reward: float) -> tuple[StepOutcome, np.ndarray]:
        self.done = True
        self.cause = cause
        out = StepOutcome(reward=reward, done=True, cause=cause,
                          cost_so_far=(self.energy_used, self.time_used))
        return out, self.observe()

    # -- helpers -------------------------------------------------------------

    def _dist_to_goal(self, c) -> float:
        p = center_of(c, self.city.spec)
        q = center_of(self.destination, self.city.spec)
        return math.dist(p, q)

    def episode_cost(self, metric: str) -> float:
        """Episode cost under a shaping metric: kJ, seconds, or the
        alpha-weighted mix (positive, larger = worse)."""
        if metric == "energy":
            return self.energy_used / 1000.0
        if metric == "time":
            return self.time_used
        if metric == "weighted":
            w = self.weights
            return abs(w.alpha1) * self.energy_used / 1000.0 + abs(w.alpha2) * self.time_used
        raise ValueError(f"unknown shaping metric {metric!r}")

    def observe(self) -> np.ndarray:
        """The 37-value observation: normalized cell, destination, ray
        distances, a 7-point wind stencil, and battery/energy history."""
        spec = self.city.spec
        nx, ny, nz = spec.dims
        dims = (nx, ny, nz)
        obs = np.empty(OBS_SIZE, dtype=np.float64)
        obs[0:3] = [c / n for c, n in zip(self.cell, dims)]
        obs[3:6] = [c / n for c, n in zip(self.destination, dims)]
        max_extent = max(n * s for n, s in zip(dims, spec.cell))
        obs[6:12] = [d / max_extent for d in ray_distances(self.cell, self.city)]
        # 7-point stencil: current cell center plus its 6 face-neighbor
        # centers, clamped onto the domain boundary when outside
        centers = (np.asarray(self.cell, dtype=np.float64) + _STENCIL + 0.5)
        centers *= spec.cell
        centers += spec.mins
        np.clip(centers, spec.mins, spec.maxs, out=centers)
        for i in range(7):
            u, v, w_ = self.field.sample_clamped(tuple(centers[i]))
            obs[12 + 3 * i: 15 + 3 * i] = (u / WIND_NORM, v / WIND_NORM, w_ / WIND_NORM)
        obs[33] = max(0.0, 1.0 - self.energy_used / self.params.E_max)
        obs[34:37] = [e / self._ref_energy for e in self.energy_history]
        return obs
