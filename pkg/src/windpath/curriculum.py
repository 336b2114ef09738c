"""Stage training: area partition, OD sampling by distance class, and the
near -> mid -> far promotion schedule, plus the three strategy profiles."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .environment import RewardWeights
from .grid import CityMap, GridSpec, center_of

CLASSES = ("near", "mid", "far")


@dataclass(frozen=True)
class AreaBox:
    lo: tuple[int, int, int]  # inclusive
    hi: tuple[int, int, int]  # exclusive

    def cells(self):
        for z in range(self.lo[2], self.hi[2]):
            for y in range(self.lo[1], self.hi[1]):
                for x in range(self.lo[0], self.hi[0]):
                    yield (x, y, z)

    def contains(self, c) -> bool:
        return all(l <= ci < h for ci, l, h in zip(c, self.lo, self.hi))

    @property
    def size(self) -> int:
        return math.prod(h - l for l, h in zip(self.lo, self.hi))


def _axis_splits(n: int, parts: int) -> list[tuple[int, int]]:
    # near-equal integer splits, remainder to the last part
    base = n // parts
    bounds = []
    for i in range(parts):
        lo = i * base
        hi = (i + 1) * base if i < parts - 1 else n
        bounds.append((lo, hi))
    return bounds


def partition(spec: GridSpec) -> list[AreaBox]:
    """Tile the domain into 18 boxes: 3 in X, 3 in Y, 2 in Z."""
    nx, ny, nz = spec.dims
    if nx < 3 or ny < 3 or nz < 2:
        raise ValueError(f"domain {spec.dims} too small for a 3x3x2 partition")
    xs = _axis_splits(nx, 3)
    ys = _axis_splits(ny, 3)
    zs = _axis_splits(nz, 2)
    boxes = []
    for (zl, zh) in zs:
        for (yl, yh) in ys:
            for (xl, xh) in xs:
                boxes.append(AreaBox((xl, yl, zl), (xh, yh, zh)))
    return boxes


def class_band(cls: str, spec: GridSpec) -> tuple[float, float]:
    """Distance band in meters: near < D/3, mid < 2D/3, far otherwise."""
    d = spec.diagonal
    if cls == "near":
        return (0.0, d / 3.0)
    if cls == "mid":
        return (d / 3.0, 2.0 * d / 3.0)
    if cls == "far":
        return (2.0 * d / 3.0, d)
    raise ValueError(f"unknown distance class {cls!r}")


def classify(distance: float, spec: GridSpec) -> str:
    d = spec.diagonal
    if distance < d / 3.0:
        return "near"
    if distance < 2.0 * d / 3.0:
        return "mid"
    return "far"


class SamplingError(RuntimeError):
    """OD rejection sampling exhausted its retry budget."""


def sample_od(areas: list[AreaBox], cls: str, city: CityMap,
              rng: np.random.Generator, max_tries: int = 10_000):
    """Rejection-sample an (origin, destination) pair whose center distance
    falls in the class band, drawing one free cell from each of two areas."""
    lo, hi = class_band(cls, city.spec)
    for _ in range(max_tries):
        ia, ib = rng.integers(0, len(areas), size=2)
        a = _random_cell(areas[ia], rng)
        b = _random_cell(areas[ib], rng)
        if a == b or city.is_occupied(a) or city.is_occupied(b):
            continue
        d = math.dist(center_of(a, city.spec), center_of(b, city.spec))
        if lo <= d < hi or (cls == "far" and d >= lo):
            return a, b
    raise SamplingError(
        f"no {cls} OD pair found in {max_tries} tries (over-constrained map?)")


def _random_cell(box: AreaBox, rng: np.random.Generator):
    return tuple(int(rng.integers(l, h)) for l, h in zip(box.lo, box.hi))


@dataclass
class StageState:
    """Promotion tracker: advance a class when the rolling success rate over
    the window clears the threshold. Never regresses."""

    current: str = "near"
    window: int = 100
    threshold: float = 0.8
    history: deque = field(default_factory=deque)

    def record_and_advance(self, success: bool) -> "StageState":
        self.history.append(bool(success))
        while len(self.history) > self.window:
            self.history.popleft()
        if (self.current != "far" and len(self.history) >= self.window
                and sum(self.history) / len(self.history) >= self.threshold):
            self.current = CLASSES[CLASSES.index(self.current) + 1]
            self.history.clear()
        return self


@dataclass(frozen=True)
class StrategyProfile:
    """One of the three training strategies and its shaping metric."""

    name: str
    weights: RewardWeights
    shaping_metric: str  # "energy" | "time" | "weighted"


def strategy_profile(name: str, base: RewardWeights | None = None) -> StrategyProfile:
    base = base or RewardWeights()
    if name == "energy":
        return StrategyProfile("energy", replace(base, alpha2=0.0), "energy")
    if name == "time":
        return StrategyProfile("time", replace(base, alpha1=0.0), "time")
    if name == "all":
        return StrategyProfile("all", base, "weighted")
    raise ValueError(f"unknown strategy {name!r} (expected energy/time/all)")


STRATEGIES = ("energy", "time", "all")
