"""Scenario files: grid, buildings, aircraft, reward weights, OD pairs.

Plain JSON so scenarios are hand-editable and diffable.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .environment import AircraftParams, RewardWeights
from .grid import CityMap, GridSpec


@dataclass
class Scenario:
    spec: GridSpec
    buildings: list[tuple[tuple[int, int, int], tuple[int, int, int]]] = field(default_factory=list)
    aircraft: AircraftParams = field(default_factory=AircraftParams)
    rewards: RewardWeights = field(default_factory=RewardWeights)
    od_pairs: list[tuple[tuple[int, int, int], tuple[int, int, int]]] = field(default_factory=list)

    def build_map(self) -> CityMap:
        city = CityMap(self.spec)
        for lo, hi in self.buildings:
            city.add_box(lo, hi)
        return city


def _tup3(x):
    return tuple(int(v) for v in x)


def load_scenario(path) -> Scenario:
    with open(path) as f:
        data = json.load(f)
    g = data["grid"]
    spec = GridSpec(dims=tuple(g["dims"]),
                    mins=tuple(g.get("mins", (0.0, 0.0, 0.0))),
                    cell=tuple(g.get("cell", (10.0, 10.0, 10.0))))
    buildings = [(_tup3(b["lo"]), _tup3(b["hi"])) for b in data.get("buildings", [])]
    aircraft = AircraftParams(**data.get("aircraft", {}))
    rewards = RewardWeights(**data.get("rewards", {}))
    od_pairs = [(_tup3(od[0]), _tup3(od[1])) for od in data.get("od_pairs", [])]
    return Scenario(spec=spec, buildings=buildings, aircraft=aircraft,
                    rewards=rewards, od_pairs=od_pairs)


def save_scenario(scenario: Scenario, path) -> None:
    data = {
        "grid": {
            "dims": list(scenario.spec.dims),
            "mins": list(scenario.spec.mins),
            "cell": list(scenario.spec.cell),
        },
        "buildings": [{"lo": list(lo), "hi": list(hi)} for lo, hi in scenario.buildings],
        "aircraft": dataclasses.asdict(scenario.aircraft),
        "rewards": dataclasses.asdict(scenario.rewards),
        "od_pairs": [[list(o), list(d)] for o, d in scenario.od_pairs],
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
