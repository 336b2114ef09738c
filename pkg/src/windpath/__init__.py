"""windpath: energy- and time-aware grid flight planning through wind fields.

A grid POMDP with a drag-based cost model, a from-scratch PPO trainer with
stage (curriculum) training, an exact Dijkstra oracle sharing the same cost
model, and an experiment harness with t-test reporting.
"""

from .environment import (ACTIONS, AircraftParams, Episode, MoveCost,
                          RewardWeights, StepOutcome, move_cost, ray_distances)
from .grid import CityMap, GridSpec, cell_of, center_of
from .kernels import BACKEND as KERNEL_BACKEND
from .windfield import WindConfig, WindField, generate

__version__ = "0.1.0"

__all__ = [
    "ACTIONS", "AircraftParams", "CityMap", "Episode", "GridSpec",
    "KERNEL_BACKEND", "MoveCost", "RewardWeights", "StepOutcome",
    "WindConfig", "WindField", "cell_of", "center_of", "generate",
    "move_cost", "ray_distances",
]
