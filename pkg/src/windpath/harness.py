"""Experiment harness: wind x OD x strategy sweeps, comparison tables,
t-tests, and trace export."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .curriculum import STRATEGIES, strategy_profile
from .environment import Episode
from .grid import CityMap
from .oracle import build_graph, dijkstra
from .ppo import PPOAgent, TrainerConfig, load_policy_into
from .scenario import Scenario
from .stats import TTestReport, percent_diff, ttest_unpaired
from .windfield import WindField, generate, parse_field_name

_NAME_RE = re.compile(r"^D(0|90|180|270)-(4|8|12|16|20)$")


@dataclass
class ExperimentSpec:
    scenario_path: str
    wind_names: list[str]
    strategies: list[str] = field(default_factory=lambda: list(STRATEGIES))
    policy_paths: dict = field(default_factory=dict)  # strategy -> path
    seed: int = 0
    ttest_variant: str = "pooled"

    def __post_init__(self):
        for name in self.wind_names:
            if not _NAME_RE.match(name):
                raise ValueError(
                    f"wind name {name!r} must be D<deg>-<speed> with "
                    "deg in {0,90,180,270}, speed in {4,8,12,16,20}")


@dataclass
class ResultRow:
    wind: str
    od_index: int
    dijkstra_energy: float  # kJ
    ours_energy: float      # kJ
    ours_all_energy: float  # kJ
    energy_diff_pct: float
    dijkstra_time: float    # s
    ours_time: float        # s
    ours_all_time: float    # s
    time_diff_pct: float


def assemble_row(wind: str, od_index: int,
                 dijkstra_energy: float, ours_energy: float, ours_all_energy: float,
                 dijkstra_time: float, ours_time: float, ours_all_time: float) -> ResultRow:
    """Build one table row; percent diffs compare the balanced strategy
    against the single-objective one: 100*(all - single)/all. A rollout that
    never moved has zero cost; its diff is reported as NaN instead of raising
    so tables over failed policies still render."""
    def diff(single, all_):
        if all_ <= 0.0:
            return float("nan")
        return percent_diff(single, all_)

    return ResultRow(
        wind=wind, od_index=od_index,
        dijkstra_energy=dijkstra_energy, ours_energy=ours_energy,
        ours_all_energy=ours_all_energy,
        energy_diff_pct=diff(ours_energy, ours_all_energy),
        dijkstra_time=dijkstra_time, ours_time=ours_time,
        ours_all_time=ours_all_time,
        time_diff_pct=diff(ours_time, ours_all_time),
    )


@dataclass
class RolloutTrace:
    strategy: str
    wind: str
    od_index: int
    cells: list
    step_energy: list   # J per move
    step_time: list     # s per move
    cause: str

    @property
    def total_energy(self) -> float:
        return sum(self.step_energy)

    @property
    def total_time(self) -> float:
        return sum(self.step_time)


def greedy_rollout(agent: PPOAgent, env: Episode, origin, destination,
                   strategy: str, wind: str, od_index: int) -> RolloutTrace:
    """Deterministic policy rollout (argmax actions)."""
    obs = env.reset(origin, destination)
    cells = [env.cell]
    step_e, step_t = [], []
    while not env.done:
        a, _, _ = agent.act(obs, mode="greedy")
        e0, t0 = env.energy_used, env.time_used
        _, obs = env.step(a)
        cells.append(env.cell)
        step_e.append(env.energy_used - e0)
        step_t.append(env.time_used - t0)
    return RolloutTrace(strategy=strategy, wind=wind, od_index=od_index,
                        cells=cells, step_energy=step_e, step_time=step_t,
                        cause=env.cause)


class MissingPolicy(FileNotFoundError):
    pass


def load_agent(policy_path, cfg: TrainerConfig | None = None) -> PPOAgent:
    agent = PPOAgent(cfg or TrainerConfig())
    try:
        load_policy_into(policy_path, agent.actor, agent.critic)
    except FileNotFoundError as e:
        raise MissingPolicy(str(e)) from e
    return agent


def run_table(spec: ExperimentSpec, scenario: Scenario,
              agents: dict | None = None):
    """For each wind x OD: oracle optima plus greedy rollouts per strategy.

    Returns (rows, traces, ttests). agents maps strategy name to a loaded
    PPOAgent; when None, policies are loaded from spec.policy_paths.
    """
    if agents is None:
        agents = {s: load_agent(spec.policy_paths[s]) for s in spec.strategies}
    for s in ("energy", "time", "all"):
        if s not in agents:
            raise ValueError(f"run_table needs all three strategies, missing {s!r}")
    city = scenario.build_map()
    rows = []
    traces = []
    for wind in sorted(spec.wind_names):
        wf = generate(parse_field_name(wind), scenario.spec, city)
        g_energy = build_graph(city, wf, scenario.aircraft, "energy")
        g_time = build_graph(city, wf, scenario.aircraft, "time")
        for od_index, (origin, dest) in enumerate(scenario.od_pairs, start=1):
            opt_e = dijkstra(g_energy, origin, dest)
            opt_t = dijkstra(g_time, origin, dest)
            per_strategy = {}
            for s in ("energy", "time", "all"):
                profile = strategy_profile(s, scenario.rewards)
                env = Episode(field=wf, city=city, params=scenario.aircraft,
                              weights=profile.weights)
                tr = greedy_rollout(agents[s], env, origin, dest, s, wind, od_index)
                traces.append(tr)
                per_strategy[s] = tr
            rows.append(assemble_row(
                wind, od_index,
                dijkstra_energy=opt_e.total_energy / 1000.0,
                ours_energy=per_strategy["energy"].total_energy / 1000.0,
                ours_all_energy=per_strategy["all"].total_energy / 1000.0,
                dijkstra_time=opt_t.total_time,
                ours_time=per_strategy["time"].total_time,
                ours_all_time=per_strategy["all"].total_time,
            ))
    ttests = table_ttests(rows, spec.ttest_variant)
    return rows, traces, ttests


def table_ttests(rows: list[ResultRow], variant: str = "pooled") -> dict[str, TTestReport]:
    """The four comparisons run over a table's columns."""
    col = lambda f: [getattr(r, f) for r in rows]
    return {
        "dijkstra_energy_vs_ours_energy":
            ttest_unpaired(col("dijkstra_energy"), col("ours_energy"), variant),
        "ours_energy_vs_ours_all":
            ttest_unpaired(col("ours_energy"), col("ours_all_energy"), variant),
        "dijkstra_time_vs_ours_time":
            ttest_unpaired(col("dijkstra_time"), col("ours_time"), variant),
        "ours_time_vs_ours_all":
            ttest_unpaired(col("ours_time"), col("ours_all_time"), variant),
    }


def format_table(rows: list[ResultRow]) -> str:
    """Comma-separated table mirroring the comparison layout, kJ/s to 2
    decimals. Diff convention: 100*(all - single)/all."""
    lines = ["wind,od,dijkstra_energy_kj,ours_energy_kj,ours_all_energy_kj,"
             "energy_diff_pct,dijkstra_time_s,ours_time_s,ours_all_time_s,"
             "time_diff_pct"]
    for r in rows:
        lines.append(
            f"{r.wind},{r.od_index},{r.dijkstra_energy:.2f},{r.ours_energy:.2f},"
            f"{r.ours_all_energy:.2f},{r.energy_diff_pct:.2f},"
            f"{r.dijkstra_time:.2f},{r.ours_time:.2f},{r.ours_all_time:.2f},"
            f"{r.time_diff_pct:.2f}")
    return "\n".join(lines) + "\n"


def export_traces(traces: list[RolloutTrace], path) -> None:
    """Newline-delimited JSON: one tagged record per path."""
    with open(path, "w") as f:
        for tr in traces:
            f.write(json.dumps({
                "strategy": tr.strategy,
                "wind": tr.wind,
                "od_index": tr.od_index,
                "cause": tr.cause,
                "cells": [list(c) for c in tr.cells],
                "step_energy_j": tr.step_energy,
                "step_time_s": tr.step_time,
                "total_energy_kj": tr.total_energy / 1000.0,
                "total_time_s": tr.total_time,
            }) + "\n")


def load_traces(path) -> list[RolloutTrace]:
    out = []
    with open(path) as f:
        for line in f:
            d = json.loads(line)
            out.append(RolloutTrace(
                strategy=d["strategy"], wind=d["wind"], od_index=d["od_index"],
                cells=[tuple(c) for c in d["cells"]],
                step_energy=d["step_energy_j"], step_time=d["step_time_s"],
                cause=d["cause"]))
    return out
