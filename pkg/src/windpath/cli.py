"""Command-line interface.

Subcommands: windgen, train, oracle, eval, export-traces.
Exit codes: 0 success, 1 usage error, 2 infeasible instance, 3 I/O or
corrupt file. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import windfield
from .curriculum import STRATEGIES, SamplingError, strategy_profile
from .grid import cell_of  # noqa: F401
from .harness import (ExperimentSpec, MissingPolicy, export_traces,
                      format_table, load_agent, run_table)
from .oracle import Unreachable, build_graph, dijkstra
from .ppo import PolicyFormatError, TrainerConfig
from .scenario import load_scenario
from .training import train
from .windfield import FieldFormatError, WindConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3


def _parse_od(text):
    try:
        o_s, d_s = text.split(":")
        origin = tuple(int(v) for v in o_s.split(","))
        dest = tuple(int(v) for v in d_s.split(","))
        if len(origin) != 3 or len(dest) != 3:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad OD {text!r}, expected x,y,z:x,y,z")
    return origin, dest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="windpath",
                                description="Wind-aware grid flight planning workbench")
    p.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("windgen", help="generate a wind field file")
    w.add_argument("--scenario", required=True)
    w.add_argument("--direction", type=int, required=True, choices=(0, 90, 180, 270))
    w.add_argument("--speed", type=float, required=True)
    w.add_argument("--shear-roughness", type=float, default=0.0)
    w.add_argument("--wake-deficit", type=float, default=0.0)
    w.add_argument("--wake-decay", type=float, default=2.0)
    w.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train one strategy's policy")
    t.add_argument("--scenario", required=True)
    t.add_argument("--config", required=True, help="training config JSON")
    t.add_argument("--strategy", required=True, choices=STRATEGIES)
    t.add_argument("--out", required=True, help="output policy file")
    t.add_argument("--log", default=None, help="episode log (ndjson)")

    o = sub.add_parser("oracle", help="exact optimum for one OD pair")
    o.add_argument("--field", required=True, help="wind field file")
    o.add_argument("--scenario", required=True)
    o.add_argument("--metric", required=True, choices=("energy", "time"))
    o.add_argument("--od", type=_parse_od, required=True,
                   help="origin:destination as x,y,z:x,y,z")
    o.add_argument("--trace-out", default=None)

    e = sub.add_parser("eval", help="comparison table + t-test report")
    e.add_argument("--spec", required=True, help="experiment spec JSON")
    e.add_argument("--out", default=None, help="table CSV path (default stdout)")

    x = sub.add_parser("export-traces", help="greedy rollout traces as ndjson")
    x.add_argument("--spec", required=True, help="experiment spec JSON")
    x.add_argument("--out", required=True)
    return p


def _load_experiment(path, seed):
    with open(path) as f:
        data = json.load(f)
    spec = ExperimentSpec(
        scenario_path=data["scenario"],
        wind_names=list(data["winds"]),
        strategies=list(data.get("strategies", STRATEGIES)),
        policy_paths=dict(data.get("policies", {})),
        seed=seed,
        ttest_variant=data.get("ttest_variant", "pooled"),
    )
    scenario = load_scenario(spec.scenario_path)
    return spec, scenario


def cmd_windgen(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = WindConfig(direction_deg=args.direction, speed=args.speed,
                     shear_roughness=args.shear_roughness,
                     wake_deficit=args.wake_deficit, wake_decay=args.wake_decay)
    field = windfield.generate(cfg, scenario.spec, scenario.build_map())
    windfield.save(field, args.out)
    print(f"wrote {cfg.name} field ({scenario.spec.n_cells} cells) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    scenario = load_scenario(args.scenario)
    with open(args.config) as f:
        tc = json.load(f)
    trainer = TrainerConfig(seed=args.seed, **tc.get("trainer", {}))
    wind_name = tc.get("wind", "D0-4")
    wind_cfg = windfield.parse_field_name(wind_name)
    city = scenario.build_map()
    field = windfield.generate(wind_cfg, scenario.spec, city)
    profile = strategy_profile(args.strategy, scenario.rewards)
    cur = tc.get("curriculum", {})
    log_f = open(args.log, "w") if args.log else None
    try:
        result = train(
            field, city, scenario.aircraft, profile, trainer,
            od_pairs=(scenario.od_pairs or None) if tc.get("use_od_list") else None,
            use_curriculum=cur.get("enabled", True),
            stage_window=cur.get("window", 100),
            stage_threshold=cur.get("threshold", 0.8),
            stop_success_rate=tc.get("stop_success_rate"),
            max_steps=tc.get("max_steps"),
            log_file=log_f,
        )
    finally:
        if log_f:
            log_f.close()
    result.agent.save_policy(args.out)
    print(f"trained {args.strategy} on {wind_name}: "
          f"{len(result.episodes)} episodes, "
          f"final success rate {result.success_rate():.2f}; policy -> {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    field = windfield.load(args.field)
    city = scenario.build_map()
    graph = build_graph(city, field, scenario.aircraft, args.metric)
    origin, dest = args.od
    res = dijkstra(graph, origin, dest)
    print(f"optimal {args.metric} path {origin} -> {dest}: "
          f"{res.total_energy / 1000.0:.2f} kJ, {res.total_time:.2f} s, "
          f"{len(res.cells) - 1} moves")
    if args.trace_out:
        with open(args.trace_out, "w") as f:
            for c in res.cells:
                f.write(json.dumps({"cell": [int(v) for v in c]}) + "\n")
            f.write(json.dumps({"total_energy_kj": res.total_energy / 1000.0,
                                "total_time_s": res.total_time}) + "\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    spec, scenario = _load_experiment(args.spec, args.seed)
    rows, _traces, ttests = run_table(spec, scenario)
    table = format_table(rows)
    if args.out:
        with open(args.out, "w") as f:
            f.write(table)
    else:
        sys.stdout.write(table)
    print("# diff convention: 100*(all - single)/all")
    for name, rep in sorted(ttests.items()):
        print(f"# {name}: {rep.summary()}")
    return EXIT_OK


def cmd_export_traces(args) -> int:
    spec, scenario = _load_experiment(args.spec, args.seed)
    _rows, traces, _ttests = run_table(spec, scenario)
    export_traces(traces, args.out)
    print(f"wrote {len(traces)} traces to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "windgen": cmd_windgen,
    "train": cmd_train,
    "oracle": cmd_oracle,
    "eval": cmd_eval,
    "export-traces": cmd_export_traces,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (Unreachable, SamplingError) as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, FieldFormatError, PolicyFormatError, MissingPolicy,
            json.JSONDecodeError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
