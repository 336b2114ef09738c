"""Episode-level training loop wiring environment, curriculum, and PPO."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .curriculum import (SamplingError, StageState, StrategyProfile, partition,
                         sample_od)
from .environment import AircraftParams, Episode
from .grid import CityMap
from .ppo import PPOAgent, RewardNormalizer, RolloutBuffer, TrainerConfig
from .windfield import WindField


@dataclass
class EpisodeRecord:
    index: int
    origin: tuple
    destination: tuple
    stage: str
    cause: str
    steps: int
    energy: float  # J
    time: float    # s
    raw_return: float


@dataclass
class TrainResult:
    agent: PPOAgent
    episodes: list = field(default_factory=list)
    stage_events: list = field(default_factory=list)
    first_success_episode: dict = field(default_factory=dict)  # stage -> index

    def success_rate(self, last: int = 100) -> float:
        tail = self.episodes[-last:]
        if not tail:
            return 0.0
        return sum(e.cause == "success" for e in tail) / len(tail)


def train(field_: WindField, city: CityMap, params: AircraftParams,
          profile: StrategyProfile, cfg: TrainerConfig,
          od_pairs=None, use_curriculum: bool = True,
          stage_window: int = 100, stage_threshold: float = 0.8,
          start_stage: str = "near",
          stop_success_rate: float | None = None,
          max_steps: int | None = None,
          log_file=None,
          agent: PPOAgent | None = None) -> TrainResult:
    """Train one policy.

    OD pairs come from the stage-training sampler unless an explicit od_pairs
    list is given (then episodes cycle through it). Without curriculum, ODs
    are sampled from the far class directly. stop_success_rate, when set,
    ends training early once the rolling success rate over the last 100
    episodes clears it. Passing an existing agent continues training it (a
    fine-tuning phase); the agent adopts this call's cfg for its schedules.
    """
    if agent is None:
        agent = PPOAgent(cfg)
    else:
        agent.config = cfg
        agent.global_step = 0
    buffer = RolloutBuffer(cfg.rollout_length, obs_size=agent.obs_size)
    normalizer = RewardNormalizer(cfg.gamma)
    od_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xD5]))
    areas = partition(city.spec) if od_pairs is None else None
    stage = StageState(current=start_stage, window=stage_window,
                       threshold=stage_threshold)
    if cfg.max_total_steps is None:
        # decay horizon: generous per-episode step estimate so the learning
        # rate never hits zero mid-run
        cfg.max_total_steps = cfg.total_episodes * 100

    env = Episode(field=field_, city=city, params=params,
                  weights=profile.weights, max_steps=max_steps)
    result = TrainResult(agent=agent)
    # Episode costs of different OD pairs are not comparable directly, so the
    # shaping baseline is the best cost PER METER of straight-line OD
    # distance, rescaled to each episode's own OD length.
    best_rate: float | None = None
    recent = []

    for ep_idx in range(cfg.total_episodes):
        if od_pairs is not None:
            origin, dest = od_pairs[ep_idx % len(od_pairs)]
        else:
            cls = stage.current if use_curriculum else "far"
            try:
                origin, dest = sample_od(areas, cls, city, od_rng)
            except SamplingError:
                origin, dest = sample_od(areas, "far", city, od_rng)
        obs = env.reset(origin, dest)
        od_dist = math.dist(center_of(origin, city.spec),
                            center_of(dest, city.spec))
        od_best = None if best_rate is None else best_rate * od_dist
        ep_return = 0.0
        while True:
            a, logp, value = agent.act(obs, mode="sample")
            outcome, next_obs = env.step(a, best_so_far=od_best,
                                         shaping_metric=profile.shaping_metric)
            ep_return += outcome.reward
            r = normalizer.normalize(outcome.reward)
            buffer.add(obs, a, logp, value, r, outcome.done)
            if buffer.full:
                bootstrap = 0.0 if outcome.done else agent.value(next_obs)
                agent.update(buffer, bootstrap)
            obs = next_obs
            if outcome.done:
                normalizer.episode_end()
                break

        success = env.cause == "success"
        if success:
            cost = env.episode_cost(profile.shaping_metric)
            rate = cost / od_dist if od_dist > 0 else cost
            best_rate = rate if best_rate is None else min(best_rate, rate)
            cls_reached = _distance_class(origin, dest, city)
            result.first_success_episode.setdefault(cls_reached, ep_idx)
        rec = EpisodeRecord(index=ep_idx, origin=origin, destination=dest,
                            stage=stage.current if use_curriculum else "far",
                            cause=env.cause, steps=env.steps,
                            energy=env.energy_used, time=env.time_used,
                            raw_return=ep_return)
        result.episodes.append(rec)
        if log_file is not None:
            log_file.write(json.dumps(rec.__dict__, default=list) + "\n")

        if use_curriculum and od_pairs is None:
            before = stage.current
            stage.record_and_advance(success)
            if stage.current != before:
                result.stage_events.append({"episode": ep_idx,
                                            "from": before, "to": stage.current})
                if log_file is not None:
                    log_file.write(json.dumps(result.stage_events[-1]) + "\n")

        recent.append(success)
        if len(recent) > 100:
            recent.pop(0)
        if (stop_success_rate is not None and len(recent) == 100
                and sum(recent) / 100 >= stop_success_rate):
            break
    return result


def _distance_class(origin, dest, city: CityMap) -> str:
    import math

    from .curriculum import classify
    from .grid import center_of
    d = math.dist(center_of(origin, city.spec), center_of(dest, city.spec))
    return classify(d, city.spec)
