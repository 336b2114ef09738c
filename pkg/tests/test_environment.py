"""Grid geometry, cost model, stepping, observations, and rewards."""

import math

import numpy as np
import pytest

from windpath.environment import (ACTIONS, N_ACTIONS, OBS_SIZE, AircraftParams,
                                  Episode, RewardWeights, default_max_steps,
                                  move_cost, ray_distances,
                                  reference_move_energy, shaping_adjustment)
from windpath.grid import CityMap, GridSpec, cell_of, center_of
from windpath.windfield import WindConfig, WindField, generate

PARAMS = AircraftParams()


def uniform_field(spec, u=0.0, v=0.0, w=0.0):
    vecs = np.tile(np.array([u, v, w], dtype=np.float32), (spec.n_cells, 1))
    return WindField(spec=spec, vectors=vecs)


def make_city(dims=(4, 4, 4), cell=(10.0, 10.0, 5.0), boxes=()):
    city = CityMap(GridSpec(dims=dims, mins=(0.0, 0.0, 0.0), cell=cell))
    for lo, hi in boxes:
        city.add_box(lo, hi)
    return city


# -- actions ------------------------------------------------------------------

def test_action_table():
    assert N_ACTIONS == 26
    assert len(set(ACTIONS)) == 26
    assert (0, 0, 0) not in ACTIONS
    assert all(all(d in (-1, 0, 1) for d in a) for a in ACTIONS)


# -- coordinate conversions ---------------------------------------------------

def test_cell_of_rounding_rule():
    # [DERIVED] round half away from zero: 14.9/10 -> 1, 15.0/10 -> 2
    spec = GridSpec(dims=(4, 4, 4), mins=(0.0, 0.0, 0.0), cell=(10.0, 10.0, 10.0))
    assert cell_of((14.9, 0.0, 0.0), spec)[0] == 1
    assert cell_of((15.0, 0.0, 0.0), spec)[0] == 2


def test_cell_of_domain_min():
    spec = GridSpec(dims=(4, 4, 4), mins=(0.0, 0.0, 0.0), cell=(10.0, 10.0, 10.0))
    assert cell_of((0.0, 0.0, 0.0), spec) == (0, 0, 0)


def test_center_of_hand_values():
    spec = GridSpec(dims=(4, 4, 4), mins=(0.0, 0.0, 0.0), cell=(10.0, 10.0, 5.0))
    assert center_of((0, 0, 0), spec)[0] == 5.0
    assert center_of((1, 1, 1), spec) == (15.0, 15.0, 7.5)


def test_cell_center_round_trip():
    # Exact cell centers sit on the half-away rounding boundary (center of
    # cell c maps to normalized coordinate c + 0.5), so the round-trip is
    # checked a hair inside each cell; the final cell also holds exactly
    # because indices clamp to the domain.
    spec = GridSpec(dims=(4, 3, 5), mins=(-7.0, 2.0, 0.0), cell=(10.0, 4.0, 5.0))
    for x in range(4):
        for y in range(3):
            for z in range(5):
                p = tuple(v - 1e-9 * s for v, s in
                          zip(center_of((x, y, z), spec), spec.cell))
                assert cell_of(p, spec) == (x, y, z)
    assert cell_of(center_of((3, 2, 4), spec), spec) == (3, 2, 4)


def test_cell_of_rejects_out_of_domain():
    spec = GridSpec(dims=(4, 4, 4), mins=(0.0, 0.0, 0.0), cell=(10.0, 10.0, 10.0))
    with pytest.raises(ValueError):
        cell_of((1000.0, 0.0, 0.0), spec)


# -- ray distances ------------------------------------------------------------

def test_ray_distances_corridor():
    # [DERIVED] empty 10x1x1 corridor, cell 0: 9 full cells + half = 95 m
    city = make_city(dims=(10, 1, 1), cell=(10.0, 10.0, 10.0))
    det = ray_distances((0, 0, 0), city)
    assert det[0] == pytest.approx(95.0)   # +X
    assert det[1] == pytest.approx(5.0)    # -X: boundary at own near face


def test_ray_distances_adjacent_building():
    city = make_city(boxes=[((1, 0, 0), (1, 0, 0))])
    det = ray_distances((0, 0, 0), city)
    assert det[0] == pytest.approx(5.0)  # half a cell side to the near face


def test_ray_distances_domain_max_corner():
    city = make_city(dims=(4, 4, 4), cell=(10.0, 10.0, 5.0))
    det = ray_distances((3, 3, 3), city)
    assert det[0] == pytest.approx(5.0)   # +X
    assert det[2] == pytest.approx(5.0)   # +Y
    assert det[4] == pytest.approx(2.5)   # +Z (half of 5 m side)


def test_ray_distances_rejects_occupied_cell():
    city = make_city(boxes=[((1, 1, 1), (1, 1, 1))])
    with pytest.raises(ValueError):
        ray_distances((1, 1, 1), city)


# -- cost model ---------------------------------------------------------------

def test_move_energy_hand_value():
    # [DERIVED] still air, axis move of 10 m at V = 10 m/s:
    # E = 10/(10*0.646) * [0.5*1.225*1000*0.5*0.02 + 2*0.1*100*96.04/(1.225*0.5*10)]
    #   = (10/6.46) * (6.125 + 313.6) = 494.9303405572755 J
    city = make_city()
    field = uniform_field(city.spec)
    mc = move_cost((0, 0, 0), (1, 0, 0), field, PARAMS, city)
    assert mc.L == pytest.approx(10.0)
    assert mc.T == pytest.approx(1.0)
    assert mc.V == pytest.approx(10.0)
    assert mc.E == pytest.approx(494.9303405572755, rel=1e-12)


def test_move_cost_tailwind_clamps_to_vmin():
    # [TRIVIAL] tailwind equal to ground velocity -> V = V_min
    city = make_city()
    field = uniform_field(city.spec, u=PARAMS.s_cmd)
    mc = move_cost((0, 0, 0), (1, 0, 0), field, PARAMS, city)
    assert mc.V == PARAMS.V_min
    e_vmin = mc.L / (mc.V * PARAMS.eta) * (
        0.5 * PARAMS.rho * mc.V**3 * PARAMS.S * PARAMS.C_D0
        + 2 * PARAMS.k * PARAMS.M**2 * PARAMS.g**2 / (PARAMS.rho * PARAMS.S * mc.V))
    assert mc.E == pytest.approx(e_vmin, rel=1e-12)


def test_move_cost_diagonal_length():
    city = make_city()
    field = uniform_field(city.spec)
    mc = move_cost((0, 0, 0), (1, 1, 0), field, PARAMS, city)
    assert mc.L == pytest.approx(math.sqrt(200.0))


def test_energy_rate_convex_with_min_at_v_star():
    # [DERIVED] e(V) minimized at V* = (4 k M^2 g^2 / (rho^2 S^2 C_D0))^(1/4)
    v_star = PARAMS.v_opt
    # hand evaluation: (4*0.1*10^2*9.8^2 / (1.225^2*0.5^2*0.02))^0.25
    assert v_star == pytest.approx((3841.6 / 0.007503125) ** 0.25, rel=1e-12)

    def e_per_m(V):
        return (0.5 * PARAMS.rho * V**2 * PARAMS.S * PARAMS.C_D0
                + 2 * PARAMS.k * PARAMS.M**2 * PARAMS.g**2
                / (PARAMS.rho * PARAMS.S * V**2)) / PARAMS.eta

    vs = np.linspace(1.0, 60.0, 2000)
    es = np.array([e_per_m(v) for v in vs])
    assert abs(vs[np.argmin(es)] - v_star) < 0.05
    # convexity: second differences nonnegative
    assert np.all(np.diff(es, 2) > -1e-9)


def test_headwind_monotonicity_above_v_star():
    # [DERIVED] for airspeeds >= V*, stronger headwind raises E strictly
    city = make_city()
    params = AircraftParams(s_cmd=PARAMS.v_opt + 1.0)
    energies = []
    for headwind in (0.0, 2.0, 4.0, 8.0):
        field = uniform_field(city.spec, u=-headwind)
        energies.append(move_cost((0, 0, 0), (1, 0, 0), field, params, city).E)
    assert all(b > a for a, b in zip(energies, energies[1:]))


def test_zero_wind_axis_symmetry():
    # [DERIVED] same |delta| pattern -> same cost in still air (cubic cells)
    city = make_city(dims=(4, 4, 4), cell=(10.0, 10.0, 10.0))
    field = uniform_field(city.spec)
    base = move_cost((1, 1, 1), (2, 1, 1), field, PARAMS, city)
    for to in ((0, 1, 1), (1, 2, 1), (1, 0, 1), (1, 1, 2), (1, 1, 0)):
        mc = move_cost((1, 1, 1), to, field, PARAMS, city)
        assert mc.E == pytest.approx(base.E, rel=1e-12)
        assert mc.T == pytest.approx(base.T, rel=1e-12)


def test_move_cost_rejects_non_adjacent():
    city = make_city()
    field = uniform_field(city.spec)
    with pytest.raises(ValueError):
        move_cost((0, 0, 0), (2, 0, 0), field, PARAMS, city)
    with pytest.raises(ValueError):
        move_cost((0, 0, 0), (0, 0, 0), field, PARAMS, city)


# -- rewards ------------------------------------------------------------------

def test_non_terminating_reward_hand_value():
    # [DERIVED] E = 2 kJ, T = 1 s, D_diff = -5 m:
    # r = -3.5*2 - 1.25*1 + (-0.04)*(-5) = -8.05
    w = RewardWeights()
    r = w.alpha1 * 2.0 + w.alpha2 * 1.0 + w.alpha3 * (-5.0)
    assert r == pytest.approx(-8.05)


def test_shaping_adjustment():
    # [TRIVIAL]/[DERIVED] linear rule around the historical best
    assert shaping_adjustment(100.0, 100.0, 5.0) == 0.0
    assert shaping_adjustment(90.0, 100.0, 5.0) == pytest.approx(50.0)
    assert shaping_adjustment(110.0, 100.0, 5.0) == pytest.approx(-50.0)


# -- episode lifecycle --------------------------------------------------------

def episode(boxes=(), wind=(0.0, 0.0, 0.0), **kw):
    city = make_city(boxes=boxes)
    field = uniform_field(city.spec, *wind)
    return Episode(field=field, city=city, params=PARAMS,
                   weights=RewardWeights(), **kw)


def test_reset_full_battery_and_det():
    env = episode()
    obs = env.reset((0, 0, 0), (3, 3, 3))
    assert obs.shape == (OBS_SIZE,)
    assert np.all(np.isfinite(obs))
    assert obs[33] == 1.0  # E_rem
    max_extent = 40.0
    expected = np.array(ray_distances((0, 0, 0), env.city)) / max_extent
    np.testing.assert_allclose(obs[6:12], expected)
    assert np.all(obs[34:37] == 0.0)  # energy history zeroed


def test_reset_rejects_equal_or_occupied_endpoints():
    env = episode(boxes=[((1, 1, 1), (1, 1, 1))])
    with pytest.raises(ValueError):
        env.reset((0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        env.reset((1, 1, 1), (3, 3, 3))
    with pytest.raises(ValueError):
        env.reset((0, 0, 0), (1, 1, 1))


def test_out_of_bounds_step():
    env = episode()
    env.reset((0, 0, 0), (3, 3, 3))
    a = ACTIONS.index((-1, 0, 0))
    outcome, _ = env.step(a)
    assert outcome.done and outcome.cause == "out_of_bounds"
    assert outcome.reward == -100.0


def test_collision_step():
    env = episode(boxes=[((1, 0, 0), (1, 0, 0))])
    env.reset((0, 0, 0), (3, 3, 3))
    outcome, _ = env.step(ACTIONS.index((1, 0, 0)))
    assert outcome.done and outcome.cause == "collision"
    assert outcome.reward == -100.0


def test_success_first_time_has_no_shaping():
    env = episode()
    env.reset((0, 0, 0), (1, 0, 0))
    outcome, _ = env.step(ACTIONS.index((1, 0, 0)))
    assert outcome.done and outcome.cause == "success"
    assert outcome.reward == 1000.0  # best_so_far unset -> no shaping term


def test_success_shaping_applied_with_best():
    env = episode()
    env.reset((0, 0, 0), (1, 0, 0))
    cost_preview_env = episode()
    cost_preview_env.reset((0, 0, 0), (1, 0, 0))
    cost_preview_env.step(ACTIONS.index((1, 0, 0)))
    cost = cost_preview_env.episode_cost("weighted")
    best = cost + 2.0  # historical best is 2 units worse than this episode
    outcome, _ = env.step(ACTIONS.index((1, 0, 0)), best_so_far=best,
                          shaping_metric="weighted")
    gain = RewardWeights().shaping_gain
    assert outcome.reward == pytest.approx(1000.0 + gain * 2.0)


def test_energy_depleted():
    city = make_city()
    field = uniform_field(city.spec)
    params = AircraftParams(E_max=600.0)  # one 495 J move allowed, not two
    env = Episode(field=field, city=city, params=params,
                  weights=RewardWeights())
    env.reset((0, 0, 0), (3, 3, 3))
    o1, _ = env.step(ACTIONS.index((1, 0, 0)))
    assert not o1.done
    o2, _ = env.step(ACTIONS.index((1, 0, 0)))
    assert o2.done and o2.cause == "energy_depleted"
    assert o2.reward == -100.0


def test_time_exceeded_and_step_cap():
    env = episode(max_steps=3)
    env.reset((0, 0, 0), (3, 3, 3))
    back, forth = ACTIONS.index((1, 0, 0)), ACTIONS.index((-1, 0, 0))
    outcomes = [env.step(back)[0], env.step(forth)[0], env.step(back)[0]]
    assert [o.done for o in outcomes] == [False, False, True]
    assert outcomes[-1].cause == "time_exceeded"
    assert env.steps == 3


def test_success_on_last_allowed_step_is_time_exceeded():
    # termination precedence: the step limit is checked before arrival
    env = episode(max_steps=1)
    env.reset((0, 0, 0), (1, 0, 0))
    outcome, _ = env.step(ACTIONS.index((1, 0, 0)))
    assert outcome.cause == "time_exceeded"


def test_stepping_finished_episode_raises():
    env = episode()
    env.reset((0, 0, 0), (3, 3, 3))
    env.step(ACTIONS.index((-1, 0, 0)))
    with pytest.raises(RuntimeError):
        env.step(0)


def test_episode_accounting_matches_move_costs():
    # accumulated energy/time equals the sum of per-move costs exactly
    env = episode(wind=(3.0, 1.0, 0.0))
    env.reset((0, 0, 0), (3, 3, 3))
    total_e = total_t = 0.0
    cur = (0, 0, 0)
    for a in ((1, 0, 0), (0, 1, 0), (1, 1, 1), (0, 0, 1)):
        nxt = tuple(c + d for c, d in zip(cur, a))
        mc = move_cost(cur, nxt, env.field, PARAMS, env.city)
        total_e += mc.E
        total_t += mc.T
        outcome, _ = env.step(ACTIONS.index(a))
        assert not outcome.done
        cur = nxt
    assert env.energy_used == total_e
    assert env.time_used == total_t
    assert outcome.cost_so_far == (total_e, total_t)


def test_reward_decomposition():
    # undiscounted return = sum r_NT + terminal reward
    env = episode()
    env.reset((0, 0, 0), (2, 0, 0))
    rewards = []
    for a in ((1, 0, 0), (1, 0, 0)):
        outcome, _ = env.step(ACTIONS.index(a))
        rewards.append(outcome.reward)
    assert env.cause == "success"
    assert rewards[-1] == 1000.0
    w = RewardWeights()
    mc = move_cost((0, 0, 0), (1, 0, 0), env.field, PARAMS, env.city)
    d0 = math.dist(center_of((0, 0, 0), env.city.spec), center_of((2, 0, 0), env.city.spec))
    d1 = math.dist(center_of((1, 0, 0), env.city.spec), center_of((2, 0, 0), env.city.spec))
    expected = w.alpha1 * mc.E / 1000.0 + w.alpha2 * mc.T + w.alpha3 * (d1 - d0)
    assert rewards[0] == pytest.approx(expected, rel=1e-12)


# -- observations -------------------------------------------------------------

def test_observation_uniform_wind_stencil():
    # [DERIVED] uniform 4 m/s +X wind -> all 7 stencil samples (0.2, 0, 0)
    env = episode(wind=(4.0, 0.0, 0.0))
    obs = env.reset((1, 1, 1), (3, 3, 3))
    stencil = obs[12:33].reshape(7, 3)
    np.testing.assert_allclose(stencil, np.tile([0.2, 0.0, 0.0], (7, 1)),
                               atol=1e-7)


def test_observation_energy_history_shift_register():
    env = episode()
    env.reset((0, 0, 0), (3, 3, 3))
    ref = reference_move_energy(PARAMS, env.city.spec)
    mc = move_cost((0, 0, 0), (1, 0, 0), env.field, PARAMS, env.city)
    _, obs = env.step(ACTIONS.index((1, 0, 0)))
    np.testing.assert_allclose(obs[34:37], [mc.E / ref, 0.0, 0.0])
    mc2 = move_cost((1, 0, 0), (1, 1, 0), env.field, PARAMS, env.city)
    _, obs = env.step(ACTIONS.index((0, 1, 0)))
    np.testing.assert_allclose(obs[34:37], [mc2.E / ref, mc.E / ref, 0.0])


def test_observation_destination_adjacent_cells():
    env = episode()
    obs = env.reset((2, 3, 3), (3, 3, 3))
    diff = obs[3:6] - obs[0:3]
    np.testing.assert_allclose(diff, [1.0 / 4, 0.0, 0.0])


def test_default_max_steps():
    assert default_max_steps((0, 0, 0), (1, 1, 0)) == 200
    assert default_max_steps((0, 0, 0), (99, 99, 9)) == 4 * (99 + 99 + 9)


def test_generated_wind_field_in_episode():
    # smoke: a generated field with buildings works end to end
    city = make_city(boxes=[((1, 1, 0), (2, 2, 1))])
    field = generate(WindConfig(direction_deg=90, speed=4.0), city.spec, city)
    env = Episode(field=field, city=city, params=PARAMS, weights=RewardWeights())
    obs = env.reset((0, 0, 0), (3, 3, 3))
    assert np.all(np.isfinite(obs))
    outcome, obs = env.step(ACTIONS.index((0, 0, 1)))
    assert not outcome.done
    assert np.all(np.isfinite(obs))
