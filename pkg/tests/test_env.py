import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from district_dsm import env
from district_dsm.baseline import noop_policy, random_policy
from district_dsm.data import BuildingSpec, BuildingType, Dataset, WeatherSeries, generate_synthetic
from district_dsm.env import ActionLayout, CopParams, EnvConfig, cop, observation_size, run_episode


def make_dataset(n_hours=24, cooling=10.0, dhw=None, nsl=5.0, t_out=30.0, pv_kw=0.0, cfac=3.0, dfac=0.0, **kw):
    full = lambda v: np.full(n_hours, float(v)) if np.isscalar(v) else np.asarray(v, float)
    b = BuildingSpec(
        id=1,
        building_type=BuildingType.RESIDENTIAL,
        cooling_demand=full(cooling),
        non_shiftable_load=full(nsl),
        dhw_demand=None if dhw is None else full(dhw),
        solar_gen_per_kw=full(0.5) if pv_kw else None,
        pv_kw=pv_kw,
        cooling_storage_factor=cfac,
        dhw_storage_factor=dfac,
    )
    weather = WeatherSeries(t_out=full(t_out), direct_solar_rad=full(0.0))
    return Dataset("test", [b], weather, **kw).validate()


def test_cop_examples():
    p = CopParams()
    assert cop(8.0, p) == 6.0
    assert cop(35.0, p) == pytest.approx(0.22 * 281.15 / 27, rel=1e-12)
    assert cop(35.0, p) == pytest.approx(2.291, abs=5e-4)
    assert cop(60.0, p) >= 1.0


@given(st.floats(8.5, 55.0), st.floats(0.0, 5.0))
def test_cop_non_increasing(t, dt):
    assert cop(t + dt) <= cop(t)


def test_layout_and_observation_size_design_district(design_district):
    layout = ActionLayout.from_dataset(design_district)
    assert len(layout) == 16
    assert observation_size(design_district) == 5 + 9 * 2 + 4 + 7
    state, obs = env.reset(design_district)
    assert np.all(state.soc_cooling == 0.5)
    assert np.all(state.soc_dhw[[0, 1, 4, 5, 6, 7, 8]] == 0.5)
    assert np.all(state.soc_dhw[[2, 3]] == 0.0)
    assert obs.shape == (observation_size(design_district),)


def test_single_building_observation_length():
    ds = make_dataset()
    assert observation_size(ds) == 7
    assert env.reset(ds)[1].shape == (7,)


def test_reset_is_deterministic(design_district):
    a = env.reset(design_district)[1]
    b = env.reset(design_district)[1]
    np.testing.assert_array_equal(a, b)


def test_zero_action_pass_through():
    ds = make_dataset(cooling=12.0, dhw=4.0, nsl=3.0, t_out=30.0, dfac=3.0)
    cfg = EnvConfig()
    state, _ = env.reset(ds, cfg)
    _, out = env.step(state, np.zeros(2), ds, cfg)
    expected = 12.0 / cop(30.0) + 4.0 / 0.9 + 3.0
    assert out.e_total == pytest.approx(expected, rel=1e-12)


def test_charge_rate_clamp_binds():
    ds = make_dataset(cooling=10.0)
    state = env.DistrictState(t=0, soc_cooling=np.array([0.0]), soc_dhw=np.array([0.0]))
    new, out = env.step(state, [1.0], ds)
    assert new.soc_cooling[0] == pytest.approx(0.5, abs=1e-15)
    assert out.cooling_flow[0] == pytest.approx(0.5 * 30.0)


def test_discharge_limited_by_demand():
    cooling = np.r_[0.0, np.full(23, 10.0)]
    ds = make_dataset(cooling=cooling)
    state = env.DistrictState(t=0, soc_cooling=np.array([0.1]), soc_dhw=np.array([0.0]))
    new, out = env.step(state, [-1.0], ds)
    assert out.cooling_flow[0] == 0.0
    assert new.soc_cooling[0] == pytest.approx(0.1 * (1 - 0.008), rel=1e-12)
    assert new.soc_cooling[0] == pytest.approx(0.0992, rel=1e-12)


def test_charging_stops_at_full():
    ds = make_dataset(cooling=10.0)
    state = env.DistrictState(t=0, soc_cooling=np.array([0.9]), soc_dhw=np.array([0.0]))
    new, out = env.step(state, [1.0], ds)
    assert new.soc_cooling[0] == pytest.approx(1.0, abs=1e-12)
    assert out.cooling_flow[0] == pytest.approx((1 - 0.9 * 0.992) * 30.0)


def test_pv_and_clipping():
    ds = make_dataset(cooling=0.0, nsl=1.0, pv_kw=100.0)
    _, out = env.step(env.reset(ds)[0], [0.0], ds)
    assert out.e_buildings[0] == pytest.approx(1.0 - 50.0)
    assert out.e_total == 0.0
    _, out = env.step(env.reset(ds)[0], [0.0], ds, EnvConfig(clip_net_at_zero=False))
    assert out.e_total == pytest.approx(-49.0)


def test_observation_calendar():
    ds = make_dataset(n_hours=48, start_month=4, start_weekday=7)
    state = env.reset(ds)[0]
    obs0 = env.build_observation(state, ds, 0)
    assert obs0[:3].tolist() == [4, 7, 1]
    obs25 = env.build_observation(state, ds, 25)
    assert obs25[1:3].tolist() == [1, 2]
    ds = make_dataset(n_hours=48, start_weekday=1)
    assert env.build_observation(env.reset(ds)[0], ds, 0)[:3].tolist() == [1, 1, 1]


def test_month_advances_by_block():
    ds = generate_synthetic(1, 70, seed=0, start_month=12)
    state = env.reset(ds)[0]
    assert env.build_observation(state, ds, 0)[0] == 12
    assert env.build_observation(state, ds, 720)[0] == 1
    assert env.build_observation(state, ds, 1440)[0] == 2


def test_observation_layout_pv_shift():
    ds = generate_synthetic(2, 2, seed=0)  # building 1 has PV, building 2 does not
    names = env.observation_names(ds)
    assert names[5:] == [
        "non_shiftable_load_1",
        "solar_gen_1",
        "cooling_storage_soc_1",
        "dhw_storage_soc_1",
        "non_shiftable_load_2",
        "cooling_storage_soc_2",
        "dhw_storage_soc_2",
    ]
    obs = env.reset(ds)[1]
    b1 = ds.buildings[0]
    assert obs[6] == b1.pv_kw * b1.solar_gen_per_kw[0]
    assert obs[7] == 0.5


def test_episode_finished():
    ds = make_dataset()
    state = env.reset(ds)[0]
    for _ in range(24):
        state, out = env.step(state, [0.0], ds)
    assert out.done
    assert len(state.net_consumption_trace) == 24
    with pytest.raises(env.EpisodeFinished):
        env.step(state, [0.0], ds)


def test_bad_action_shape(small_district):
    state = env.reset(small_district)[0]
    with pytest.raises(env.InvalidAction):
        env.step(state, np.zeros(2), small_district)


def test_zero_capacity_district_ignores_actions():
    ds = generate_synthetic(4, 3, seed=9)
    ds = dataclasses.replace(
        ds,
        buildings=[dataclasses.replace(b, cooling_storage_factor=0.0, dhw_storage_factor=0.0) for b in ds.buildings],
    )
    layout = ActionLayout.from_dataset(ds)
    a = run_episode(ds, random_policy(layout, 3)).e_total
    b = run_episode(ds, noop_policy(layout)).e_total
    np.testing.assert_array_equal(a, b)


def test_trace_determinism(small_district):
    layout = ActionLayout.from_dataset(small_district)
    a = run_episode(small_district, random_policy(layout, 11))
    b = run_episode(small_district, random_policy(layout, 11))
    np.testing.assert_array_equal(a.e_total, b.e_total)
    np.testing.assert_array_equal(a.soc_cooling, b.soc_cooling)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), loss=st.floats(0.001, 0.05))
def test_storage_energy_balance(seed, loss):
    """With a fixed COP, extra electricity equals the energy put into storage
    (net SOC change plus standing losses); storage never creates energy
    beyond what it held at the start."""
    rng = np.random.default_rng(seed)
    cooling = rng.uniform(0.0, 40.0, 72)
    dhw = rng.uniform(0.0, 8.0, 72)
    ds = make_dataset(n_hours=72, cooling=cooling, dhw=dhw, nsl=5.0, t_out=30.0, dfac=2.0)
    cfg = EnvConfig(storage_loss_per_step=loss, clip_net_at_zero=False)
    layout = ActionLayout.from_dataset(ds)
    ctrl = run_episode(ds, random_policy(layout, seed), cfg)
    zero = run_episode(ds, noop_policy(layout), cfg)
    c = cop(30.0)
    caps = np.array([3.0 * cooling.max(), 2.0 * dhw.max()])
    effs = np.array([c, 0.9])
    socs = np.column_stack([ctrl.soc_cooling[:, 0], ctrl.soc_dhw[:, 0]])
    prev = np.vstack([[0.5, 0.5], socs[:-1]])
    stored = caps * (socs[-1] - 0.5 + loss * prev.sum(axis=0))
    diff = ctrl.e_total.sum() - zero.e_total.sum()
    assert diff == pytest.approx(np.sum(stored / effs), rel=1e-9, abs=1e-8)
    assert diff >= -np.sum(0.5 * caps / effs) - 1e-9


def test_soc_bounds_random_walk(design_district):
    layout = ActionLayout.from_dataset(design_district)
    tr = run_episode(design_district, random_policy(layout, 0))
    assert np.all((tr.soc_cooling >= 0) & (tr.soc_cooling <= 1))
    assert np.all((tr.soc_dhw >= 0) & (tr.soc_dhw <= 1))
    assert np.all(np.isfinite(tr.e_total))


def test_trace_csv(tmp_path, small_district):
    layout = ActionLayout.from_dataset(small_district)
    tr = run_episode(small_district, noop_policy(layout))
    tr.write_csv(tmp_path / "trace.csv")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0].split(",")[:5] == ["t", "e_total", "e_1", "e_2", "e_3"]
    assert lines[0].endswith("soc_dhw_1,soc_dhw_2")
    assert len(lines) == small_district.hours + 1
