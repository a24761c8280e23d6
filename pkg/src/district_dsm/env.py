"""Hourly district simulator with cooling and DHW thermal storage.

Actions are fractions of storage capacity per hour, positive to charge.
The flat action vector holds one cooling slot per building followed by one
DHW slot for every building with DHW storage, in building order.
"""

from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import StorageKind, storage_capacity

KELVIN = 273.15
OBS_HEADER = ["month", "day", "hour", "t_out", "direct_solar_rad"]


class EpisodeFinished(RuntimeError):
    pass


class InvalidAction(ValueError):
    pass


@dataclass(frozen=True)
class CopParams:
    target_t: float = 8.0
    eta: float = 0.22
    cop_min: float = 1.0
    cop_max: float = 6.0


@dataclass(frozen=True)
class EnvConfig:
    storage_loss_per_step: float = 0.008
    max_charge_rate: float = 0.5
    cooling_cop_params: CopParams = field(default_factory=CopParams)
    dhw_efficiency: float = 0.9
    clip_net_at_zero: bool = True

    def __post_init__(self):
        p = self.cooling_cop_params
        if isinstance(p, dict):
            object.__setattr__(self, "cooling_cop_params", p := CopParams(**p))
        if not 0.0 <= self.storage_loss_per_step < 1.0:
            raise ValueError("storage_loss_per_step must lie in [0, 1)")
        if not 0.0 < self.max_charge_rate <= 1.0:
            raise ValueError("max_charge_rate must lie in (0, 1]")
        if not 0.0 < self.dhw_efficiency <= 1.0:
            raise ValueError("dhw_efficiency must lie in (0, 1]")
        if p.cop_min < 1.0 or p.cop_max < p.cop_min:
            raise ValueError("need 1 <= cop_min <= cop_max")


def cop(t_out, params=CopParams()):
    """Carnot-style chiller COP, clamped to ``[cop_min, cop_max]``."""
    lift = np.maximum(np.asarray(t_out, dtype=np.float64) - params.target_t, 0.1)
    value = np.clip(params.eta * (params.target_t + KELVIN) / lift, params.cop_min, params.cop_max)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class ActionLayout:
    """Which (building index, storage kind) each action slot drives."""

    slots: tuple

    @classmethod
    def from_dataset(cls, dataset):
        slots = [(i, StorageKind.COOLING) for i in range(len(dataset.buildings))]
        slots += [(i, StorageKind.DHW) for i, b in enumerate(dataset.buildings) if b.has_dhw_storage]
        return cls(tuple(slots))

    def __len__(self):
        return len(self.slots)


def observation_size(dataset):
    return 5 + sum(2 + b.has_pv + b.has_dhw_storage for b in dataset.buildings)


def observation_names(dataset):
    names = list(OBS_HEADER)
    for b in dataset.buildings:
        names.append(f"non_shiftable_load_{b.id}")
        if b.has_pv:
            names.append(f"solar_gen_{b.id}")
        names.append(f"cooling_storage_soc_{b.id}")
        if b.has_dhw_storage:
            names.append(f"dhw_storage_soc_{b.id}")
    return names


@dataclass(frozen=True, eq=False)
class DistrictState:
    t: int
    soc_cooling: np.ndarray
    soc_dhw: np.ndarray
    net_consumption_trace: tuple = ()


@dataclass(frozen=True, eq=False)
class StepOutcome:
    e_buildings: np.ndarray
    e_total: float
    observation: np.ndarray
    done: bool
    cooling_flow: np.ndarray
    dhw_flow: np.ndarray


class _Plant:
    """Per-dataset arrays precomputed once and cached per (dataset, config)."""

    def __init__(self, dataset, config):
        b = dataset.buildings
        self.hours = dataset.hours
        self.n = len(b)
        self.cool_cap = np.array([storage_capacity(x, "cooling") if x.cooling_storage_factor > 0 else 0.0 for x in b])
        self.dhw_cap = np.array([storage_capacity(x, "dhw") if x.has_dhw_storage else 0.0 for x in b])
        self.cooling = np.stack([x.cooling_demand for x in b], axis=1)
        self.dhw = np.stack([x.dhw_demand if x.dhw_demand is not None else np.zeros(self.hours) for x in b], axis=1)
        self.nsl = np.stack([x.non_shiftable_load for x in b], axis=1)
        self.pv = np.stack(
            [x.pv_kw * x.solar_gen_per_kw if x.has_pv else np.zeros(self.hours) for x in b], axis=1
        )
        self.cop = cop(dataset.weather.t_out, config.cooling_cop_params)
        self.dhw_idx = np.array([i for i, x in enumerate(b) if x.has_dhw_storage], dtype=int)
        self.layout = ActionLayout.from_dataset(dataset)

        # observation template: static columns per step, SOC slots filled in later
        cols = []
        soc_slots = []
        for i, x in enumerate(b):
            cols.append(self.nsl[:, i])
            if x.has_pv:
                cols.append(self.pv[:, i])
            soc_slots.append((5 + len(cols), "c", i))
            cols.append(np.zeros(self.hours))
            if x.has_dhw_storage:
                soc_slots.append((5 + len(cols), "d", i))
                cols.append(np.zeros(self.hours))
        months = np.empty(self.hours)
        for k, (lo, hi) in enumerate(dataset.month_blocks):
            months[lo:hi] = (dataset.start_month - 1 + k) % 12 + 1
        t = np.arange(self.hours)
        calendar = [
            months,
            ((dataset.start_weekday - 1 + t // 24) % 7 + 1).astype(float),
            (t % 24 + 1).astype(float),
            dataset.weather.t_out,
            dataset.weather.direct_solar_rad,
        ]
        self.obs_table = np.column_stack(calendar + cols)
        self.soc_cool_cols = np.array([c for c, k, _ in soc_slots if k == "c"], dtype=int)
        self.soc_dhw_cols = np.array([c for c, k, _ in soc_slots if k == "d"], dtype=int)


_PLANTS = weakref.WeakKeyDictionary()


def _plant(dataset, config):
    per_dataset = _PLANTS.setdefault(dataset, {})
    plant = per_dataset.get(config)
    if plant is None:
        plant = per_dataset[config] = _Plant(dataset, config)
    return plant


def hour_of(t):
    """Hour of day in 1..24 for step index ``t``."""
    return int(t) % 24 + 1


def build_observation(state, dataset, t, config=EnvConfig()):
    """Observation vector at step ``t`` given the storage state."""
    plant = _plant(dataset, config)
    if not 0 <= t < plant.hours:
        raise IndexError(f"step {t} outside [0, {plant.hours})")
    obs = plant.obs_table[t].copy()
    obs[plant.soc_cool_cols] = state.soc_cooling
    obs[plant.soc_dhw_cols] = state.soc_dhw[plant.dhw_idx]
    return obs


def reset(dataset, config=EnvConfig()):
    """Start an episode: every storage at half charge, empty trace."""
    n = len(dataset.buildings)
    has_dhw = np.array([b.has_dhw_storage for b in dataset.buildings])
    state = DistrictState(
        t=0,
        soc_cooling=np.full(n, 0.5),
        soc_dhw=np.where(has_dhw, 0.5, 0.0),
    )
    return state, build_observation(state, dataset, 0, config)


def _flows(action, cap, soc, demand, rate, loss):
    """Clamp requested flows (kWh) and return ``(flow, new_soc)``.

    Charging stops at SOC 1; discharging never exceeds this step's demand
    or the stored energy.
    """
    retained = soc * (1.0 - loss)
    flow = np.clip(action * cap, -rate * cap, rate * cap)
    flow = np.minimum(flow, (1.0 - retained) * cap)
    flow = np.maximum(flow, -np.minimum(demand, retained * cap))
    safe = np.where(cap > 0, cap, 1.0)
    new_soc = np.where(cap > 0, np.clip(retained + flow / safe, 0.0, 1.0), soc)
    return np.where(cap > 0, flow, 0.0), new_soc


def step(state, actions, dataset, config=EnvConfig()):
    """Advance one hour. Returns ``(new_state, StepOutcome)``."""
    plant = _plant(dataset, config)
    t = state.t
    if t >= plant.hours:
        raise EpisodeFinished(f"episode of {plant.hours} steps already finished")
    a = np.asarray(actions, dtype=np.float64)
    if a.shape != (len(plant.layout),):
        raise InvalidAction(f"expected {len(plant.layout)} actions, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidAction("actions must be finite")
    a = np.clip(a, -1.0, 1.0)
    n = plant.n
    loss = config.storage_loss_per_step
    rate = config.max_charge_rate

    cool_flow, soc_c = _flows(a[:n], plant.cool_cap, state.soc_cooling, plant.cooling[t], rate, loss)
    dhw_action = np.zeros(n)
    dhw_action[plant.dhw_idx] = a[n:]
    dhw_flow, soc_d = _flows(dhw_action, plant.dhw_cap, state.soc_dhw, plant.dhw[t], rate, loss)

    cooling_elec = (plant.cooling[t] + cool_flow) / plant.cop[t]
    dhw_elec = (plant.dhw[t] + dhw_flow) / config.dhw_efficiency
    e_i = cooling_elec + dhw_elec + plant.nsl[t] - plant.pv[t]
    e_total = float(np.sum(e_i))
    if config.clip_net_at_zero:
        e_total = max(e_total, 0.0)

    new_state = DistrictState(
        t=t + 1,
        soc_cooling=soc_c,
        soc_dhw=soc_d,
        net_consumption_trace=state.net_consumption_trace + (e_total,),
    )
    done = t + 1 == plant.hours
    # the final transition reuses the last step's exogenous inputs
    obs = build_observation(new_state, dataset, min(t + 1, plant.hours - 1), config)
    return new_state, StepOutcome(e_i, e_total, obs, done, cool_flow, dhw_flow)


class DistrictEnv:
    """Gym-style wrapper around :func:`reset`/:func:`step` for one episode loop."""

    def __init__(self, dataset, config=EnvConfig()):
        self.dataset = dataset
        self.config = config
        self.layout = ActionLayout.from_dataset(dataset)
        self.observation_size = observation_size(dataset)
        self.state = None

    @property
    def hours(self):
        return self.dataset.hours

    def reset(self):
        self.state, obs = reset(self.dataset, self.config)
        return obs

    def step(self, actions):
        if self.state is None:
            raise RuntimeError("call reset() first")
        self.state, outcome = step(self.state, actions, self.dataset, self.config)
        return outcome


@dataclass
class EpisodeTrace:
    e_total: np.ndarray
    e_buildings: np.ndarray
    soc_cooling: np.ndarray
    soc_dhw: np.ndarray
    building_ids: list
    dhw_ids: list

    def write_csv(self, path):
        header = ["t", "e_total"]
        header += [f"e_{i}" for i in self.building_ids]
        header += [f"soc_cooling_{i}" for i in self.building_ids]
        header += [f"soc_dhw_{i}" for i in self.dhw_ids]
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t in range(len(self.e_total)):
                row = [t, repr(float(self.e_total[t]))]
                row += [repr(float(x)) for x in self.e_buildings[t]]
                row += [repr(float(x)) for x in self.soc_cooling[t]]
                row += [repr(float(x)) for x in self.soc_dhw[t]]
                w.writerow(row)


def run_episode(dataset, policy, config=EnvConfig()):
    """Roll out ``policy(obs, t) -> actions`` for one full episode."""
    env = DistrictEnv(dataset, config)
    obs = env.reset()
    dhw_idx = [i for i, b in enumerate(dataset.buildings) if b.has_dhw_storage]
    e_total, e_b, soc_c, soc_d = [], [], [], []
    for t in range(env.hours):
        out = env.step(policy(obs, t))
        obs = out.observation
        e_total.append(out.e_total)
        e_b.append(out.e_buildings)
        soc_c.append(env.state.soc_cooling)
        soc_d.append(env.state.soc_dhw[dhw_idx])
    return EpisodeTrace(
        e_total=np.array(e_total),
        e_buildings=np.array(e_b),
        soc_cooling=np.array(soc_c),
        soc_dhw=np.array(soc_d).reshape(len(e_total), len(dhw_idx)),
        building_ids=[b.id for b in dataset.buildings],
        dhw_ids=[dataset.buildings[i].id for i in dhw_idx],
    )
