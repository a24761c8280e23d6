"""Reference controllers: the hour-of-day rule-based controller (the score
normalization baseline), a no-op controller and a seeded uniform-random one."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import hour_of


def _hours(lo, hi):
    return frozenset(range(lo, hi + 1))


@dataclass(frozen=True)
class RbcSchedule:
    """Charge/discharge hours use the 1-24 hour-of-day convention (hour 1 is 00:00-01:00)."""

    charge_hours: frozenset = frozenset({23, 24} | set(range(1, 9)))
    discharge_hours: frozenset = _hours(10, 21)
    charge_rate: float = 1.0 / 12.0
    discharge_rate: float = 1.0 / 12.0

    def __post_init__(self):
        object.__setattr__(self, "charge_hours", frozenset(int(h) for h in self.charge_hours))
        object.__setattr__(self, "discharge_hours", frozenset(int(h) for h in self.discharge_hours))
        if self.charge_hours & self.discharge_hours:
            raise ValueError("charge and discharge hours overlap")
        if any(not 1 <= h <= 24 for h in self.charge_hours | self.discharge_hours):
            raise ValueError("schedule hours must lie in 1-24")
        if not (0 < self.charge_rate <= 1 and 0 < self.discharge_rate <= 1):
            raise ValueError("rates must lie in (0, 1]")

    @classmethod
    def from_mapping(cls, m):
        return cls(**{k: (frozenset(v) if k.endswith("_hours") else float(v)) for k, v in m.items()})


def rbc_action(hour, schedule, layout):
    if not 1 <= hour <= 24:
        raise ValueError(f"hour {hour} outside 1-24")
    n = len(layout)
    if hour in schedule.charge_hours:
        return np.full(n, schedule.charge_rate)
    if hour in schedule.discharge_hours:
        return np.full(n, -schedule.discharge_rate)
    return np.zeros(n)


def noop_action(layout):
    return np.zeros(len(layout))


def random_action(layout, seed, step=0):
    rng = np.random.default_rng([seed, step])
    return rng.uniform(-1.0, 1.0, size=len(layout))


def rbc_policy(layout, schedule=RbcSchedule()):
    return lambda obs, t: rbc_action(hour_of(t), schedule, layout)


def noop_policy(layout):
    return lambda obs, t: noop_action(layout)


def random_policy(layout, seed):
    return lambda obs, t: random_action(layout, seed, t)
