"""Virtual-price reward with night-charge / day-discharge shaping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RewardConfig:
    beta: float = 0.005
    night_window: frozenset = frozenset({22, 23, 24})
    day_window: frozenset = frozenset(range(12, 21))
    night_charge_threshold: float = 0.1
    shaping_magnitude: float = 1000.0
    scale_divisor: float = 2000.0
    clip_lo: float = -1.0
    clip_hi: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "night_window", frozenset(int(h) for h in self.night_window))
        object.__setattr__(self, "day_window", frozenset(int(h) for h in self.day_window))
        if not self.clip_lo < self.clip_hi:
            raise ValueError("clip_lo must be below clip_hi")
        if not self.scale_divisor > 0:
            raise ValueError("scale_divisor must be positive")
        if self.night_window & self.day_window:
            raise ValueError("night and day windows overlap")


def price_term(e_total, e_buildings, beta):
    """Quadratic virtual-price penalty ``-beta * e_total * sum(e_i)``."""
    if e_total == 0:
        return 0.0
    return -beta * e_total * float(np.sum(e_buildings))


def shaping_term(hour, actions, config=RewardConfig()):
    m = float(np.mean(actions))
    mag = config.shaping_magnitude
    r = 0.0
    if hour in config.night_window:
        if m > config.night_charge_threshold:
            r += mag
        elif m < 0:
            r -= mag
    if hour in config.day_window and m > 0:
        r -= mag
    return r


def reward(e_total, e_buildings, hour, actions, config=RewardConfig()):
    with np.errstate(over="ignore", invalid="ignore"):
        raw = price_term(e_total, e_buildings, config.beta) + shaping_term(hour, actions, config)
    return float(np.clip(raw / config.scale_divisor, config.clip_lo, config.clip_hi))
