"""Run configuration files.

A run config is a TOML file with optional top-level ``seed``, ``episodes``,
``data`` (one path or a list) and ``out``, plus sections that map onto the
library config objects::

    seed = 1
    episodes = 20

    [env]
    storage_loss_per_step = 0.008

    [env.cooling_cop_params]
    target_t = 8.0

    [reward]
    scale_divisor = 1000

    [sac]
    gradient_updates_per_interval = 56

    [sac_eval]
    minibatch = 64

    [rbc]
    charge_hours = [23, 24, 1, 2, 3, 4, 5, 6, 7, 8]

Relative paths are resolved against the directory holding the file.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .baseline import RbcSchedule
from .env import EnvConfig
from .reward import RewardConfig
from .sac import SacConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SECTIONS = ("env", "reward", "sac", "sac_eval", "rbc")
TOP_LEVEL = ("seed", "episodes", "data", "out")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    sac_eval: SacConfig = field(default_factory=SacConfig.evaluation)
    rbc: RbcSchedule = field(default_factory=RbcSchedule)
    seed: int | None = None
    episodes: int | None = None
    data: list = field(default_factory=list)
    out: Path | None = None


def _build(cls, section, table, base=None):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - names)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(unknown)}")
    try:
        if cls is RbcSchedule:
            return RbcSchedule.from_mapping(table)
        if cls is RewardConfig:
            table = {k: (frozenset(v) if k.endswith("_window") else v) for k, v in table.items()}
        if base is not None:
            return dataclasses.replace(base, **table)
        return cls(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def from_mapping(raw, root=Path(".")):
    unknown = sorted(set(raw) - set(SECTIONS) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown config entries: {', '.join(unknown)}")
    cfg = RunConfig()
    if "env" in raw:
        cfg.env = _build(EnvConfig, "env", raw["env"])
    if "reward" in raw:
        cfg.reward = _build(RewardConfig, "reward", raw["reward"])
    if "sac" in raw:
        cfg.sac = _build(SacConfig, "sac", raw["sac"])
    if "sac_eval" in raw:
        cfg.sac_eval = _build(SacConfig, "sac_eval", raw["sac_eval"], base=SacConfig.evaluation())
    if "rbc" in raw:
        cfg.rbc = _build(RbcSchedule, "rbc", raw["rbc"])
    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be a non-negative integer")
    cfg.seed = seed
    episodes = raw.get("episodes")
    if episodes is not None and (isinstance(episodes, bool) or not isinstance(episodes, int) or episodes < 0):
        raise ConfigError("episodes must be a non-negative integer")
    cfg.episodes = episodes
    data = raw.get("data", [])
    data = [data] if isinstance(data, str) else list(data)
    cfg.data = [root / p for p in data]
    if "out" in raw:
        cfg.out = root / raw["out"]
    return cfg


def load_run_config(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = from_mapping(raw, root=path.parent)
    missing = [p for p in cfg.data if not p.exists()]
    if missing:
        raise ConfigError(f"{path}: dataset path not found: {missing[0]}")
    return cfg
