"""Centralised Soft Actor-Critic for the district storage problem.

One actor (tanh-squashed Gaussian), twin critics with Polyak-averaged
targets, a ring replay buffer, and a fixed entropy temperature. Training
updates run in batches every ``update_interval_steps`` environment steps.
All randomness flows from one seeded ``numpy.random.Generator`` per agent.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import neural
from .baseline import RbcSchedule, rbc_policy
from .env import ActionLayout, DistrictEnv, EnvConfig, _plant, hour_of, observation_size, run_episode
from .metrics import score_from_components, components
from .reward import RewardConfig, reward

log = logging.getLogger(__name__)


class InsufficientData(RuntimeError):
    pass


class LayoutMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SacConfig:
    buffer_capacity: int = 2_000_000
    minibatch: int = 1024
    gamma: float = 0.9
    alpha: float = 0.2
    update_interval_steps: int = 168
    learning_rate: float = 5e-4
    tau: float = 3e-3
    hidden: int = 256
    hidden_layers: int = 2
    gradient_updates_per_interval: int = 168
    warmup_random_steps: int = 168
    dtype: str = "float32"

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        for name in ("buffer_capacity", "minibatch", "update_interval_steps", "hidden", "hidden_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.minibatch > self.buffer_capacity:
            raise ValueError("minibatch cannot exceed buffer_capacity")
        if self.gradient_updates_per_interval < 0 or self.warmup_random_steps < 0:
            raise ValueError("update and warmup counts must be >= 0")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @classmethod
    def evaluation(cls, **overrides):
        """Deployment-phase hyperparameters: small minibatch, lower learning rate, no warmup."""
        kw = dict(minibatch=64, learning_rate=1e-4, warmup_random_steps=0)
        kw.update(overrides)
        return cls(**kw)


# ---------------------------------------------------------------------------
# observation scaling and experience storage


@dataclass
class ObsNormalizer:
    low: np.ndarray
    high: np.ndarray

    @classmethod
    def from_dataset(cls, dataset, env_config=EnvConfig()):
        plant = _plant(dataset, env_config)
        low = plant.obs_table.min(axis=0)
        high = plant.obs_table.max(axis=0)
        soc_cols = np.concatenate([plant.soc_cool_cols, plant.soc_dhw_cols])
        low[soc_cols] = 0.0
        high[soc_cols] = 1.0
        return cls(low, high)

    def __call__(self, obs):
        obs = np.asarray(obs, dtype=np.float64)
        span = self.high - self.low
        constant = span <= 0
        out = (obs - self.low) / np.where(constant, 1.0, span)
        return np.where(constant, 0.5, out)


def normalize_observation(raw, low, high):
    return ObsNormalizer(np.asarray(low, float), np.asarray(high, float))(raw)


class ReplayBuffer:
    """Ring buffer of transitions; storage grows geometrically up to ``capacity``."""

    def __init__(self, capacity, obs_dim, act_dim, dtype=np.float32):
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.dtype = np.dtype(dtype)
        self.size = 0
        self.cursor = 0
        self._alloc(min(self.capacity, 4096))

    def _alloc(self, n):
        old = getattr(self, "s", None)
        fields = {
            "s": (n, self.obs_dim),
            "a": (n, self.act_dim),
            "r": (n,),
            "s2": (n, self.obs_dim),
            "done": (n,),
        }
        for name, shape in fields.items():
            arr = np.zeros(shape, dtype=self.dtype)
            if old is not None:
                prev = getattr(self, name)
                arr[: len(prev)] = prev
            setattr(self, name, arr)

    def __len__(self):
        return self.size

    def push(self, s, a, r, s2, done):
        if self.cursor >= len(self.r):
            self._alloc(min(self.capacity, 2 * len(self.r)))
        i = self.cursor
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s2[i] = s2
        self.done[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        if self.size < n:
            raise InsufficientData(f"buffer holds {self.size} transitions, minibatch needs {n}")
        idx = rng.integers(0, self.size, size=n)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx]

    def arrays(self):
        n = self.size
        return [self.s[:n], self.a[:n], self.r[:n], self.s2[:n], self.done[:n]]

    @classmethod
    def from_arrays(cls, capacity, arrays, cursor, dtype=np.float32):
        s, a, r, s2, done = arrays
        buf = cls(capacity, s.shape[1], a.shape[1], dtype)
        buf._alloc(max(len(r), min(capacity, 4096)))
        n = len(r)
        buf.s[:n], buf.a[:n], buf.r[:n], buf.s2[:n], buf.done[:n] = s, a, r, s2, done
        buf.size = n
        buf.cursor = cursor
        return buf


# ---------------------------------------------------------------------------
# agent


class SacAgent:
    def __init__(self, obs_dim, act_dim, config=SacConfig(), seed=0, structure=None):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.config = config
        self.structure = structure
        self.rng = np.random.default_rng(seed)
        dt = np.dtype(config.dtype)
        hidden = [config.hidden] * config.hidden_layers
        self.actor = neural.init_mlp([obs_dim] + hidden + [2 * act_dim], self.rng, dt)
        self.critics = [neural.init_mlp([obs_dim + act_dim] + hidden + [1], self.rng, dt) for _ in range(2)]
        self.targets = [[p.copy() for p in c] for c in self.critics]
        self._reset_optimizers()
        self.buffer = ReplayBuffer(config.buffer_capacity, obs_dim, act_dim, dt)
        self.total_steps = 0
        self.normalizer = None

    def _reset_optimizers(self):
        lr = self.config.learning_rate
        self.actor_opt = neural.AdamState.for_params(self.actor, lr)
        self.critic_opts = [neural.AdamState.for_params(c, lr) for c in self.critics]

    @property
    def dtype(self):
        return self.actor[0].dtype

    # -- policy ----------------------------------------------------------

    def _head(self, s):
        out, cache = neural.forward(self.actor, s)
        mean = out[..., : self.act_dim]
        raw_log_std = out[..., self.act_dim :]
        return mean, raw_log_std, cache

    def sample_action(self, s, noise=None):
        """Squashed-Gaussian sample for a batch of normalized observations."""
        mean, raw_ls, cache = self._head(s)
        if noise is None:
            noise = self.rng.standard_normal(mean.shape).astype(self.dtype)
        action, logp = neural.squashed_gaussian_sample(mean, raw_ls, noise)
        return action, logp, (mean, raw_ls, noise, cache)

    def act(self, obs_norm, deterministic=False):
        mean, raw_ls, _ = self._head(np.asarray(obs_norm, dtype=self.dtype))
        if deterministic:
            return np.tanh(mean).astype(np.float64)
        noise = self.rng.standard_normal(mean.shape).astype(self.dtype)
        action, _ = neural.squashed_gaussian_sample(mean, raw_ls, noise)
        return action.astype(np.float64)

    def q_values(self, s, a, nets=None):
        x = np.concatenate([s, a], axis=-1).astype(self.dtype)
        return [neural.forward(c, x)[0][..., 0] for c in (nets or self.critics)]

    # -- learning --------------------------------------------------------

    def critic_target(self, batch, noise=None):
        """Soft Bellman target from the target critics and a fresh next action."""
        _, _, r, s2, done = batch
        a2, logp2, _ = self.sample_action(s2, noise)
        q1, q2 = self.q_values(s2, a2, self.targets)
        soft_v = np.minimum(q1, q2) - self.config.alpha * logp2
        return r + self.config.gamma * (1.0 - done) * soft_v

    def gradient_step(self, batch):
        cfg = self.config
        s, a, r, s2, done = batch
        n = len(r)
        y = self.critic_target(batch)

        x = np.concatenate([s, a], axis=1).astype(self.dtype)
        critic_losses = []
        for critic, opt in zip(self.critics, self.critic_opts):
            q, cache = neural.forward(critic, x)
            err = q[:, 0] - y
            critic_losses.append(float(np.mean(err**2)))
            grads = neural.backward(critic, cache, (2.0 / n) * err[:, None])
            neural.adam_step(critic, grads, opt)

        # actor: minimize mean(alpha * log pi(a|s) - min_k Q_k(s, a)) with a reparameterized
        a_new, logp, (mean, raw_ls, noise, actor_cache) = self.sample_action(s)
        xa = np.concatenate([s, a_new], axis=1).astype(self.dtype)
        fwd = [neural.forward(c, xa) for c in self.critics]
        q1, q2 = fwd[0][0][:, 0], fwd[1][0][:, 0]
        use_first = q1 <= q2
        d_action = np.zeros_like(a_new)
        for k, (critic, (_, cache)) in enumerate(zip(self.critics, fwd)):
            mask = use_first if k == 0 else ~use_first
            if not mask.any():
                continue
            g_out = (-1.0 / n) * mask.astype(self.dtype)[:, None]
            _, g_in = neural.backward(critic, cache, g_out, need_input_grad=True, need_param_grads=False)
            d_action += g_in[:, self.obs_dim :]
        grad_logp = np.full(n, cfg.alpha / n, dtype=self.dtype)
        ls = np.clip(raw_ls, neural.LOG_STD_MIN, neural.LOG_STD_MAX)
        d_mean, d_ls = neural.squashed_gaussian_backward(raw_ls, ls, noise, a_new, d_action, grad_logp)
        actor_grads = neural.backward(self.actor, actor_cache, np.concatenate([d_mean, d_ls], axis=1))
        neural.adam_step(self.actor, actor_grads, self.actor_opt)
        actor_loss = float(np.mean(cfg.alpha * logp - np.minimum(q1, q2)))

        for target, critic in zip(self.targets, self.critics):
            neural.soft_update(target, critic, cfg.tau)
        return {
            "critic1_loss": critic_losses[0],
            "critic2_loss": critic_losses[1],
            "actor_loss": actor_loss,
            "entropy": float(-np.mean(logp)),
        }

    def update(self, n_updates=None):
        """Run a batch of gradient steps on minibatches drawn from the buffer."""
        cfg = self.config
        if len(self.buffer) < cfg.minibatch:
            raise InsufficientData(f"buffer holds {len(self.buffer)} transitions, minibatch is {cfg.minibatch}")
        n_updates = cfg.gradient_updates_per_interval if n_updates is None else n_updates
        diag = {}
        for _ in range(n_updates):
            diag = self.gradient_step(self.buffer.sample(cfg.minibatch, self.rng))
        return diag

    def observe(self, s, a, r, s2, done):
        """Store a transition and run the periodic update when one is due."""
        self.buffer.push(s, a, r, s2, done)
        self.total_steps += 1
        cfg = self.config
        if self.total_steps % cfg.update_interval_steps == 0 and len(self.buffer) >= cfg.minibatch:
            return self.update()
        return None

    def choose(self, obs_norm):
        if self.total_steps < self.config.warmup_random_steps:
            return self.rng.uniform(-1.0, 1.0, size=self.act_dim)
        return self.act(obs_norm)

    # -- persistence -----------------------------------------------------

    def save(self, directory, include_buffer=True):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        neural.save_arrays(d / "actor.bin", self.actor)
        for k in range(2):
            neural.save_arrays(d / f"critic{k + 1}.bin", self.critics[k])
            neural.save_arrays(d / f"target{k + 1}.bin", self.targets[k])
            neural.save_arrays(d / f"critic{k + 1}_adam.bin", self.critic_opts[k].m + self.critic_opts[k].v)
        neural.save_arrays(d / "actor_adam.bin", self.actor_opt.m + self.actor_opt.v)
        if include_buffer:
            neural.save_arrays(d / "buffer.bin", self.buffer.arrays())
        if self.normalizer is not None:
            neural.save_arrays(d / "normalizer.bin", [self.normalizer.low, self.normalizer.high])
        meta = {
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "structure": self.structure,
            "config": asdict(self.config),
            "total_steps": self.total_steps,
            "buffer_cursor": self.buffer.cursor if include_buffer else None,
            "adam_steps": {"actor": self.actor_opt.step, "critics": [o.step for o in self.critic_opts]},
            "rng_state": self.rng.bit_generator.state,
        }
        tmp = d / "agent.json.tmp"
        tmp.write_text(json.dumps(meta, indent=1, sort_keys=True))
        tmp.replace(d / "agent.json")

    @classmethod
    def load(cls, directory):
        d = Path(directory)
        meta = json.loads((d / "agent.json").read_text())
        config = SacConfig(**meta["config"])
        structure = meta["structure"]
        agent = cls(meta["obs_dim"], meta["act_dim"], config, seed=0,
                    structure=[tuple(x) for x in structure] if structure else None)
        agent.actor = neural.load_arrays(d / "actor.bin")
        agent.critics = [neural.load_arrays(d / f"critic{k + 1}.bin") for k in range(2)]
        agent.targets = [neural.load_arrays(d / f"target{k + 1}.bin") for k in range(2)]
        agent._reset_optimizers()
        for opt, name, step in [(agent.actor_opt, "actor_adam.bin", meta["adam_steps"]["actor"])] + [
            (agent.critic_opts[k], f"critic{k + 1}_adam.bin", meta["adam_steps"]["critics"][k]) for k in range(2)
        ]:
            arrays = neural.load_arrays(d / name)
            half = len(arrays) // 2
            opt.m, opt.v, opt.step = arrays[:half], arrays[half:], step
        if (d / "buffer.bin").is_file() and meta["buffer_cursor"] is not None:
            agent.buffer = ReplayBuffer.from_arrays(
                config.buffer_capacity, neural.load_arrays(d / "buffer.bin"), meta["buffer_cursor"], config.dtype
            )
        if (d / "normalizer.bin").is_file():
            agent.normalizer = ObsNormalizer(*neural.load_arrays(d / "normalizer.bin"))
        agent.total_steps = meta["total_steps"]
        agent.rng.bit_generator.state = meta["rng_state"]
        return agent


# ---------------------------------------------------------------------------
# episode loops


def district_structure(dataset):
    """Per-building (has_pv, has_dhw_storage) pattern fixing the vector layouts."""
    return [(bool(b.has_pv), bool(b.has_dhw_storage)) for b in dataset.buildings]


def make_agent(dataset, config=SacConfig(), seed=0):
    agent = SacAgent(
        observation_size(dataset),
        len(ActionLayout.from_dataset(dataset)),
        config,
        seed=seed,
        structure=district_structure(dataset),
    )
    return agent


def baseline_trace(dataset, env_config=EnvConfig(), schedule=RbcSchedule()):
    layout = ActionLayout.from_dataset(dataset)
    return run_episode(dataset, rbc_policy(layout, schedule), env_config).e_total


@dataclass
class EpisodeResult:
    reward_sum: float
    report: object
    trace: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    behaviour_report: object = None


def run_learning_episode(agent, dataset, env_config, reward_config, baseline_components, learn=True, deterministic=False):
    """One full episode of act / step / reward / store / periodic update.

    ``deterministic`` acts with the policy mean instead of sampling (the
    warmup phase still draws uniform actions). The report scores the trace
    the episode actually produced.
    """
    env = DistrictEnv(dataset, env_config)
    norm = agent.normalizer
    obs = norm(env.reset())
    total = 0.0
    trace = np.empty(env.hours)
    diag = {}
    for t in range(env.hours):
        if learn and agent.total_steps < agent.config.warmup_random_steps:
            action = agent.choose(obs)
        else:
            action = agent.act(obs, deterministic=deterministic or not learn)
        out = env.step(action)
        r = reward(out.e_total, out.e_buildings, hour_of(t), action, reward_config)
        nxt = norm(out.observation)
        if learn:
            d = agent.observe(obs, action, r, nxt, out.done)
            if d is not None:
                diag = d
        total += r
        trace[t] = out.e_total
        obs = nxt
    report = score_from_components(components(trace, dataset.month_blocks), baseline_components)
    return EpisodeResult(total, report, trace, diag)


@dataclass
class TrainResult:
    agent: SacAgent
    reports: list
    reward_sums: list


def train(
    dataset,
    env_config=EnvConfig(),
    sac_config=SacConfig(),
    episodes=1,
    seed=0,
    reward_config=RewardConfig(),
    schedule=RbcSchedule(),
    agent=None,
    on_episode=None,
):
    """Train a SAC agent for ``episodes`` full passes over ``dataset``.

    Actions are sampled from the policy while learning; after each episode
    the policy mean is rolled out once (no learning) and that trace is scored
    against the RBC. ``agent`` resumes a previous run. ``on_episode(episode, agent, result)``
    is called after every episode (used for logging and checkpoints).
    """
    if agent is None:
        agent = make_agent(dataset, sac_config, seed)
    _check_layout(agent, dataset)
    if agent.normalizer is None:
        agent.normalizer = ObsNormalizer.from_dataset(dataset, env_config)
    base = components(baseline_trace(dataset, env_config, schedule), dataset.month_blocks)
    reports, rewards = [], []
    for ep in range(episodes):
        result = run_learning_episode(agent, dataset, env_config, reward_config, base)
        # score the policy mean, not the exploration noise of the sampled actions
        greedy = greedy_trace(agent, dataset, env_config).e_total
        result.behaviour_report = result.report
        result.report = score_from_components(components(greedy, dataset.month_blocks), base)
        reports.append(result.report)
        rewards.append(result.reward_sum)
        log.info("episode %d reward %.3f score %.4f", ep + 1, result.reward_sum, result.report.avg_score)
        if on_episode is not None:
            on_episode(ep, agent, result)
    return TrainResult(agent, reports, rewards)


def _check_layout(agent, dataset):
    obs_dim = observation_size(dataset)
    act_dim = len(ActionLayout.from_dataset(dataset))
    structure = district_structure(dataset)
    if (obs_dim, act_dim) != (agent.obs_dim, agent.act_dim) or (
        agent.structure is not None and [tuple(s) for s in agent.structure] != structure
    ):
        raise LayoutMismatch(
            f"district layout (obs {obs_dim}, actions {act_dim}) does not match the agent "
            f"(obs {agent.obs_dim}, actions {agent.act_dim})"
        )


def adapt_agent(agent, eval_config, seed, dataset, env_config=EnvConfig()):
    """Copy of ``agent`` set up for deployment: same weights, new optimizer
    settings, empty buffer, normalization from the new dataset."""
    _check_layout(agent, dataset)
    cfg = eval_config
    if (cfg.hidden, cfg.hidden_layers) != (agent.config.hidden, agent.config.hidden_layers):
        cfg = replace(cfg, hidden=agent.config.hidden, hidden_layers=agent.config.hidden_layers)
    if cfg.dtype != agent.config.dtype:
        cfg = replace(cfg, dtype=agent.config.dtype)
    new = SacAgent(agent.obs_dim, agent.act_dim, cfg, seed=seed, structure=agent.structure)
    new.actor = [p.copy() for p in agent.actor]
    new.critics = [[p.copy() for p in c] for c in agent.critics]
    new.targets = [[p.copy() for p in c] for c in agent.targets]
    new._reset_optimizers()
    new.normalizer = ObsNormalizer.from_dataset(dataset, env_config)
    return new


def deploy(
    agent,
    dataset,
    env_config=EnvConfig(),
    eval_config=SacConfig.evaluation(),
    episodes=1,
    seed=0,
    reward_config=RewardConfig(),
    schedule=RbcSchedule(),
):
    """Run the pre-trained agent on a new district while it keeps learning online.

    The deployed controller acts with the policy mean; transitions still go
    to a fresh buffer and the networks keep updating with ``eval_config``.
    Returns ``(adapted_agent, reports)`` with one CostReport per episode,
    each scoring the trace the deployed controller produced.
    """
    live = adapt_agent(agent, eval_config, seed, dataset, env_config)
    base = components(baseline_trace(dataset, env_config, schedule), dataset.month_blocks)
    reports = []
    for _ in range(episodes):
        result = run_learning_episode(live, dataset, env_config, reward_config, base, deterministic=True)
        reports.append(result.report)
    return live, reports


def greedy_trace(agent, dataset, env_config=EnvConfig()):
    """District consumption under the deterministic (mean) policy, no learning."""
    norm = agent.normalizer or ObsNormalizer.from_dataset(dataset, env_config)
    return run_episode(dataset, lambda obs, t: agent.act(norm(obs), deterministic=True), env_config)
