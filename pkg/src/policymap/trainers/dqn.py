"""Deep Q-learning baseline over the same network, one empty buffer per task."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..agentnet import Agent, MappingLayer, PolicyHead
from ..tensornet import AdamState, Graph, adam_step, check_finite, huber_q_loss, project_nonnegative
from ..worldsim import EnvParams, world_reset, world_step
from .cem import TrainingResult


@dataclass
class DqnConfig:
    gamma: float = 0.9
    buffer_capacity: int = 10_000
    minibatch: int = 32
    target_sync_steps: int = 1000
    lr: float = 1e-3
    eps_start: float = 1.0
    eps_final: float = 0.02
    anneal_episodes: int = 500
    warmup_transitions: int = 500
    update_every: int = 1
    cutoff_episodes: int = 2000
    trailing_window: int = 25
    success_threshold: float = 0.95


class ReplayBuffer:
    """Fixed-capacity ring of (features, action, reward, next features, done)."""

    def __init__(self, capacity: int, feat_shape: tuple):
        self.capacity = capacity
        self.obs = np.zeros((capacity, *feat_shape), dtype=np.float32)
        self.next_obs = np.zeros((capacity, *feat_shape), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.dones = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def clear(self):
        self.size = 0
        self._next = 0

    def push(self, obs, action, reward, next_obs, done):
        i = self._next
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = 1.0 if done else 0.0
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, n: int):
        idx = rng.integers(0, self.size, size=n)
        return (
            self.obs[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_obs[idx],
            self.dones[idx],
        )


class _TargetNet:
    """Frozen snapshot of the mapping + head, synced every N steps."""

    def __init__(self, agent: Agent):
        self.mapping = MappingLayer(
            in_channels=agent.mapping.in_channels, out_channels=agent.mapping.out_channels
        )
        self.head = PolicyHead(rng=None, in_channels=agent.head.in_channels,
                               hidden=agent.head.l1.out_dim)
        self.sync(agent)

    def sync(self, agent: Agent):
        self.mapping.weights.data = agent.mapping.weights.data.copy()
        self.head.l1.weight.data = agent.head.l1.weight.data.copy()
        self.head.l2.weight.data = agent.head.l2.weight.data.copy()

    def q_values(self, feats: np.ndarray) -> np.ndarray:
        return self.head.forward(self.mapping.forward(feats))


def q_targets(target_net: _TargetNet, rewards: np.ndarray, next_obs: np.ndarray,
              dones: np.ndarray, gamma: float) -> np.ndarray:
    """Bootstrap targets; terminal transitions contribute exactly their reward."""
    next_q = target_net.q_values(next_obs).max(axis=1)
    return rewards + gamma * next_q * (1.0 - dones)


def dqn_train_task(agent: Agent, task, cfg: DqnConfig, seed: int,
                   env: EnvParams | None = None, record=None) -> TrainingResult:
    """Epsilon-greedy Q-learning on one task, starting from an empty buffer.

    Epsilon anneals linearly from ``eps_start`` to ``eps_final`` over the
    first ``anneal_episodes`` episodes; convergence requires the trailing
    success window to clear the threshold after the anneal has finished.
    Terminal transitions bootstrap nothing: their target is the reward.
    """
    if agent.head_mode != "q_values":
        raise ValueError("dqn_train_task requires an agent in q_values mode")
    rng = np.random.default_rng(seed)
    feat_shape = (agent.mapping.in_channels, 3, 3)
    buffer = ReplayBuffer(cfg.buffer_capacity, feat_shape)
    target = _TargetNet(agent)
    adam = AdamState(agent.plastic_parameters(), lr=cfg.lr)
    result = TrainingResult(converged=False, episodes_used=0)
    successes: list[bool] = []
    global_step = 0
    anneal = max(cfg.anneal_episodes, 1)

    for ep_idx in range(cfg.cutoff_episodes):
        eps = cfg.eps_final + (cfg.eps_start - cfg.eps_final) * max(0.0, 1.0 - ep_idx / anneal)
        env_seed = int(rng.integers(0, 2**31 - 1))
        state, frame = world_reset(task, env_seed, env)
        feats = agent.features(frame.data)
        done = False
        ep_ret = 0.0
        ep_steps = 0
        while not done:
            if rng.random() < eps:
                action = int(rng.integers(agent.head.l2.out_dim))
            else:
                action = int(np.argmax(agent.logits_from_features(feats)))
            frame, reward, done = world_step(state, action)
            next_feats = agent.features(frame.data)
            buffer.push(feats, action, reward, next_feats, done)
            feats = next_feats
            ep_ret += reward
            ep_steps += 1
            global_step += 1
            if len(buffer) >= max(cfg.warmup_transitions, cfg.minibatch) and (
                global_step % cfg.update_every == 0
            ):
                b_obs, b_act, b_rew, b_next, b_done = buffer.sample(rng, cfg.minibatch)
                targets = q_targets(target, b_rew, b_next, b_done, cfg.gamma)
                graph = Graph()
                q = agent.logits_from_features(b_obs, graph)
                huber_q_loss(q, b_act, targets.astype(np.float64), graph)
                graph.backward()
                adam_step(adam)
                if agent.mapping.linear.nonnegative:
                    project_nonnegative(agent.mapping.linear)
                result.n_updates += 1
                result.min_mapping_weight = min(
                    result.min_mapping_weight, float(agent.mapping.weights.data.min())
                )
            if global_step % cfg.target_sync_steps == 0:
                target.sync(agent)
        check_finite(agent.plastic_parameters(), "after DQN episode")
        successes.append(ep_ret > 0)
        trailing = float(np.mean(successes[-cfg.trailing_window:]))
        result.success_curve.append(trailing)
        if record is not None:
            record({
                "episode": len(successes),
                "return": ep_ret,
                "steps": ep_steps,
                "success": ep_ret > 0,
                "trailing25": round(trailing, 6),
                "epsilon": round(eps, 6),
            })
        if (
            ep_idx + 1 >= anneal
            and len(successes) >= cfg.trailing_window
            and trailing >= cfg.success_threshold
        ):
            result.converged = True
            result.episodes_used = len(successes)
            break
    if not result.converged:
        result.episodes_used = len(successes)
    result.buffer_start_len = 0  # fresh buffer by construction
    result.buffer_end_len = len(buffer)
    return result
