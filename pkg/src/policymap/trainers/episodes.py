"""Episode collection and greedy evaluation.

The feature stack is frozen during every online phase, so episode steps
cache the feature output (the network input of the trainable portion)
instead of raw frames; the offline saliency trainer, whose downsampler is
plastic, caches the frames themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..agentnet import Agent
from ..tensornet import softmax
from ..worldsim import EnvParams, world_reset, world_step


@dataclass
class Step:
    obs: np.ndarray  # policy input cached at acting time
    action: int
    reward: float


@dataclass
class Episode:
    steps: list = field(default_factory=list)
    ret: float = 0.0  # sum of step rewards
    success: bool = False  # terminal reward was positive
    env_seed: int = 0

    def __len__(self):
        return len(self.steps)


class AgentSampler:
    """Stochastic acting adapter for an assembled agent in policy mode."""

    def __init__(self, agent: Agent):
        if agent.head_mode != "policy_logits":
            raise ValueError("CEM acting requires an agent in policy_logits mode")
        self.agent = agent

    def probs(self, frame):
        feats = self.agent.features(frame.data)
        logits = self.agent.logits_from_features(feats)
        return softmax(logits), feats


class OfflineNetSampler:
    """Stochastic acting adapter for the offline saliency net (plastic end to end)."""

    def __init__(self, net):
        self.net = net

    def probs(self, frame):
        if frame.mode != "saliency":
            raise ValueError(f"offline net expects saliency frames, got {frame.mode!r}")
        logits = self.net.forward(frame.data[None])[0]
        return softmax(logits), frame.data


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs.astype(np.float64))
    u = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, u, side="right"), len(probs) - 1))


def run_episode(sampler, task, env_seed: int, rng: np.random.Generator,
                env: EnvParams | None = None) -> Episode:
    state, frame = world_reset(task, env_seed, env)
    ep = Episode(env_seed=env_seed)
    done = False
    while not done:
        probs, cache = sampler.probs(frame)
        action = sample_action(probs, rng)
        frame, reward, done = world_step(state, action)
        ep.steps.append(Step(obs=cache, action=action, reward=reward))
        ep.ret += reward
    ep.success = ep.ret > 0
    return ep


def collect_batch(sampler, task, batch_size: int, rng: np.random.Generator,
                  env: EnvParams | None = None) -> list[Episode]:
    """Sample ``batch_size`` episodes from the current stochastic policy."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    episodes = []
    for _ in range(batch_size):
        env_seed = int(rng.integers(0, 2**31 - 1))
        episodes.append(run_episode(sampler, task, env_seed, rng, env))
    return episodes


def _eval_env_seeds(task, n_episodes: int, seed: int) -> np.ndarray:
    ss = np.random.SeedSequence([seed, task.id % (2**31)])
    return ss.generate_state(n_episodes, dtype=np.uint32)


def evaluate(agent: Agent, task, n_episodes: int, seed: int = 0,
             env: EnvParams | None = None) -> float:
    """Fraction of greedy episodes that reach the target; never mutates the agent.

    Greedy means argmax over the forward output (ties resolve to the lowest
    action index), which covers both policy and Q-value head modes.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    wins = 0
    for env_seed in _eval_env_seeds(task, n_episodes, seed):
        state, frame = world_reset(task, int(env_seed), env)
        done = False
        reward = 0.0
        while not done:
            action = int(np.argmax(agent.forward(frame)))
            frame, reward, done = world_step(state, action)
        if reward > 0:
            wins += 1
    return wins / n_episodes
