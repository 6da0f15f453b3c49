"""Cross-entropy-method training: imitate the successful episodes of each batch.

With the sparse binary reward the elite set is exactly the successful
episodes; a batch with no successes performs no update at all.  The update
is one Adam step on mean action cross-entropy minus an entropy bonus,
followed by the nonnegativity projection of the mapping layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..agentnet import Agent, OfflinePolicyNet
from ..tensornet import (
    AdamState,
    Graph,
    adam_step,
    check_finite,
    policy_ce_loss,
    project_nonnegative,
)
from ..worldsim import EnvParams
from .episodes import AgentSampler, Episode, OfflineNetSampler, collect_batch


@dataclass
class CemConfig:
    batch_size: int = 16
    percentile: float = 70.0
    entropy_coeff: float = 0.03
    lr: float = 1e-3
    cutoff_episodes: int = 2000
    trailing_window: int = 25
    success_threshold: float = 0.95


@dataclass
class TrainingResult:
    converged: bool
    episodes_used: int
    success_curve: list = field(default_factory=list)  # trailing success per episode
    n_updates: int = 0
    n_skipped_updates: int = 0
    min_mapping_weight: float = np.inf  # across all post-update checks
    min_policy_input: float = np.inf  # across all update forward passes
    final_eval: float | None = None
    checkpoint: str | None = None
    buffer_start_len: int | None = None  # DQN only
    buffer_end_len: int | None = None  # DQN only


def select_elites(episodes: list[Episode], percentile: float) -> list[Episode]:
    """Episodes with return >= max(percentile threshold, smallest positive return).

    Binary sparse rewards collapse this to the successful episodes; an
    all-failure batch yields the empty list.
    """
    if not episodes:
        raise ValueError("select_elites called on an empty batch")
    if not 0 < percentile < 100:
        raise ValueError(f"percentile must be in (0, 100), got {percentile}")
    rets = np.array([e.ret for e in episodes], dtype=np.float64)
    positive = rets[rets > 0]
    if positive.size == 0:
        return []
    threshold = max(float(np.percentile(rets, percentile)), float(positive.min()))
    return [e for e in episodes if e.ret >= threshold]


@dataclass
class CemUpdateStats:
    skipped: bool
    n_steps: int = 0
    loss: float = 0.0
    ce: float = 0.0
    entropy: float = 0.0
    min_mapping_weight: float = np.inf
    min_policy_input: float = np.inf


def _elite_arrays(elites: list[Episode]):
    inputs = np.stack([s.obs for e in elites for s in e.steps])
    actions = np.array([s.action for e in elites for s in e.steps], dtype=np.int64)
    return inputs, actions


def cem_update(agent: Agent, elites: list[Episode], entropy_coeff: float,
               adam: AdamState) -> CemUpdateStats:
    """One imitation step on the pooled elite (input, action) pairs.

    Empty elites are a contract no-op: parameters and optimizer state stay
    bitwise untouched.
    """
    if not elites:
        return CemUpdateStats(skipped=True)
    inputs, actions = _elite_arrays(elites)
    graph = Graph()
    logits = agent.logits_from_features(inputs, graph)
    loss, ce, ent = policy_ce_loss(logits, actions, entropy_coeff, graph)
    graph.backward()
    adam_step(adam)
    if agent.mapping.linear.nonnegative:
        project_nonnegative(agent.mapping.linear)
    check_finite(agent.plastic_parameters(), "after CEM update")
    # positivity chain: inputs are sigmoid features, weights clamped, drive >= 0
    sp = agent.mapping.forward(inputs)
    return CemUpdateStats(
        skipped=False,
        n_steps=len(actions),
        loss=loss,
        ce=ce,
        entropy=ent,
        min_mapping_weight=float(agent.mapping.weights.data.min()),
        min_policy_input=float(sp.min()),
    )


def _train_cem_loop(sampler, update_fn, task, cfg: CemConfig, rng: np.random.Generator,
                    env: EnvParams | None, record=None) -> TrainingResult:
    successes: list[bool] = []
    result = TrainingResult(converged=False, episodes_used=0)
    window = cfg.trailing_window
    while len(successes) < cfg.cutoff_episodes and not result.converged:
        n = min(cfg.batch_size, cfg.cutoff_episodes - len(successes))
        batch = collect_batch(sampler, task, n, rng, env)
        for ep in batch:
            successes.append(ep.success)
            k = len(successes)
            trailing = float(np.mean(successes[-window:]))
            result.success_curve.append(trailing)
            if record is not None:
                record({
                    "episode": k,
                    "return": ep.ret,
                    "steps": len(ep.steps),
                    "success": ep.success,
                    "trailing25": round(trailing, 6),
                })
            if not result.converged and k >= window and trailing >= cfg.success_threshold:
                result.converged = True
                result.episodes_used = k
        if result.converged:
            break
        stats = update_fn(batch)
        if stats.skipped:
            result.n_skipped_updates += 1
        else:
            result.n_updates += 1
            result.min_mapping_weight = min(result.min_mapping_weight, stats.min_mapping_weight)
            result.min_policy_input = min(result.min_policy_input, stats.min_policy_input)
    if not result.converged:
        result.episodes_used = len(successes)
    return result


def train_task_online(agent: Agent, task, cfg: CemConfig, seed: int,
                      env: EnvParams | None = None, record=None) -> TrainingResult:
    """CEM training of one online task until trailing success clears the bar.

    The feature layer stays frozen; the mapping layer (and the head when the
    agent is adaptive) take the gradient steps.
    """
    rng = np.random.default_rng(seed)
    sampler = AgentSampler(agent)
    adam = AdamState(agent.plastic_parameters(), lr=cfg.lr)

    def update(batch):
        elites = select_elites(batch, cfg.percentile)
        return cem_update(agent, elites, cfg.entropy_coeff, adam)

    return _train_cem_loop(sampler, update, task, cfg, rng, env, record)


def train_offline_policy(net: OfflinePolicyNet, task, cfg: CemConfig, seed: int,
                         env: EnvParams | None = None, record=None) -> TrainingResult:
    """End-to-end CEM training of the saliency net on the single-object task."""
    if task.mode != "saliency":
        raise ValueError(f"offline policy task must be saliency mode, got {task.mode!r}")
    rng = np.random.default_rng(seed)
    sampler = OfflineNetSampler(net)
    params = net.parameters()
    adam = AdamState(params, lr=cfg.lr)

    def update(batch):
        elites = select_elites(batch, cfg.percentile)
        if not elites:
            return CemUpdateStats(skipped=True)
        inputs, actions = _elite_arrays(elites)
        graph = Graph()
        logits = net.forward(inputs, graph)
        loss, ce, ent = policy_ce_loss(logits, actions, cfg.entropy_coeff, graph)
        graph.backward()
        adam_step(adam)
        check_finite(params, "after offline CEM update")
        return CemUpdateStats(skipped=False, n_steps=len(actions), loss=loss, ce=ce, entropy=ent)

    result = _train_cem_loop(sampler, update, task, cfg, rng, env, record)
    net.converged = result.converged
    return result
