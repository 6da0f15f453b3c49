"""Learning procedures: offline classifier/policy, online CEM, DQN baseline."""

from .cem import (
    CemConfig,
    CemUpdateStats,
    TrainingResult,
    cem_update,
    select_elites,
    train_offline_policy,
    train_task_online,
)
from .classifier import ClassifierConfig, ClassifierResult, train_classifier
from .dqn import DqnConfig, ReplayBuffer, dqn_train_task
from .episodes import (
    AgentSampler,
    Episode,
    OfflineNetSampler,
    Step,
    collect_batch,
    evaluate,
    run_episode,
    sample_action,
)

__all__ = [
    "CemConfig",
    "CemUpdateStats",
    "TrainingResult",
    "cem_update",
    "select_elites",
    "train_offline_policy",
    "train_task_online",
    "ClassifierConfig",
    "ClassifierResult",
    "train_classifier",
    "DqnConfig",
    "ReplayBuffer",
    "dqn_train_task",
    "AgentSampler",
    "Episode",
    "OfflineNetSampler",
    "Step",
    "collect_batch",
    "evaluate",
    "run_episode",
    "sample_action",
]
