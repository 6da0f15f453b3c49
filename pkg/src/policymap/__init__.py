"""Continual-RL workbench: open-world tasks, a positive-mapping policy network,
cross-entropy-method and DQN trainers, and an experiment harness."""

from .accel import active_backend

__version__ = "0.1.0"

__all__ = ["active_backend", "__version__"]
