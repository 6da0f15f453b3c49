"""Experiment orchestration: config, runners, metrics, reports, CLI."""

from .config import ExperimentConfig, config_hash, dump_config, load_config, save_config
from .metrics import EvalMatrix, backward_transfer, forgetting
from .report import emit_report
from .runners import (
    ABLATION_ROWS,
    run_ablation,
    run_continual,
    run_dqn_baseline,
    run_offline,
)

__all__ = [
    "ExperimentConfig",
    "config_hash",
    "dump_config",
    "load_config",
    "save_config",
    "EvalMatrix",
    "backward_transfer",
    "forgetting",
    "emit_report",
    "ABLATION_ROWS",
    "run_ablation",
    "run_continual",
    "run_dqn_baseline",
    "run_offline",
]
