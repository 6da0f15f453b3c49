"""Experiment configuration: flat INI sections, every constant a key.

A run's fully resolved configuration is written next to its outputs so any
result can be reproduced from the config file and the seed list alone.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path

from ..trainers import CemConfig, ClassifierConfig, DqnConfig
from ..worldsim import EnvParams


@dataclass
class TaskParams:
    reward: float = 1.0
    max_steps: int = 200
    d_mean: float = 5.0
    d_jit: float = 1.0
    bearings_deg: tuple = (-36.0, -18.0, 0.0, 18.0, 36.0)


@dataclass
class OfflineParams:
    dataset_seed: int = 5
    train_per_class: int = 500
    test_per_class: int = 100
    classifier_epochs: int = 30
    classifier_batch: int = 32
    classifier_lr: float = 3e-3
    classifier_stop: float = 0.98
    policy_seeds: int = 10
    policy_lr: float = 1e-2
    policy_cutoff: int = 2000
    saliency_height: float = 1.2
    saliency_width: float = 0.7


@dataclass
class ExperimentConfig:
    seeds: tuple = (0, 1, 2, 3, 4)
    catalog_seed: int = 7
    task_suite_seed: int = 11
    agent_init_seed: int = 12345
    eval_episodes: int = 50
    eval_seed: int = 1000
    workers: int = 1
    out_dir: str = "out"
    policy_channels: int = 8
    env: EnvParams = field(default_factory=EnvParams)
    task: TaskParams = field(default_factory=TaskParams)
    cem: CemConfig = field(default_factory=CemConfig)
    offline: OfflineParams = field(default_factory=OfflineParams)
    dqn: DqnConfig = field(default_factory=DqnConfig)

    def validate(self) -> "ExperimentConfig":
        if not self.seeds:
            raise ValueError("config: seeds list is empty")
        if self.eval_episodes < 1:
            raise ValueError("config: eval_episodes must be >= 1")
        if not 0 < self.cem.percentile < 100:
            raise ValueError("config: cem percentile must be in (0, 100)")
        if len(self.task.bearings_deg) < 5:
            raise ValueError("config: need at least 5 bearing slots")
        if self.cem.trailing_window < 1 or not 0 < self.cem.success_threshold <= 1:
            raise ValueError("config: bad convergence criterion")
        return self


_FLOAT_KEYS_TUPLE = ("sky", "ground", "bearings_deg")


def _set_fields(obj, section: configparser.SectionProxy) -> None:
    for key, raw in section.items():
        if not hasattr(obj, key):
            raise ValueError(f"unknown config key {key!r} in section [{section.name}]")
        current = getattr(obj, key)
        if key in _FLOAT_KEYS_TUPLE:
            setattr(obj, key, tuple(float(v) for v in raw.replace(",", " ").split()))
        elif key == "seeds":
            setattr(obj, key, tuple(int(v) for v in raw.replace(",", " ").split()))
        elif isinstance(current, bool):
            setattr(obj, key, section.getboolean(key))
        elif isinstance(current, int):
            setattr(obj, key, int(raw))
        elif isinstance(current, float):
            setattr(obj, key, float(raw))
        else:
            setattr(obj, key, raw)


def load_config(path=None) -> ExperimentConfig:
    """Read an INI config; missing keys keep their defaults."""
    cfg = ExperimentConfig()
    if path is None:
        return cfg.validate()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    text = Path(path).read_text()
    parser.read_string(text)
    sections = {
        "experiment": cfg,
        "env": cfg.env,
        "task": cfg.task,
        "cem": cfg.cem,
        "offline": cfg.offline,
        "dqn": cfg.dqn,
    }
    for name, obj in sections.items():
        if parser.has_section(name):
            _set_fields(obj, parser[name])
    extra = set(parser.sections()) - set(sections)
    if extra:
        raise ValueError(f"unknown config sections: {sorted(extra)}")
    return cfg.validate()


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize the fully resolved configuration (every key, every section)."""
    out = io.StringIO()
    sections = {
        "experiment": {
            "seeds": cfg.seeds,
            "catalog_seed": cfg.catalog_seed,
            "task_suite_seed": cfg.task_suite_seed,
            "agent_init_seed": cfg.agent_init_seed,
            "eval_episodes": cfg.eval_episodes,
            "eval_seed": cfg.eval_seed,
            "workers": cfg.workers,
            "out_dir": cfg.out_dir,
            "policy_channels": cfg.policy_channels,
        },
        "env": vars(cfg.env),
        "task": vars(cfg.task),
        "cem": vars(cfg.cem),
        "offline": vars(cfg.offline),
        "dqn": vars(cfg.dqn),
    }
    for name, mapping in sections.items():
        out.write(f"[{name}]\n")
        for key, value in mapping.items():
            out.write(f"{key} = {_fmt(value)}\n")
        out.write("\n")
    return out.getvalue()


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]
