"""Command-line interface for the experiment workbench."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np


def _add_common(p):
    p.add_argument("--config", type=str, default=None, help="INI config file")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--seeds", type=str, default=None, help="comma-separated run seeds")
    p.add_argument("--full-budget", action="store_true",
                   help="use 20 seeds (overrides --seeds and the config)")


def _load_cfg(args):
    from .config import load_config

    cfg = load_config(args.config)
    if getattr(args, "full_budget", False):
        cfg.seeds = tuple(range(20))
    elif getattr(args, "seeds", None):
        cfg.seeds = tuple(int(s) for s in args.seeds.replace(",", " ").split())
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    return cfg.validate()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="policymap",
        description="Continual-RL workbench: offline pretraining, online CEM, "
        "ablations, continual protocol, DQN baseline.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offline", help="train feature stack and shared policy head")
    _add_common(p)

    p = sub.add_parser("ablation", help="run the configuration grid")
    _add_common(p)
    p.add_argument("--offline-dir", type=str, default=None,
                   help="directory with feature.ckpt/head.ckpt (default OUT/offline)")
    p.add_argument("--rows", type=str, default=None, help="comma-separated row names")

    p = sub.add_parser("continual", help="task-incremental protocol over 5 tasks")
    _add_common(p)
    p.add_argument("--offline-dir", type=str, default=None)
    p.add_argument("--adaptive", choices=("on", "off"), default="on")

    p = sub.add_parser("dqn-baseline", help="sequential DQN with per-task empty buffers")
    _add_common(p)
    p.add_argument("--offline-dir", type=str, default=None)

    p = sub.add_parser("eval", help="evaluate a checkpointed agent on one suite task")
    _add_common(p)
    p.add_argument("--feature", type=str, required=True)
    p.add_argument("--head", type=str, required=True)
    p.add_argument("--mapping", type=str, default=None)
    p.add_argument("--task", type=int, default=0)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--q-values", action="store_true")

    p = sub.add_parser("bench-fps", help="renderer throughput on one thread")
    _add_common(p)
    p.add_argument("--objects", type=int, default=20)
    p.add_argument("--frames", type=int, default=5000)
    p.add_argument("--mode", choices=("rgb", "saliency"), default="rgb")

    p = sub.add_parser("render-demo", help="dump one rendered frame as binary PPM")
    _add_common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--task", type=int, default=0)
    p.add_argument("--ppm", type=str, default="demo.ppm")

    p = sub.add_parser("report", help="regenerate tables and plots from records")
    _add_common(p)
    return ap


def _offline_dir(args, cfg):
    if getattr(args, "offline_dir", None):
        return Path(args.offline_dir)
    return Path(cfg.out_dir) / "offline"


def _cmd_offline(args):
    from .runners import run_offline

    cfg = _load_cfg(args)
    report = run_offline(cfg, Path(cfg.out_dir) / "offline")
    print(f"classifier test accuracy: {report['classifier']['test_accuracy']:.4f}")
    print(f"offline policy episodes:  {report['policy']['episodes']}")
    return 0


def _cmd_ablation(args):
    from .runners import run_ablation

    cfg = _load_cfg(args)
    rows = args.rows.split(",") if args.rows else None
    report = run_ablation(cfg, Path(cfg.out_dir) / "ablation", _offline_dir(args, cfg), rows)
    for row, t in report["rows"].items():
        med = t["episodes_median"]
        print(f"{row:24s} convergence {t['convergence']:.2f} "
              f"median episodes {med if med is not None else '-'}")
    return 0


def _cmd_continual(args):
    from .runners import run_continual

    cfg = _load_cfg(args)
    adaptive = args.adaptive == "on"
    name = "continual_adaptive" if adaptive else "continual_fixed"
    s = run_continual(cfg, Path(cfg.out_dir) / name, _offline_dir(args, cfg), adaptive)
    print(f"bwt mean: {s['bwt_mean']:.4f}; episodes/task: {s['episodes_per_task_mean']}")
    return 0


def _cmd_dqn(args):
    from .runners import run_dqn_baseline

    cfg = _load_cfg(args)
    s = run_dqn_baseline(cfg, Path(cfg.out_dir) / "dqn", _offline_dir(args, cfg))
    print(f"bwt mean: {s['bwt_mean']:.4f} (negative = forgetting)")
    return 0


def _cmd_eval(args):
    from ..agentnet import build_agent
    from ..tensornet import load_checkpoint
    from ..trainers import evaluate
    from .runners import _suite

    cfg = _load_cfg(args)
    _, tasks = _suite(cfg)
    agent = build_agent(
        feature_state=load_checkpoint(args.feature),
        head_state=load_checkpoint(args.head),
        rng=np.random.default_rng(cfg.agent_init_seed),
        head_mode="q_values" if args.q_values else "policy_logits",
        policy_channels=cfg.policy_channels,
    )
    if args.mapping:
        agent.mapping.weights.data = load_checkpoint(args.mapping)["mapping.weights"].copy()
    acc = evaluate(agent, tasks[args.task], args.episodes, seed=cfg.eval_seed, env=cfg.env)
    print(f"task {args.task}: accuracy {acc:.4f} over {args.episodes} greedy episodes")
    return 0


def _cmd_bench_fps(args):
    from ..worldsim import ObjectInstance, ObjectType, bench_fps, world_reset
    from .runners import _suite

    cfg = _load_cfg(args)
    _, tasks = _suite(cfg)
    state, _ = world_reset(tasks[0], 0, cfg.env)
    rng = np.random.default_rng(0)
    objs = []
    for _ in range(args.objects):
        t = ObjectType(
            color=tuple(rng.random(3)),
            height=float(rng.uniform(0.8, 1.6)),
            width=float(rng.uniform(0.4, 1.0)),
        )
        objs.append(ObjectInstance(
            type=t, x=float(rng.uniform(-8, 8)), y=float(rng.uniform(-8, 8)), role="background"
        ))
    state.objects = objs
    from ..worldsim.world import _build_object_arrays

    _build_object_arrays(state)
    fps = bench_fps(state, args.frames, args.mode)
    from ..accel import active_backend

    print(f"{fps:,.0f} frames/s ({args.objects} objects, {args.mode}, "
          f"{active_backend()} backend, single thread)")
    return 0


def _cmd_render_demo(args):
    from ..worldsim import write_ppm, world_reset
    from .runners import _suite

    cfg = _load_cfg(args)
    _, tasks = _suite(cfg)
    state, frame = world_reset(tasks[args.task], args.seed, cfg.env)
    write_ppm(args.ppm, frame.data)
    print(f"wrote {args.ppm}")
    return 0


def _cmd_report(args):
    from .report import emit_report

    cfg = _load_cfg(args)
    produced = emit_report(cfg.out_dir)
    print(f"report: {produced}")
    return 0


_COMMANDS = {
    "offline": _cmd_offline,
    "ablation": _cmd_ablation,
    "continual": _cmd_continual,
    "dqn-baseline": _cmd_dqn,
    "eval": _cmd_eval,
    "bench-fps": _cmd_bench_fps,
    "render-demo": _cmd_render_demo,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
