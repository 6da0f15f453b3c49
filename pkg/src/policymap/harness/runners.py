"""Experiment drivers: offline phase, ablation grid, continual protocol, DQN."""

from __future__ import annotations

import hashlib
import multiprocessing
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..agentnet import (
    FeatureLayer,
    OfflinePolicyNet,
    build_agent,
    extract_head,
    new_task_mapping,
)
from ..taskgen import (
    gen_classification_dataset,
    make_catalog,
    make_saliency_task,
    make_task_suite,
    save_catalog,
    save_task_suite,
)
from ..tensornet import load_checkpoint, save_checkpoint
from ..trainers import (
    ClassifierConfig,
    dqn_train_task,
    evaluate,
    train_classifier,
    train_offline_policy,
    train_task_online,
)
from .config import ExperimentConfig, config_hash, save_config
from .metrics import EvalMatrix, JsonlWriter, backward_transfer, save_matrix_csv, write_csv, write_json

ABLATION_ROWS = (
    "fixed",
    "adaptive",
    "no_offline_policy",
    "no_offline_feature",
    "no_offline_components",
    "unclamped",
)

# row -> (use offline feature, use offline head, adaptive head, clamp mapping)
_ROW_FLAGS = {
    "fixed": (True, True, False, True),
    "adaptive": (True, True, True, True),
    "no_offline_policy": (True, False, True, True),
    "no_offline_feature": (False, True, True, True),
    "no_offline_components": (False, False, True, True),
    "unclamped": (True, True, True, False),
}


def _prepare_out(cfg: ExperimentConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.ini")
    return out


def _suite(cfg: ExperimentConfig):
    catalog = make_catalog(cfg.catalog_seed)
    tasks = make_task_suite(
        catalog, cfg.task_suite_seed, reward=cfg.task.reward, max_steps=cfg.task.max_steps
    )
    for t in tasks:
        t.d_mean = cfg.task.d_mean
        t.d_jit = cfg.task.d_jit
        t.bearings_deg = tuple(cfg.task.bearings_deg)
    return catalog, tasks


def _saliency_task(cfg: ExperimentConfig):
    task = make_saliency_task(
        reward=cfg.task.reward,
        max_steps=cfg.task.max_steps,
        height=cfg.offline.saliency_height,
        width=cfg.offline.saliency_width,
    )
    task.d_mean = cfg.task.d_mean
    task.d_jit = cfg.task.d_jit
    task.bearings_deg = tuple(cfg.task.bearings_deg)
    return task


def _ckpt_hash(tensors: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(tensors):
        h.update(name.encode())
        h.update(np.ascontiguousarray(tensors[name]).tobytes())
    return h.hexdigest()[:16]


# ------------------------------------------------------------------- offline


def run_offline(cfg: ExperimentConfig, out_dir) -> dict:
    """Train the feature stack and the shared policy head; persist checkpoints."""
    out = _prepare_out(cfg, out_dir)
    t_start = time.perf_counter()
    catalog, _ = _suite(cfg)
    save_catalog(out / "catalog.txt", catalog)

    train, test = gen_classification_dataset(
        catalog,
        cfg.offline.dataset_seed,
        train_per_class=cfg.offline.train_per_class,
        test_per_class=cfg.offline.test_per_class,
        env=cfg.env,
    )
    feature = FeatureLayer(rng=np.random.default_rng(cfg.agent_init_seed))
    clf_cfg = ClassifierConfig(
        epochs=cfg.offline.classifier_epochs,
        batch_size=cfg.offline.classifier_batch,
        lr=cfg.offline.classifier_lr,
        stop_accuracy=cfg.offline.classifier_stop,
    )
    feature, clf = train_classifier(train, test, feature, clf_cfg, seed=cfg.offline.dataset_seed)
    save_checkpoint(out / "feature.ckpt", feature.state_dict())

    task = _saliency_task(cfg)
    policy_cem = replace(
        cfg.cem, lr=cfg.offline.policy_lr, cutoff_episodes=cfg.offline.policy_cutoff
    )
    seeds = list(range(cfg.offline.policy_seeds))
    episodes, converged, nets = [], [], []
    with JsonlWriter(out / "policy_metrics.jsonl") as log:
        for s in seeds:
            net = OfflinePolicyNet(
                rng=np.random.default_rng(cfg.agent_init_seed + 1 + s),
                policy_channels=cfg.policy_channels,
            )
            res = train_offline_policy(
                net, task, policy_cem, seed=s, env=cfg.env,
                record=lambda r, s=s: log.write({"run_id": f"offline_policy_seed{s}", "task_id": -1, **r}),
            )
            episodes.append(res.episodes_used)
            converged.append(res.converged)
            nets.append(net)
    chosen = next((i for i, c in enumerate(converged) if c), None)
    if chosen is None:
        raise RuntimeError("no offline policy seed converged; cannot extract a head")
    head = extract_head(nets[chosen])
    save_checkpoint(out / "head.ckpt", head.state_dict())

    report = {
        "config_hash": config_hash(cfg),
        "classifier": {
            "test_accuracy": clf.test_accuracy,
            "train_accuracy": clf.train_accuracy,
            "initial_accuracy": clf.initial_accuracy,
            "epochs_run": clf.epochs_run,
            "accuracy_curve": clf.accuracy_curve,
        },
        "policy": {
            "seeds": seeds,
            "episodes": episodes,
            "converged": converged,
            "chosen_seed": chosen,
            "median_episodes_converged": float(
                np.median([e for e, c in zip(episodes, converged) if c])
            ),
        },
    }
    write_json(out / "offline_report.json", report)
    write_json(out / "timing.json", {"wallclock_s": time.perf_counter() - t_start})
    return report


def load_offline_states(offline_dir):
    off = Path(offline_dir)
    return load_checkpoint(off / "feature.ckpt"), load_checkpoint(off / "head.ckpt")


# ------------------------------------------------------------------ ablation


def _build_row_agent(cfg: ExperimentConfig, row: str, seed: int, feature_state, head_state,
                     head_mode: str = "policy_logits"):
    use_feature, use_head, adaptive, clamp = _ROW_FLAGS[row]
    init_ss = np.random.SeedSequence([cfg.agent_init_seed, ABLATION_ROWS.index(row), seed])
    agent = build_agent(
        feature_state=feature_state if use_feature else None,
        head_state=head_state if use_head else None,
        rng=np.random.default_rng(init_ss),
        head_mode=head_mode,
        adaptive=adaptive,
        policy_channels=cfg.policy_channels,
    )
    if not clamp:
        agent.mapping.linear.nonnegative = False
    return agent


def _ablation_one(args):
    cfg, row, seed, task_idx, feature_state, head_state = args
    _, tasks = _suite(cfg)
    task = tasks[task_idx]
    agent = _build_row_agent(cfg, row, seed, feature_state, head_state)
    records = []
    run_id = f"{row}_seed{seed}_task{task_idx}"

    t0 = time.perf_counter()
    res = train_task_online(
        agent, task, cfg.cem, seed=seed * 1000 + task_idx, env=cfg.env,
        record=lambda r: records.append({"run_id": run_id, "task_id": task_idx, **r}),
    )
    wall_ms = (time.perf_counter() - t0) * 1000
    summary = {
        "row": row,
        "seed": seed,
        "task": task_idx,
        "converged": res.converged,
        "episodes": res.episodes_used,
        "n_updates": res.n_updates,
        "n_skipped_updates": res.n_skipped_updates,
        "min_mapping_weight": res.min_mapping_weight if res.n_updates else None,
        "min_policy_input": res.min_policy_input if res.n_updates else None,
    }
    return run_id, records, summary, wall_ms


def _map_jobs(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with multiprocessing.Pool(workers) as pool:
        return pool.map(fn, jobs)


def run_ablation(cfg: ExperimentConfig, out_dir, offline_dir, rows=None) -> dict:
    """Table-style grid: every configuration row x seed x task, independently."""
    rows = tuple(rows or ABLATION_ROWS)
    for r in rows:
        if r not in _ROW_FLAGS:
            raise ValueError(f"unknown ablation row {r!r}; valid: {ABLATION_ROWS}")
    out = _prepare_out(cfg, out_dir)
    feature_state, head_state = load_offline_states(offline_dir)
    jobs = [
        (cfg, row, seed, task_idx, feature_state, head_state)
        for row in rows
        for seed in cfg.seeds
        for task_idx in range(5)
    ]
    results = _map_jobs(_ablation_one, jobs, cfg.workers)

    summaries = [s for _, _, s, _ in results]
    with JsonlWriter(out / "metrics.jsonl") as log:
        for _, records, _, _ in results:
            for r in records:
                log.write(r)
    with JsonlWriter(out / "timing.jsonl") as log:
        for run_id, _, _, wall_ms in results:
            log.write({"run_id": run_id, "wallclock_ms": round(wall_ms, 3)})

    write_csv(
        out / "runs.csv",
        ["row", "seed", "task", "converged", "episodes", "n_updates", "n_skipped_updates"],
        [
            [s["row"], s["seed"], s["task"], int(s["converged"]), s["episodes"],
             s["n_updates"], s["n_skipped_updates"]]
            for s in summaries
        ],
    )

    table = {}
    for row in rows:
        rs = [s for s in summaries if s["row"] == row]
        conv = [s for s in rs if s["converged"]]
        eps = [s["episodes"] for s in conv]
        table[row] = {
            "runs": len(rs),
            "convergence": len(conv) / len(rs),
            "episodes_mean": float(np.mean(eps)) if eps else None,
            "episodes_std": float(np.std(eps)) if eps else None,
            "episodes_median": float(np.median(eps)) if eps else None,
        }
    write_csv(
        out / "table1.csv",
        ["configuration", "runs", "convergence", "episodes_mean", "episodes_std", "episodes_median"],
        [
            [row, t["runs"], f"{t['convergence']:.4f}",
             "" if t["episodes_mean"] is None else f"{t['episodes_mean']:.1f}",
             "" if t["episodes_std"] is None else f"{t['episodes_std']:.1f}",
             "" if t["episodes_median"] is None else f"{t['episodes_median']:.1f}"]
            for row, t in table.items()
        ],
    )
    mins = [s["min_mapping_weight"] for s in summaries
            if s["min_mapping_weight"] is not None and s["row"] != "unclamped"]
    report = {
        "config_hash": config_hash(cfg),
        "rows": table,
        "min_mapping_weight_clamped_rows": min(mins) if mins else None,
        "min_policy_input": min(
            (s["min_policy_input"] for s in summaries if s["min_policy_input"] is not None
             and s["row"] != "unclamped"),
            default=None,
        ),
    }
    write_json(out / "summary.json", report)
    return report


# ----------------------------------------------------------------- continual


def _eval_task_aware(agent, tasks, saved_mappings, trained_through, cfg):
    """Accuracy on every task, restoring that task's mapping when it exists."""
    current = agent.mapping.weights.data.copy()
    row = []
    for j, task in enumerate(tasks):
        if j in saved_mappings:
            agent.mapping.weights.data = saved_mappings[j].copy()
        else:
            agent.mapping.weights.data = np.zeros_like(current)
        before = _ckpt_hash({"f": agent.feature.conv1.kernel.data, "h": agent.head.l1.weight.data,
                             "m": agent.mapping.weights.data})
        row.append(evaluate(agent, task, cfg.eval_episodes, seed=cfg.eval_seed, env=cfg.env))
        after = _ckpt_hash({"f": agent.feature.conv1.kernel.data, "h": agent.head.l1.weight.data,
                            "m": agent.mapping.weights.data})
        if before != after:
            raise RuntimeError("evaluation mutated agent state")
        _ = trained_through  # kept for signature clarity
    agent.mapping.weights.data = current
    return row


def _continual_one(args):
    cfg, seed, adaptive, feature_state, head_state, run_dir, algo = args
    _, tasks = _suite(cfg)
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    agent = build_agent(
        feature_state=feature_state,
        head_state=head_state,
        rng=np.random.default_rng(np.random.SeedSequence([cfg.agent_init_seed, seed])),
        head_mode="q_values" if algo == "dqn" else "policy_logits",
        adaptive=True if algo == "dqn" else adaptive,
        policy_channels=cfg.policy_channels,
    )
    matrix = EvalMatrix(len(tasks))
    saved: dict[int, np.ndarray] = {}
    records = []
    task_results = []
    t0 = time.perf_counter()
    for i, task in enumerate(tasks):
        new_task_mapping(agent)
        run_id = f"{algo}_{'adaptive' if adaptive else 'fixed'}_seed{seed}"
        rec = lambda r, i=i, run_id=run_id: records.append(
            {"run_id": run_id, "task_id": i, **r}
        )
        if algo == "dqn":
            res = dqn_train_task(agent, task, cfg.dqn, seed=seed * 1000 + i, env=cfg.env, record=rec)
        else:
            res = train_task_online(agent, task, cfg.cem, seed=seed * 1000 + i, env=cfg.env, record=rec)
        saved[i] = agent.mapping.weights.data.copy()
        save_checkpoint(run_dir / f"mapping_task{i}.ckpt", {"mapping.weights": saved[i]})
        task_results.append({
            "task": i,
            "converged": res.converged,
            "episodes": res.episodes_used,
            "buffer_start_len": res.buffer_start_len,
            "buffer_end_len": res.buffer_end_len,
        })
        matrix.fill_row(i, _eval_task_aware(agent, tasks, saved, i, cfg))
    wall_ms = (time.perf_counter() - t0) * 1000
    head_hash = _ckpt_hash(agent.head.state_dict())
    return seed, matrix.values, task_results, records, wall_ms, head_hash


def _run_sequential_protocol(cfg: ExperimentConfig, out_dir, offline_dir, adaptive: bool,
                             algo: str) -> dict:
    out = _prepare_out(cfg, out_dir)
    feature_state, head_state = load_offline_states(offline_dir)
    catalog, tasks = _suite(cfg)
    save_task_suite(out / "task_suite.txt", tasks)
    jobs = [
        (cfg, seed, adaptive, feature_state, head_state, out / "runs" / f"seed{seed}", algo)
        for seed in cfg.seeds
    ]
    results = _map_jobs(_continual_one, jobs, cfg.workers)

    with JsonlWriter(out / "metrics.jsonl") as log:
        for _, _, _, records, _, _ in results:
            for r in records:
                log.write(r)
    with JsonlWriter(out / "timing.jsonl") as log:
        for seed, _, _, _, wall_ms, _ in results:
            log.write({"run_id": f"seed{seed}", "wallclock_ms": round(wall_ms, 3)})

    matrices = {}
    bwts = {}
    episodes_per_task = {i: [] for i in range(len(tasks))}
    convergence = []
    for seed, values, task_results, _, _, _ in results:
        m = EvalMatrix.from_array(values)
        matrices[seed] = m
        bwts[seed] = backward_transfer(m)
        save_matrix_csv(out / f"eval_matrix_seed{seed}.csv", m)
        for tr in task_results:
            episodes_per_task[tr["task"]].append(tr["episodes"])
            convergence.append(tr["converged"])
    mean_matrix = EvalMatrix.from_array(
        np.mean([m.values for m in matrices.values()], axis=0)
    )
    save_matrix_csv(out / "eval_matrix_mean.csv", mean_matrix)

    summary = {
        "config_hash": config_hash(cfg),
        "algo": algo,
        "adaptive": adaptive,
        "seeds": list(cfg.seeds),
        "bwt_per_seed": {str(s): bwts[s] for s in cfg.seeds},
        "bwt_mean": float(np.mean(list(bwts.values()))),
        "episodes_per_task_mean": {
            str(i + 1): float(np.mean(v)) for i, v in episodes_per_task.items()
        },
        "episodes_per_task_std": {
            str(i + 1): float(np.std(v)) for i, v in episodes_per_task.items()
        },
        "episodes_median": float(np.median([e for v in episodes_per_task.values() for e in v])),
        "convergence_fraction": float(np.mean(convergence)),
        "task_results": [
            {"seed": seed, "tasks": task_results}
            for seed, _, task_results, _, _, _ in results
        ],
    }
    write_json(out / "summary.json", summary)
    return summary


def run_continual(cfg: ExperimentConfig, out_dir, offline_dir, adaptive: bool) -> dict:
    """Task-incremental protocol: train tasks in order, evaluate all after each."""
    return _run_sequential_protocol(cfg, out_dir, offline_dir, adaptive, algo="cem")


def run_dqn_baseline(cfg: ExperimentConfig, out_dir, offline_dir) -> dict:
    """Sequential DQN over the suite with a fresh empty buffer per task."""
    return _run_sequential_protocol(cfg, out_dir, offline_dir, adaptive=True, algo="dqn")
