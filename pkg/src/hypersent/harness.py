"""Experiment harness: ablation grids, baselines, sweeps, and timing runs.

Every experiment expands into (config, seed) tasks, each a pure function of
its inputs, so results are byte-identical across reruns and worker counts
(wall-clock columns aside). Workers are controlled by the
``HYPERSENT_WORKERS`` environment variable.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import kmeans_elbow, random_partition, single_edge
from .cutoff import CutoffConfig, CutoffStrategy
from .data import Dataset, SyntheticSpec, generate_synthetic, l2_normalize, load_dataset, parse_synth_spec
from .errors import DegenerateInputError, UnsupportedCombinationError
from .hac import DistanceMetric, Linkage
from .hypergraph import dump_edges, induce
from .metrics import adjusted_rand_index, davies_bouldin, silhouette
from .training import TrainConfig, train

RESULTS_SCHEMA_VERSION = 1

RESULT_COLUMNS = [
    "experiment", "method", "strategy", "linkage", "metric",
    "rho", "lambda", "epsilon", "seed", "instances",
    "ari_mean", "edges_mean",
    "silhouette_min", "silhouette_mean", "silhouette_max",
    "davies_bouldin_min", "davies_bouldin_mean", "davies_bouldin_max",
    "accuracy", "macro_f1", "wall_seconds", "status", "reason",
]

TIMING_COLUMNS = [
    "method", "n", "d", "instances", "reps",
    "wall_min_seconds", "wall_mean_seconds", "wall_max_seconds",
]

# Columns excluded from byte-level reproducibility comparisons.
WALL_COLUMNS = ("wall_seconds", "wall_min_seconds", "wall_mean_seconds", "wall_max_seconds")

DEFAULT_STRATEGIES = (
    "dynamic", "fallback",
    "accel:0.2", "accel:0.5", "accel:0.8",
    "accel-min:0.2", "accel-min:0.5", "accel-min:0.8",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a harness run needs; serialized verbatim into config.json."""

    data: str  # file path or "synth:..." recipe
    out_dir: str
    seeds: tuple[int, ...] = (0,)
    cutoff: CutoffConfig = field(default_factory=CutoffConfig)
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    linkages: tuple[str, ...] = ("single", "complete", "average", "ward")
    metrics: tuple[str, ...] = ("euclidean", "cosine")
    linkage: str = "ward"
    metric: str = "euclidean"
    lambda_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
    rho_grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    timing_sizes: tuple[int, ...] = (10, 20, 40, 80, 160)
    timing_dim: int = 64
    timing_instances: int = 20
    timing_reps: int = 5
    train_epochs: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    dump_hyperedges: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise DegenerateInputError("need at least one seed")
        if not self.strategies or not self.linkages or not self.metrics:
            raise DegenerateInputError("grids must be non-empty")


def worker_count() -> int:
    return max(1, int(os.environ.get("HYPERSENT_WORKERS", "1")))


def _resolve_dataset(data: str, seed: int) -> Dataset:
    """Per-seed dataset: synthetic specs are regenerated with the task seed."""
    if data.startswith("synth:"):
        spec = parse_synth_spec(data)
        return generate_synthetic(replace(spec, seed=seed))
    return load_dataset(data)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def _induction_stats(dataset: Dataset, build) -> dict:
    """Run ``build(instance) -> Hypergraph`` over a dataset and score it."""
    aris = []
    edge_counts = []
    sils = []
    dbs = []
    t0 = time.perf_counter()
    graphs = [build(inst) for inst in dataset.instances]
    wall = time.perf_counter() - t0
    for inst, hg in zip(dataset.instances, graphs):
        labels = np.argmax(hg.incidence, axis=1)
        edge_counts.append(hg.num_edges)
        if inst.planted is not None:
            aris.append(adjusted_rand_index(inst.planted, labels))
        X = l2_normalize(inst.embeddings)
        k = hg.num_edges
        if 2 <= k <= inst.n - 1:
            sils.append(silhouette(X, labels))
        if k >= 2:
            dbs.append(davies_bouldin(X, labels))
    out = {
        "instances": len(dataset.instances),
        "edges_mean": float(np.mean(edge_counts)) if edge_counts else None,
        "ari_mean": float(np.mean(aris)) if aris else None,
        "wall_seconds": wall,
    }
    for name, values in (("silhouette", sils), ("davies_bouldin", dbs)):
        out[f"{name}_min"] = float(np.min(values)) if values else None
        out[f"{name}_mean"] = float(np.mean(values)) if values else None
        out[f"{name}_max"] = float(np.max(values)) if values else None
    return out


def _train_metrics(dataset: Dataset, spec: ExperimentSpec, strategy: CutoffStrategy,
                   cfg: CutoffConfig, method: Linkage, metric: DistanceMetric,
                   seed: int) -> dict:
    if spec.train_epochs <= 0 or len(dataset) < 3:
        return {}
    split = max(1, (2 * len(dataset)) // 3)
    train_set = Dataset(dataset.instances[:split], dataset.num_classes, dataset.dim)
    eval_set = Dataset(dataset.instances[split:], dataset.num_classes, dataset.dim)
    cfg_train = replace(spec.train, epochs=spec.train_epochs, seed=seed)
    result = train(train_set, eval_set, cfg_train, cfg, strategy, method, metric)
    last = result.final("eval")
    return {"accuracy": last.accuracy, "macro_f1": last.macro_f1}


def _cutoff_task(args) -> dict:
    spec, strategy_text, seed = args
    strategy = CutoffStrategy.parse(strategy_text)
    cfg = spec.cutoff
    method = Linkage(spec.linkage)
    metric = DistanceMetric(spec.metric)
    dataset = _resolve_dataset(spec.data, seed)
    stats = _induction_stats(
        dataset, lambda inst: induce(inst, method, metric, strategy, cfg)[0]
    )
    row = {
        "experiment": "cutoff", "method": "adaptive_hac",
        "strategy": strategy.describe(), "linkage": method.value, "metric": metric.value,
        "rho": strategy.rho if strategy.rho is not None else cfg.rho,
        "lambda": cfg.lam, "epsilon": cfg.epsilon, "seed": seed,
        "status": "ok", "reason": "",
    }
    row.update(stats)
    row.update(_train_metrics(dataset, spec, strategy, cfg, method, metric, seed))
    return row


def _linkage_task(args) -> dict:
    spec, linkage_name, metric_name, seed = args
    cfg = spec.cutoff
    strategy = CutoffStrategy.dynamic()
    row = {
        "experiment": "linkage", "method": "adaptive_hac", "strategy": strategy.describe(),
        "linkage": linkage_name, "metric": metric_name,
        "rho": cfg.rho, "lambda": cfg.lam, "epsilon": cfg.epsilon, "seed": seed,
        "status": "ok", "reason": "",
    }
    method = Linkage(linkage_name)
    metric = DistanceMetric(metric_name)
    dataset = _resolve_dataset(spec.data, seed)
    try:
        stats = _induction_stats(
            dataset, lambda inst: induce(inst, method, metric, strategy, cfg)[0]
        )
    except UnsupportedCombinationError as exc:
        row.update({"status": "skipped", "reason": str(exc), "wall_seconds": 0.0})
        return row
    row.update(stats)
    row.update(_train_metrics(dataset, spec, strategy, cfg, method, metric, seed))
    return row


def _baseline_task(args) -> dict:
    spec, method_name, seed = args
    cfg = spec.cutoff
    strategy = CutoffStrategy.dynamic()
    dataset = _resolve_dataset(spec.data, seed)
    method = Linkage(spec.linkage)
    metric = DistanceMetric(spec.metric)
    if method_name == "adaptive_hac":
        build = lambda inst: induce(inst, method, metric, strategy, cfg)[0]
    elif method_name == "random":
        rng = np.random.default_rng([seed, 0xBA5E])
        build = lambda inst: random_partition(inst, rng)
    elif method_name == "none":
        build = single_edge
    elif method_name == "kmeans_elbow":
        build = lambda inst: kmeans_elbow(inst, seed)
    else:
        raise DegenerateInputError(f"unknown baseline {method_name!r}")
    stats = _induction_stats(dataset, build)
    row = {
        "experiment": "baselines", "method": method_name, "strategy": strategy.describe(),
        "linkage": method.value if method_name == "adaptive_hac" else "",
        "metric": metric.value if method_name == "adaptive_hac" else "",
        "rho": cfg.rho, "lambda": cfg.lam, "epsilon": cfg.epsilon, "seed": seed,
        "status": "ok", "reason": "",
    }
    row.update(stats)
    return row


def _sensitivity_task(args) -> dict:
    spec, axis, value, seed = args
    if axis == "lambda":
        lam = max(value, 1e-12)  # lambda = 0 grid point, config requires > 0
        cfg = replace(spec.cutoff, lam=lam)
    else:
        cfg = replace(spec.cutoff, rho=value)
    method = Linkage(spec.linkage)
    metric = DistanceMetric(spec.metric)
    strategy = CutoffStrategy.dynamic()
    dataset = _resolve_dataset(spec.data, seed)
    stats = _induction_stats(
        dataset, lambda inst: induce(inst, method, metric, strategy, cfg)[0]
    )
    row = {
        "experiment": f"sensitivity-{axis}", "method": "adaptive_hac",
        "strategy": strategy.describe(), "linkage": method.value, "metric": metric.value,
        "rho": cfg.rho, "lambda": value if axis == "lambda" else cfg.lam,
        "epsilon": cfg.epsilon, "seed": seed, "status": "ok", "reason": "",
    }
    row.update(stats)
    return row


def _run_tasks(task_fn, tasks) -> list[dict]:
    workers = worker_count()
    if workers == 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks))


def run_cutoff_ablation(spec: ExperimentSpec) -> list[dict]:
    tasks = [(spec, s, seed) for s in spec.strategies for seed in spec.seeds]
    return _run_tasks(_cutoff_task, tasks)


def run_linkage_grid(spec: ExperimentSpec) -> list[dict]:
    tasks = [
        (spec, lk, mt, seed)
        for lk in spec.linkages
        for mt in spec.metrics
        for seed in spec.seeds
    ]
    return _run_tasks(_linkage_task, tasks)


def run_baseline_comparison(spec: ExperimentSpec) -> list[dict]:
    methods = ("adaptive_hac", "random", "none", "kmeans_elbow")
    tasks = [(spec, m, seed) for m in methods for seed in spec.seeds]
    return _run_tasks(_baseline_task, tasks)


def run_sensitivity(spec: ExperimentSpec) -> list[dict]:
    tasks = [(spec, "lambda", v, seed) for v in spec.lambda_grid for seed in spec.seeds]
    tasks += [(spec, "rho", v, seed) for v in spec.rho_grid for seed in spec.seeds]
    return _run_tasks(_sensitivity_task, tasks)


def measure_induction_wall(dataset: Dataset, method_name: str, spec: ExperimentSpec,
                           seed: int, reps: int) -> list[float]:
    """Wall seconds per repetition for inducing structure over a dataset."""
    cfg = spec.cutoff
    strategy = CutoffStrategy.dynamic()
    method = Linkage(spec.linkage)
    metric = DistanceMetric(spec.metric)
    walls = []
    for _ in range(reps):
        t0 = time.perf_counter()
        if method_name == "adaptive_hac":
            for inst in dataset.instances:
                induce(inst, method, metric, strategy, cfg)
        elif method_name == "kmeans_elbow":
            for inst in dataset.instances:
                kmeans_elbow(inst, seed)
        else:
            raise DegenerateInputError(f"unknown timing method {method_name!r}")
        walls.append(time.perf_counter() - t0)
    return walls


def run_timing(spec: ExperimentSpec) -> list[dict]:
    """Timing cells run serially (pinned to one worker) to avoid contention."""
    seed = spec.seeds[0]
    rows = []
    for method_name in ("adaptive_hac", "kmeans_elbow"):
        for n in spec.timing_sizes:
            synth = SyntheticSpec(
                num_instances=spec.timing_instances,
                tokens_per_instance=(n, n),
                dim=spec.timing_dim,
                planted_clusters=(2, max(2, min(6, n // 8))),
                cluster_separation=10.0,
                noise_sigma=0.5,
                seed=seed,
            )
            dataset = generate_synthetic(synth)
            walls = measure_induction_wall(dataset, method_name, spec, seed, spec.timing_reps)
            rows.append({
                "method": method_name, "n": n, "d": spec.timing_dim,
                "instances": spec.timing_instances, "reps": spec.timing_reps,
                "wall_min_seconds": min(walls),
                "wall_mean_seconds": float(np.mean(walls)),
                "wall_max_seconds": max(walls),
            })
    return rows


def loglog_slope(sizes, walls) -> float:
    """Least-squares slope of log(wall) against log(n)."""
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(walls, dtype=np.float64))
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))


def write_hyperedge_dump(spec: ExperimentSpec, path) -> None:
    seed = spec.seeds[0]
    dataset = _resolve_dataset(spec.data, seed)
    cfg = spec.cutoff
    strategy = CutoffStrategy.dynamic()
    method = Linkage(spec.linkage)
    metric = DistanceMetric(spec.metric)
    chunks = []
    for inst in dataset.instances:
        hg, result = induce(inst, method, metric, strategy, cfg)
        chunks.append(f"# {inst.id} |E|={hg.num_edges} cut={result.delta_elbow!r}")
        chunks.append(dump_edges(hg, inst).rstrip("\n"))
    Path(path).write_text("\n".join(chunks) + "\n")


def _spec_to_json(spec: ExperimentSpec) -> dict:
    blob = dataclasses.asdict(spec)
    blob["results_schema_version"] = RESULTS_SCHEMA_VERSION
    blob["package_version"] = __version__
    return blob


def run_experiment(name: str, spec: ExperimentSpec) -> Path:
    """Run one named experiment and write its artifacts into spec.out_dir."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(_spec_to_json(spec), indent=2, sort_keys=True) + "\n")

    if name == "timing":
        rows = run_timing(spec)
        write_csv(out / "timing.csv", TIMING_COLUMNS, rows)
    elif name == "train":
        _run_training(spec, out)
    else:
        runner = {
            "cutoff": run_cutoff_ablation,
            "linkage": run_linkage_grid,
            "baselines": run_baseline_comparison,
            "sensitivity": run_sensitivity,
        }.get(name)
        if runner is None:
            raise DegenerateInputError(f"unknown experiment {name!r}")
        rows = runner(spec)
        write_csv(out / "results.csv", RESULT_COLUMNS, rows)

    if spec.dump_hyperedges:
        write_hyperedge_dump(spec, out / "hyperedges.txt")
    return out


def _run_training(spec: ExperimentSpec, out: Path) -> None:
    from .training import save_checkpoint, write_history_csv

    seed = spec.seeds[0]
    dataset = _resolve_dataset(spec.data, seed)
    split = max(1, (2 * len(dataset)) // 3)
    train_set = Dataset(dataset.instances[:split], dataset.num_classes, dataset.dim)
    eval_set = Dataset(dataset.instances[split:], dataset.num_classes, dataset.dim)
    cfg = replace(spec.train, seed=seed)
    if spec.train_epochs > 0:
        cfg = replace(cfg, epochs=spec.train_epochs)
    result = train(
        train_set, eval_set, cfg, spec.cutoff,
        CutoffStrategy.dynamic(), Linkage(spec.linkage), DistanceMetric(spec.metric),
    )
    write_history_csv(result.history, out / "history.csv")
    save_checkpoint(result.params, out / "checkpoint.bin")
