"""Per-seed experiment stages. Each stage reads and writes files in ``seed-<s>/``.

Stages that depend on earlier artifacts build the missing ones first only
where noted (training builds its data, autoencoder and cache); analysis and
evaluation require a finished run.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from core.datasets import ManifoldDataset, load_dataset, save_dataset
from core.exceptions import MissingArtifact
from core.seeding import derive_rng
from evaluation.analysis import (
    decision_grid,
    histogram,
    loss_vs_tc,
    perturbation_geometry,
)
from evaluation.metrics import (
    MetricsRecord,
    aggregate,
    clean_accuracy,
    records_frame,
    robust_accuracy,
)
from experiments.config import ExperimentConfig
from experiments.reports import read_json, write_json, write_table
from network.autoencoder import train_autoencoder
from network.checkpoints import load_autoencoder, load_model, save_autoencoder, save_model
from tangent.cache import (
    TangentCache,
    TangentSource,
    build_cache,
    load_cache,
    save_cache,
)
from tangent.diagnostics import (
    largest_angles_to_exact,
    random_subspace_baseline,
    storage_report,
    summarize_angles,
    timing_report,
)
from training.loops import train

logger = logging.getLogger(__name__)

STAGES = ("gen_data", "train_ae", "build_cache", "train", "eval", "analyze")

BASELINE_STREAM = 6
EVAL_STREAM = 7
TIMING_STREAM = 8


@dataclass(frozen=True)
class SeedPaths:
    """File layout of one trial."""

    root: Path
    seed: int

    @property
    def directory(self: "SeedPaths") -> Path:
        return self.root / f"seed-{self.seed}"

    @property
    def train_data(self: "SeedPaths") -> Path:
        return self.directory / "train.tads"

    @property
    def test_data(self: "SeedPaths") -> Path:
        return self.directory / "test.tads"

    @property
    def autoencoder(self: "SeedPaths") -> Path:
        return self.directory / "autoencoder.tamd"

    @property
    def ae_loss(self: "SeedPaths") -> Path:
        return self.directory / "ae_loss.csv"

    @property
    def tangents(self: "SeedPaths") -> Path:
        return self.directory / "tangents.tatc"

    @property
    def model_last(self: "SeedPaths") -> Path:
        return self.directory / "model_last.tamd"

    @property
    def model_best(self: "SeedPaths") -> Path:
        return self.directory / "model_best.tamd"

    @property
    def metrics(self: "SeedPaths") -> Path:
        return self.directory / "metrics.csv"

    @property
    def summary(self: "SeedPaths") -> Path:
        return self.directory / "summary.json"

    @property
    def analysis(self: "SeedPaths") -> Path:
        return self.directory / "analysis"

    def ensure(self: "SeedPaths") -> "SeedPaths":
        self.directory.mkdir(parents=True, exist_ok=True)
        return self


def require(path: Path, hint: str) -> Path:
    """Return ``path`` if it exists, else raise MissingArtifact naming the producing step."""
    if not path.exists():
        raise MissingArtifact(f"{path} is missing; run {hint} first")
    return path


def seed_paths(config: ExperimentConfig, seed: int) -> SeedPaths:
    return SeedPaths(root=config.output_dir, seed=seed)


def generate_data(config: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """Sample and write the train and test sets of ``seed``."""
    paths = seed_paths(config, seed).ensure()
    split = config.dataset_split(seed)
    digest = save_dataset(split.train, paths.train_data)
    save_dataset(split.test, paths.test_data)
    return {
        "seed": seed,
        "n_train": len(split.train),
        "n_test": len(split.test),
        "dim": split.train.dim,
        "num_classes": split.train.num_classes,
        "histogram": split.train.class_histogram().tolist(),
        "sha256": digest.hex(),
    }


def _load_split(
    config: ExperimentConfig, seed: int, build: bool
) -> Tuple[ManifoldDataset, ManifoldDataset]:
    paths = seed_paths(config, seed)
    if build and not (paths.train_data.exists() and paths.test_data.exists()):
        generate_data(config, seed)
    train_set = load_dataset(require(paths.train_data, "gen_data"))
    test_set = load_dataset(require(paths.test_data, "gen_data"))
    return train_set, test_set


def fit_autoencoder(
    config: ExperimentConfig, seed: int, build: bool = True
) -> Dict[str, Any]:
    """Train the autoencoder of ``seed`` on its training inputs."""
    paths = seed_paths(config, seed).ensure()
    train_set, _ = _load_split(config, seed, build)
    settings = config.section("autoencoder")
    ae, trace = train_autoencoder(
        train_set.x,
        latent_dim=settings["latent_dim"],
        epochs=settings["epochs"],
        state=config.autoencoder_state(),
        batch_size=settings["batch_size"],
        seed=seed,
        hidden=settings["hidden"],
    )
    save_autoencoder(ae, paths.autoencoder)
    write_table(pd.DataFrame({"epoch": np.arange(len(trace)), "loss": trace}), paths.ae_loss)
    return {"seed": seed, "initial_loss": trace[0], "final_loss": trace[-1]}


def make_cache(config: ExperimentConfig, seed: int, build: bool = True) -> Dict[str, Any]:
    """Build and write the tangent cache of ``seed``.

    When the dataset carries exact tangents the report also compares the
    cache against them and against random subspaces.
    """
    paths = seed_paths(config, seed).ensure()
    train_set, _ = _load_split(config, seed, build)
    ae = None
    if config.uses_autoencoder:
        if build and not paths.autoencoder.exists():
            fit_autoencoder(config, seed, build)
        ae = load_autoencoder(require(paths.autoencoder, "train_ae"))
        cache = build_cache(train_set, TangentSource.ESTIMATED, ae, config.sampling_spec())
    else:
        cache = build_cache(train_set, TangentSource.EXACT)
    save_cache(cache, paths.tangents)
    storage = storage_report(cache)
    report: Dict[str, Any] = {
        "seed": seed,
        "source": cache.source.label,
        "entries": len(cache),
        "cache_bytes": storage.cache_bytes,
        "dense_bytes": storage.dense_bytes,
        "timing": timing_report(
            cache,
            train_set,
            derive_rng(seed, TIMING_STREAM),
            config.training_attack().epsilon,
            ae,
            config.sampling_spec(),
        ).as_dict(),
    }
    if train_set.tangents is not None and train_set.tangent_dim == cache.rank:
        report["angles"] = summarize_angles(largest_angles_to_exact(cache, train_set)).as_dict()
        baseline = random_subspace_baseline(
            train_set,
            cache.rank,
            config.section("tangent")["baseline_draws"],
            derive_rng(seed, BASELINE_STREAM),
        )
        report["random_baseline"] = summarize_angles(baseline).as_dict()
    return report


def _load_cache(config: ExperimentConfig, seed: int, train_set: ManifoldDataset) -> TangentCache:
    paths = seed_paths(config, seed)
    return load_cache(require(paths.tangents, "build_cache"), train_set.content_hash())


def train_seed(config: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """Train one trial, building any missing prerequisite, then evaluate it."""
    paths = seed_paths(config, seed).ensure()
    train_set, test_set = _load_split(config, seed, build=True)
    run = config.train_run(seed)
    cache = None
    if run.needs_cache:
        if not paths.tangents.exists():
            make_cache(config, seed, build=True)
        cache = _load_cache(config, seed, train_set)
    logger.info("training seed %d: method=%s", seed, run.method.value)
    result = train(run, train_set, test_set, cache)
    save_model(result.last, paths.model_last)
    save_model(result.best, paths.model_best)
    write_table(pd.DataFrame([vars(m) for m in result.metrics]), paths.metrics)
    write_json(
        {
            "seed": seed,
            "method": run.method.value,
            "rule": None if run.rule is None else run.rule.kind.value,
            "best_epoch": result.best_epoch,
            "attack_calls": result.attack_calls,
            "train_seconds": sum(m.seconds for m in result.metrics),
        },
        paths.summary,
    )
    return evaluate_seed(config, seed)


def evaluate_seed(config: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """Clean (last and best) and robust accuracies of a trained trial on its test set."""
    paths = seed_paths(config, seed)
    test_set = load_dataset(require(paths.test_data, "gen_data"))
    last = load_model(require(paths.model_last, "train"))
    best = load_model(require(paths.model_best, "train"))
    record = MetricsRecord(
        seed=seed,
        clean_last=clean_accuracy(last, test_set),
        clean_best=clean_accuracy(best, test_set),
    )
    for number, (name, attack) in enumerate(config.eval_attacks().items()):
        rng = derive_rng(seed, EVAL_STREAM, number)
        record.robust[name] = robust_accuracy(last, test_set, attack, rng)
    summary = read_json(paths.summary) if paths.summary.exists() else {"seed": seed}
    summary.update(record.as_row())
    write_json(summary, paths.summary)
    logger.info("seed %d: clean=%.4f robust=%s", seed, record.clean_last, record.robust)
    return record.as_row()


def analyze_seed(config: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """Plot-ready tables: TC and angle histograms, loss vs TC and boundary slices."""
    paths = seed_paths(config, seed)
    settings = config.section("analysis")
    model = load_model(require(paths.model_last, "train"))
    train_set = load_dataset(require(paths.train_data, "gen_data"))
    cache = _load_cache(config, seed, train_set)
    attack = config.training_attack()
    paths.analysis.mkdir(parents=True, exist_ok=True)

    geometry = perturbation_geometry(model, train_set, cache, attack, seed=seed)
    bins = settings["histogram_bins"]
    write_table(histogram(geometry.tcs, bins), paths.analysis / "tc_histogram.csv")
    write_table(
        histogram(geometry.angles, bins, (0.0, 90.0)), paths.analysis / "angle_histogram.csv"
    )
    write_table(geometry.summary(), paths.analysis / "geometry_summary.csv")

    report = loss_vs_tc(
        model,
        train_set,
        cache,
        attack,
        num_batches=settings["loss_tc_batches"],
        batch_size=config.section("optimizer")["batch_size"],
        seed=seed,
    )
    write_table(report.table, paths.analysis / "loss_vs_tc.csv")

    for plane in config.slices():
        grid = decision_grid(
            model,
            plane,
            resolution=settings["grid_resolution"],
            extent=settings["grid_extent"],
            frame=train_set.frame,
        )
        write_table(grid, paths.analysis / f"slice_{plane.label}.csv")
    return {
        "seed": seed,
        "correlation": report.correlation,
        "geometry": geometry.summary().to_dict(orient="records"),
    }


STAGE_FUNCTIONS = {
    "gen_data": generate_data,
    "train_ae": fit_autoencoder,
    "build_cache": make_cache,
    "train": train_seed,
    "eval": evaluate_seed,
    "analyze": analyze_seed,
}


def run_stage(config: ExperimentConfig, stage: str, seed: int) -> Dict[str, Any]:
    """Run one stage for one seed."""
    if stage not in STAGE_FUNCTIONS:
        raise ValueError(f"unknown stage {stage!r}; choose from {list(STAGES)}")
    logger.info("%s: seed %d", stage, seed)
    return STAGE_FUNCTIONS[stage](config, seed)


def summarize_experiment(
    config: ExperimentConfig, rows: List[Dict[str, Any]]
) -> Dict[str, Any]:
    """Aggregate per-seed accuracy rows into the run-level summary."""
    records = [
        MetricsRecord(
            seed=row["seed"],
            clean_last=row["clean_last"],
            clean_best=row["clean_best"],
            robust={
                key[len("robust_") :]: value
                for key, value in row.items()
                if key.startswith("robust_")
            },
        )
        for row in rows
    ]
    summary = {
        "name": config.name,
        "config": config.data,
        "seeds": [record.seed for record in records],
        "per_seed": [record.as_row() for record in records],
        "aggregate": aggregate(records),
    }
    write_json(summary, config.output_dir / "summary.json")
    write_table(records_frame(records), config.output_dir / "seeds.csv")
    return summary
