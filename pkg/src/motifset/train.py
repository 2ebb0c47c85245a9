"""Run orchestration: train, prepare, score, and sweep entry points.

``run_train`` owns the training loop: minibatch SGD with a seeded shuffle
per epoch, evolution events on the configured schedule between epochs, and
streaming output files in the run directory:

* ``metrics.csv``: one row per epoch (loss, test accuracy, wall time,
  analytic MACs), flushed as it goes.
* ``evolution.csv``: one row per evolution event and layer.
* ``checkpoint.bin``: final network, bit-exact restorable.
* ``manifest.txt``: resolved config echo plus a ``[result]`` section;
  feeding it back in reproduces the run, and ``run_score`` reads its
  result block.
"""
from __future__ import annotations

import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import save_checkpoint
from .config import (
    EVOLUTION_NONE,
    ExperimentConfig,
    config_to_text,
    read_manifest_result,
)
from .data import (
    Dataset,
    build_csv_dataset,
    build_idx_dataset,
    limit_dataset,
    load_dataset_cache,
    save_dataset_cache,
)
from .errors import MissingFieldError, NonFiniteError, SaturationError
from .evolution import (
    EVOLUTION_CSV_HEADER,
    EvolutionPolicy,
    evolution_schedule,
    evolve,
)
from .metrics import (
    METRICS_CSV_HEADER,
    SCORE_CSV_HEADER,
    RunMeasurement,
    ScoreReport,
    SweepResult,
    comprehensive_score,
    flop_counter,
    metrics_csv_row,
    record_epoch,
    score_csv_rows,
    tradeoff_sweep,
)
from .network import backward, forward, init_network, loss, predict_accuracy, sgd_step
from .topology import BlockDensitySpec, build_topology


def load_dataset(config: ExperimentConfig) -> Dataset:
    """Materialize the dataset a config describes (cache wins if present)."""
    if config.cache_path and Path(config.cache_path).exists():
        dataset = load_dataset_cache(config.cache_path)
    elif config.dataset_kind == "idx":
        dataset = build_idx_dataset(
            config.train_images, config.train_labels,
            config.test_images, config.test_labels,
            apply_standardize=config.standardize,
        )
    else:
        dataset = build_csv_dataset(
            config.csv_path, config.label_column, config.test_fraction,
            config.split_seed, apply_standardize=config.standardize,
        )
    return limit_dataset(dataset, config.train_limit, config.test_limit)


def run_prepare(config: ExperimentConfig, cache_out) -> Dataset:
    """Build the configured dataset and write it to a cache container."""
    config.validate()
    dataset = load_dataset(config)
    cache_out = Path(cache_out)
    cache_out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset_cache(dataset, cache_out)
    return dataset


def _environment_lines() -> dict:
    return {
        "package_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
    }


def _check_finite(network, epoch: int):
    for i, layer in enumerate(network.layers):
        if not (np.isfinite(layer.weights).all()
                and np.isfinite(layer.bias).all()):
            raise NonFiniteError(
                f"non-finite parameters in layer {i} after epoch {epoch}"
            )


def run_train(config: ExperimentConfig, echo=print) -> RunMeasurement:
    """Train a network per the config; writes run files, returns measurements."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t_start = time.perf_counter()
    dataset = load_dataset(config)
    layer_sizes = (dataset.n_features, *config.hidden_sizes,
                   dataset.n_classes)
    density = BlockDensitySpec(config.density_mode, config.density_value)
    topology = build_topology(layer_sizes, config.motif_size, density,
                              seed=config.topology_seed)
    network = init_network(topology, config.activation, config.init_scheme,
                           config.init_seed, config.weight_mode)
    policy = None
    if config.evolution_mode != EVOLUTION_NONE:
        policy = EvolutionPolicy(
            mode=config.evolution_mode, zeta=config.zeta,
            epsilon_prune=config.epsilon_prune,
            noise_scale=config.noise_scale, rng_seed=config.evolution_seed,
        )

    x_tr, y_tr = dataset.x_train, dataset.y_train
    n = x_tr.shape[0]
    batch_size = config.batch_size if config.batch_size > 0 else n
    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    run = RunMeasurement()

    metrics_path = out_dir / "metrics.csv"
    evolution_path = out_dir / "evolution.csv"
    with open(metrics_path, "w") as mf, open(evolution_path, "w") as ef:
        mf.write(METRICS_CSV_HEADER + "\n")
        ef.write(EVOLUTION_CSV_HEADER + "\n")
        for epoch in range(config.epochs):
            t0 = time.perf_counter()
            perm = shuffle_rng.permutation(n)
            loss_sum = 0.0
            for start in range(0, n, batch_size):
                idx = perm[start:start + batch_size]
                cache = forward(network, x_tr[idx])
                loss_sum += loss(cache, y_tr[idx]) * idx.size
                grads = backward(network, cache, y_tr[idx])
                sgd_step(network, grads, config.learning_rate)
            epoch_time = time.perf_counter() - t0
            _check_finite(network, epoch)

            train_loss = loss_sum / n
            accuracy = predict_accuracy(network, dataset.x_test,
                                        dataset.y_test)
            flops = flop_counter(network.topology, config.weight_mode,
                                 n_samples=n).total
            record_epoch(run, epoch_time, train_loss, accuracy, flops)
            mf.write(metrics_csv_row(epoch, train_loss, accuracy, epoch_time,
                                     flops) + "\n")
            mf.flush()

            if policy is not None and evolution_schedule(
                    epoch, config.epochs, config.evolution_period):
                with warnings.catch_warnings():
                    # saturated layers are recorded per event in
                    # evolution.csv; no need to warn once per epoch
                    warnings.simplefilter("ignore", SaturationError)
                    _, stats = evolve(network, policy, event_index=epoch)
                for row in stats.csv_rows(epoch):
                    ef.write(row + "\n")
                ef.flush()

            echo(f"epoch {epoch}: loss={train_loss:.6f} "
                 f"test_acc={accuracy:.4f} time={epoch_time:.3f}s")

    run.total_time_s = time.perf_counter() - t_start
    save_checkpoint(network, out_dir / "checkpoint.bin")
    result = {
        "final_accuracy": run.final_accuracy,
        "total_time_s": run.total_time_s,
        "train_time_s": float(sum(run.per_epoch_time_s)),
        "total_flops": run.flop_count,
        "epochs": run.n_epochs,
        "final_train_loss": run.train_losses[-1],
        **_environment_lines(),
    }
    (out_dir / "manifest.txt").write_text(config_to_text(config, result))
    return run


def _manifest_measurements(path, use_flops: bool) -> tuple[float, float]:
    """(time-or-flops, accuracy) from a manifest's [result] section."""
    result = read_manifest_result(path)
    time_key = "total_flops" if use_flops else "train_time_s"
    for key in (time_key, "final_accuracy"):
        if key not in result:
            raise MissingFieldError(
                f"{path}: manifest [result] lacks {key!r}"
            )
    return float(result[time_key]), float(result["final_accuracy"])


def run_score(baseline_manifest, variant_manifest, w_eff: float = 0.1,
              w_acc: float | None = None, use_flops: bool = False,
              out_dir=None) -> ScoreReport:
    """Score a variant manifest against a baseline manifest.

    The efficiency channel is wall-clock training time by default, or the
    analytic MAC count with ``use_flops``.  Writes ``score.csv`` when
    ``out_dir`` is given.
    """
    t_base, a_base = _manifest_measurements(baseline_manifest, use_flops)
    t_var, a_var = _manifest_measurements(variant_manifest, use_flops)
    report = comprehensive_score(t_base, t_var, a_base, a_var, w_eff, w_acc)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        single = SweepResult([report], [report.w_acc], None)
        (out_dir / "score.csv").write_text(
            SCORE_CSV_HEADER + "\n" + "\n".join(score_csv_rows(single)) + "\n")
    return report


def run_sweep(baseline_manifest, variant_manifest, grid=None,
              use_flops: bool = False, out_dir=None) -> SweepResult:
    """Sweep the efficiency weight across a grid; optionally write sweep.csv."""
    t_base, a_base = _manifest_measurements(baseline_manifest, use_flops)
    t_var, a_var = _manifest_measurements(variant_manifest, use_flops)
    result = tradeoff_sweep(t_base, t_var, a_base, a_var, grid)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "sweep.csv").write_text(
            SCORE_CSV_HEADER + "\n" + "\n".join(score_csv_rows(result)) + "\n")
    return result
