import logging
from pathlib import Path

import numpy as np
import scipy
import torch

import koopnet
from koopnet.cli.commands.common import checkpoint_path, dataset_dir, load_dataset, report_dir
from koopnet.cli.config import RunConfig
from koopnet.dataclasses.base_dataclass import Base
from koopnet.dataclasses.report_dataclass import EvalReport
from koopnet.errors import ConfigError, SystemIdentificationError
from koopnet.eval.experiments import (
    evaluate_model,
    is_training_dataset,
    latent_dim_sweep,
    robustness_suite,
    unidentified_row,
)
from koopnet.eval.export import write_loss_trajectories, write_node_plots, write_spectrum
from koopnet.models.registry import load_model

log = logging.getLogger(__name__)


def versions() -> dict:
    return {"koopnet": koopnet.__version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "torch": torch.__version__}


def parse_sweep(text: str) -> tuple[int, ...]:
    """`dims=4,8,16` -> (4, 8, 16)."""
    key, _, values = text.partition("=")
    if key.strip() != "dims" or not values:
        raise ConfigError(f"--sweep expects dims=<d1,d2,...>, got {text!r}")
    try:
        dims = tuple(int(v) for v in values.split(","))
    except ValueError as e:
        raise ConfigError(f"--sweep dimensions must be integers, got {values!r}") from e
    bad = [d for d in dims if d < 2 or d % 2]
    if bad:
        raise ConfigError(f"latent dimensions must be even and >= 2, got {bad}")
    return dims


def _autoencoder_template(config: RunConfig, kind: str | None, what: str):
    kind = kind or config.model.kind
    if kind not in ("kmpnn", "lusch"):
        raise ConfigError(f"{what} trains autoencoders; model kind {kind!r} has no latent space")
    return config.model.model_copy(update={"kind": kind})


def prediction_experiment(config: RunConfig, out: str | None, kinds, report: EvalReport,
                          directory: Path) -> None:
    dataset = load_dataset(config, out)
    seed = config.model.train.seed
    split = config.eval.split
    name = config.dataset_name
    report.manifest["dataset_hash"] = Base.file_hash(dataset_dir(config, out) / f"{name}.kdyn")
    report.manifest["graph_hash"] = dataset.graph.graph_hash
    checkpoints = report.manifest.setdefault("checkpoints", {})

    predictions, curves = {}, {}
    for kind in kinds:
        path = checkpoint_path(config, out, kind)
        try:
            model = load_model(path, dataset.graph)
        except SystemIdentificationError as e:
            report.extend([unidentified_row(kind, dataset, seed, e)])
            continue
        checkpoints[kind] = Base.file_hash(path)
        write_spectrum(directory / f"spectrum_{kind}.csv", model.eigenvalues(), config.config_hash)
        evaluation = evaluate_model(kind, model, dataset, seed, split)
        report.extend(evaluation.rows)
        if np.all(np.isfinite(evaluation.predictions)):
            predictions[kind] = evaluation.predictions
        if evaluation.loss_curves is not None:
            curves[kind] = evaluation.loss_curves
        log.info("evaluated %s on %s/%s", kind, config.dataset_name, split)

    nodes = [u for u in config.eval.plot_nodes if u < dataset.n]
    if predictions and nodes:
        write_node_plots(directory, dataset, predictions, nodes, split=split, config_hash=config.config_hash)
    if curves and is_training_dataset(dataset):
        write_loss_trajectories(directory / "loss_trajectory.csv", dataset, curves, split=split,
                                config_hash=config.config_hash)


def cmd_evaluate(
    config: RunConfig,
    out: str | None = None,
    kind: str | None = None,
    sweep: str | None = None,
    robustness: str | None = None,
) -> dict[str, Path]:
    """Prediction losses by default; --sweep or --robustness run only that experiment."""
    directory = report_dir(config, out)
    report = EvalReport(config_hash=config.config_hash, manifest={"versions": versions(),
                                                                  "dataset": config.dataset_name})
    dims = parse_sweep(sweep) if sweep else None
    grid = robustness
    if dims is None and grid is None:
        prediction_experiment(config, out, [kind] if kind else list(config.eval.models), report, directory)
        dims = config.eval.sweep_dims
        grid = config.eval.robustness

    if dims:
        template = _autoencoder_template(config, kind, "--sweep")
        dataset = load_dataset(config, out)
        report.extend(latent_dim_sweep(template, dataset, dims, config.model.train, config.eval.split))
    if grid:
        template = _autoencoder_template(config, kind, "--robustness")
        t = config.nn_task
        report.extend(robustness_suite(
            grid, template, config.model.train,
            S=config.eval.robustness_S,
            epochs=config.eval.robustness_epochs,
            seed=config.model.train.seed,
            cases=[(c.task, c.arch) for c in config.eval.robustness_cases],
            base_optimizer=t.optimizer if t is not None else None,
            task_overrides=t.task.model_dump(exclude={"kind"}) if t is not None else None,
            split_fractions=t.split_fractions if t is not None else (0.8, 0.1, 0.1),
        ))

    paths = report.save(directory)
    failed = sum(r.status == "failed" for r in report.rows)
    print(f"wrote {paths['csv']} ({len(report.rows)} rows, {failed} failed)")
    return paths
