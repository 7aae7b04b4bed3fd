"""Prediction-loss evaluation, optimisation performance, latent sweeps and robustness grids."""
import logging
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from koopnet.baselines.base import LinearBaseline
from koopnet.dataclasses.report_dataclass import ReportRow
from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset
from koopnet.errors import KoopnetError, MetricError, NonFiniteError, SystemIdentificationError
from koopnet.eval.metrics import optimisation_performance, prediction_loss
from koopnet.models.registry import Model, fit_model
from koopnet.models.specs import ModelSpec, TrainConfig
from koopnet.tasks.networks import build_network, network_loss
from koopnet.tasks.specs import ACTIVATIONS, OPTIMIZERS, ArchSpec, OptimizerSpec, TaskSpec
from koopnet.tasks.task_data import generate_task_data
from koopnet.tasks.trajectories import generate_param_dataset

log = logging.getLogger(__name__)

GRIDS = ("activations", "optimizers", "stochastic")
DEFAULT_CASES = (("wine", "fc2"), ("digits", "conv1_fc2"))


@dataclass
class ModelEvaluation:
    name: str
    predictions: np.ndarray | None
    rows: list[ReportRow] = field(default_factory=list)
    loss_curves: np.ndarray | None = None  # (S_test, T+1) task loss at predicted snapshots


def is_training_dataset(dataset: TrajectoryDataset) -> bool:
    return dataset.manifest.get("kind") == "nn_training" and dataset.losses is not None


def dataset_name(dataset: TrajectoryDataset) -> str:
    return str(dataset.manifest.get("name", dataset.manifest.get("model", "dataset")))


def status_of(model: Model) -> str:
    return model.status if isinstance(model, LinearBaseline) else "ok"


def task_context(dataset: TrajectoryDataset):
    """Rebuild the task network and its data from a training-dynamics manifest."""
    m = dataset.manifest
    task = TaskSpec.model_validate(m["task"])
    arch = ArchSpec.model_validate(m["arch"])
    return build_network(arch, task), generate_task_data(task, int(m["data_seed"]))


def optimisation_rows(
    dataset: TrajectoryDataset, predictions: np.ndarray, split: str = "test"
) -> tuple[np.ndarray, np.ndarray, dict[int, str]]:
    """Per-trajectory r, the task loss at every predicted snapshot, and why r is undefined where it is.

    r is NaN both for diverged predictions and for trajectories whose recorded loss never moved;
    only the latter are keyed in the third element.
    """
    net, data = task_context(dataset)
    losses = dataset.losses[dataset.splits[split]]
    curves = np.full(predictions.shape[:2], np.nan)
    r = np.full(len(losses), np.nan)
    undefined = {}
    for i, (pred, actual) in enumerate(zip(predictions, losses)):
        for t, params in enumerate(pred):
            try:
                curves[i, t] = network_loss(net, params, data)
            except NonFiniteError:
                break
        try:
            r[i] = optimisation_performance(actual[0], curves[i, -1], actual[-1])
        except MetricError as e:
            undefined[i] = str(e)
    return r, curves, undefined


def r_row(name: str, ds: str, seed: int, r: np.ndarray, undefined: dict[int, str], status: str,
          experiment: str = "prediction", params: dict | None = None) -> ReportRow:
    """Mean r over the trajectories where it is defined.

    No defined trajectory gives a failed row; a diverged one makes the mean out_of_scale.
    """
    keep = [i for i in range(len(r)) if i not in undefined]
    note = ""
    if undefined:
        first = min(undefined)
        note = f"r undefined for {len(undefined)} of {len(r)} trajectories; trajectory {first}: {undefined[first]}"
        log.warning("%s on %s: %s", name, ds, note)
    if not keep:
        return ReportRow(experiment, name, ds, seed, "r", None, "failed", params or {}, note=note)
    r_mean = float(np.mean(r[keep]))
    if not np.isfinite(r_mean):
        return ReportRow(experiment, name, ds, seed, "r", None, "out_of_scale", params or {}, note=note)
    return ReportRow(experiment, name, ds, seed, "r", r_mean, status, params or {}, note=note)


def evaluate_model(
    name: str,
    model: Model,
    dataset: TrajectoryDataset,
    seed: int,
    split: str = "test",
    experiment: str = "prediction",
    params: dict | None = None,
) -> ModelEvaluation:
    actual = dataset.split(split)
    ds = dataset_name(dataset)
    params = params or {}
    status = status_of(model)
    pred = model.predict_trajectory(actual[:, 0], dataset.T)
    out = ModelEvaluation(name=name, predictions=pred)

    if not np.all(np.isfinite(pred)):
        out.rows.append(ReportRow(experiment, name, ds, seed, "prediction_loss", None, "out_of_scale", params,
                                  note="non-finite predictions"))
        return out
    out.rows.append(ReportRow(experiment, name, ds, seed, "prediction_loss", prediction_loss(pred, actual),
                              status, params))
    if is_training_dataset(dataset):
        r, curves, undefined = optimisation_rows(dataset, pred, split)
        out.loss_curves = curves
        out.rows.append(r_row(name, ds, seed, r, undefined, status, experiment, params))
    return out


def unidentified_row(name: str, dataset: TrajectoryDataset, seed: int, error: Exception,
                     experiment: str = "prediction") -> ReportRow:
    return ReportRow(experiment, name, dataset_name(dataset), seed, "prediction_loss", None, "unidentified",
                     note=str(error).splitlines()[0])


def latent_dim_sweep(
    template: ModelSpec, dataset: TrajectoryDataset, dims, config: TrainConfig, split: str = "test"
) -> list[ReportRow]:
    """One model per latent dimension, all trained with the same seed."""
    dims = [int(d) for d in dims]
    bad = [d for d in dims if d < 2 or d % 2]
    if bad:
        raise ValueError(f"latent dimensions must be even and >= 2, got {bad}")
    rows = []
    for dim in tqdm(dims, desc="latent sweep", disable=config.quiet):
        spec = template.model_copy(update={"latent_dim": dim})
        model, _ = fit_model(spec, dataset, config)
        rows.extend(evaluate_model(spec.kind, model, dataset, config.seed, split,
                                   experiment="latent_sweep", params={"dim": dim}).rows)
        log.info("latent sweep dim=%d done", dim)
    return rows


@dataclass(frozen=True)
class GridCell:
    task: TaskSpec
    arch: ArchSpec
    optimizer: OptimizerSpec
    params: dict


def grid_cells(grid: str, cases=DEFAULT_CASES, base_optimizer: OptimizerSpec | None = None,
               task_overrides: dict | None = None) -> list[GridCell]:
    base_optimizer = base_optimizer or OptimizerSpec()
    cells = []
    for task_kind, arch_kind in cases:
        task = TaskSpec(kind=task_kind, **(task_overrides or {}))
        label = {"task": task_kind, "arch": arch_kind}
        match grid:
            case "activations":
                for act in ACTIVATIONS:
                    cells.append(GridCell(task, ArchSpec(kind=arch_kind, activation=act), base_optimizer,
                                          {**label, "activation": act}))
            case "optimizers" | "stochastic":
                shuffle = grid == "stochastic"
                for opt in OPTIMIZERS:
                    spec = base_optimizer.model_copy(update={"kind": opt, "lr": None, "shuffle": shuffle})
                    cells.append(GridCell(task, ArchSpec(kind=arch_kind), spec,
                                          {**label, "optimizer": opt, "shuffle": shuffle}))
            case _:
                raise ValueError(f"unknown robustness grid {grid!r}; known: {list(GRIDS)}")
    return cells


def robustness_suite(
    grid: str,
    template: ModelSpec,
    config: TrainConfig,
    S: int,
    epochs: int,
    seed: int,
    cases=DEFAULT_CASES,
    base_optimizer: OptimizerSpec | None = None,
    task_overrides: dict | None = None,
    split_fractions=(0.8, 0.1, 0.1),
) -> list[ReportRow]:
    """Regenerate trajectories per grid cell, fit the template model, report mean r per cell."""
    rows = []
    experiment = f"robustness_{grid}"
    for cell in tqdm(grid_cells(grid, cases, base_optimizer, task_overrides), desc=experiment,
                     disable=config.quiet):
        label = f"{cell.arch.kind}/{cell.task.kind}"
        try:
            dataset = generate_param_dataset(cell.task, cell.arch, cell.optimizer, epochs, S, seed,
                                             split_fractions=split_fractions, quiet=True)
            dataset.manifest["name"] = label
            model, _ = fit_model(template, dataset, config)
            evaluation = evaluate_model(template.kind, model, dataset, seed, experiment=experiment,
                                        params=cell.params)
            r_rows = [r for r in evaluation.rows if r.metric == "r"]
            if not r_rows:
                # predictions diverged before any task loss could be measured
                note = evaluation.rows[0].note if evaluation.rows else ""
                r_rows = [ReportRow(experiment, template.kind, label, seed, "r", None, "out_of_scale",
                                    cell.params, note=note)]
            rows.extend(r_rows)
        except SystemIdentificationError as e:
            rows.append(ReportRow(experiment, template.kind, label, seed, "r", None, "unidentified",
                                  cell.params, note=str(e).splitlines()[0]))
        except (KoopnetError, ValueError, OSError) as e:
            log.error("robustness cell %s %s failed: %s", label, cell.params, e)
            rows.append(ReportRow(experiment, template.kind, label, seed, "r", None, "failed",
                                  cell.params, note=str(e).splitlines()[0]))
    return rows
