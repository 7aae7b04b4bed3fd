"""Plot-data and history CSVs. Every file starts with a `# config_hash=` line."""
import csv
import os
from pathlib import Path

import numpy as np

from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset
from koopnet.errors import ShapeError
from koopnet.models.spectrum import spectrum_report

HISTORY_COLUMNS = ("epoch", "total", "recon", "linear", "pred", "val")
SPECTRUM_COLUMNS = ("re", "im", "modulus", "angle", "period")


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_csv(path: str | os.PathLike, header, rows, config_hash: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_history(path, history: list[dict], config_hash: str = "") -> Path:
    return write_csv(path, HISTORY_COLUMNS, ([h[k] for k in HISTORY_COLUMNS] for h in history), config_hash)


def write_node_plots(
    directory,
    dataset: TrajectoryDataset,
    predictions: dict[str, np.ndarray],
    nodes=(0, 1),
    index: int = 0,
    split: str = "test",
    config_hash: str = "",
) -> list[Path]:
    """time, actual, <model>... for one trajectory of the split, one file per node."""
    actual = dataset.split(split)
    if not 0 <= index < actual.shape[0]:
        raise ShapeError(f"{split} split has {actual.shape[0]} trajectories, asked for index {index}")
    time = np.arange(dataset.T + 1) * dataset.dt
    names = sorted(predictions)
    paths = []
    for u in nodes:
        if not 0 <= u < dataset.n:
            raise ShapeError(f"node {u} outside 0..{dataset.n - 1}")
        columns = [time, actual[index, :, u]] + [predictions[k][index, :, u] for k in names]
        paths.append(write_csv(Path(directory) / f"plot_node_{u}.csv", ["time", "actual", *names],
                               zip(*columns), config_hash))
    return paths


def write_loss_trajectories(
    path,
    dataset: TrajectoryDataset,
    curves: dict[str, np.ndarray],
    index: int = 0,
    split: str = "test",
    config_hash: str = "",
) -> Path:
    """Recorded task loss next to the loss at each model's predicted parameter snapshots."""
    recorded = dataset.losses[dataset.splits[split]][index]
    time = np.arange(dataset.T + 1) * dataset.dt
    names = sorted(curves)
    columns = [time, recorded] + [curves[k][index] for k in names]
    return write_csv(path, ["epoch", "actual", *names], zip(*columns), config_hash)


def write_spectrum(path, eigenvalues, config_hash: str = "") -> Path:
    """One row per eigenvalue, largest modulus first."""
    rows = spectrum_report(eigenvalues)
    return write_csv(path, SPECTRUM_COLUMNS, ([r[k] for k in SPECTRUM_COLUMNS] for r in rows), config_hash)
