import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from koopnet.errors import TaskDataError
from koopnet.tasks.specs import TaskSpec

log = logging.getLogger(__name__)

WINE_FEATURES = 13
DIGIT_PIXELS = 64
DIGIT_MAX = 16.0


@dataclass
class TaskData:
    """Inputs and targets for one task; `extras` keeps generator ground truth."""

    kind: str
    inputs: np.ndarray
    targets: np.ndarray
    out_dim: int
    extras: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _data_dir() -> Path:
    return Path(os.environ.get("KOOPNET_DATA_DIR", "."))


def _resolve(path: str | None, default: str) -> Path:
    p = Path(path) if path else Path(default)
    return p if p.is_absolute() else _data_dir() / p


def read_numeric_csv(path: Path, columns: int) -> np.ndarray:
    if not path.exists():
        raise TaskDataError(f"missing task CSV: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != columns:
                raise TaskDataError(f"{path}: row {lineno} has {len(row)} columns, expected {columns}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(i for i, cell in enumerate(row) if not _is_float(cell))
                if lineno == 1 and not rows:
                    continue  # header
                raise TaskDataError(f"{path}: row {lineno}, column {bad}: not a number: {row[bad]!r}")
    if not rows:
        raise TaskDataError(f"{path}: no data rows")
    data = np.asarray(rows)
    if not np.all(np.isfinite(data)):
        r, c = np.argwhere(~np.isfinite(data))[0]
        raise TaskDataError(f"{path}: data row {r + 1}, column {c}: non-finite value")
    return data


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def standardize(x: np.ndarray) -> np.ndarray:
    std = x.std(axis=0)
    std[std == 0] = 1.0
    return (x - x.mean(axis=0)) / std


def load_wine(path: Path) -> TaskData:
    data = read_numeric_csv(path, 1 + WINE_FEATURES)
    labels = data[:, 0]
    if not np.all(np.isin(labels, (1, 2, 3))):
        r = int(np.argwhere(~np.isin(labels, (1, 2, 3)))[0][0])
        raise TaskDataError(f"{path}: data row {r + 1}, column 0: label {labels[r]!r} not in {{1, 2, 3}}")
    return TaskData(
        kind="wine",
        inputs=standardize(data[:, 1:]),
        targets=(labels - 1).astype(np.int64),
        out_dim=3,
    )


def load_digits(path: Path, classes: tuple[int, int]) -> TaskData:
    data = read_numeric_csv(path, DIGIT_PIXELS + 1)
    labels = data[:, -1]
    if not np.all(np.isin(labels, np.arange(10))):
        r = int(np.argwhere(~np.isin(labels, np.arange(10)))[0][0])
        raise TaskDataError(f"{path}: data row {r + 1}, column {DIGIT_PIXELS}: label {labels[r]!r} not in 0..9")
    pixels = data[:, :DIGIT_PIXELS]
    if np.any(pixels < 0) or np.any(pixels > DIGIT_MAX):
        r, c = np.argwhere((pixels < 0) | (pixels > DIGIT_MAX))[0]
        raise TaskDataError(f"{path}: data row {r + 1}, column {c}: pixel {pixels[r, c]!r} outside 0..16")
    keep = np.isin(labels, classes)
    targets = np.where(labels[keep] == classes[0], 0, 1).astype(np.int64)
    inputs = (pixels[keep] / DIGIT_MAX).reshape(-1, 1, 8, 8)
    return TaskData(kind="digits", inputs=inputs, targets=targets, out_dim=2, extras={"classes": list(classes)})


def de_rhs(kind: str, x: np.ndarray) -> np.ndarray:
    match kind:
        case "x":
            return x.copy()
        case "zero":
            return np.zeros_like(x)
        case _:
            raise TaskDataError(f"unknown DE right-hand side {kind!r}")


def generate_task_data(task: TaskSpec, seed: int) -> TaskData:
    match task.kind:
        case "linear_regression":
            rng = np.random.default_rng(seed)
            x = rng.standard_normal((task.n_samples, task.n_features))
            w = rng.standard_normal(task.n_features)
            b = float(rng.standard_normal())
            y = x @ w + b + rng.normal(0.0, task.noise_std, size=task.n_samples)
            return TaskData(
                kind=task.kind, inputs=x, targets=y[:, None], out_dim=1,
                extras={"w": w, "b": b, "noise_var": task.noise_std ** 2},
            )
        case "wine":
            return load_wine(_resolve(task.wine_csv, "wine.csv"))
        case "digits":
            return load_digits(_resolve(task.digits_csv, "digits.csv"), task.digit_classes)
        case "de_solver":
            lo, hi = task.collocation
            x = np.linspace(lo, hi, task.n_collocation)[:, None]
            return TaskData(kind=task.kind, inputs=x, targets=de_rhs(task.de_rhs, x), out_dim=1)
        case _:
            raise TaskDataError(f"unknown task {task.kind!r}")
