import sys
from pathlib import Path

from koopnet.cli.config import RunConfig
from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset
from koopnet.errors import FormatError


def quiet(config: RunConfig) -> bool:
    return config.model.train.quiet or not sys.stderr.isatty()


def dataset_dir(config: RunConfig, out: str | None) -> Path:
    return config.root(out) / config.io.dataset_dir / config.dataset_name


def checkpoint_path(config: RunConfig, out: str | None, kind: str) -> Path:
    return config.root(out) / config.io.checkpoint_dir / f"{kind}_{config.dataset_name}.ckpt"


def history_path(checkpoint: Path) -> Path:
    return checkpoint.with_name(checkpoint.stem + ".history.csv")


def report_dir(config: RunConfig, out: str | None) -> Path:
    return config.root(out) / config.io.report_dir / config.dataset_name


def load_dataset(config: RunConfig, out: str | None) -> TrajectoryDataset:
    directory = dataset_dir(config, out)
    if not (directory / "manifest.json").exists():
        raise FormatError(f"no dataset at {directory}; run `koopnet generate` first")
    return TrajectoryDataset.load(directory, config.dataset_name)
