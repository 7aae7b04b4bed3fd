"""Run configuration: one JSON document, validated before any work starts."""
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, model_validator

from koopnet.dataclasses.base_dataclass import Base
from koopnet.dynamics.systems import DynamicsKind
from koopnet.errors import ConfigError
from koopnet.models.specs import ModelSpec, TrainConfig
from koopnet.tasks.param_graph import EDGE_RULES
from koopnet.tasks.specs import ArchKind, ArchSpec, OptimizerSpec, TaskKind, TaskSpec

SplitFractions = tuple[float, float, float]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DynamicsSection(Section):
    model: DynamicsKind
    n: PositiveInt = 20
    m: int = Field(50, ge=0)
    S: PositiveInt = 1400
    T: PositiveInt | None = None
    dt: float | None = Field(None, gt=0.0)
    seed: int = 0
    b: float = 1.0
    c: float = 1.0
    decay: float = 1.0
    split_fractions: SplitFractions = (0.8, 0.1, 0.1)


class NnTaskSection(Section):
    task: TaskSpec
    arch: ArchSpec
    optimizer: OptimizerSpec = OptimizerSpec()
    epochs: PositiveInt = 500
    S: PositiveInt = 100
    seed: int = 0
    init_range: tuple[float, float] = (-1.0, 0.1)
    edge_rules: tuple[Literal["bias", "chain"], ...] = EDGE_RULES
    split_fractions: SplitFractions = (0.8, 0.1, 0.1)

    @model_validator(mode="after")
    def _check(self):
        if self.epochs % 10:
            raise ValueError(f"epochs must be a multiple of 10, got {self.epochs}")
        if self.init_range[0] >= self.init_range[1]:
            raise ValueError(f"init_range must be increasing, got {self.init_range}")
        return self


class ModelSection(ModelSpec):
    train: TrainConfig = TrainConfig()


class RobustnessCase(Section):
    task: TaskKind
    arch: ArchKind


class EvalSection(Section):
    models: tuple[Literal["dmd", "edmd", "lusch", "kmpnn"], ...] = ("kmpnn", "dmd")
    split: Literal["train", "val", "test"] = "test"
    plot_nodes: tuple[int, ...] = (0, 1)
    sweep_dims: tuple[PositiveInt, ...] | None = None
    robustness: Literal["activations", "optimizers", "stochastic"] | None = None
    robustness_cases: tuple[RobustnessCase, ...] = (
        RobustnessCase(task="wine", arch="fc2"),
        RobustnessCase(task="digits", arch="conv1_fc2"),
    )
    robustness_S: PositiveInt = 20
    robustness_epochs: PositiveInt = 500


class IoSection(Section):
    out_dir: str | None = None
    name: str | None = None
    dataset_dir: str = "data"
    checkpoint_dir: str = "checkpoints"
    report_dir: str = "reports"
    log_dir: str | None = "logs"
    export_csv: bool = False


class RunConfig(Section):
    dynamics: DynamicsSection | None = None
    nn_task: NnTaskSection | None = None
    model: ModelSection = ModelSection()
    eval: EvalSection = EvalSection()
    io: IoSection = IoSection()

    @model_validator(mode="after")
    def _check(self):
        if self.dynamics is not None and self.nn_task is not None:
            raise ValueError("a run configures either 'dynamics' or 'nn_task', not both")
        return self

    @property
    def config_hash(self) -> str:
        return Base.content_hash(self.model_dump(mode="json"))

    @property
    def dataset_name(self) -> str:
        if self.io.name:
            return self.io.name
        if self.dynamics is not None:
            return self.dynamics.model.value
        if self.nn_task is not None:
            return f"{self.nn_task.arch.kind}_{self.nn_task.task.kind}"
        raise ConfigError("config has neither a 'dynamics' nor an 'nn_task' section")

    def root(self, out: str | None = None) -> Path:
        """--out beats io.out_dir; relative paths resolve against KOOPNET_DATA_DIR."""
        base = Path(os.environ.get("KOOPNET_DATA_DIR", "."))
        chosen = out or self.io.out_dir
        if chosen is None:
            return base
        p = Path(chosen)
        return p if p.is_absolute() or out else base / p

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        doc = self.model_dump(mode="json")
        doc["model"]["train"]["seed"] = seed
        for section in ("dynamics", "nn_task"):
            if doc[section] is not None:
                doc[section]["seed"] = seed
        return RunConfig.model_validate(doc)


def load_config(path: str | os.PathLike) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        return RunConfig.model_validate_json(p.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"invalid config {p}:\n{e}") from e
