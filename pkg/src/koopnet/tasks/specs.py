from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

Activation = Literal["elu", "relu", "leaky_relu", "sigmoid", "tanh"]
TaskKind = Literal["linear_regression", "wine", "digits", "de_solver"]
ArchKind = Literal["fc1", "fc2", "fc3", "conv1_fc2", "conv2_fc1"]
OptimizerKind = Literal["sgd", "adagrad", "adadelta", "adam"]

ACTIVATIONS: tuple[str, ...] = ("elu", "relu", "leaky_relu", "sigmoid", "tanh")
OPTIMIZERS: tuple[str, ...] = ("sgd", "adagrad", "adadelta", "adam")

DEFAULT_LR = {"sgd": 1e-2, "adagrad": 1e-3, "adadelta": 1.0, "adam": 1e-3}


class TaskSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: TaskKind
    wine_csv: str | None = None
    digits_csv: str | None = None
    digit_classes: tuple[int, int] = (0, 1)
    # linear regression generator
    n_samples: PositiveInt = 2000
    n_features: PositiveInt = 20
    noise_std: float = Field(0.1, ge=0.0)
    # DE solver f'(x) - f(x) = g(x), f(1) = 0
    collocation: tuple[float, float] = (0.0, 2.0)
    n_collocation: PositiveInt = 100
    de_rhs: Literal["x", "zero"] = "x"

    @model_validator(mode="after")
    def _check(self):
        a, b = self.digit_classes
        if a == b or not (0 <= a <= 9 and 0 <= b <= 9):
            raise ValueError(f"digit_classes must be two distinct digits, got {self.digit_classes}")
        if self.collocation[0] >= self.collocation[1]:
            raise ValueError(f"collocation range must be increasing, got {self.collocation}")
        return self


class ArchSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ArchKind
    hidden: tuple[PositiveInt, ...] | None = None
    channels: tuple[PositiveInt, ...] | None = None
    activation: Activation = "elu"
    elu_alpha: PositiveFloat = 1.0
    leaky_slope: PositiveFloat = 0.01
    pooling: Literal["avg", "max"] = "avg"

    @property
    def is_conv(self) -> bool:
        return self.kind.startswith("conv")


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: OptimizerKind = "sgd"
    lr: PositiveFloat | None = None
    batch_size: PositiveInt = 32
    shuffle: bool = False
    rho: float = Field(0.9, gt=0.0, lt=1.0)

    @property
    def learning_rate(self) -> float:
        return self.lr if self.lr is not None else DEFAULT_LR[self.kind]
