from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

ModelKind = Literal["dmd", "edmd", "lusch", "kmpnn"]
MAX_HORIZON = 32


class LossWeights(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    recon: float = Field(1.0, ge=0.0)
    linear: float = Field(1.0, ge=0.0)
    pred: float = Field(1.0, ge=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.recon == self.linear == self.pred == 0.0:
            raise ValueError("at least one loss weight must be positive")
        return self


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: PositiveInt = 200
    batch_size: PositiveInt = 32
    lr: PositiveFloat = 1e-3
    seed: int = 0
    weights: LossWeights = LossWeights()
    horizon: PositiveInt | None = None  # default min(32, T)
    quiet: bool = False

    def horizon_for(self, T: int) -> int:
        return self.horizon if self.horizon is not None else min(MAX_HORIZON, T)


class ModelSpec(BaseModel):
    """Architecture of one model; fitting knobs for the linear baselines live here too."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ModelKind = "kmpnn"
    latent_dim: PositiveInt | None = None
    latent_rule: Literal["power_of_two"] = "power_of_two"
    c: PositiveInt = 16
    c_e: PositiveInt = 16
    global_hidden: PositiveInt = 256
    readout_hidden: PositiveInt = 16
    aggregator: Literal["sum", "max"] = "sum"
    activation: Literal["tanh", "elu", "relu", "sigmoid"] = "tanh"
    lusch_hidden: PositiveInt | None = None
    dmd_rank: PositiveInt | None = None
    edmd_degree: int = Field(2, ge=1, le=3)

    @model_validator(mode="after")
    def _check(self):
        if self.latent_dim is not None and self.latent_dim % 2:
            raise ValueError(f"latent_dim must be even, got {self.latent_dim}")
        if self.c % 2:
            raise ValueError(f"node embedding width c must be even, got {self.c}")
        return self

    def latent_for(self, n: int) -> int:
        if self.latent_dim is not None:
            return self.latent_dim
        return closest_power_of_two_above(n)


def closest_power_of_two_above(n: int) -> int:
    """Smallest power of two strictly greater than n (100 -> 128)."""
    return 1 << max(int(n), 1).bit_length()
