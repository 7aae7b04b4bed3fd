from dataclasses import dataclass, field

import numpy as np

from koopnet.dataclasses.base_dataclass import Base
from koopnet.errors import ShapeError


@dataclass(eq=False)
class ParamTrajectory(Base):
    """Flattened parameter snapshots of one training run.

    Row 0 is the initialisation; row k is the state after 10·k epochs.
    """

    params: np.ndarray  # (K+1, P)
    losses: np.ndarray  # (K+1,)
    arch: dict
    task: dict
    optimizer: dict
    order: list[dict]
    seed: int
    epochs: int
    meta_data: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        self.losses = np.asarray(self.losses, dtype=np.float64)
        if self.params.ndim != 2 or self.losses.shape != (self.params.shape[0],):
            raise ShapeError(
                f"parameter snapshots {self.params.shape} and losses {self.losses.shape} disagree"
            )
        size = sum(int(np.prod(item["shape"], dtype=np.int64)) for item in self.order)
        if size != self.params.shape[1]:
            raise ShapeError(f"flattening order covers {size} parameters, snapshots have {self.params.shape[1]}")
        self.check_fields(params=self.params, losses=self.losses)

    @property
    def K(self) -> int:
        return self.params.shape[0] - 1

    @property
    def P(self) -> int:
        return self.params.shape[1]

    @property
    def initial_loss(self) -> float:
        return float(self.losses[0])

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])
