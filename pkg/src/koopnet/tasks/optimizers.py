from collections.abc import Iterable

import torch

from koopnet.errors import ConfigError
from koopnet.tasks.specs import OptimizerSpec


def build_optimizer(spec: OptimizerSpec, params: Iterable[torch.Tensor]) -> torch.optim.Optimizer:
    """torch.optim with library defaults for every hyperparameter left unset."""
    lr = spec.learning_rate
    match spec.kind:
        case "sgd":
            return torch.optim.SGD(params, lr=lr)
        case "adagrad":
            return torch.optim.Adagrad(params, lr=lr)
        case "adadelta":
            return torch.optim.Adadelta(params, lr=lr, rho=spec.rho)
        case "adam":
            return torch.optim.Adam(params, lr=lr)
        case _:
            raise ConfigError(f"unknown optimizer {spec.kind!r}")
