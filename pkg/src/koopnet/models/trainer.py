import copy
import logging
from dataclasses import dataclass, field

import torch
from tqdm import tqdm

from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset
from koopnet.errors import GraphMismatchError, ShapeError, TrainingError
from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.losses import loss_total
from koopnet.models.specs import TrainConfig
from koopnet.numerics import DTYPE

log = logging.getLogger(__name__)

COMPONENTS = ("total", "recon", "linear", "pred")


@dataclass
class TrainResult:
    model: KoopmanAutoencoder
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val: float = float("inf")

    @property
    def final(self) -> dict:
        return self.history[-1] if self.history else {}


def check_compatible(model: KoopmanAutoencoder, dataset: TrajectoryDataset) -> None:
    graph = getattr(model, "graph", None)
    if graph is not None and graph.graph_hash != dataset.graph.graph_hash:
        raise GraphMismatchError(graph.graph_hash, dataset.graph.graph_hash, what="model/dataset graph")
    if model.n != dataset.n:
        raise ShapeError(f"model is built for {model.n} nodes, dataset has {dataset.n}")


@torch.no_grad()
def evaluate_loss(model, states: torch.Tensor, config: TrainConfig, horizon: int) -> dict[str, float]:
    sums = dict.fromkeys(COMPONENTS, 0.0)
    for start in range(0, states.shape[0], config.batch_size):
        batch = states[start:start + config.batch_size]
        total, parts = loss_total(model, batch, config.weights, horizon)
        sums["total"] += float(total) * batch.shape[0]
        for k, v in parts.items():
            sums[k] += float(v) * batch.shape[0]
    return {k: v / max(states.shape[0], 1) for k, v in sums.items()}


def train(model: KoopmanAutoencoder, dataset: TrajectoryDataset, config: TrainConfig) -> TrainResult:
    """Adam over shuffled mini-batches of the train split; returns the best-validation weights."""
    check_compatible(model, dataset)
    gen = torch.Generator().manual_seed(config.seed)
    model.reset_parameters(gen)
    horizon = config.horizon_for(dataset.T)

    train_states = torch.as_tensor(dataset.split("train"), dtype=DTYPE)
    val_states = torch.as_tensor(dataset.split("val"), dtype=DTYPE)
    if train_states.shape[0] == 0:
        raise TrainingError("the train split is empty")
    if val_states.shape[0] == 0:
        val_states = train_states

    opt = torch.optim.Adam(model.parameters(), lr=config.lr)
    result = TrainResult(model=model)
    best_state = copy.deepcopy(model.state_dict())
    N = train_states.shape[0]

    for epoch in tqdm(range(1, config.epochs + 1), desc=f"train {model.kind}", disable=config.quiet):
        model.train()
        sums = dict.fromkeys(COMPONENTS, 0.0)
        order = torch.randperm(N, generator=gen)
        for start in range(0, N, config.batch_size):
            idx = order[start:start + config.batch_size]
            opt.zero_grad()
            total, parts = loss_total(model, train_states[idx], config.weights, horizon)
            if not torch.isfinite(total):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch of trajectories {idx.tolist()}: "
                    + ", ".join(f"{k}={float(v):.6g}" for k, v in parts.items())
                )
            total.backward()
            opt.step()
            sums["total"] += float(total) * len(idx)
            for k, v in parts.items():
                sums[k] += float(v) * len(idx)

        model.eval()
        row = {"epoch": epoch, **{k: v / N for k, v in sums.items()}}
        row["val"] = evaluate_loss(model, val_states, config, horizon)["total"]
        result.history.append(row)
        if row["val"] < result.best_val:
            result.best_val, result.best_epoch = row["val"], epoch
            best_state = copy.deepcopy(model.state_dict())
            log.debug("new best validation loss %.6g at epoch %d", row["val"], epoch)
        level = logging.INFO if epoch % 10 == 0 else logging.DEBUG
        log.log(level, "epoch %d: total=%.6g recon=%.6g linear=%.6g pred=%.6g val=%.6g",
                epoch, row["total"], row["recon"], row["linear"], row["pred"], row["val"])

    model.load_state_dict(best_state)
    log.info("trained %s for %d epochs; best validation %.6g at epoch %d",
             model.kind, config.epochs, result.best_val, result.best_epoch)
    return result
