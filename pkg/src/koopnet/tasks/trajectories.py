"""Training runs that record parameter snapshots every 10 epochs."""
import logging

import numpy as np
import torch
from tqdm import tqdm

from koopnet.dataclasses.param_trajectory_dataclass import ParamTrajectory
from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset, contiguous_splits
from koopnet.errors import ConfigError, DivergenceError
from koopnet.tasks.networks import build_network, flatten, flattening_order, network_loss, task_loss, task_tensors
from koopnet.tasks.optimizers import build_optimizer
from koopnet.tasks.param_graph import EDGE_RULES, network_graph
from koopnet.tasks.specs import ArchSpec, OptimizerSpec, TaskSpec
from koopnet.tasks.task_data import TaskData, generate_task_data

log = logging.getLogger(__name__)

SNAPSHOT_EVERY = 10
MAX_ATTEMPTS = 5
INIT_RANGE = (-1.0, 0.1)
PARAM_DT = float(SNAPSHOT_EVERY)


def sub_seed(seed: int, attempt: int) -> int:
    if attempt == 0:
        return seed
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])


def _run(
    task: TaskSpec,
    arch: ArchSpec,
    optimizer: OptimizerSpec,
    epochs: int,
    seed: int,
    data: TaskData,
    init_range: tuple[float, float],
) -> ParamTrajectory:
    gen = torch.Generator().manual_seed(seed)
    net = build_network(arch, task)
    with torch.no_grad():
        for p in net.parameters():
            p.uniform_(init_range[0], init_range[1], generator=gen)
    opt = build_optimizer(optimizer, net.parameters())
    x, y = task_tensors(data)
    N = x.shape[0]

    snapshots = [flatten(net)]
    losses = [network_loss(net, None, data)]
    for epoch in range(1, epochs + 1):
        order = torch.randperm(N, generator=gen) if optimizer.shuffle else torch.arange(N)
        for start in range(0, N, optimizer.batch_size):
            idx = order[start:start + optimizer.batch_size]
            opt.zero_grad()
            loss = task_loss(net, data.kind, x[idx], y[idx])
            if not torch.isfinite(loss):
                raise DivergenceError(f"loss became {float(loss)} at epoch {epoch}, batch starting {start}")
            loss.backward()
            opt.step()
        if epoch % SNAPSHOT_EVERY == 0:
            full = network_loss(net, None, data)
            params = flatten(net)
            if not (np.isfinite(full) and np.all(np.isfinite(params))):
                raise DivergenceError(f"non-finite parameters or loss at epoch {epoch}")
            snapshots.append(params)
            losses.append(full)

    return ParamTrajectory(
        params=np.stack(snapshots),
        losses=np.asarray(losses),
        arch=arch.model_dump(mode="json"),
        task=task.model_dump(mode="json"),
        optimizer=optimizer.model_dump(mode="json"),
        order=flattening_order(net),
        seed=seed,
        epochs=epochs,
    )


def train_collect(
    task: TaskSpec,
    arch: ArchSpec,
    optimizer: OptimizerSpec,
    epochs: int,
    seed: int,
    data: TaskData | None = None,
    init_range: tuple[float, float] = INIT_RANGE,
) -> ParamTrajectory:
    if epochs < SNAPSHOT_EVERY or epochs % SNAPSHOT_EVERY:
        raise ConfigError(f"epochs must be a positive multiple of {SNAPSHOT_EVERY}, got {epochs}")
    if data is None:
        data = generate_task_data(task, seed)

    for attempt in range(MAX_ATTEMPTS):
        run_seed = sub_seed(seed, attempt)
        try:
            traj = _run(task, arch, optimizer, epochs, run_seed, data, init_range)
        except DivergenceError as e:
            log.warning("trajectory seed %d diverged (%s); regenerating, attempt %d", run_seed, e, attempt + 1)
            continue
        traj.meta_data = {"requested_seed": seed, "attempts": attempt + 1}
        return traj
    raise DivergenceError(f"training diverged for {MAX_ATTEMPTS} consecutive sub-seeds of seed {seed}")


def generate_param_dataset(
    task: TaskSpec,
    arch: ArchSpec,
    optimizer: OptimizerSpec,
    epochs: int,
    S: int,
    seed: int,
    split_fractions=(0.8, 0.1, 0.1),
    init_range: tuple[float, float] = INIT_RANGE,
    edge_rules=EDGE_RULES,
    quiet: bool = False,
) -> TrajectoryDataset:
    """S training trajectories of one network on one shared task dataset."""
    if S < 1:
        raise ConfigError(f"need at least one trajectory, got S={S}")
    data_seq, run_seq = np.random.SeedSequence(seed).spawn(2)
    data_seed = int(data_seq.generate_state(1)[0])
    run_seeds = [int(s) for s in run_seq.generate_state(S)]
    data = generate_task_data(task, data_seed)

    runs = [
        train_collect(task, arch, optimizer, epochs, s, data=data, init_range=init_range)
        for s in tqdm(run_seeds, desc=f"train {arch.kind}/{task.kind}", disable=quiet)
    ]
    net = build_network(arch, task)
    graph = network_graph(net, edge_rules)
    manifest = {
        "kind": "nn_training",
        "task": task.model_dump(mode="json"),
        "arch": arch.model_dump(mode="json"),
        "optimizer": optimizer.model_dump(mode="json"),
        "epochs": epochs,
        "seed": seed,
        "data_seed": data_seed,
        "run_seeds": [r.seed for r in runs],
        "init_range": list(init_range),
        "edge_rules": list(edge_rules),
        "flattening_order": runs[0].order,
        "split_fractions": list(split_fractions),
    }
    dataset = TrajectoryDataset(
        graph=graph,
        dt=PARAM_DT,
        states=np.stack([r.params for r in runs]),
        splits=contiguous_splits(S, split_fractions),
        manifest=manifest,
        losses=np.stack([r.losses for r in runs]),
    )
    log.info(
        "generated %d %s/%s/%s trajectories: %d snapshots of %d parameters",
        S, arch.kind, task.kind, optimizer.kind, dataset.T + 1, dataset.n,
    )
    return dataset
