import logging

import numpy as np
from tqdm import tqdm

from koopnet.dataclasses.graph_dataclass import random_graph
from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset, contiguous_splits
from koopnet.dynamics.integrator import integrate
from koopnet.dynamics.systems import DynamicsModel
from koopnet.errors import DynamicsError

log = logging.getLogger(__name__)

CHUNK = 500


def generate_dataset(
    model: DynamicsModel,
    n: int,
    m: int,
    S: int,
    T: int,
    dt: float,
    seed: int,
    split_fractions=(0.8, 0.1, 0.1),
    quiet: bool = False,
) -> TrajectoryDataset:
    """S trajectories on one shared G(n, m) graph from uniform [0, 1] initial states."""
    if min(n, S, T) < 1 or dt <= 0:
        raise DynamicsError(f"generate_dataset needs positive n, S, T and dt (got n={n}, S={S}, T={T}, dt={dt})")
    graph_seq, init_seq = np.random.SeedSequence(seed).spawn(2)
    graph = random_graph(n, m, int(graph_seq.generate_state(1)[0]))
    rng = np.random.default_rng(init_seq)
    x0 = rng.uniform(0.0, 1.0, size=(S, n))

    states = np.empty((S, T + 1, n))
    chunks = range(0, S, CHUNK)
    for start in tqdm(chunks, desc=f"simulate {model.kind.value}", disable=quiet or len(chunks) == 1):
        states[start:start + CHUNK] = integrate(model, graph, x0[start:start + CHUNK], T, dt)

    manifest = {
        "kind": "dynamics",
        **model.describe(),
        "n": n,
        "m": m,
        "seed": seed,
        "split_fractions": list(split_fractions),
    }
    dataset = TrajectoryDataset(
        graph=graph, dt=dt, states=states, splits=contiguous_splits(S, split_fractions), manifest=manifest
    )
    log.info(
        "generated %s dataset: %d trajectories, T=%d, dt=%g, graph n=%d arcs=%d",
        model.kind.value, S, T, dt, n, graph.num_arcs,
    )
    return dataset
