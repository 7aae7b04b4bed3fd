import json

import numpy as np
import pytest

from koopnet.dataclasses.graph_dataclass import Graph, random_graph
from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset, contiguous_splits
from koopnet.models.specs import ModelSpec, TrainConfig

# column 0 is the class label 1..3, then 13 features
WINE_ROWS_PER_CLASS = (59, 71, 48)


@pytest.fixture
def two_node_graph():
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture
def small_graph():
    return random_graph(6, 8, seed=3)


def write_wine_csv(path):
    """Three classes with features centred on their label; label first."""
    rng = np.random.default_rng(0)
    lines = ["label," + ",".join(f"f{i}" for i in range(13))]
    for label, count in enumerate(WINE_ROWS_PER_CLASS, start=1):
        for _ in range(count):
            features = rng.normal(loc=label, scale=1.0, size=13)
            lines.append(",".join([str(label)] + [repr(float(v)) for v in features]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def wine_csv(tmp_path):
    return write_wine_csv(tmp_path / "wine.csv")


@pytest.fixture
def digits_csv(tmp_path):
    """64 pixel columns (0..16) and the digit label last; 30 zeros, 25 ones, 20 sevens."""
    rng = np.random.default_rng(1)
    lines = []
    for label, count in ((0, 30), (1, 25), (7, 20)):
        for _ in range(count):
            pixels = rng.integers(0, 17, size=64)
            lines.append(",".join(str(int(p)) for p in pixels) + f",{label}")
    path = tmp_path / "digits.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def data_dir(tmp_path, wine_csv, digits_csv, monkeypatch):
    monkeypatch.setenv("KOOPNET_DATA_DIR", str(tmp_path))
    return tmp_path


def linear_dataset(graph: Graph, S: int = 20, T: int = 10, seed: int = 0, rates=None) -> TrajectoryDataset:
    """x_{k+1} = diag(rates) x_k on `graph`; a cheap exactly linear dataset."""
    rng = np.random.default_rng(seed)
    rates = np.linspace(0.95, 0.5, graph.n) if rates is None else np.asarray(rates)
    x0 = rng.uniform(0.0, 1.0, size=(S, graph.n))
    states = x0[:, None, :] * rates[None, None, :] ** np.arange(T + 1)[None, :, None]
    return TrajectoryDataset(
        graph=graph, dt=1.0, states=states, splits=contiguous_splits(S),
        manifest={"kind": "dynamics", "model": "linear_test", "name": "linear"},
    )


@pytest.fixture
def linear_data(small_graph):
    return linear_dataset(small_graph)


@pytest.fixture
def tiny_spec():
    return ModelSpec(kind="kmpnn", latent_dim=4, c=4, c_e=4, global_hidden=8, readout_hidden=4)


@pytest.fixture
def tiny_train():
    return TrainConfig(epochs=3, batch_size=8, lr=1e-3, seed=0, horizon=4, quiet=True)


def write_config(path, doc: dict):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
