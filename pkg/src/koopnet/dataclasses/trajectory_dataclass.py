import csv
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from koopnet.dataclasses.base_dataclass import Base
from koopnet.dataclasses.graph_dataclass import Graph
from koopnet.errors import FormatError, GraphMismatchError, ShapeError

log = logging.getLogger(__name__)

KDYN_MAGIC = b"KDYN"
KDYN_VERSION = 1
KDYN_HEADER = struct.Struct("<4sIIIId")
SPLITS = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class Trajectory(Base):
    graph: Graph
    dt: float
    states: np.ndarray  # (T+1, n)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[0] < 2 or states.shape[1] != self.graph.n:
            raise ShapeError(f"trajectory states must be (T+1 >= 2, n={self.graph.n}), got {states.shape}")
        self.check_fields(states=states)
        object.__setattr__(self, "states", states)

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1


def split_sizes(count: int, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)) -> tuple[int, int, int]:
    total = sum(fractions)
    val = int(round(count * fractions[1] / total))
    test = int(round(count * fractions[2] / total))
    return count - val - test, val, test


def contiguous_splits(count: int, fractions=(0.8, 0.1, 0.1)) -> dict[str, np.ndarray]:
    n_train, n_val, n_test = split_sizes(count, fractions)
    idx = np.arange(count)
    return {
        "train": idx[:n_train],
        "val": idx[n_train:n_train + n_val],
        "test": idx[n_train + n_val:],
    }


@dataclass(eq=False)
class TrajectoryDataset(Base):
    """S trajectories on one shared graph, with train/val/test bookkeeping.

    `losses` is only present for parameter-trajectory datasets (one task loss per snapshot).
    """

    graph: Graph
    dt: float
    states: np.ndarray  # (S, T+1, n)
    splits: dict[str, np.ndarray]
    manifest: dict = field(default_factory=dict)
    losses: np.ndarray | None = None  # (S, T+1)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.states.ndim != 3 or self.states.shape[1] < 2 or self.states.shape[2] != self.graph.n:
            raise ShapeError(f"dataset states must be (S, T+1 >= 2, n={self.graph.n}), got {self.states.shape}")
        self.check_fields(states=self.states)
        self.splits = {k: np.asarray(self.splits.get(k, []), dtype=np.int64) for k in SPLITS}
        joined = np.sort(np.concatenate([self.splits[k] for k in SPLITS]))
        if not np.array_equal(joined, np.arange(self.S)):
            raise ShapeError("splits must be disjoint and cover every trajectory exactly once")
        if self.losses is not None:
            self.losses = np.asarray(self.losses, dtype=np.float64)
            if self.losses.shape != self.states.shape[:2]:
                raise ShapeError(f"losses must be (S, T+1) = {self.states.shape[:2]}, got {self.losses.shape}")

    @property
    def S(self) -> int:
        return self.states.shape[0]

    @property
    def T(self) -> int:
        return self.states.shape[1] - 1

    @property
    def n(self) -> int:
        return self.graph.n

    def split(self, name: str) -> np.ndarray:
        return self.states[self.splits[name]]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(graph=self.graph, dt=self.dt, states=self.states[i])

    def __iter__(self):
        return (self.trajectory(i) for i in range(self.S))

    def split_manifest(self) -> dict:
        return {k: [int(i) for i in v] for k, v in self.splits.items()}

    # KDYN v1 + graph sidecar + manifest
    def save(self, directory: str | os.PathLike, name: str, extra_manifest: dict | None = None) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "kdyn": directory / f"{name}.kdyn",
            "graph": directory / "graph.json",
            "manifest": directory / "manifest.json",
        }
        write_kdyn(paths["kdyn"], self.states, self.dt)
        self.graph.save(paths["graph"])
        manifest = dict(self.manifest)
        manifest.update(extra_manifest or {})
        manifest.update({
            "name": name,
            "format": "KDYN",
            "version": KDYN_VERSION,
            "splits": self.split_manifest(),
            "graph_hash": self.graph.graph_hash,
            "dt": self.dt,
            "S": self.S,
            "T": self.T,
            "n": self.n,
        })
        if self.losses is not None:
            paths["losses"] = directory / f"{name}.loss.kdyn"
            write_kdyn(paths["losses"], self.losses[:, :, None], self.dt)
            manifest["losses"] = paths["losses"].name
        self.write_json(paths["manifest"], manifest)
        log.info("wrote dataset %s (%d trajectories, T=%d, n=%d)", paths["kdyn"], self.S, self.T, self.n)
        return paths

    @classmethod
    def load(cls, directory: str | os.PathLike, name: str | None = None) -> "TrajectoryDataset":
        directory = Path(directory)
        manifest = cls.read_json(directory / "manifest.json")
        name = name or manifest.get("name")
        graph = Graph.load(directory / "graph.json")
        if manifest.get("graph_hash") not in (None, graph.graph_hash):
            raise GraphMismatchError(manifest["graph_hash"], graph.graph_hash, what="dataset graph")
        states, dt = read_kdyn(directory / f"{name}.kdyn")
        losses = None
        if "losses" in manifest:
            loss_states, _ = read_kdyn(directory / manifest["losses"])
            losses = loss_states[:, :, 0]
        splits = {k: np.asarray(v, dtype=np.int64) for k, v in manifest.get("splits", {}).items()}
        return cls(graph=graph, dt=dt, states=states, splits=splits, manifest=manifest, losses=losses)

    def export_csv(self, path: str | os.PathLike) -> None:
        """One row per (sample, time) in that order; columns node_0..node_{n-1}."""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow([f"node_{u}" for u in range(self.n)])
            for row in self.states.reshape(-1, self.n):
                writer.writerow([repr(float(v)) for v in row])


def write_kdyn(path: str | os.PathLike, states: np.ndarray, dt: float) -> None:
    states = np.ascontiguousarray(states, dtype="<f8")
    if states.ndim != 3:
        raise ShapeError(f"KDYN payload must be (S, T+1, n), got {states.shape}")
    S, steps, n = states.shape
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(KDYN_HEADER.pack(KDYN_MAGIC, KDYN_VERSION, n, steps, S, float(dt)))
        f.write(states.tobytes(order="C"))


def read_kdyn(path: str | os.PathLike) -> tuple[np.ndarray, float]:
    p = Path(path)
    if not p.exists():
        raise FormatError(f"missing file: {p}")
    raw = p.read_bytes()
    if len(raw) < KDYN_HEADER.size:
        raise FormatError(f"{p}: truncated KDYN header")
    magic, version, n, steps, S, dt = KDYN_HEADER.unpack_from(raw)
    if magic != KDYN_MAGIC:
        raise FormatError(f"{p}: bad magic {magic!r}")
    if version != KDYN_VERSION:
        raise FormatError(f"{p}: unsupported KDYN version {version}")
    expected = KDYN_HEADER.size + 8 * S * steps * n
    if len(raw) != expected:
        raise FormatError(f"{p}: expected {expected} bytes for S={S}, T+1={steps}, n={n}, found {len(raw)}")
    states = np.frombuffer(raw, dtype="<f8", offset=KDYN_HEADER.size).reshape(S, steps, n).astype(np.float64)
    return states, dt
