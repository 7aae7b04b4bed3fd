"""The network dynamical systems.

Every system has the form dx_i/dt = f(x_i) + sum_{j->i} A_ij g(x_i, x_j). States may carry
leading batch dimensions; the node axis is last.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from koopnet.dataclasses.graph_dataclass import Graph
from koopnet.errors import DynamicsError, ShapeError


class DynamicsKind(str, Enum):
    REGULATORY = "regulatory"
    NEURONAL = "neuronal"
    POPULATION = "population"
    EPIDEMIC = "epidemic"
    MUTUALISTIC = "mutualistic"
    LINEAR_TEST = "linear_test"


FRACTIONAL = {DynamicsKind.REGULATORY, DynamicsKind.POPULATION}

DEFAULT_DT = {
    DynamicsKind.REGULATORY: 0.01,
    DynamicsKind.POPULATION: 0.01,
    DynamicsKind.NEURONAL: 0.05,
    DynamicsKind.EPIDEMIC: 0.05,
    DynamicsKind.MUTUALISTIC: 0.05,
    DynamicsKind.LINEAR_TEST: 0.05,
}

DEFAULT_T = {
    DynamicsKind.REGULATORY: 200,
    DynamicsKind.POPULATION: 200,
    DynamicsKind.NEURONAL: 100,
    DynamicsKind.EPIDEMIC: 50,
    DynamicsKind.MUTUALISTIC: 100,
    DynamicsKind.LINEAR_TEST: 50,
}


@dataclass(frozen=True)
class DynamicsModel:
    kind: DynamicsKind
    b: float = 1.0
    c: float = 1.0
    decay: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DynamicsKind(self.kind))
        if self.kind is DynamicsKind.NEURONAL and not (
            np.isfinite(self.b) and np.isfinite(self.c) and self.b > 0 and self.c > 0
        ):
            raise DynamicsError(f"neuronal constants must be finite and positive, got B={self.b}, C={self.c}")

    @property
    def fractional(self) -> bool:
        return self.kind in FRACTIONAL

    @property
    def default_dt(self) -> float:
        return DEFAULT_DT[self.kind]

    @property
    def default_T(self) -> int:
        return DEFAULT_T[self.kind]

    def describe(self) -> dict:
        doc = {"model": self.kind.value}
        if self.kind is DynamicsKind.NEURONAL:
            doc.update(b=self.b, c=self.c)
        if self.kind is DynamicsKind.LINEAR_TEST:
            doc.update(decay=self.decay)
        return doc


def _check_non_negative(model: DynamicsModel, x: np.ndarray) -> None:
    if np.any(x < 0):
        idx = np.argwhere(x < 0)[0]
        raise DynamicsError(
            f"{model.kind.value}: negative state {x[tuple(idx)]:.6g} at node {int(idx[-1])} "
            "cannot enter a fractional power"
        )


def _neighbor_sum(graph: Graph, values: np.ndarray) -> np.ndarray:
    # sum over in-neighbours j -> i of A_ij * values_j
    return values @ graph.adjacency.T


def derivative(model: DynamicsModel, graph: Graph, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != graph.n:
        raise ShapeError(f"state has {x.shape[-1]} nodes, graph has {graph.n}")

    match model.kind:
        case DynamicsKind.REGULATORY:
            _check_non_negative(model, x)
            xp = x ** 0.2
            return -(x ** 0.4) + _neighbor_sum(graph, xp / (1.0 + xp))
        case DynamicsKind.NEURONAL:
            return -model.b * x + model.c * np.tanh(x) * _neighbor_sum(graph, np.tanh(x))
        case DynamicsKind.POPULATION:
            _check_non_negative(model, x)
            return -(x ** 0.5) + _neighbor_sum(graph, x ** 0.2)
        case DynamicsKind.EPIDEMIC:
            return -x + (1.0 - x) * _neighbor_sum(graph, x)
        case DynamicsKind.MUTUALISTIC:
            return x * (1.0 - x ** 2) + x * _neighbor_sum(graph, x / (1.0 + x))
        case DynamicsKind.LINEAR_TEST:
            return -model.decay * x
        case _:
            raise DynamicsError(f"unknown dynamics model {model.kind!r}")
