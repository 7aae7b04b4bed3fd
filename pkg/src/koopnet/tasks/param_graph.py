import logging

import numpy as np

from koopnet.dataclasses.graph_dataclass import Graph
from koopnet.errors import ArchitectureError
from koopnet.tasks.networks import TaskNetwork, build_network
from koopnet.tasks.specs import ArchSpec, TaskSpec

log = logging.getLogger(__name__)

EDGE_RULES = ("bias", "chain")


def _pairs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa, bb = np.meshgrid(a, b, indexing="ij")
    return np.stack([aa.ravel(), bb.ravel()], axis=1)


def network_graph(net: TaskNetwork, rules=EDGE_RULES) -> Graph:
    """Undirected graph over the flat parameters of `net`.

    "bias":  every weight <-> the bias of the unit (or conv channel) it feeds.
    "chain": every weight feeding unit j <-> every next-layer weight reading unit j.
    """
    unknown = set(rules) - set(EDGE_RULES)
    if unknown:
        raise ArchitectureError(f"unknown parameter-graph rules {sorted(unknown)}; known: {list(EDGE_RULES)}")
    layers = net.layout()
    blocks = []
    for k, layer in enumerate(layers):
        for unit in range(layer.out_units):
            feeding = layer.feeding(unit)
            if "bias" in rules:
                blocks.append(_pairs(feeding, layer.bias[unit:unit + 1]))
            if "chain" in rules and k + 1 < len(layers):
                blocks.append(_pairs(feeding, layers[k + 1].reading(unit)))
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    graph = Graph.from_edges(net.num_parameters, edges)
    log.debug("parameter graph for %s: %d nodes, %d edges", net.arch.kind, graph.n, graph.num_arcs // 2)
    return graph


def param_graph(arch: ArchSpec, task: TaskSpec, rules=EDGE_RULES) -> Graph:
    return network_graph(build_network(arch, task), rules)
