import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from koopnet.dataclasses.base_dataclass import Base
from koopnet.errors import FormatError, GraphError

log = logging.getLogger(__name__)

Arc = tuple[int, int, float]


@dataclass(frozen=True, eq=False)
class Graph(Base):
    """Directed arcs over nodes 0..n-1, sorted by (src, dst).

    Bidirectional graphs store every edge as a twin pair of arcs. Immutable once built.
    """

    n: int
    arcs: tuple[Arc, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise GraphError(f"node count must be a positive integer, got {self.n!r}")
        seen = set()
        prev = None
        for arc in self.arcs:
            src, dst, w = arc
            if not (0 <= src < self.n and 0 <= dst < self.n):
                raise GraphError(f"arc {list(arc)}: id out of range for a {self.n}-node graph")
            if src == dst:
                raise GraphError(f"arc {list(arc)}: self-loop")
            if not np.isfinite(w):
                raise GraphError(f"arc {list(arc)}: non-finite weight")
            if (src, dst) in seen:
                raise GraphError(f"arc {list(arc)}: duplicate arc")
            if prev is not None and (src, dst) < prev:
                raise GraphError(f"arc {list(arc)}: arcs must be sorted by (src, dst)")
            seen.add((src, dst))
            prev = (src, dst)

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.arcs == other.arcs

    def __hash__(self):
        return hash((self.n, self.arcs))

    @classmethod
    def from_arcs(cls, n: int, arcs) -> "Graph":
        arcs = sorted((int(s), int(d), float(w)) for s, d, w in arcs)
        return cls(n=int(n), arcs=tuple(arcs))

    @classmethod
    def from_edges(cls, n: int, edges, weight: float = 1.0) -> "Graph":
        """Undirected edges -> twin arcs. Repeated edges collapse to one."""
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            pairs.add((u, v))
            pairs.add((v, u))
        return cls.from_arcs(n, [(u, v, weight) for u, v in pairs])

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    @cached_property
    def src(self) -> np.ndarray:
        return np.array([a[0] for a in self.arcs], dtype=np.int64)

    @cached_property
    def dst(self) -> np.ndarray:
        return np.array([a[1] for a in self.arcs], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([a[2] for a in self.arcs], dtype=np.float64)

    @cached_property
    def in_neighbors(self) -> tuple[np.ndarray, ...]:
        """Per node, the indices of the arcs that end there."""
        buckets = [[] for _ in range(self.n)]
        for k, (_, dst, _) in enumerate(self.arcs):
            buckets[dst].append(k)
        return tuple(np.array(b, dtype=np.int64) for b in buckets)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """A[i, j] = weight of arc j -> i."""
        A = np.zeros((self.n, self.n))
        if self.arcs:
            A[self.dst, self.src] = self.weights
        return A

    def is_bidirectional(self) -> bool:
        lookup = {(s, d): w for s, d, w in self.arcs}
        return all(lookup.get((d, s)) == w for s, d, w in self.arcs)

    def to_document(self) -> dict:
        return {"n": self.n, "arcs": [[s, d, w] for s, d, w in self.arcs]}

    @classmethod
    def from_document(cls, doc) -> "Graph":
        if not isinstance(doc, dict) or set(doc) != {"n", "arcs"}:
            raise FormatError("graph document must be an object with exactly the keys 'n' and 'arcs'")
        n, arcs = doc["n"], doc["arcs"]
        if not isinstance(n, int) or isinstance(n, bool) or not isinstance(arcs, list):
            raise FormatError("graph document: 'n' must be an integer and 'arcs' a list")
        parsed = []
        for arc in arcs:
            if (
                not isinstance(arc, list)
                or len(arc) != 3
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in arc[:2])
                or not isinstance(arc[2], (int, float))
            ):
                raise FormatError(f"graph document: malformed arc {arc!r}")
            parsed.append((arc[0], arc[1], float(arc[2])))
        return cls(n=n, arcs=tuple(parsed))

    @property
    def graph_hash(self) -> str:
        return self.content_hash(self.to_document())

    def save(self, path: str | os.PathLike) -> None:
        self.write_json(path, self.to_document())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Graph":
        return cls.from_document(cls.read_json(path))


def random_graph(n: int, m: int, seed: int) -> Graph:
    """G(n, m): m distinct unordered pairs drawn uniformly, stored as 2m twin arcs."""
    if n < 1 or m < 0:
        raise GraphError(f"random_graph needs n >= 1 and m >= 0, got n={n}, m={m}")
    capacity = n * (n - 1) // 2
    if m > capacity:
        raise GraphError(f"cannot place {m} edges on {n} nodes: capacity is {capacity}")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    picked = rng.choice(capacity, size=m, replace=False)
    graph = Graph.from_edges(n, zip(rows[picked], cols[picked]))
    log.debug("random graph n=%d m=%d seed=%d", n, m, seed)
    return graph


def save_graph(path: str | os.PathLike, graph: Graph) -> None:
    graph.save(path)


def load_graph(path: str | os.PathLike) -> Graph:
    return Graph.load(path)
