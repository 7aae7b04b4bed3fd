"""Message-passing Koopman autoencoder over a fixed graph."""
import torch

from koopnet.dataclasses.graph_dataclass import Graph
from koopnet.errors import ShapeError
from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.layers import LookupTable, Mlp, MpnnLayer


class KmpnnModel(KoopmanAutoencoder):
    kind = "kmpnn"

    def __init__(
        self,
        graph: Graph,
        latent_dim: int,
        c: int = 16,
        c_e: int = 16,
        global_hidden: int = 256,
        readout_hidden: int = 16,
        aggregator: str = "sum",
        activation: str = "tanh",
    ):
        super().__init__(graph.n, latent_dim)
        if c % 2:
            raise ShapeError(f"node embedding width c must be even, got {c}")
        self.graph = graph
        self.c, self.c_e = c, c_e
        self.global_hidden, self.readout_hidden = global_hidden, readout_hidden
        self.aggregator, self.activation = aggregator, activation
        self.register_buffer("src", torch.as_tensor(graph.src, dtype=torch.long), persistent=False)
        self.register_buffer("dst", torch.as_tensor(graph.dst, dtype=torch.long), persistent=False)
        self.register_buffer("node_ids", torch.arange(graph.n), persistent=False)
        self.register_buffer("arc_ids", torch.arange(graph.num_arcs), persistent=False)

        n = graph.n
        self.node_embedding = LookupTable(n, c // 2)
        self.edge_embedding = LookupTable(graph.num_arcs, c_e)
        self.value_encoder = Mlp([1, c, c // 2], activation)
        self.encoder_layers = torch.nn.ModuleList(MpnnLayer(c, c_e, aggregator, activation) for _ in range(2))
        self.phi = Mlp([n * c, global_hidden, latent_dim], activation)
        self.phi_inv = Mlp([latent_dim, global_hidden, n * c], activation)
        self.decoder_layers = torch.nn.ModuleList(MpnnLayer(c, c_e, aggregator, activation) for _ in range(2))
        self.readout = Mlp([c, readout_hidden, 1], activation)

    def embed(self, values: torch.Tensor) -> torch.Tensor:
        """(B, n) -> (B, n, c): row u is sigma_N(u) || w(v_u)."""
        ids = self.node_embedding(self.node_ids).expand(values.shape[0], -1, -1)
        return torch.cat([ids, self.value_encoder(values.unsqueeze(-1))], dim=-1)

    def encode(self, values: torch.Tensor) -> torch.Tensor:
        self._check_values(values)
        lead = values.shape[:-1]
        X = self.embed(values.reshape(-1, self.n))
        E = self.edge_embedding(self.arc_ids)
        for layer in self.encoder_layers:
            X = layer(X, E, self.src, self.dst)
        y = self.phi(X.reshape(X.shape[0], -1))
        return y.reshape(lead + (self.latent_dim,))

    def decode(self, y: torch.Tensor) -> torch.Tensor:
        self._check_latent(y)
        lead = y.shape[:-1]
        X = self.phi_inv(y.reshape(-1, self.latent_dim)).reshape(-1, self.n, self.c)
        E = self.edge_embedding(self.arc_ids)
        for layer in self.decoder_layers:
            X = layer(X, E, self.src, self.dst)
        return self.readout(X).squeeze(-1).reshape(lead + (self.n,))

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        for module in (
            self.node_embedding,
            self.edge_embedding,
            self.value_encoder,
            *self.encoder_layers,
            self.phi,
            self.K,
            self.phi_inv,
            *self.decoder_layers,
            self.readout,
        ):
            module.reset_parameters(gen)

    def config(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "c": self.c,
            "c_e": self.c_e,
            "global_hidden": self.global_hidden,
            "readout_hidden": self.readout_hidden,
            "aggregator": self.aggregator,
            "activation": self.activation,
        }
