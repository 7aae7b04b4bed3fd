import math

import torch

from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.layers import Mlp


def matched_width(n: int, latent_dim: int, target: int) -> int:
    """Hidden width w whose 3-layer encoder + decoder pair holds about `target` parameters.

    count(w) = 2w^2 + (2n + 2h + 4)w + n + 2h, the last h being the spectral pairs.
    """
    b = 2 * n + 2 * latent_dim + 4
    c0 = n + 2 * latent_dim
    disc = b * b + 8 * max(target - c0, 0)
    return max(1, round((-b + math.sqrt(disc)) / 4))


class LuschModel(KoopmanAutoencoder):
    """Dense autoencoder baseline: encoder n -> w -> w -> h, decoder h -> w -> w -> n."""

    kind = "lusch"

    def __init__(self, n: int, latent_dim: int, hidden: int = 64, activation: str = "tanh"):
        super().__init__(n, latent_dim)
        self.hidden, self.activation = hidden, activation
        self.encoder = Mlp([n, hidden, hidden, latent_dim], activation)
        self.decoder = Mlp([latent_dim, hidden, hidden, n], activation)

    def encode(self, values: torch.Tensor) -> torch.Tensor:
        self._check_values(values)
        return self.encoder(values)

    def decode(self, y: torch.Tensor) -> torch.Tensor:
        self._check_latent(y)
        return self.decoder(y)

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        self.encoder.reset_parameters(gen)
        self.K.reset_parameters(gen)
        self.decoder.reset_parameters(gen)

    def config(self) -> dict:
        return {"n": self.n, "latent_dim": self.latent_dim, "hidden": self.hidden, "activation": self.activation}
