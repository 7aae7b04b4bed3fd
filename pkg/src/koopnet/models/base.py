import numpy as np
import torch
from torch import nn

from koopnet.errors import ShapeError
from koopnet.models.layers import SpectralAdvance
from koopnet.numerics import DTYPE


# Base class for the learned Koopman models
class KoopmanAutoencoder(nn.Module):
    """encode -> SpectralAdvance -> decode.

    Subclasses implement `encode` (..., n) -> (..., h) and `decode` (..., h) -> (..., n) for any
    leading batch shape, `reset_parameters`, and `config`.
    """

    kind: str = ""

    def __init__(self, n: int, latent_dim: int):
        super().__init__()
        self.n = n
        self.latent_dim = latent_dim
        self.K = SpectralAdvance(latent_dim)

    def encode(self, values: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def decode(self, y: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        raise NotImplementedError

    def config(self) -> dict:
        raise NotImplementedError

    def advance(self, y: torch.Tensor, t) -> torch.Tensor:
        return self.K(y, t)

    def _check_values(self, values: torch.Tensor) -> None:
        if values.shape[-1] != self.n:
            raise ShapeError(f"{self.kind} model is built for {self.n} nodes, got values of length {values.shape[-1]}")

    def _check_latent(self, y: torch.Tensor) -> None:
        if y.shape[-1] != self.latent_dim:
            raise ShapeError(f"latent vector has length {y.shape[-1]}, expected {self.latent_dim}")

    def rollout(self, x0: torch.Tensor, T: int) -> torch.Tensor:
        """(..., n) -> (..., T+1, n); row t = decode(K^t encode(x0))."""
        if T < 0:
            raise ShapeError(f"prediction horizon must be non-negative, got T={T}")
        y0 = self.encode(x0)
        return self.decode(self.advance(y0, torch.arange(T + 1)))

    @torch.no_grad()
    def predict_trajectory(self, x0, T: int) -> np.ndarray:
        x0 = torch.as_tensor(np.asarray(x0, dtype=np.float64), dtype=DTYPE)
        return self.rollout(x0, T).numpy()

    def eigenvalues(self) -> np.ndarray:
        return self.K.eigenvalues.numpy()

    @property
    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())
