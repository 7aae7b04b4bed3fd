"""Building blocks shared by the Koopman autoencoders."""
import math

import torch
from torch import nn

from koopnet.errors import ArchitectureError, ShapeError
from koopnet.numerics import DTYPE

MIN_RADIUS = 1e-30


def make_activation(name: str) -> nn.Module:
    match name:
        case "tanh":
            return nn.Tanh()
        case "elu":
            return nn.ELU()
        case "relu":
            return nn.ReLU()
        case "sigmoid":
            return nn.Sigmoid()
        case "identity":
            return nn.Identity()
        case _:
            raise ArchitectureError(f"unknown activation {name!r}")


def uniform_(t: torch.Tensor, bound: float, gen: torch.Generator | None, low: float | None = None) -> None:
    with torch.no_grad():
        t.uniform_(-bound if low is None else low, bound, generator=gen)


class Mlp(nn.Module):
    """Affine layers with a hidden activation and a linear output layer."""

    def __init__(self, widths: list[int], activation: str = "tanh"):
        super().__init__()
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ShapeError(f"an MLP needs at least two positive widths, got {widths}")
        self.widths = list(widths)
        self.layers = nn.ModuleList(nn.Linear(a, b, dtype=DTYPE) for a, b in zip(widths[:-1], widths[1:]))
        self.act = make_activation(activation)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for k, layer in enumerate(self.layers):
            x = layer(x)
            if k < len(self.layers) - 1:
                x = self.act(x)
        return x

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        for layer in self.layers:
            bound = 1.0 / math.sqrt(layer.in_features)
            uniform_(layer.weight, bound, gen)
            uniform_(layer.bias, bound, gen)


class LookupTable(nn.Module):
    def __init__(self, count: int, dim: int):
        super().__init__()
        self.count = count
        self.table = nn.Embedding(count, dim, dtype=DTYPE)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        if ids.numel() and int(ids.max()) >= self.count:
            raise ShapeError(f"lookup id {int(ids.max())} out of range for a table of {self.count} rows")
        return self.table(ids)

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        uniform_(self.table.weight, 1.0 / math.sqrt(max(self.count, 1)), gen)


class MpnnLayer(nn.Module):
    """x'_v = update(x_v, AGG_{u->v} message(x_v, x_u, e_uv)); empty neighbourhoods aggregate to 0."""

    def __init__(self, c: int, c_e: int, aggregator: str = "sum", activation: str = "tanh"):
        super().__init__()
        if aggregator not in ("sum", "max"):
            raise ArchitectureError(f"aggregator must be 'sum' or 'max', got {aggregator!r}")
        self.c, self.c_e, self.aggregator = c, c_e, aggregator
        self.message = Mlp([2 * c + c_e, 2 * c, c], activation)
        self.update = Mlp([2 * c, 2 * c, c], activation)

    def forward(self, X: torch.Tensor, E: torch.Tensor, src: torch.Tensor, dst: torch.Tensor) -> torch.Tensor:
        """X (B, n, c); E (arcs, c_e); src/dst (arcs,) node ids."""
        if X.shape[-1] != self.c or E.shape != (src.shape[0], self.c_e):
            raise ShapeError(
                f"MPNN layer expects X (..., n, {self.c}) and E ({src.shape[0]}, {self.c_e}), "
                f"got {tuple(X.shape)} and {tuple(E.shape)}"
            )
        B = X.shape[0]
        inputs = torch.cat([X[:, dst], X[:, src], E.expand(B, -1, -1)], dim=-1)
        messages = self.message(inputs)
        agg = torch.zeros_like(X)
        if self.aggregator == "sum":
            agg = agg.index_add(1, dst, messages)
        else:
            index = dst.view(1, -1, 1).expand(B, -1, self.c)
            agg = agg.scatter_reduce(1, index, messages, reduce="amax", include_self=False)
        return self.update(torch.cat([X, agg], dim=-1))

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        self.message.reset_parameters(gen)
        self.update.reset_parameters(gen)


class SpectralAdvance(nn.Module):
    """Diagonal complex K acting on latent pairs (y_2j, y_2j+1) as a_j + i b_j."""

    def __init__(self, h: int):
        super().__init__()
        if h < 2 or h % 2:
            raise ShapeError(f"latent dimension must be even and >= 2, got {h}")
        self.h = h
        self.mu = nn.Parameter(torch.ones(h // 2, dtype=DTYPE))
        self.omega = nn.Parameter(torch.zeros(h // 2, dtype=DTYPE))

    @property
    def eigenvalues(self) -> torch.Tensor:
        return torch.complex(self.mu.detach(), self.omega.detach())

    def forward(self, y: torch.Tensor, t) -> torch.Tensor:
        """y (..., h). Integer t gives (..., h); a 1-D tensor of steps gives (..., len(t), h)."""
        if y.shape[-1] != self.h:
            raise ShapeError(f"latent vector has length {y.shape[-1]}, expected {self.h}")
        steps = torch.as_tensor(t, dtype=DTYPE)
        if steps.ndim > 1 or bool((steps < 0).any()):
            raise ShapeError(f"advance needs non-negative integer steps, got {t}")
        if steps.ndim == 1:
            y = y.unsqueeze(-2)
            steps = steps[:, None]
        pairs = y.reshape(y.shape[:-1] + (self.h // 2, 2))
        a, b = pairs[..., 0], pairs[..., 1]
        # lambda = 0 has no polar form; pin it to a tiny radius at angle 0 so gradients stay finite
        sq = self.mu ** 2 + self.omega ** 2
        zero = sq < MIN_RADIUS ** 2
        radius = torch.sqrt(sq.clamp_min(MIN_RADIUS ** 2))
        angle = torch.atan2(torch.where(zero, torch.zeros_like(self.omega), self.omega),
                            torch.where(zero, torch.ones_like(self.mu), self.mu))
        scale = radius ** steps
        cos, sin = torch.cos(steps * angle), torch.sin(steps * angle)
        re = scale * (a * cos - b * sin)
        im = scale * (a * sin + b * cos)
        return torch.stack([re, im], dim=-1).reshape(re.shape[:-1] + (self.h,))

    def reset_parameters(self, gen: torch.Generator | None = None) -> None:
        bound = 1.0 / math.sqrt(self.h // 2)
        uniform_(self.mu, 1.0, gen, low=1.0 - bound)
        uniform_(self.omega, bound, gen)
