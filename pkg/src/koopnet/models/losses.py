import torch
import torch.nn.functional as F

from koopnet.errors import ShapeError
from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.specs import LossWeights


def loss_total(
    model: KoopmanAutoencoder, batch: torch.Tensor, weights: LossWeights, horizon: int
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Weighted reconstruction, linearity and prediction losses over steps 0..horizon.

    batch is (B, T+1, n). Every advance starts from the encoding of x_0.
    """
    if batch.ndim != 3:
        raise ShapeError(f"loss batch must be (B, T+1, n), got {tuple(batch.shape)}")
    if horizon < 1 or batch.shape[1] < horizon + 1:
        raise ShapeError(f"horizon {horizon} needs trajectories of at least {horizon + 1} states, got {batch.shape[1]}")
    xs = batch[:, : horizon + 1]
    y = model.encode(xs)  # (B, Tp+1, h)
    y_adv = model.advance(y[:, 0], torch.arange(1, horizon + 1))  # (B, Tp, h)

    recon = F.mse_loss(model.decode(y), xs)
    linear = F.mse_loss(y[:, 1:], y_adv)
    pred = F.mse_loss(model.decode(y_adv), xs[:, 1:])
    total = weights.recon * recon + weights.linear * linear + weights.pred * pred
    return total, {"recon": recon, "linear": linear, "pred": pred}
