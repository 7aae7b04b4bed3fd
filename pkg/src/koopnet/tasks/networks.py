"""Small task networks whose parameter vectors form the training-dynamics datasets."""
import logging
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from koopnet.errors import ArchitectureError, ShapeError
from koopnet.numerics import DTYPE, check_finite
from koopnet.tasks.specs import ArchSpec, TaskSpec
from koopnet.tasks.task_data import TaskData

log = logging.getLogger(__name__)

PARAM_BAND = (50, 300)

INPUT_SHAPE = {
    "linear_regression": None,  # n_features
    "wine": (13,),
    "digits": (1, 8, 8),
    "de_solver": (1,),
}
OUTPUT_DIM = {"linear_regression": 1, "wine": 3, "digits": 2, "de_solver": 1}

DEFAULT_HIDDEN = {
    ("fc2", "wine"): (6,),
    ("fc2", "linear_regression"): (6,),
    ("fc2", "de_solver"): (20,),
    ("fc2", "digits"): (3,),
    ("fc3", "wine"): (8, 6),
    ("fc3", "linear_regression"): (4, 4),
    ("fc3", "de_solver"): (10, 10),
    ("fc3", "digits"): (3, 3),
    ("conv1_fc2", "digits"): (6,),
}
DENSE_HIDDEN_LAYERS = {"fc1": 0, "fc2": 1, "fc3": 2, "conv1_fc2": 1, "conv2_fc1": 0}
DEFAULT_CHANNELS = {"conv1_fc2": (2,), "conv2_fc1": (4, 8)}
CONV_KERNELS = {"conv1_fc2": (3,), "conv2_fc1": (3, 2)}
POOL = 2


def make_activation(arch: ArchSpec) -> nn.Module:
    match arch.activation:
        case "elu":
            return nn.ELU(alpha=arch.elu_alpha)
        case "relu":
            return nn.ReLU()
        case "leaky_relu":
            return nn.LeakyReLU(negative_slope=arch.leaky_slope)
        case "sigmoid":
            return nn.Sigmoid()
        case "tanh":
            return nn.Tanh()
        case _:
            raise ArchitectureError(f"unknown activation {arch.activation!r}")


def _pool(arch: ArchSpec) -> nn.Module:
    return nn.AvgPool2d(POOL) if arch.pooling == "avg" else nn.MaxPool2d(POOL)


@dataclass(frozen=True)
class ParamLayer:
    """Bookkeeping for one weighted layer, used to derive the parameter graph.

    `weight` and `bias` hold global indices into the flat parameter vector in the weight's own
    shape. `in_units` maps each input feature of a dense layer to the unit of the previous
    weighted layer that produced it (None for the first layer).
    """

    name: str
    kind: str  # "linear" | "conv"
    weight: np.ndarray
    bias: np.ndarray
    in_units: np.ndarray | None

    @property
    def out_units(self) -> int:
        return self.weight.shape[0]

    def feeding(self, unit: int) -> np.ndarray:
        return self.weight[unit].ravel()

    def reading(self, unit: int) -> np.ndarray:
        if self.kind == "conv":
            return self.weight[:, unit].ravel()
        return self.weight[:, self.in_units == unit].ravel()


class TaskNetwork(nn.Module):
    def __init__(self, arch: ArchSpec, task: TaskSpec, layers: "OrderedDict[str, nn.Module]"):
        super().__init__()
        self.arch = arch
        self.task = task
        self.body = nn.Sequential(layers)
        self.to(DTYPE)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x)

    @property
    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    @property
    def input_shape(self) -> tuple[int, ...]:
        shape = INPUT_SHAPE[self.task.kind]
        return (self.task.n_features,) if shape is None else shape

    def layout(self) -> list[ParamLayer]:
        offsets = {}
        offset = 0
        for name, p in self.named_parameters():
            offsets[name] = np.arange(offset, offset + p.numel()).reshape(tuple(p.shape))
            offset += p.numel()

        out = []
        dummy = torch.zeros((1,) + self.input_shape, dtype=DTYPE)
        prev_units = None
        with torch.no_grad():
            for name, module in self.body.named_children():
                if isinstance(module, (nn.Linear, nn.Conv2d)):
                    kind = "linear" if isinstance(module, nn.Linear) else "conv"
                    in_units = None
                    if kind == "linear" and prev_units is not None:
                        in_units = prev_units
                    out.append(ParamLayer(
                        name=name,
                        kind=kind,
                        weight=offsets[f"body.{name}.weight"],
                        bias=offsets[f"body.{name}.bias"],
                        in_units=in_units,
                    ))
                dummy = module(dummy)
                if isinstance(module, nn.Linear):
                    prev_units = np.arange(dummy.shape[-1])
                elif isinstance(module, nn.Flatten) and out:
                    # flattened (C, H, W): feature f came from channel f // (H*W)
                    channels = out[-1].out_units
                    prev_units = np.arange(dummy.shape[-1]) // (dummy.shape[-1] // channels)
        return out


def build_network(arch: ArchSpec, task: TaskSpec) -> TaskNetwork:
    if arch.is_conv and task.kind != "digits":
        raise ArchitectureError(f"{arch.kind} needs image inputs; it cannot run the {task.kind} task")
    shape = INPUT_SHAPE[task.kind]
    in_dim = task.n_features if shape is None else int(np.prod(shape))
    out_dim = OUTPUT_DIM[task.kind]

    layers: OrderedDict[str, nn.Module] = OrderedDict()
    if arch.is_conv:
        channels = arch.channels or DEFAULT_CHANNELS[arch.kind]
        kernels = CONV_KERNELS[arch.kind]
        if len(channels) != len(kernels):
            raise ArchitectureError(f"{arch.kind} takes {len(kernels)} channel widths, got {channels}")
        c_in, side = 1, 8
        for i, (c_out, k) in enumerate(zip(channels, kernels)):
            side = (side - k + 1) // POOL
            if side < 1:
                raise ArchitectureError(f"{arch.kind}: feature map vanishes after conv {i}")
            layers[f"conv{i}"] = nn.Conv2d(c_in, c_out, k)
            layers[f"conv{i}_act"] = make_activation(arch)
            layers[f"pool{i}"] = _pool(arch)
            c_in = c_out
        layers["flatten"] = nn.Flatten()
        in_dim = c_in * side * side
    elif len(shape or ()) > 1:
        layers["flatten"] = nn.Flatten()

    depth = DENSE_HIDDEN_LAYERS[arch.kind]
    hidden = arch.hidden if arch.hidden is not None else DEFAULT_HIDDEN.get((arch.kind, task.kind), (6,) * depth)
    if len(hidden) != depth:
        raise ArchitectureError(f"{arch.kind} takes {depth} hidden widths, got {tuple(hidden)}")
    widths = [in_dim, *hidden, out_dim]
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        layers[f"fc{i}"] = nn.Linear(a, b)
        if i < len(widths) - 2:
            layers[f"fc{i}_act"] = make_activation(arch)

    net = TaskNetwork(arch, task, layers)
    lo, hi = PARAM_BAND
    if not lo <= net.num_parameters <= hi:
        log.warning(
            "%s on %s has %d parameters, outside the %d-%d band",
            arch.kind, task.kind, net.num_parameters, lo, hi,
        )
    return net


def flatten(net: nn.Module) -> np.ndarray:
    """Layer-major, row-major within each weight, weight before bias."""
    return parameters_to_vector(net.parameters()).detach().numpy().copy()


def load_flat(net: nn.Module, params) -> None:
    vec = torch.as_tensor(np.asarray(params, dtype=np.float64), dtype=DTYPE)
    if vec.numel() != sum(p.numel() for p in net.parameters()):
        raise ShapeError(f"flat vector has {vec.numel()} entries, network has "
                         f"{sum(p.numel() for p in net.parameters())} parameters")
    with torch.no_grad():
        vector_to_parameters(vec, net.parameters())


def unflatten(net: nn.Module, params) -> dict[str, torch.Tensor]:
    vec = torch.as_tensor(np.asarray(params, dtype=np.float64), dtype=DTYPE)
    out, offset = {}, 0
    for name, p in net.named_parameters():
        out[name] = vec[offset:offset + p.numel()].reshape(p.shape)
        offset += p.numel()
    if offset != vec.numel():
        raise ShapeError(f"flat vector has {vec.numel()} entries, network has {offset} parameters")
    return out


def flattening_order(net: nn.Module) -> list[dict]:
    order, offset = [], 0
    for name, p in net.named_parameters():
        order.append({"name": name, "shape": list(p.shape), "offset": offset})
        offset += p.numel()
    return order


def task_tensors(data: TaskData) -> tuple[torch.Tensor, torch.Tensor]:
    x = torch.as_tensor(data.inputs, dtype=DTYPE)
    if data.kind in ("wine", "digits"):
        y = torch.as_tensor(data.targets, dtype=torch.long)
    else:
        y = torch.as_tensor(data.targets, dtype=DTYPE)
    return x, y


def task_loss(net: nn.Module, kind: str, x: torch.Tensor, y: torch.Tensor, params=None) -> torch.Tensor:
    """Differentiable task loss on one batch; `params` overrides the module's own tensors."""

    def forward(inputs):
        if params is None:
            return net(inputs)
        return torch.func.functional_call(net, params, (inputs,))

    match kind:
        case "linear_regression":
            return F.mse_loss(forward(x), y)
        case "wine" | "digits":
            return F.cross_entropy(forward(x), y)
        case "de_solver":
            # f'(x) - f(x) = g(x) on the collocation points, f(1) = 0
            x = x.detach().clone().requires_grad_(True)
            f = forward(x)
            (df,) = torch.autograd.grad(f.sum(), x, create_graph=True)
            residual = df - f - y
            boundary = forward(torch.ones((1, 1), dtype=DTYPE))
            return residual.pow(2).mean() + boundary.pow(2).sum()
        case _:
            raise ArchitectureError(f"unknown task {kind!r}")


def network_loss(net: nn.Module, params, data: TaskData) -> float:
    """Full-data task loss at a flat parameter vector (None: the network's current values)."""
    if params is not None:
        check_finite("network parameters", params)
        params = unflatten(net, params)
    x, y = task_tensors(data)
    loss = task_loss(net, data.kind, x, y, params=params)
    return float(loss.detach())
