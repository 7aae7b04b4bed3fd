import numpy as np

from koopnet.dataclasses.graph_dataclass import Graph
from koopnet.dataclasses.trajectory_dataclass import Trajectory
from koopnet.dynamics.systems import DynamicsModel, derivative
from koopnet.errors import IntegrationError


def step_trapezoidal(model: DynamicsModel, graph: Graph, x, dt: float) -> np.ndarray:
    """Explicit trapezoidal rule (Heun): x + dt/2 (f(x) + f(x + dt f(x)))."""
    if dt < 0:
        raise IntegrationError(f"time step must be non-negative, got dt={dt}")
    x = np.asarray(x, dtype=np.float64)
    f0 = derivative(model, graph, x)
    predictor = x + dt * f0
    if model.fractional:
        predictor = np.maximum(predictor, 0.0)
    f1 = derivative(model, graph, predictor)
    nxt = x + 0.5 * dt * (f0 + f1)
    if model.fractional:
        nxt = np.maximum(nxt, 0.0)
    if not np.all(np.isfinite(nxt)):
        bad = np.argwhere(~np.isfinite(nxt))[0]
        raise IntegrationError(
            f"{model.kind.value}: non-finite state at node {int(bad[-1])} after a step of dt={dt} "
            f"(|x|max={np.max(np.abs(x)):.3g}, |f(x)|max={np.max(np.abs(f0)):.3g})"
        )
    return nxt


def integrate(model: DynamicsModel, graph: Graph, x0, T: int, dt: float) -> np.ndarray:
    """States of shape (..., T+1, n); x0 may carry a batch dimension."""
    if T < 1:
        raise IntegrationError(f"need at least one step, got T={T}")
    x = np.asarray(x0, dtype=np.float64)
    out = np.empty(x.shape[:-1] + (T + 1, x.shape[-1]))
    out[..., 0, :] = x
    for t in range(T):
        try:
            x = step_trapezoidal(model, graph, x, dt)
        except IntegrationError as e:
            raise IntegrationError(f"step {t + 1}/{T}: {e}") from e
        out[..., t + 1, :] = x
    return out


def simulate(model: DynamicsModel, graph: Graph, x0, T: int, dt: float) -> Trajectory:
    return Trajectory(graph=graph, dt=dt, states=integrate(model, graph, x0, T, dt))
