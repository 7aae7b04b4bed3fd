from koopnet.dynamics.generator import generate_dataset
from koopnet.dynamics.integrator import integrate, simulate, step_trapezoidal
from koopnet.dynamics.systems import DynamicsKind, DynamicsModel, derivative

__all__ = [
    "DynamicsKind",
    "DynamicsModel",
    "derivative",
    "generate_dataset",
    "integrate",
    "simulate",
    "step_trapezoidal",
]
