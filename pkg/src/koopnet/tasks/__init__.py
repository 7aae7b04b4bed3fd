from koopnet.tasks.networks import build_network, flatten, network_loss, unflatten
from koopnet.tasks.optimizers import build_optimizer
from koopnet.tasks.param_graph import param_graph
from koopnet.tasks.specs import ArchSpec, OptimizerSpec, TaskSpec
from koopnet.tasks.task_data import TaskData, generate_task_data
from koopnet.tasks.trajectories import generate_param_dataset, train_collect

__all__ = [
    "ArchSpec",
    "OptimizerSpec",
    "TaskData",
    "TaskSpec",
    "build_network",
    "build_optimizer",
    "flatten",
    "generate_param_dataset",
    "generate_task_data",
    "network_loss",
    "param_graph",
    "train_collect",
    "unflatten",
]
