from koopnet.dataclasses.graph_dataclass import Graph, load_graph, random_graph, save_graph
from koopnet.dataclasses.param_trajectory_dataclass import ParamTrajectory
from koopnet.dataclasses.report_dataclass import EvalReport, ReportRow
from koopnet.dataclasses.trajectory_dataclass import Trajectory, TrajectoryDataset, read_kdyn, write_kdyn

__all__ = [
    "EvalReport",
    "Graph",
    "ParamTrajectory",
    "ReportRow",
    "Trajectory",
    "TrajectoryDataset",
    "load_graph",
    "random_graph",
    "read_kdyn",
    "save_graph",
    "write_kdyn",
]
