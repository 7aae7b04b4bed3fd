from koopnet.baselines.base import OUT_OF_SCALE_RADIUS, LinearBaseline
from koopnet.baselines.dmd import DmdModel, dmd_fit, dmd_predict, snapshot_pairs
from koopnet.baselines.edmd import Dictionary, EdmdModel, edmd_fit, edmd_predict

__all__ = [
    "OUT_OF_SCALE_RADIUS",
    "Dictionary",
    "DmdModel",
    "EdmdModel",
    "LinearBaseline",
    "dmd_fit",
    "dmd_predict",
    "edmd_fit",
    "edmd_predict",
    "snapshot_pairs",
]
