from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.kmpnn import KmpnnModel
from koopnet.models.layers import LookupTable, Mlp, MpnnLayer, SpectralAdvance
from koopnet.models.losses import loss_total
from koopnet.models.lusch import LuschModel
from koopnet.models.registry import build_model, fit_model, load_model, save_model
from koopnet.models.specs import LossWeights, ModelSpec, TrainConfig
from koopnet.models.spectrum import spectrum_report
from koopnet.models.trainer import TrainResult, train

__all__ = [
    "KmpnnModel",
    "KoopmanAutoencoder",
    "LookupTable",
    "LossWeights",
    "LuschModel",
    "Mlp",
    "ModelSpec",
    "MpnnLayer",
    "SpectralAdvance",
    "TrainConfig",
    "TrainResult",
    "build_model",
    "fit_model",
    "load_model",
    "loss_total",
    "save_model",
    "spectrum_report",
    "train",
]
