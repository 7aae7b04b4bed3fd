"""One entry point per model kind: build, fit, save and load."""
import logging
import os
from pathlib import Path

import numpy as np
import torch

from koopnet.baselines.base import LinearBaseline
from koopnet.baselines.dmd import DmdModel, dmd_fit, snapshot_pairs
from koopnet.baselines.edmd import Dictionary, EdmdModel, edmd_fit
from koopnet.dataclasses.base_dataclass import Base
from koopnet.dataclasses.graph_dataclass import Graph
from koopnet.dataclasses.trajectory_dataclass import TrajectoryDataset
from koopnet.errors import ConfigError, FormatError, GraphMismatchError, SystemIdentificationError
from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.kmpnn import KmpnnModel
from koopnet.models.lusch import LuschModel, matched_width
from koopnet.models.specs import ModelSpec, TrainConfig
from koopnet.models.trainer import TrainResult, train
from koopnet.numerics import DTYPE

log = logging.getLogger(__name__)

Model = KoopmanAutoencoder | LinearBaseline


def build_model(spec: ModelSpec, graph: Graph) -> KoopmanAutoencoder:
    h = spec.latent_for(graph.n)
    match spec.kind:
        case "kmpnn":
            return KmpnnModel(
                graph, h, c=spec.c, c_e=spec.c_e, global_hidden=spec.global_hidden,
                readout_hidden=spec.readout_hidden, aggregator=spec.aggregator, activation=spec.activation,
            )
        case "lusch":
            hidden = spec.lusch_hidden
            if hidden is None:
                target = build_model(spec.model_copy(update={"kind": "kmpnn"}), graph).num_parameters
                hidden = matched_width(graph.n, h, target)
            return LuschModel(graph.n, h, hidden=hidden, activation=spec.activation)
        case "dmd" | "edmd":
            raise ConfigError(f"{spec.kind} is fitted directly; use fit_model")
        case _:
            raise ConfigError(f"unknown model kind {spec.kind!r}")


def fit_model(spec: ModelSpec, dataset: TrajectoryDataset, config: TrainConfig) -> tuple[Model, list[dict]]:
    """Fit on the train split. Returns the model and its per-epoch history (empty for DMD/EDMD)."""
    match spec.kind:
        case "dmd":
            X, Xp = snapshot_pairs(dataset.split("train"))
            return dmd_fit(X, Xp, rank=spec.dmd_rank), []
        case "edmd":
            X, Xp = snapshot_pairs(dataset.split("train"))
            return edmd_fit(X, Xp, Dictionary.monomials(dataset.n, spec.edmd_degree)), []
        case _:
            model = build_model(spec, dataset.graph)
            result: TrainResult = train(model, dataset, config)
            return result.model, result.history


def save_model(model: Model, path: str | os.PathLike, extra: dict | None = None) -> dict[str, Path]:
    """Little-endian f64 blob at `path`, JSON manifest at `path`.json."""
    if isinstance(model, LinearBaseline):
        return model.save(path, extra)
    path = Path(path)
    names = [name for name, _ in model.named_parameters()]
    arrays = [p.detach().numpy() for _, p in model.named_parameters()]
    shapes = Base.write_blob(path, arrays)
    manifest = {
        "kind": model.kind,
        "n": model.n,
        "config": model.config(),
        "parameters": names,
        "shapes": shapes,
        **(extra or {}),
    }
    if isinstance(model, KmpnnModel):
        manifest["graph_hash"] = model.graph.graph_hash
    manifest_path = path.with_name(path.name + ".json")
    Base.write_json(manifest_path, manifest)
    log.info("saved %s checkpoint %s (%d parameters)", model.kind, path, model.num_parameters)
    return {"blob": path, "manifest": manifest_path}


def load_model(path: str | os.PathLike, graph: Graph | None = None) -> Model:
    """KMPNN checkpoints need the graph they were trained on; its hash must match."""
    path = Path(path)
    manifest_path = path.with_name(path.name + ".json")
    if not manifest_path.exists():
        raise FormatError(f"missing checkpoint: {path}")
    manifest = Base.read_json(manifest_path)
    if manifest.get("status") == "unidentified":
        raise SystemIdentificationError(f"{path}: {manifest.get('reason', 'no system was identified')}")
    if not path.exists():
        raise FormatError(f"missing checkpoint: {path}")
    kind = manifest.get("kind")
    match kind:
        case "dmd":
            return DmdModel.load(path)
        case "edmd":
            return EdmdModel.load(path)
        case "kmpnn":
            if graph is None:
                raise ConfigError(f"{path}: a KMPNN checkpoint needs its graph")
            if manifest.get("graph_hash") != graph.graph_hash:
                raise GraphMismatchError(manifest.get("graph_hash"), graph.graph_hash, what="checkpoint graph")
            model = KmpnnModel(graph, **manifest["config"])
        case "lusch":
            model = LuschModel(**manifest["config"])
        case _:
            raise FormatError(f"{path}: unknown checkpoint kind {kind!r}")

    arrays = Base.read_blob(path, manifest["shapes"])
    params = dict(model.named_parameters())
    if list(params) != manifest["parameters"]:
        raise FormatError(f"{path}: parameter layout differs from a freshly built {kind} model")
    with torch.no_grad():
        for name, a in zip(manifest["parameters"], arrays):
            if tuple(params[name].shape) != a.shape:
                raise FormatError(f"{path}: {name} has shape {a.shape}, model expects {tuple(params[name].shape)}")
            params[name].copy_(torch.as_tensor(np.ascontiguousarray(a), dtype=DTYPE))
    return model
