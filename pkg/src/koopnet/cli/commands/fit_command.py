import logging
from pathlib import Path

from koopnet.baselines.base import LinearBaseline
from koopnet.cli.commands.common import checkpoint_path, history_path, load_dataset
from koopnet.cli.config import RunConfig
from koopnet.dataclasses.base_dataclass import Base
from koopnet.errors import SystemIdentificationError
from koopnet.eval.export import write_history
from koopnet.models.registry import fit_model, save_model

log = logging.getLogger(__name__)


def cmd_fit(config: RunConfig, out: str | None = None, kind: str | None = None) -> dict[str, Path]:
    """Fit one model on the train split; write its checkpoint and training history."""
    spec = config.model.model_copy(update={"kind": kind or config.model.kind})
    dataset = load_dataset(config, out)
    path = checkpoint_path(config, out, spec.kind)
    path.parent.mkdir(parents=True, exist_ok=True)
    extra = {
        "config_hash": config.config_hash,
        "dataset": config.dataset_name,
        "dataset_graph_hash": dataset.graph.graph_hash,
    }

    try:
        model, history = fit_model(spec, dataset, config.model.train)
    except SystemIdentificationError as e:
        # recorded so evaluate can report the model as unidentified
        log.warning("%s on %s: %s", spec.kind, config.dataset_name, e)
        manifest_path = path.with_name(path.name + ".json")
        Base.write_json(manifest_path, {"kind": spec.kind, "status": "unidentified", "reason": str(e), **extra})
        print(f"{spec.kind}: unidentified ({e})")
        return {"manifest": manifest_path}

    paths = save_model(model, path, extra)
    if history:
        paths["history"] = write_history(history_path(path), history, config.config_hash)
        final = history[-1]
        print(
            f"{spec.kind} epoch {final['epoch']}: total={final['total']:.6g} recon={final['recon']:.6g} "
            f"linear={final['linear']:.6g} pred={final['pred']:.6g} val={final['val']:.6g}"
        )
    elif isinstance(model, LinearBaseline):
        print(f"{spec.kind}: spectral radius {model.spectral_radius:.6g} ({model.status})")
    return paths
