import logging
from pathlib import Path

from koopnet.cli.commands.common import dataset_dir, quiet
from koopnet.cli.config import RunConfig
from koopnet.dynamics import DynamicsModel, generate_dataset
from koopnet.errors import ConfigError
from koopnet.tasks.trajectories import generate_param_dataset

log = logging.getLogger(__name__)


def cmd_generate(config: RunConfig, out: str | None = None) -> dict[str, Path]:
    """Simulate the configured system (or collect training trajectories) and write the dataset."""
    if config.dynamics is not None:
        d = config.dynamics
        model = DynamicsModel(d.model, b=d.b, c=d.c, decay=d.decay)
        dataset = generate_dataset(
            model, d.n, d.m, d.S,
            T=d.T or model.default_T,
            dt=d.dt or model.default_dt,
            seed=d.seed,
            split_fractions=d.split_fractions,
            quiet=quiet(config),
        )
    elif config.nn_task is not None:
        t = config.nn_task
        dataset = generate_param_dataset(
            t.task, t.arch, t.optimizer, t.epochs, t.S, t.seed,
            split_fractions=t.split_fractions,
            init_range=t.init_range,
            edge_rules=t.edge_rules,
            quiet=quiet(config),
        )
    else:
        raise ConfigError("generate needs a 'dynamics' or an 'nn_task' section")

    paths = dataset.save(dataset_dir(config, out), config.dataset_name, {"config_hash": config.config_hash})
    if config.io.export_csv:
        paths["csv"] = dataset_dir(config, out) / f"{config.dataset_name}.csv"
        dataset.export_csv(paths["csv"])
        log.info("exported %d rows to %s", dataset.S * (dataset.T + 1), paths["csv"])
    sizes = {k: len(v) for k, v in dataset.splits.items()}
    print(f"wrote {paths['kdyn']} splits={sizes['train']}/{sizes['val']}/{sizes['test']}")
    return paths
