from koopnet.eval.experiments import (
    GRIDS,
    evaluate_model,
    grid_cells,
    latent_dim_sweep,
    optimisation_rows,
    robustness_suite,
)
from koopnet.eval.metrics import optimisation_performance, prediction_loss

__all__ = [
    "GRIDS",
    "evaluate_model",
    "grid_cells",
    "latent_dim_sweep",
    "optimisation_performance",
    "optimisation_rows",
    "prediction_loss",
    "robustness_suite",
]
