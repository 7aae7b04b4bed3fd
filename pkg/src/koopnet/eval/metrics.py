import numpy as np

from koopnet.errors import MetricError, ShapeError


def prediction_loss(predicted, actual) -> float:
    """Mean squared deviation over samples, time steps and nodes."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ShapeError(f"prediction {predicted.shape} and ground truth {actual.shape} differ in shape")
    return float(np.mean((predicted - actual) ** 2))


def optimisation_performance(l0: float, l_pred: float, l_true: float) -> float:
    """r = (l0 - l_pred) / (l0 - l_true); 1 means the predicted run matched the real one."""
    denom = l0 - l_true
    if denom == 0.0:
        raise MetricError(f"optimisation performance undefined: initial loss equals final loss ({l0!r})")
    return (l0 - l_pred) / denom
