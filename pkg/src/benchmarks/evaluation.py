"""
Model evaluation on held-out data.
"""

import math

import numpy as np

from ..kan import KanNetwork, forward
from .functions import BenchmarkError


def rmse(net: KanNetwork, inputs: np.ndarray, targets: np.ndarray) -> float:
    """
    Root mean squared error of the network on normalised inputs.

    Args:
        net: Network
        inputs: Array (n, n_0) of normalised inputs
        targets: Raw targets, (n,) or (n, n_L)

    Returns:
        sqrt(mean((forward(x) - y)^2))
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.shape[0] == 0:
        raise BenchmarkError("RMSE needs a non-empty test set")
    pred = forward(net, inputs)
    y = np.asarray(targets, dtype=np.float64).reshape(pred.shape)
    return math.sqrt(float(np.mean((pred - y) ** 2)))
