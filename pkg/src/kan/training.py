"""
Local Training

Mini-batch optimisation of a KAN on one client's data. Optimiser state is
created fresh on every call; clients keep nothing between rounds.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .network import (
    KanModelError,
    KanNetwork,
    NonFiniteActivationError,
    flatten,
    gradients,
    loss
)


logger = logging.getLogger(__name__)


class OptimizerKind(Enum):
    """Update rule used by local training."""
    SGD = "sgd"      # w <- w - lr * grad
    ADAM = "adam"


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, last_finite_loss: Optional[float], epoch: int, step: int, reason: str = ""):
        self.last_finite_loss = last_finite_loss
        self.epoch = epoch
        self.step = step
        seen = "no finite loss" if last_finite_loss is None else f"last finite loss {last_finite_loss:.6e}"
        message = f"Training diverged at epoch {epoch}, step {step} ({seen})"
        super().__init__(f"{message}: {reason}" if reason else message)


@dataclass(frozen=True)
class TrainConfig:
    """Local training hyperparameters."""
    learning_rate: float = 1e-2
    local_epochs: int = 5
    batch_size: int = 32
    optimizer: OptimizerKind = OptimizerKind.ADAM
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be a finite non-negative number, got {self.learning_rate}")
        if self.local_epochs < 1:
            raise ValueError(f"local_epochs must be >= 1, got {self.local_epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not isinstance(self.optimizer, OptimizerKind):
            object.__setattr__(self, "optimizer", OptimizerKind(self.optimizer))


class _Sgd:
    def __init__(self, cfg: TrainConfig, size: int):
        self.lr = cfg.learning_rate

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return params - self.lr * grad


class _Adam:
    def __init__(self, cfg: TrainConfig, size: int):
        self.lr = cfg.learning_rate
        self.beta1 = cfg.beta1
        self.beta2 = cfg.beta2
        self.epsilon = cfg.epsilon
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


_OPTIMIZERS = {
    OptimizerKind.SGD: _Sgd,
    OptimizerKind.ADAM: _Adam
}


def _finite_or_none(model: KanNetwork, inputs: np.ndarray, targets: np.ndarray) -> Optional[float]:
    try:
        value = loss(model, inputs, targets)
    except NonFiniteActivationError:
        return None
    return value if math.isfinite(value) else None


def train_local_with_history(
    net: KanNetwork,
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig
) -> Tuple[KanNetwork, List[float]]:
    """
    Run `cfg.local_epochs` passes of shuffled mini-batch optimisation.

    Args:
        net: Starting network (not modified)
        inputs: Array (n, n_0)
        targets: Array (n,) or (n, n_L)
        cfg: Training configuration

    Returns:
        (trained copy of the network, full-data loss after each epoch)
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = inputs.shape[0]
    if n == 0:
        raise KanModelError("Local training needs a non-empty dataset")

    model = net.copy()
    params = flatten(model).values.copy()
    optimizer = _OPTIMIZERS[cfg.optimizer](cfg, params.shape[0])
    rng = np.random.default_rng(cfg.seed)

    last_finite = _finite_or_none(model, inputs, targets)
    history: List[float] = []
    step = 0

    for epoch in range(cfg.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            try:
                grad = gradients(model, inputs[batch], targets[batch]).values
            except NonFiniteActivationError as e:
                raise TrainingDivergedError(last_finite, epoch, step, str(e)) from e
            if not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(last_finite, epoch, step, "non-finite gradient")
            params = optimizer.step(params, grad)
            model.load_values(params)
            step += 1

        try:
            epoch_loss = loss(model, inputs, targets)
        except NonFiniteActivationError as e:
            raise TrainingDivergedError(last_finite, epoch, step, str(e)) from e
        if not math.isfinite(epoch_loss):
            raise TrainingDivergedError(last_finite, epoch, step, "non-finite loss")
        history.append(epoch_loss)
        last_finite = epoch_loss
        logger.debug("epoch %d loss %.6e", epoch, epoch_loss)

    return model, history


def train_local(net: KanNetwork, inputs: np.ndarray, targets: np.ndarray, cfg: TrainConfig) -> KanNetwork:
    """Train a copy of `net` locally and return it."""
    model, _ = train_local_with_history(net, inputs, targets, cfg)
    return model
