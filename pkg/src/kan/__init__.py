"""
KAN Model Module

Network evaluation, gradients, local training and checkpoints.
"""

from .network import (
    KanNetwork,
    KanLayer,
    ParamLayout,
    ParamVector,
    KanModelError,
    NonFiniteActivationError,
    CANONICAL_ORDER_VERSION,
    DEFAULT_HIDDEN_RANGE,
    layer_domains,
    init_network,
    forward,
    loss,
    gradients,
    flatten,
    unflatten,
    extend_network
)
from .training import (
    TrainConfig,
    OptimizerKind,
    TrainingDivergedError,
    train_local,
    train_local_with_history
)
from .checkpoint import (
    save_checkpoint,
    load_checkpoint,
    checkpoint_bytes,
    parse_checkpoint
)

__all__ = [
    'KanNetwork',
    'KanLayer',
    'ParamLayout',
    'ParamVector',
    'KanModelError',
    'NonFiniteActivationError',
    'CANONICAL_ORDER_VERSION',
    'DEFAULT_HIDDEN_RANGE',
    'layer_domains',
    'init_network',
    'forward',
    'loss',
    'gradients',
    'flatten',
    'unflatten',
    'extend_network',
    'TrainConfig',
    'OptimizerKind',
    'TrainingDivergedError',
    'train_local',
    'train_local_with_history',
    'save_checkpoint',
    'load_checkpoint',
    'checkpoint_bytes',
    'parse_checkpoint'
]
