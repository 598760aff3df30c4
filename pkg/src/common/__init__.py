"""
Common Helpers

Seed derivation shared by the simulator, the benchmark data pipeline and the runner.
"""

from .seeding import derive_seed, client_train_seed, SEED_NAMES

__all__ = [
    'derive_seed',
    'client_train_seed',
    'SEED_NAMES'
]
