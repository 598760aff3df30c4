"""
Seed fan-out.

One master seed is expanded into named sub-seeds so that initialisation,
client sampling, partitioning and local training draw from independent
streams while the whole experiment stays a function of the master seed.
"""

import hashlib
from typing import Tuple

import numpy as np


SEED_NAMES: Tuple[str, ...] = ("init", "sampling", "partition", "training", "data", "test-data")

_SEED_MASK = (1 << 63) - 1


def derive_seed(master: int, name: str) -> int:
    """
    Derive a named sub-seed from the master seed.

    The sub-seed is the first 8 bytes of SHA-256("{master}:{name}") read
    big-endian and masked to 63 bits.

    Args:
        master: Master seed of the run
        name: Sub-seed name (see SEED_NAMES)

    Returns:
        Non-negative integer seed
    """
    digest = hashlib.sha256(f"{master}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _SEED_MASK


def client_train_seed(training_seed: int, round_index: int, client_id: int) -> int:
    """Seed of one client's local shuffling in one round."""
    sequence = np.random.SeedSequence([training_seed, round_index, client_id])
    return int(sequence.generate_state(2, dtype=np.uint64)[0] & np.uint64(_SEED_MASK))
