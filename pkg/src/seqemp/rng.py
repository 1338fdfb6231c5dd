"""Named-stream seed derivation.

All randomness in the package flows from one master seed.  A component
requests its own stream by label (plus optional replicate indices), so adding
a new analysis never perturbs the draws of an existing one, and replicate r
gets the same stream no matter how work is chunked across workers.
"""

import hashlib

import numpy as np

__all__ = ["stream", "child_seed"]


def _label_entropy(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, label: str, *indices: int) -> np.random.Generator:
    """Return the generator for the named substream of ``master_seed``."""
    master_seed = int(master_seed)
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    entropy = [master_seed, _label_entropy(label)] + [int(i) for i in indices]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(master_seed: int, label: str, *indices: int) -> int:
    """A plain integer seed derived from the named substream."""
    master_seed = int(master_seed)
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    entropy = [master_seed, _label_entropy(label)] + [int(i) for i in indices]
    state = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return int(state[0])
