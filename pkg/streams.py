"""Named, independent random substreams derived from a scenario seed.

Each (class, purpose) pair owns its own PCG64DXSM generator, so arrivals and
packet sizes of a class do not depend on the discipline, on other classes, or
on how many draws any other stream made. That is what makes comparisons
across disciplines and sweep points use common random numbers.
"""
from __future__ import annotations

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    """What a substream is used for."""
    ARRIVALS = 0
    SIZES = 1
    MC_SAMPLE = 2


# Spawn-key slot used for streams that do not belong to a traffic class.
_GLOBAL_SLOT = 2**32


def substream(seed: int, purpose: Purpose, class_id: int | None = None) -> np.random.Generator:
    """Return the generator for ``(class_id, purpose)`` under ``seed``."""
    slot = _GLOBAL_SLOT if class_id is None else int(class_id)
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(slot, int(purpose)))
    return np.random.Generator(np.random.PCG64DXSM(sequence))


def poisson_arrivals(rng: np.random.Generator, lam: float, horizon: float) -> np.ndarray:
    """Arrival epochs of a Poisson(lam) process on [0, horizon)."""
    if lam <= 0:
        return np.empty(0)
    expected = lam * horizon
    batch = int(expected + 6.0 * np.sqrt(expected) + 16)
    chunks = []
    last = 0.0
    while True:
        epochs = last + np.cumsum(rng.exponential(1.0 / lam, size=batch))
        chunks.append(epochs)
        last = float(epochs[-1])
        if last >= horizon:
            break
    epochs = np.concatenate(chunks)
    return epochs[epochs < horizon]
