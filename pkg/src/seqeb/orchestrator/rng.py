"""Counter-based random streams keyed on (seed, purpose, k, l, t).

Every draw in a run comes from a Philox generator whose key is derived from
the master seed and the coordinates of the work unit, so results do not
depend on scheduling and no generator state has to be checkpointed.
"""
from __future__ import annotations

from enum import IntEnum

import numpy as np


class StreamTag(IntEnum):
    INIT = 0
    BOOTSTRAP = 1
    STEP = 2
    PREDICT = 3
    SIMULATE = 4
    MCMC = 5
    STUDY = 6


def stream(seed: int, tag: StreamTag, k: int = 0, l: int = 0, t: int = 0) -> np.random.Generator:  # noqa: E741
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(k), int(l), int(t)))
    return np.random.Generator(np.random.Philox(seq))
