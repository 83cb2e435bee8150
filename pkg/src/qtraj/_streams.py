"""Counter-based RNG substreams shared by the trajectory and ensemble layers.

Every random draw in the package comes from a Philox generator keyed by
``SeedSequence(entropy=seed, spawn_key=(namespace, stream_id))``.  The
namespace separates the three kinds of consumers so no two of them can ever
collide on the same stream:

* ``SINGLE`` -- one interactively stepped trajectory,
* ``BATCH``  -- one fixed-size batch of ensemble trajectories,
* ``SAMPLER`` -- one block of i.i.d. one-step increment samples,
* ``MULTI``  -- one batch of n-level ensemble trajectories.

Because a batch's stream depends only on ``(seed, batch index)`` and never
on which worker executes it, ensemble results are bit-identical for any
worker count.
"""

from __future__ import annotations

import numpy as np

SINGLE = 0
BATCH = 1
SAMPLER = 2
MULTI = 3


def substream(seed: int, stream_id: int, namespace: int = SINGLE) -> np.random.Generator:
    """Independent generator for (seed, stream) in the given namespace."""
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    if stream_id < 0:
        raise ValueError(f"stream_id must be a nonnegative integer, got {stream_id}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(namespace, stream_id))
    return np.random.Generator(np.random.Philox(ss))
