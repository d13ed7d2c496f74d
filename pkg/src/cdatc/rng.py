"""Seeded random substreams.

Every random quantity comes from a generator keyed by
``(master seed, run, node, purpose)``. Draws never depend on the scheme
being simulated, so all schemes see the same data for a given seed.
"""

import numpy as np

TRUTH = 0
REGRESSOR = 1
NOISE = 2
HARVEST = 3

PURPOSES = {"truth": TRUTH, "regressor": REGRESSOR, "noise": NOISE, "harvest": HARVEST}


def stream(seed: int, run: int, node: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(run), int(node), int(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def truth_stream(seed: int, run: int) -> np.random.Generator:
    # node slot -1 is not representable in a spawn key, so the truth uses purpose 0 at node 0
    return stream(seed, run, 0, TRUTH)
