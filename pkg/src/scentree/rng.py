"""Seeded, splittable random streams.

All randomness in the package flows through Philox counter-based generators
keyed by a master seed plus a *stream path*, so results are reproducible
bit-exactly across runs, platforms and worker schedules.

Stream-splitting rule: a substream is addressed by a tuple of small integers
appended to the master seed's spawn key, e.g. ``stream(seed, SCENARIOS, i)``
is the generator that drives scenario ``i`` of an evaluation run.  Streams
with distinct paths are statistically independent, and the enumeration below
keeps the namespaces of the different pipeline phases disjoint.
"""

from __future__ import annotations

import numpy as np

# Stream namespaces (first element of the spawn path).
TREE_STRUCTURE = 1   # random branching structures, one substream per tree index
TREE_NOISE = 2       # noise values placed on tree nodes
SCENARIOS = 3        # out-of-sample simulation, one substream per scenario index
PRIORITY_ORDERS = 4  # random permutations for the greedy restorer
VALIDATION = 5       # validation sample family of a pipeline run
TEST = 6             # fresh test sample family of a pipeline run


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the substream addressed by ``path``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def scenario_streams(seed: int, n: int, *prefix: int) -> list[np.random.Generator]:
    """One child stream per scenario index 0..n-1 under a common prefix."""
    return [stream(seed, *prefix, i) for i in range(n)]
