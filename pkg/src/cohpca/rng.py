"""Seeded random streams.

Every stochastic routine in the package draws from a counter-based
Philox generator keyed by an explicit 64-bit seed.  Independent
sub-streams (one per trial, per cell, per round) are derived by folding
integer path components into the seed material, so results never depend
on execution order and any single trial can be replayed in isolation.
"""

import numpy as np

__all__ = ["stream"]


def stream(seed, *path):
    """Return a Generator for ``seed`` refined by integer path components.

    ``stream(seed)`` is the root stream; ``stream(seed, k)`` is the k-th
    child, ``stream(seed, k, j)`` the j-th grandchild, and so on.  The
    seed may itself be a tuple of integers (a previously derived path),
    which is flattened in front of the new components.  Distinct paths
    give statistically independent streams.
    """
    head = tuple(seed) if isinstance(seed, tuple) else (seed,)
    entropy = tuple(int(p) for p in head) + tuple(int(p) for p in path)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
