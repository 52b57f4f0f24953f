"""Deterministic RNG stream derivation.

All randomness in a run flows from a single 64-bit master seed. Every
consumer gets its own generator derived from (master_seed, purpose,
*ids), so results do not depend on the order in which streams are
consumed or on the degree of parallelism.
"""
from __future__ import annotations

import numpy as np

# Purpose tags; fixed small integers so stream identities are stable
# across releases.
DITHER = 1       # per-(round, ED) QPSK dither draws
CHANNEL = 2      # per-(round, ED) channel realizations
SYNC = 3         # per-(round, ED) timing offsets
NOISE = 4        # per-(round, symbol) receiver noise
DETECT = 5       # per-round detector tie-breaks
BATCH = 6        # per-(ED, epoch) batch shuffles
GRAD_SIGN = 7    # per-(round, ED) zero-gradient sign resolution
MV_TIE = 8       # per-round ideal majority-vote tie-breaks
TASK = 9         # dataset synthesis / model init
PMEPR = 10       # symbol draws for envelope statistics
VALIDATE = 11    # Monte Carlo oracle checks


def substream(master_seed: int, purpose: int, *ids: int) -> np.random.Generator:
    """Generator for the stream named by (purpose, *ids) under a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(purpose), *map(int, ids)]))
