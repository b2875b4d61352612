"""Reproducible random streams.

Every random draw in the package comes from a Philox counter-based generator
keyed by ``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`, so
independent replicates can run on distinct streams in any order or thread.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def stream(self, stream_id: int) -> "RngSpec":
        return RngSpec(self.seed, stream_id)


def replicate_map(fn, rngs, threads: int = 1):
    """Apply ``fn`` to each RngSpec; results come back in input order."""
    rngs = list(rngs)
    if threads <= 1 or len(rngs) <= 1:
        return [fn(r) for r in rngs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, rngs))
