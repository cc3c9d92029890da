"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by
``SeedSequence([seed, *keys])``, so a stream is fully determined by the
integer key path and independent of the order streams are created in.
Simulation roles use fixed integer keys: source 0, target 1, eval 2,
split 3, method 4.
"""

from __future__ import annotations

import math

import numpy as np

SOURCE, TARGET, EVAL, SPLIT, METHOD = range(5)


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit child seed for the key path ``(seed, *keys)``."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0]
    return int(state) >> 1


def halves(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random partition of ``range(n)`` into sorted index sets of sizes ceil(n/2), floor(n/2)."""
    perm = rng.permutation(n)
    n1 = math.ceil(n / 2)
    return np.sort(perm[:n1]), np.sort(perm[n1:])


def split_indices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The source split used by the main pipeline for ``split_seed=seed``."""
    return halves(n, stream(seed, SPLIT))
