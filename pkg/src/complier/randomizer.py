"""Complete randomization: seeded sampling and exhaustive enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidArmSize, TooManyAssignments

DEFAULT_ENUMERATION_CAP = 10**6
# reserved stream for drawing populations, disjoint from replication indices
POPULATION_STREAM = 2**63


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(master_seed, stream_index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys and
    drive a counter-based Philox generator, so replication ``k`` draws the
    same numbers no matter which worker runs it or in what order.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(ss))


def _check_sizes(n, n1):
    if not (0 < n1 < n):
        raise InvalidArmSize(f"need 0 < n1 < n, got n={n}, n1={n1}")


def complete_randomization(n: int, n1: int, rng) -> np.ndarray:
    """Draw ``z`` uniformly among the ``C(n, n1)`` assignments with ``n1`` ones.

    ``rng`` may be an :class:`RngStream` or a numpy ``Generator``.  Uses a
    partial Fisher-Yates shuffle: after ``n1`` swaps the first ``n1`` slots of
    the permutation form a uniform random ``n1``-subset.
    """
    _check_sizes(n, n1)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    perm = np.arange(n)
    picks = gen.integers(np.arange(n1), n)
    for i, j in enumerate(picks):
        perm[i], perm[j] = perm[j], perm[i]
    z = np.zeros(n, dtype=np.int8)
    z[perm[:n1]] = 1
    return z


def enumerate_assignments(n: int, n1: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """All assignments with ``n1`` treated units, in lexicographically decreasing order.

    Row ``k`` is an indicator vector; ``[1,0,0]`` comes before ``[0,1,0]``.
    """
    _check_sizes(n, n1)
    total = comb(n, n1)
    if total > cap:
        raise TooManyAssignments(f"C({n}, {n1}) = {total} exceeds cap {cap}")
    out = np.zeros((total, n), dtype=np.int8)
    for row, idx in enumerate(itertools.combinations(range(n), n1)):
        out[row, list(idx)] = 1
    return out
