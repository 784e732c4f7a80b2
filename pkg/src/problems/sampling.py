"""
sampling.py — Counter-based sample streams and per-sample noise generators

Sample ids (the xi_t sequence):
    id(seed, k) = splitmix64(splitmix64(seed) + (k + 1) * GOLDEN)  (mod 2^64)
    A pure function of (seed, index), so any position of the stream can be
    recomputed without replaying it.

Per-sample randomness (noise vectors, minibatches):
    numpy's Philox counter-based bit generator keyed by (problem seed, tag)
    with the sample id placed in the counter. The same (seed, tag, id) gives
    the same draws at any point w, which is what the shared-sample VR
    correction and bit-reproducible traces require.
"""

from typing import Iterator, NewType

import numpy as np

SampleId = NewType("SampleId", int)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer on a single 64-bit integer."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SampleStream:
    """Deterministic, random-access stream of sample ids for one seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._base = splitmix64(self.seed & _MASK64)

    def at(self, index: int) -> SampleId:
        return SampleId(splitmix64((self._base + (index + 1) * _GOLDEN) & _MASK64))

    def take(self, n: int, start: int = 0) -> np.ndarray:
        """Ids ``start .. start+n-1`` as a uint64 array (vectorized ``at``)."""
        k = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            return _splitmix64_array(np.uint64(self._base) + k * np.uint64(_GOLDEN))

    def __iter__(self) -> Iterator[SampleId]:
        k = 0
        while True:
            yield self.at(k)
            k += 1


def sample_stream(seed: int) -> Iterator[SampleId]:
    """Iterator over the sample ids of ``seed``."""
    return iter(SampleStream(seed))


def sample_rng(problem_seed: int, tag: int, sample_id: int) -> np.random.Generator:
    """Generator whose draws depend only on (problem_seed, tag, sample_id)."""
    # key words: (seed, tag); counter word 1 carries the sample id so the
    # draws of one sample (counter word 0 advancing) never reach the next id.
    key = (int(problem_seed) & _MASK64) | ((int(tag) & _MASK64) << 64)
    counter = (int(sample_id) & _MASK64) << 64
    bitgen = np.random.Philox(key=key, counter=counter)
    return np.random.Generator(bitgen)
