"""Counter-based pseudorandom substreams.

Every random quantity in the package is a pure function of a 64-bit key and
a counter, so results never depend on iteration order or parallel schedule.

Hash
----
``mix64`` is the SplitMix64 finalizer::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

A substream key is derived from a seed and a path of integer indices::

    key = mix64(seed)
    for i in path:
        key = mix64(key ^ mix64(i + GOLDEN))

and the ``c``-th 64-bit draw of a stream is ``mix64(key + (c + 1) * GOLDEN)``,
which is exactly the SplitMix64 output sequence started from state ``key``.
All arithmetic is modulo 2**64.

Normal deviates use the Box-Muller transform on consecutive draw pairs
``(2k, 2k + 1)``: ``u1 = 1 - U(2k)``, ``u2 = U(2k + 1)``, with
``U(c) = (draw(c) >> 11) * 2**-53``; the pair yields
``sqrt(-2 ln u1) * cos(2 pi u2)`` and ``sqrt(-2 ln u1) * sin(2 pi u2)``.

Bounded integers in ``[0, n)`` take ``x % n`` of successive draws, rejecting
``x >= 2**64 - (2**64 % n)`` so the result is exactly uniform.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0**-53

# stream tags used under a (seed, trial) path
NOISE = 0
PERMUTATION = 1
RERUN = 2


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive(key: int, index: int) -> int:
    return mix64(key ^ mix64(index + GOLDEN))


def substream(seed: int, *path: int) -> int:
    """Return the key of the substream reached from `seed` along `path`."""
    key = mix64(seed)
    for index in path:
        key = derive(key, index)
    return key


def draw(key: int, counter: int) -> int:
    return mix64(key + (counter + 1) * GOLDEN)


def uniform(key: int, counter: int) -> float:
    return (draw(key, counter) >> 11) * _TWO_M53


def bounded(key: int, counter: int, n: int) -> tuple[int, int]:
    """Uniform integer in ``[0, n)`` and the next unused counter."""
    limit = (1 << 64) - ((1 << 64) % n)
    while True:
        x = draw(key, counter)
        counter += 1
        if x < limit:
            return x % n, counter


def fisher_yates(key: int, k: int) -> list[int]:
    """Uniform permutation of ``range(k)`` from stream `key`."""
    perm = list(range(k))
    counter = 0
    for i in range(k - 1, 0, -1):
        j, counter = bounded(key, counter, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


# -- vectorized forms (uint64 arrays wrap modulo 2**64) ---------------------

def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_array(keys: np.ndarray, index: int) -> np.ndarray:
    return mix64_array(np.asarray(keys, dtype=np.uint64) ^ np.uint64(mix64(index + GOLDEN)))


def trial_keys(seed: int, trials: np.ndarray, *tail: int) -> np.ndarray:
    """Keys of ``substream(seed, trial, *tail)`` for an array of trials."""
    base = np.uint64(mix64(seed))
    trials = np.asarray(trials, dtype=np.uint64)
    keys = mix64_array(base ^ mix64_array(trials + np.uint64(GOLDEN)))
    for index in tail:
        keys = derive_array(keys, index)
    return keys


def draw_array(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    return mix64_array(keys + (counters + np.uint64(1)) * np.uint64(GOLDEN))


def uniform_array(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    return (draw_array(keys, counters) >> np.uint64(11)).astype(np.float64) * _TWO_M53


def normal_array(keys: np.ndarray, n: int) -> np.ndarray:
    """Box-Muller deviates, shape ``keys.shape + (n,)``."""
    keys = np.asarray(keys, dtype=np.uint64)[..., None]
    pairs = (n + 1) // 2
    c = np.arange(pairs, dtype=np.uint64) * np.uint64(2)
    u1 = 1.0 - uniform_array(keys, c)
    u2 = uniform_array(keys, c + np.uint64(1))
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(keys.shape[:-1] + (2 * pairs,))
    out[..., 0::2] = radius * np.cos(angle)
    out[..., 1::2] = radius * np.sin(angle)
    return out[..., :n]


def normal(key: int, n: int) -> np.ndarray:
    return normal_array(np.array([key], dtype=np.uint64), n)[0]
