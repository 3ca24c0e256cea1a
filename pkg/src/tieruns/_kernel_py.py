"""Vectorized numpy implementation of the Monte Carlo trial kernel.

Mirrors ``_kernel.pyx`` draw for draw; used when the compiled extension is
unavailable or ``TIERUNS_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import numpy as np

from . import _rng

CHUNK = 8192


def _residuals(z, t, q, slope, intercept, noise_sd):
    y = slope * t + intercept + noise_sd * z
    return y - (y @ q) @ q.T


def _rerun_row(seed, trial, t, q, slope, intercept, noise_sd):
    attempt = 0
    while True:
        key = _rng.substream(seed, trial, _rng.RERUN, attempt)
        e = _residuals(_rng.normal(key, t.size), t, q, slope, intercept, noise_sd)
        if np.all(e != 0):
            return e, attempt + 1
        attempt += 1


def _shuffle_group(signs, start, k, group, gkeys, perm_seeds):
    rows = np.arange(signs.shape[0])
    idx = np.tile(np.arange(k), (signs.shape[0], 1))
    rejected = np.zeros(signs.shape[0], dtype=bool)
    for step, i in enumerate(range(k - 1, 0, -1)):
        n = i + 1
        rem = (1 << 64) % n
        limit = np.uint64((1 << 64) - rem) if rem else None
        x = _rng.draw_array(gkeys, np.full(gkeys.shape, step, dtype=np.uint64))
        if limit is not None:
            rejected |= x >= limit
        j = (x % np.uint64(n)).astype(np.intp)
        tmp = idx[rows, j].copy()
        idx[rows, j] = idx[:, i]
        idx[:, i] = tmp
    block = signs[:, start:start + k]
    permuted = np.take_along_axis(block, idx, axis=1)
    for r in np.flatnonzero(rejected):
        # a rejected draw shifts every later counter; redo exactly
        key = _rng.substream(int(perm_seeds[r]), 0, group)
        order = _rng.fisher_yates(key, k)
        permuted[r] = block[r, order]
    signs[:, start:start + k] = permuted



def simulate_histogram(t, starts, sizes, q, slope, intercept, noise_sd, seed,
                       trial_start, trial_stop):
    """Histogram of run counts over trials ``[trial_start, trial_stop)``.

    Returns ``(hist, reruns)`` where ``hist[r]`` counts trials with r runs
    and `reruns` counts zero-residual redraws.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    n = t.size
    hist = np.zeros(n + 1, dtype=np.int64)
    reruns = 0
    for lo in range(trial_start, trial_stop, CHUNK):
        hi = min(lo + CHUNK, trial_stop)
        trials = np.arange(lo, hi, dtype=np.uint64)
        z = _rng.normal_array(_rng.trial_keys(seed, trials, _rng.NOISE), n)
        e = _residuals(z, t, q, slope, intercept, noise_sd)
        for r in np.flatnonzero(np.any(e == 0, axis=1)):
            e[r], used = _rerun_row(seed, lo + int(r), t, q, slope, intercept, noise_sd)
            reruns += used
        signs = e > 0
        perm_seeds = _rng.trial_keys(seed, trials, _rng.PERMUTATION)
        base = _rng.derive_array(_rng.mix64_array(perm_seeds), 0)
        for g, (start, k) in enumerate(zip(starts, sizes)):
            if k > 1:
                _shuffle_group(signs, int(start), int(k), g,
                               _rng.derive_array(base, g), perm_seeds)
        runs = 1 + np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1)
        hist += np.bincount(runs, minlength=n + 1)
    return hist, reruns
