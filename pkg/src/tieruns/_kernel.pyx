# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo trial kernel.

Draw-for-draw equivalent of ``_kernel_py.simulate_histogram``; see ``_rng``
for the substream hash and transforms.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, log, sin, sqrt
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586

# stream tags, as in _rng
cdef uint64_t NOISE = 0
cdef uint64_t PERMUTATION = 1
cdef uint64_t RERUN = 2


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive(uint64_t key, uint64_t index) noexcept nogil:
    return mix64(key ^ mix64(index + GOLDEN))


cdef inline uint64_t draw(uint64_t key, uint64_t counter) noexcept nogil:
    return mix64(key + (counter + 1) * GOLDEN)


cdef inline double uniform(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(draw(key, counter) >> 11) * TWO_M53


cdef void normals(uint64_t key, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double u1, u2, radius, angle
    for k in range((n + 1) // 2):
        u1 = 1.0 - uniform(key, 2 * k)
        u2 = uniform(key, 2 * k + 1)
        radius = sqrt(-2.0 * log(u1))
        angle = TWO_PI * u2
        out[2 * k] = radius * cos(angle)
        if 2 * k + 1 < n:
            out[2 * k + 1] = radius * sin(angle)


cdef bint residuals(const double* t, const double* q, Py_ssize_t n, Py_ssize_t p,
                    double slope, double intercept, double noise_sd,
                    double* e, double* coef) noexcept nogil:
    """Fill e with the fit residuals of the noise already in e; False on a zero."""
    cdef Py_ssize_t i, j
    for i in range(n):
        e[i] = slope * t[i] + intercept + noise_sd * e[i]
    for j in range(p):
        coef[j] = 0.0
    for i in range(n):
        for j in range(p):
            coef[j] += e[i] * q[i * p + j]
    cdef double fitted
    cdef bint ok = True
    for i in range(n):
        fitted = 0.0
        for j in range(p):
            fitted += q[i * p + j] * coef[j]
        e[i] = e[i] - fitted
        if e[i] == 0.0:
            ok = False
    return ok


cdef void fisher_yates(uint64_t key, int* perm, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i
    cdef uint64_t n, x, rem, counter = 0
    cdef int tmp, j
    for i in range(k):
        perm[i] = <int>i
    for i in range(k - 1, 0, -1):
        n = <uint64_t>(i + 1)
        rem = (0xFFFFFFFFFFFFFFFFULL % n + 1) % n  # 2**64 mod n
        while True:
            x = draw(key, counter)
            counter += 1
            if rem == 0 or x < <uint64_t>(0 - rem):
                break
        j = <int>(x % n)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp


def simulate_histogram(t, starts, sizes, q, double slope, double intercept,
                       double noise_sd, seed, Py_ssize_t trial_start,
                       Py_ssize_t trial_stop):
    """Histogram of run counts over trials ``[trial_start, trial_stop)``.

    Returns ``(hist, reruns)``.
    """
    cdef cnp.ndarray[double, ndim=1, mode="c"] t_arr = np.ascontiguousarray(t, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] q_arr = np.ascontiguousarray(q, dtype=np.float64)
    cdef const int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const int64_t[::1] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef Py_ssize_t n = t_arr.shape[0]
    cdef Py_ssize_t p = q_arr.shape[1]
    cdef Py_ssize_t ngroups = st.shape[0]
    hist = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] hv = hist
    cdef uint64_t useed = <uint64_t>int(seed)
    cdef uint64_t seed_key = mix64(useed)
    cdef int64_t reruns = 0
    cdef Py_ssize_t maxk = 1
    cdef Py_ssize_t g
    for g in range(ngroups):
        if sz[g] > maxk:
            maxk = sz[g]

    cdef double* e = <double*>malloc(n * sizeof(double))
    cdef double* coef = <double*>malloc(p * sizeof(double))
    cdef int* perm = <int*>malloc(maxk * sizeof(int))
    cdef char* signs = <char*>malloc(n * sizeof(char))
    cdef char* block = <char*>malloc(maxk * sizeof(char))
    if not (e and coef and perm and signs and block):
        free(e); free(coef); free(perm); free(signs); free(block)
        raise MemoryError()

    cdef const double* tp = &t_arr[0]
    cdef const double* qp = &q_arr[0, 0]
    cdef Py_ssize_t trial, i, k, s0, runs
    cdef uint64_t trial_key, key, attempt, pkey
    try:
        with nogil:
            for trial in range(trial_start, trial_stop):
                trial_key = derive(seed_key, <uint64_t>trial)
                normals(derive(trial_key, NOISE), e, n)
                attempt = 0
                while not residuals(tp, qp, n, p, slope, intercept, noise_sd, e, coef):
                    normals(derive(derive(trial_key, RERUN), attempt), e, n)
                    attempt += 1
                reruns += attempt
                for i in range(n):
                    signs[i] = 1 if e[i] > 0.0 else 0
                pkey = derive(mix64(derive(trial_key, PERMUTATION)), 0)
                for g in range(ngroups):
                    k = sz[g]
                    if k > 1:
                        s0 = st[g]
                        fisher_yates(derive(pkey, <uint64_t>g), perm, k)
                        for i in range(k):
                            block[i] = signs[s0 + perm[i]]
                        for i in range(k):
                            signs[s0 + i] = block[i]
                runs = 1
                for i in range(1, n):
                    if signs[i] != signs[i - 1]:
                        runs += 1
                hv[runs] += 1
    finally:
        free(e); free(coef); free(perm); free(signs); free(block)
    return hist, int(reruns)
