# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled counterparts of restrictml._kernels._python.

Same algorithms, same splitmix64 stream; see the Python module for the
description of each kernel.
"""

import numpy as np

from ._python import _bias
cimport numpy as cnp
from libc.math cimport exp, tanh, pow, fabs
from libc.stdint cimport uint64_t, uint8_t, int64_t

cnp.import_array()

cdef enum:
    LINEAR = 0
    POLY = 1
    RBF = 2
    SIGMOID = 3


cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil


cdef class NativeAutomaton:
    cdef uint64_t[:, ::1] masks
    cdef uint64_t[::1] starts
    cdef uint64_t[::1] ends
    cdef int64_t[::1] bit_pattern
    cdef int64_t[::1] bit_length
    cdef Py_ssize_t nwords

    def __init__(self, masks, starts, ends, bit_pattern, bit_length):
        self.masks = np.ascontiguousarray(masks, dtype=np.uint64)
        self.starts = np.ascontiguousarray(starts, dtype=np.uint64)
        self.ends = np.ascontiguousarray(ends, dtype=np.uint64)
        self.bit_pattern = np.ascontiguousarray(bit_pattern, dtype=np.int64)
        self.bit_length = np.ascontiguousarray(bit_length, dtype=np.int64)
        self.nwords = self.starts.shape[0]


def scan(NativeAutomaton auto, const uint8_t[::1] codes):
    cdef Py_ssize_t n = codes.shape[0]
    cdef Py_ssize_t nw = auto.nwords
    cdef Py_ssize_t i, w
    cdef uint64_t carry, word, hit, low
    cdef int bit
    cdef list pos_out = []
    cdef list pat_out = []
    if nw == 0 or n == 0:
        return pos_out, pat_out
    cdef uint64_t[::1] state_mv = np.zeros(nw, dtype=np.uint64)
    cdef uint64_t* state = &state_mv[0]
    cdef const uint64_t* starts = &auto.starts[0]
    cdef const uint64_t* ends = &auto.ends[0]
    cdef const uint64_t* masks = &auto.masks[0, 0]
    cdef const uint64_t* mask
    cdef const int64_t* bit_pattern = &auto.bit_pattern[0]
    cdef const int64_t* bit_length = &auto.bit_length[0]
    cdef uint64_t any_hit
    for i in range(n):
        carry = 0
        any_hit = 0
        mask = masks + codes[i] * nw
        for w in range(nw):
            word = state[w]
            state[w] = ((word << 1) | carry | starts[w]) & mask[w]
            carry = word >> 63
            any_hit |= state[w] & ends[w]
        if not any_hit:
            continue
        for w in range(nw):
            hit = state[w] & ends[w]
            while hit:
                low = hit & (~hit + 1)
                bit = 63 - __builtin_clzll(low)
                pos_out.append(i - bit_length[w * 64 + bit] + 1)
                pat_out.append(bit_pattern[w * 64 + bit])
                hit ^= low
    return pos_out, pat_out


# ---------------------------------------------------------------------------
# SMO

cdef struct Rng:
    uint64_t state


cdef inline uint64_t rng_next(Rng* r) noexcept nogil:
    cdef uint64_t z
    r.state += 0x9E3779B97F4A7C15ULL
    z = r.state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline Py_ssize_t rng_below(Rng* r, Py_ssize_t n) noexcept nogil:
    return <Py_ssize_t>(rng_next(r) % <uint64_t>n)


cdef inline double ipow(double x, int p) noexcept nogil:
    cdef double r = 1.0
    while p > 0:
        if p & 1:
            r *= x
        x *= x
        p >>= 1
    return r


cdef inline double kval(int kind, const double* u, const double* v, Py_ssize_t d,
                        double gamma, double coef0, int degree) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t k
    if kind == RBF:
        for k in range(d):
            t = u[k] - v[k]
            acc += t * t
        return exp(-gamma * acc)
    for k in range(d):
        acc += u[k] * v[k]
    if kind == LINEAR:
        return acc
    if kind == POLY:
        return ipow(gamma * acc + coef0, degree)
    return tanh(gamma * acc + coef0)


cdef inline void pair_update(double* ai, double* aj, double gi, double gj, double yi,
                             double yj, double quad, double C) noexcept nogil:
    cdef double delta, diff, total
    if yi != yj:
        delta = (-gi - gj) / quad
        diff = ai[0] - aj[0]
        ai[0] += delta
        aj[0] += delta
        if diff > 0:
            if aj[0] < 0:
                aj[0] = 0.0
                ai[0] = diff
        elif ai[0] < 0:
            ai[0] = 0.0
            aj[0] = -diff
        if diff > 0:
            if ai[0] > C:
                ai[0] = C
                aj[0] = C - diff
        elif aj[0] > C:
            aj[0] = C
            ai[0] = C + diff
    else:
        delta = (gi - gj) / quad
        total = ai[0] + aj[0]
        ai[0] -= delta
        aj[0] += delta
        if total > C:
            if ai[0] > C:
                ai[0] = C
                aj[0] = total - C
        elif aj[0] < 0:
            aj[0] = 0.0
            ai[0] = total
        if total > C:
            if aj[0] > C:
                aj[0] = C
                ai[0] = total - C
        elif ai[0] < 0:
            ai[0] = 0.0
            aj[0] = total


cdef void kernel_row(int kind, const double* X, Py_ssize_t n, Py_ssize_t d, Py_ssize_t i,
                     double gamma, double coef0, int degree, double* out) noexcept nogil:
    cdef Py_ssize_t t
    for t in range(n):
        out[t] = kval(kind, X + i * d, X + t * d, d, gamma, coef0, degree)


# rows are cached as a dense matrix up to this many entries (256 MiB)
cdef Py_ssize_t CACHE_ENTRIES = 32 * 1024 * 1024


def smo(X, y, int kind, double gamma, double coef0, int degree, double C,
        double tol, double eps, long max_passes, unsigned long long seed):
    cdef Py_ssize_t n = len(y)
    cdef Rng rng
    cdef Py_ssize_t i, j, t, tmp
    rng.state = seed
    cdef Py_ssize_t[::1] order = np.arange(n, dtype=np.intp)
    for t in range(n - 1, 0, -1):
        j = rng_below(&rng, t + 1)
        tmp = order[t]
        order[t] = order[j]
        order[j] = tmp
    perm = np.asarray(order)
    cdef double[:, ::1] Xp_mv = np.ascontiguousarray(np.asarray(X, dtype=np.float64)[perm])
    cdef double[::1] yp_mv = np.ascontiguousarray(np.asarray(y, dtype=np.float64)[perm])
    cdef Py_ssize_t d = Xp_mv.shape[1]
    cdef double[::1] alpha_mv = np.zeros(n)
    cdef double[::1] G_mv = -np.ones(n)
    cdef double[::1] diag_mv = np.empty(n)
    cdef double[::1] Ki_mv = np.empty(n)
    cdef double[::1] Kj_mv = np.empty(n)
    if n == 0:
        return np.zeros(0), 0.0, 0, True
    cdef const double* Xp = &Xp_mv[0, 0]
    cdef double* yp = &yp_mv[0]
    cdef double* alpha = &alpha_mv[0]
    cdef double* G = &G_mv[0]
    cdef double* diag = &diag_mv[0]
    cdef double* Ki = &Ki_mv[0]
    cdef double* Kj = &Kj_mv[0]
    cdef double[:, ::1] full_mv
    cdef double* full = NULL
    if n * n <= CACHE_ENTRIES:
        full_mv = np.empty((n, n))
        full = &full_mv[0, 0]
        with nogil:
            for i in range(n):
                for t in range(i, n):
                    full[i * n + t] = kval(kind, Xp + i * d, Xp + t * d, d, gamma, coef0, degree)
                    full[t * n + i] = full[i * n + t]
    cdef long long budget = <long long>max_passes * n
    cdef long long steps = 0
    cdef bint converged = False
    cdef bint in_up, in_low, any_low
    cdef double gmax, gmax2, v, bgap, quad, obj, obj_min, ai, aj, di, dj, ci, cj
    for t in range(n):
        diag[t] = kval(kind, Xp + t * d, Xp + t * d, d, gamma, coef0, degree)

    with nogil:
        while steps < budget:
            gmax = -1e308 * 10
            i = -1
            gmax2 = -1e308 * 10
            any_low = False
            for t in range(n):
                if yp[t] > 0:
                    in_up = alpha[t] < C
                    in_low = alpha[t] > 0
                else:
                    in_up = alpha[t] > 0
                    in_low = alpha[t] < C
                if in_up and -yp[t] * G[t] > gmax:
                    gmax = -yp[t] * G[t]
                    i = t
                if in_low:
                    any_low = True
                    if yp[t] * G[t] > gmax2:
                        gmax2 = yp[t] * G[t]
            if i < 0 or not any_low or gmax + gmax2 <= tol:
                converged = True
                break
            if full != NULL:
                Ki = full + i * n
            else:
                Ki = &Ki_mv[0]
                kernel_row(kind, Xp, n, d, i, gamma, coef0, degree, Ki)
            j = -1
            obj_min = 1e308 * 10
            for t in range(n):
                if yp[t] > 0:
                    in_low = alpha[t] > 0
                else:
                    in_low = alpha[t] < C
                if not in_low:
                    continue
                bgap = gmax + yp[t] * G[t]
                if bgap > 0:
                    quad = diag[i] + diag[t] - 2.0 * Ki[t]
                    if not quad > 0:
                        quad = eps
                    obj = -(bgap * bgap) / quad
                    if obj < obj_min:
                        obj_min = obj
                        j = t
            if j < 0:
                converged = True
                break
            quad = diag[i] + diag[j] - 2.0 * Ki[j]
            if not quad > 0:
                quad = eps
            ai = alpha[i]
            aj = alpha[j]
            pair_update(&ai, &aj, G[i], G[j], yp[i], yp[j], quad, C)
            di = ai - alpha[i]
            dj = aj - alpha[j]
            alpha[i] = ai
            alpha[j] = aj
            if full != NULL:
                Kj = full + j * n
            else:
                Kj = &Kj_mv[0]
                kernel_row(kind, Xp, n, d, j, gamma, coef0, degree, Kj)
            ci = yp[i] * di
            cj = yp[j] * dj
            for t in range(n):
                G[t] += yp[t] * (ci * Ki[t] + cj * Kj[t])
            steps += 1

        # refresh the gradient before reading off the bias
        Ki = &Ki_mv[0]
        for t in range(n):
            G[t] = 0.0
        for i in range(n):
            if alpha[i] != 0.0:
                kernel_row(kind, Xp, n, d, i, gamma, coef0, degree, Ki)
                ci = alpha[i] * yp[i]
                for t in range(n):
                    G[t] += ci * Ki[t]
        for t in range(n):
            G[t] = yp[t] * G[t] - 1.0

    b = _bias(np.asarray(alpha_mv), np.asarray(G_mv), np.asarray(yp_mv), C)
    out = np.zeros(n)
    out[perm] = np.asarray(alpha_mv)
    return out, b, int((steps + n - 1) // n), bool(converged)
