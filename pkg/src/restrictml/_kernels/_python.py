"""Pure-Python hot kernels; the reference the compiled module mirrors.

Two kernels live here:

``scan``
    Bit-parallel Shift-And simulation of the nondeterministic automaton for
    every recognition site at once. Each site occupies a contiguous run of
    bits; a degenerate position simply sets its bit in several per-base
    masks, so IUPAC classes cost nothing extra. Python integers act as the
    arbitrary-width bit vector.

``smo``
    Sequential minimal optimization over maximal violating pairs with a
    second-order partner choice and a full gradient cache.
"""

from __future__ import annotations

import numpy as np

M64 = (1 << 64) - 1

LINEAR, POLY, RBF, SIGMOID = 0, 1, 2, 3


class SplitMix64:
    """Tiny deterministic generator shared bit-for-bit with the native core."""

    def __init__(self, seed: int):
        self.state = seed & M64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n

    def shuffle(self, arr: list) -> None:
        for i in range(len(arr) - 1, 0, -1):
            j = self.below(i + 1)
            arr[i], arr[j] = arr[j], arr[i]


# --------------------------------------------------------------------------
# multi-pattern scan


def _words_to_int(words: np.ndarray) -> int:
    return sum(int(w) << (64 * i) for i, w in enumerate(words))


class PyAutomaton:
    __slots__ = ("masks", "starts", "ends", "bit_pattern", "bit_length")

    def __init__(self, masks, starts, ends, bit_pattern, bit_length):
        self.masks = [_words_to_int(m) for m in masks]
        self.starts = _words_to_int(starts)
        self.ends = _words_to_int(ends)
        self.bit_pattern = bit_pattern.tolist()
        self.bit_length = bit_length.tolist()


def scan(auto: PyAutomaton, codes: bytes) -> tuple[list[int], list[int]]:
    """Return ``(starts, pattern_ids)`` in order of match end position."""
    masks, starts, ends = auto.masks, auto.starts, auto.ends
    bit_pattern, bit_length = auto.bit_pattern, auto.bit_length
    pos_out: list[int] = []
    pat_out: list[int] = []
    state = 0
    for i, c in enumerate(codes):
        state = ((state << 1) | starts) & masks[c]
        hit = state & ends
        while hit:
            low = hit & -hit
            bit = low.bit_length() - 1
            pos_out.append(i - bit_length[bit] + 1)
            pat_out.append(bit_pattern[bit])
            hit ^= low
    return pos_out, pat_out


# --------------------------------------------------------------------------
# SMO


def kernel_row(kind, X, sq, x, xsq, gamma, coef0, degree):
    dots = X @ x
    if kind == LINEAR:
        return dots
    if kind == POLY:
        return (gamma * dots + coef0) ** degree
    if kind == RBF:
        return np.exp(-gamma * np.maximum(sq - 2.0 * dots + xsq, 0.0))
    return np.tanh(gamma * dots + coef0)


def kernel_value(kind, u, v, gamma, coef0, degree) -> float:
    if kind == LINEAR:
        return float(u @ v)
    if kind == POLY:
        return float((gamma * (u @ v) + coef0) ** degree)
    if kind == RBF:
        d = u - v
        return float(np.exp(-gamma * (d @ d)))
    return float(np.tanh(gamma * (u @ v) + coef0))


def smo(X, y, kind, gamma, coef0, degree, C, tol, eps, max_passes, seed):
    """Solve the soft-margin dual. Returns ``(alpha, b, passes, converged)``.

    Decision function convention: ``f(x) = sum(alpha_i y_i K(x_i, x)) + b``.
    Each step optimizes the maximal violating pair with second-order choice
    of the partner; ``eps`` is the curvature floor for non-PSD pairs. The
    rows are visited in a seeded order so ties resolve reproducibly.
    Stops when the violation gap falls to ``tol``, which bounds every KKT
    violation by ``tol``. ``max_passes`` budgets ``n`` steps per pass.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = len(y)
    order = list(range(n))
    SplitMix64(seed).shuffle(order)
    order = np.array(order, dtype=np.int64)
    Xp, yp = X[order], y[order]
    sq = np.einsum("ij,ij->i", Xp, Xp)
    diag = np.array([kernel_value(kind, Xp[i], Xp[i], gamma, coef0, degree) for i in range(n)])
    alpha = np.zeros(n)
    G = -np.ones(n)
    pos = yp > 0

    def row(i):
        return kernel_row(kind, Xp, sq, Xp[i], sq[i], gamma, coef0, degree)

    budget = max_passes * max(n, 1)
    steps = 0
    converged = False
    while steps < budget:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        if not up.any() or not low.any():
            converged = True
            break
        score = np.where(up, -yp * G, -np.inf)
        i = int(np.argmax(score))
        gmax = score[i]
        v = yp * G
        gmax2 = v[low].max()
        if gmax + gmax2 <= tol:
            converged = True
            break
        Ki = row(i)
        bgap = gmax + v
        cand = low & (bgap > 0)
        if not cand.any():
            converged = True
            break
        quad = diag[i] + diag - 2.0 * Ki
        quad = np.where(quad > 0, quad, eps)
        obj = np.where(cand, -(bgap * bgap) / quad, np.inf)
        j = int(np.argmin(obj))
        ai, aj = _pair_update(alpha[i], alpha[j], G[i], G[j], yp[i], yp[j], quad[j], C)
        di, dj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        Kj = row(j)
        G += yp * (yp[i] * di * Ki + yp[j] * dj * Kj)
        steps += 1
    # refresh the gradient before reading off the bias
    fy = np.zeros(n)
    for i in np.flatnonzero(alpha):
        fy += alpha[i] * yp[i] * row(i)
    G = yp * fy - 1.0
    b = _bias(alpha, G, yp, C)
    out = np.zeros(n)
    out[order] = alpha
    passes = -(-steps // max(n, 1))
    return out, b, passes, converged


def _pair_update(ai, aj, gi, gj, yi, yj, quad, C):
    if yi != yj:
        delta = (-gi - gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        delta = (gi - gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total
    return ai, aj


def _bias(alpha, G, y, C) -> float:
    """``b = -rho``: mean of ``y G`` over free vectors, else the feasible midpoint."""
    yg = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(-yg[free].mean())
    at_c, at_0 = alpha >= C, alpha <= 0
    ub_mask = (at_c & (y < 0)) | (at_0 & (y > 0))
    lb_mask = (at_c & (y > 0)) | (at_0 & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    if not np.isfinite(ub):
        return float(-lb)
    if not np.isfinite(lb):
        return float(-ub)
    return float(-(ub + lb) / 2)
