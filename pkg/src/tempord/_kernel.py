"""Compiled inner loops for the temporal-order matrix.

Each cell is evaluated with a fixed sequential summation order, so the
result of a row never depends on which thread computed it.
"""

import math

import numba
import numpy as np

from tempord.metrics import FLAT_RTOL

LM, TD = 0, 1
MANHATTAN, FOURIER = 0, 1
NONE, UNIFORM, GAUSSIAN = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def window_stats(v, starts, L, scaling):
    """Per-window (offset, gain, flat, mean, centered sum of squares)."""
    n = starts.size
    offset = np.zeros(n)
    gain = np.ones(n)
    flat = np.zeros(n, dtype=np.bool_)
    mean = np.zeros(n)
    ssq = np.zeros(n)
    for w in range(n):
        t = starts[w]
        lo = v[t]
        hi = v[t]
        acc = 0.0
        for i in range(L):
            a = v[t + i]
            acc += a
            if a < lo:
                lo = a
            if a > hi:
                hi = a
        m = acc / L
        acc = 0.0
        for i in range(L):
            d = v[t + i] - m
            acc += d * d
        mean[w] = m
        ssq[w] = acc
        flat[w] = hi - lo <= FLAT_RTOL * max(abs(lo), abs(hi))
        if flat[w]:
            continue
        if scaling == UNIFORM:
            offset[w] = lo
            gain[w] = 1.0 / (hi - lo)
        elif scaling == GAUSSIAN:
            offset[w] = m
            gain[w] = 1.0 / math.sqrt(acc / (L - 1))
    return offset, gain, flat, mean, ssq


@numba.njit(cache=True, nogil=True)
def fill_rows(x, y, starts, shifts, lag_offset, L, method, kind, scaling,
              o1, g1, f1, m1, s1, o2, g2, f2, m2, s2,
              r0, r1, scores, defined):
    n2 = y.size
    even = L % 2 == 0
    for w in range(r0, r1):
        t = starts[w]
        for k in range(shifts.size):
            j = t + shifts[k] - lag_offset
            if j < 0 or j > n2 - L:
                continue
            if method == LM:
                if f1[w] or f2[j]:
                    continue
                a_m = m1[w]
                b_m = m2[j]
                sxy = 0.0
                for i in range(L):
                    sxy += (x[t + i] - a_m) * (y[j + i] - b_m)
                r2 = sxy * sxy / (s1[w] * s2[j])
                if r2 > 1.0:
                    r2 = 1.0
                scores[w, k] = 1.0 - (1.0 - r2) * (L - 1) / (L - 2)
                defined[w, k] = True
                continue
            if scaling != NONE and (f1[w] or f2[j]):
                continue
            a_o = o1[w]
            a_g = g1[w]
            b_o = o2[j]
            b_g = g2[j]
            if kind == MANHATTAN:
                acc = 0.0
                for i in range(L):
                    acc += abs((x[t + i] - a_o) * a_g - (y[j + i] - b_o) * b_g)
                scores[w, k] = acc
            else:
                # half-spectrum energy from Parseval plus the two real bins
                sq = 0.0
                dc = 0.0
                alt = 0.0
                sign = 1.0
                for i in range(L):
                    d = (x[t + i] - a_o) * a_g - (y[j + i] - b_o) * b_g
                    sq += d * d
                    dc += d
                    alt += sign * d
                    sign = -sign
                energy = L * sq + dc * dc
                if even:
                    energy += alt * alt
                scores[w, k] = math.sqrt(max(energy, 0.0) / 2.0)
            defined[w, k] = True
