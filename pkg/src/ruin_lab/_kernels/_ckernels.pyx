# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_pykernels`` for the contracts."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def scan_paths(double[:, ::1] incr, double[::1] csum, double[::1] cmax,
               long long[::1] hit, double[::1] hit_val, double cap, bint strict,
               long long step0):
    cdef Py_ssize_t paths = incr.shape[0], steps = incr.shape[1]
    cdef Py_ssize_t p, t
    cdef double s, mx
    with nogil:
        for p in range(paths):
            if hit[p] >= 0:
                continue
            s = csum[p]
            mx = cmax[p]
            for t in range(steps):
                s = s + incr[p, t]
                if s > mx:
                    mx = s
                if s > cap or (strict and s >= cap):
                    hit[p] = step0 + t + 1
                    hit_val[p] = s
                    break
            csum[p] = s
            cmax[p] = mx


def scan_lattice(double[:, ::1] u, double[::1] base, double[:, ::1] thr, double[:, ::1] jump,
                 double[::1] csum, double[::1] cmax, long long[::1] hit, double[::1] hit_val,
                 double cap, bint strict, long long step0):
    cdef Py_ssize_t paths = u.shape[0], steps = u.shape[1]
    cdef Py_ssize_t n_phase = base.shape[0], width = thr.shape[1]
    cdef Py_ssize_t p, t, k, ph, ph0 = step0 % n_phase
    cdef double s, mx, x, v
    with nogil:
        for p in range(paths):
            if hit[p] >= 0:
                continue
            s = csum[p]
            mx = cmax[p]
            ph = ph0
            for t in range(steps):
                v = u[p, t]
                x = base[ph]
                for k in range(width):
                    x = x + (v >= thr[ph, k]) * jump[ph, k]
                s = s + x
                mx = s if s > mx else mx
                if s > cap or (strict and s >= cap):
                    hit[p] = step0 + t + 1
                    hit_val[p] = s
                    break
                ph = ph + 1
                if ph == n_phase:
                    ph = 0
            csum[p] = s
            cmax[p] = mx


def spitzer_accumulate(double[:, ::1] incr, double[::1] csum, double[::1] y,
                       long long[::1] counts, long long n0):
    cdef Py_ssize_t paths = incr.shape[0], steps = incr.shape[1]
    cdef Py_ssize_t p, t
    cdef double s, acc
    with nogil:
        for p in range(paths):
            s = csum[p]
            acc = y[p]
            for t in range(steps):
                s = s + incr[p, t]
                if s > 0.0:
                    counts[t] += 1
                    acc = acc + 1.0 / <double>(n0 + t + 1)
            csum[p] = s
            y[p] = acc


def dp_ruin_curve(pmfs, long long c, long long u, long long horizon, bint strict):
    cdef double[:, ::1] h = np.ascontiguousarray(pmfs, dtype=np.float64)
    cdef Py_ssize_t n_phase = h.shape[0], width = h.shape[1]
    cdef Py_ssize_t cap = u + c * horizon + 1
    cdef double[::1] cur = np.zeros(cap)
    cdef double[::1] new = np.zeros(cap)
    cdef double[::1] tmp
    cdef double[::1] psi = np.empty(horizon)
    cdef Py_ssize_t t, k, w, n, row, lo, hi
    cdef long long thr = 1 if strict else 0
    cdef double hk, lost, ruined = 0.0
    cur[u] = 1.0
    n = u + 1
    with nogil:
        for t in range(horizon):
            row = t % n_phase
            for w in range(n + c):
                new[w] = 0.0
            lost = 0.0
            for k in range(width):
                hk = h[row, k]
                if hk == 0.0:
                    continue
                lo = k - c + thr
                if lo > 0:
                    hi = lo if lo < n else n
                    for w in range(hi):
                        lost += hk * cur[w]
                else:
                    lo = 0
                for w in range(lo, n):
                    new[w + c - k] += hk * cur[w]
            ruined += lost
            psi[t] = ruined
            tmp = cur
            cur = new
            new = tmp
            n = n + c
    return np.asarray(psi)


def truncated_convolve(a, b, Py_ssize_t m):
    cdef double[::1] x = np.ascontiguousarray(a[:m], dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(b[:m], dtype=np.float64)
    out_arr = np.zeros(m)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, nx = x.shape[0], ny = y.shape[0], jmax
    cdef double s
    with nogil:
        for i in range(m):
            s = 0.0
            jmax = i if i < nx - 1 else nx - 1
            for j in range(jmax + 1):
                if i - j < ny:
                    s += x[j] * y[i - j]
            out[i] = s
    return out_arr


def panjer_geometric(f, double q, Py_ssize_t m):
    fm_arr = np.zeros(m)
    k0 = min(m, f.shape[0])
    fm_arr[:k0] = f[:k0]
    cdef double[::1] fm = fm_arr
    g_arr = np.empty(m)
    cdef double[::1] g = g_arr
    cdef double d = 1.0 - q * fm[0]
    cdef double coef = q / d
    cdef Py_ssize_t k, j
    cdef double s
    g[0] = (1.0 - q) / d
    with nogil:
        for k in range(1, m):
            s = 0.0
            for j in range(1, k + 1):
                s += fm[j] * g[k - j]
            g[k] = coef * s
    return g_arr
