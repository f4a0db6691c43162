# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise kernels.

Every routine here has a drop-in twin in ``_fallback.py``. Arrays are
C-contiguous float64 of shape (N, d); index arrays are int64. Pair sums for
particle i are accumulated in ascending neighbour order, so a single batch
holding every index reproduces the full system bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.int64_t idx_t

cdef enum:
    KIND_CONSTANT = 0
    KIND_INVPOW = 1
    KIND_TABULATED = 2


cdef inline double _psi(double r2, int kind, const double[::1] par,
                        const double[::1] grid, const double[::1] vals) noexcept nogil:
    cdef double r, w
    cdef Py_ssize_t lo, hi, mid, m
    if kind == KIND_CONSTANT:
        return par[0]
    if kind == KIND_INVPOW:
        return pow(1.0 + r2, -par[0])
    r = sqrt(r2)
    m = grid.shape[0]
    if r <= grid[0]:
        return vals[0]
    if r >= grid[m - 1]:
        return vals[m - 1]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if grid[mid] <= r:
            lo = mid
        else:
            hi = mid
    w = (r - grid[lo]) / (grid[hi] - grid[lo])
    return vals[lo] + w * (vals[hi] - vals[lo])


cdef inline double _dist2(const double[:, ::1] x, Py_ssize_t i, Py_ssize_t j,
                          Py_ssize_t d) noexcept nogil:
    cdef double s = 0.0, dx
    cdef Py_ssize_t c
    for c in range(d):
        dx = x[j, c] - x[i, c]
        s += dx * dx
    return s


cdef void _pair_acc(const double[:, ::1] x, const double[:, ::1] v,
                    const idx_t* idx, Py_ssize_t p, Py_ssize_t d,
                    int kind, const double[::1] par, const double[::1] grid,
                    const double[::1] vals, double* acc) noexcept nogil:
    # acc is p*d, zeroed by the caller
    cdef Py_ssize_t a, b, c, i, j
    cdef double w, f
    for a in range(p):
        i = idx[a]
        for b in range(a + 1, p):
            j = idx[b]
            w = _psi(_dist2(x, i, j, d), kind, par, grid, vals)
            for c in range(d):
                f = w * (v[j, c] - v[i, c])
                acc[a * d + c] += f
                acc[b * d + c] -= f


cdef int _advance_one(double[:, ::1] x, double[:, ::1] v, const idx_t* idx,
                      Py_ssize_t p, int kind, const double[::1] par,
                      const double[::1] grid, const double[::1] vals,
                      double kappa, double dt, Py_ssize_t nsub,
                      double* acc) noexcept nogil:
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t s, a, c, i
    cdef double scale = kappa / (p - 1)
    for s in range(nsub):
        for a in range(p * d):
            acc[a] = 0.0
        _pair_acc(x, v, idx, p, d, kind, par, grid, vals, acc)
        for a in range(p):
            i = idx[a]
            for c in range(d):
                x[i, c] = x[i, c] + dt * v[i, c]
                v[i, c] = v[i, c] + dt * (scale * acc[a * d + c])
    return 0


def full_rhs(const double[:, ::1] x, const double[:, ::1] v, int kind,
             const double[::1] par, const double[::1] grid, const double[::1] vals,
             double kappa, double[:, ::1] dv):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], a, c
    cdef idx_t* idx = <idx_t*> malloc(n * sizeof(idx_t))
    cdef double* acc = <double*> malloc(n * d * sizeof(double))
    cdef double scale = kappa / (n - 1)
    try:
        with nogil:
            for a in range(n):
                idx[a] = a
            for a in range(n * d):
                acc[a] = 0.0
            _pair_acc(x, v, idx, n, d, kind, par, grid, vals, acc)
            for a in range(n):
                for c in range(d):
                    dv[a, c] = scale * acc[a * d + c]
    finally:
        free(idx)
        free(acc)


def batch_rhs(const double[:, ::1] x, const double[:, ::1] v, const idx_t[::1] batch,
              int kind, const double[::1] par, const double[::1] grid,
              const double[::1] vals, double kappa, double[:, ::1] dv):
    cdef Py_ssize_t p = batch.shape[0], d = x.shape[1], a, c
    cdef double* acc = <double*> malloc(p * d * sizeof(double))
    cdef double scale = kappa / (p - 1)
    try:
        with nogil:
            for a in range(p * d):
                acc[a] = 0.0
            _pair_acc(x, v, &batch[0], p, d, kind, par, grid, vals, acc)
            for a in range(p):
                for c in range(d):
                    dv[batch[a], c] = scale * acc[a * d + c]
    finally:
        free(acc)


def advance_full(double[:, ::1] x, double[:, ::1] v, int kind,
                 const double[::1] par, const double[::1] grid, const double[::1] vals,
                 double kappa, double dt, Py_ssize_t nsub):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], a
    cdef idx_t* idx = <idx_t*> malloc(n * sizeof(idx_t))
    cdef double* acc = <double*> malloc(n * d * sizeof(double))
    try:
        with nogil:
            for a in range(n):
                idx[a] = a
            _advance_one(x, v, idx, n, kind, par, grid, vals, kappa, dt, nsub, acc)
    finally:
        free(idx)
        free(acc)


def advance_batches(double[:, ::1] x, double[:, ::1] v, const idx_t[:, ::1] batches,
                    int kind, const double[::1] par, const double[::1] grid,
                    const double[::1] vals, double kappa, double dt, Py_ssize_t nsub):
    """Evolve each row of ``batches`` in turn for ``nsub`` Euler sub-steps."""
    cdef Py_ssize_t m = batches.shape[0], p = batches.shape[1], d = x.shape[1], r
    if m == 0:
        return
    cdef double* acc = <double*> malloc(p * d * sizeof(double))
    try:
        with nogil:
            for r in range(m):
                _advance_one(x, v, &batches[r, 0], p, kind, par, grid, vals,
                             kappa, dt, nsub, acc)
    finally:
        free(acc)


def advance_mc(double[:, ::1] x, double[:, ::1] v, const idx_t[:, ::1] nbrs,
               int kind, const double[::1] par, const double[::1] grid,
               const double[::1] vals, double kappa, double dt, Py_ssize_t nsub):
    """Simultaneous update where particle i only feels the neighbours in row i."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], q = nbrs.shape[1]
    cdef Py_ssize_t s, i, b, j, c
    cdef double w, scale = kappa / q
    cdef double* acc = <double*> malloc(n * d * sizeof(double))
    try:
        with nogil:
            for s in range(nsub):
                for i in range(n * d):
                    acc[i] = 0.0
                for i in range(n):
                    for b in range(q):
                        j = nbrs[i, b]
                        w = _psi(_dist2(x, i, j, d), kind, par, grid, vals)
                        for c in range(d):
                            acc[i * d + c] += w * (v[j, c] - v[i, c])
                for i in range(n):
                    for c in range(d):
                        x[i, c] = x[i, c] + dt * v[i, c]
                        v[i, c] = v[i, c] + dt * (scale * acc[i * d + c])
    finally:
        free(acc)


def fisher_yates(idx_t[::1] work, const idx_t[:, ::1] offsets, idx_t[:, ::1] out):
    """Partial Fisher-Yates: row r takes positions 0..p-1 of a shuffle of ``work``.

    ``offsets[r, k]`` must lie in ``[0, len(work) - k)``. The swaps are undone
    after each row, so rows do not depend on how draws are split across calls.
    """
    cdef Py_ssize_t m = offsets.shape[0], p = offsets.shape[1], r, k, j
    cdef idx_t tmp
    with nogil:
        for r in range(m):
            for k in range(p):
                j = k + offsets[r, k]
                tmp = work[k]
                work[k] = work[j]
                work[j] = tmp
                out[r, k] = work[k]
            for k in range(p - 1, -1, -1):
                j = k + offsets[r, k]
                tmp = work[k]
                work[k] = work[j]
                work[j] = tmp


def psi_many(const double[::1] r2, int kind, const double[::1] par,
             const double[::1] grid, const double[::1] vals):
    cdef Py_ssize_t n = r2.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _psi(r2[i], kind, par, grid, vals)
    return out


# disjoint rows commute, so sequential evolution is the simultaneous one
advance_disjoint = advance_batches
