# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops in ``halfspace._core_py``.

Same arguments, same results (the arithmetic is performed in the same order
for every value that is compared bit-for-bit in the tests).
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


def advance_walkers(cnp.int64_t[::1] pos, const double[:, ::1] U,
                    const double[:, ::1] Q, cnp.int64_t[:, ::1] out):
    cdef Py_ssize_t R = U.shape[0], L = U.shape[1], W = Q.shape[1]
    cdef Py_ssize_t r, t
    cdef cnp.int64_t s
    cdef int bad = 0
    with nogil:
        for r in range(R):
            s = pos[r]
            for t in range(L):
                if s < 0 or s >= W:
                    bad = 1
                    break
                if U[r, t] <= Q[t, s]:
                    s += 1
                else:
                    s -= 1
                out[r, t] = s
            pos[r] = s
            if bad:
                break
    if bad:
        raise IndexError("walker left the up-probability table")
    return np.asarray(out)


def advance_coupled(cnp.int64_t[::1] lo, cnp.int64_t[::1] hi,
                    const double[:, ::1] U, const double[:, ::1] Q,
                    cnp.int64_t[:, ::1] out_lo, cnp.int64_t[:, ::1] out_hi):
    cdef Py_ssize_t R = U.shape[0], L = U.shape[1], W = Q.shape[1]
    cdef Py_ssize_t r, t
    cdef cnp.int64_t a, b
    cdef double u, qa, qb, small, large
    cdef int bad = 0
    with nogil:
        for r in range(R):
            a = lo[r]
            b = hi[r]
            for t in range(L):
                if a < 0 or a >= W or b < 0 or b >= W:
                    bad = 1
                    break
                u = U[r, t]
                qa = Q[t, a]
                qb = Q[t, b]
                if qa <= qb:
                    small = qa
                    large = qb
                else:
                    small = qb
                    large = qa
                if u <= small:
                    a += 1
                    b += 1
                elif u <= large:
                    if qa >= qb:
                        a += 1
                        b -= 1
                    else:
                        a -= 1
                        b += 1
                else:
                    a -= 1
                    b -= 1
                out_lo[r, t] = a
                out_hi[r, t] = b
            lo[r] = a
            hi[r] = b
            if bad:
                break
    if bad:
        raise IndexError("walker left the up-probability table")
    return np.asarray(out_lo), np.asarray(out_hi)


def fk_backward(const double[:, ::1] terminal, const double[:, :, ::1] factor,
                const double[:, ::1] Q, const double[:, ::1] absorb, stop_line):
    cdef Py_ssize_t R = factor.shape[0], L = factor.shape[1], W = factor.shape[2]
    cdef Py_ssize_t r, t, s
    cdef long stop = -1 if stop_line is None else <long>stop_line
    cdef double[:, ::1] V = np.array(terminal, dtype=np.float64, copy=True)
    cdef double[::1] nxt = np.empty(W, dtype=np.float64)
    cdef double acc, q
    with nogil:
        for r in range(R):
            for t in range(L - 1, -1, -1):
                for s in range(W - 1):
                    if stop >= 0 and t + s >= stop:
                        acc = absorb[r, s]
                    else:
                        q = Q[t, s]
                        acc = q * V[r, s + 1]
                        if s >= 1:
                            acc = acc + (1.0 - q) * V[r, s - 1]
                    nxt[s] = acc * factor[r, t, s]
                nxt[W - 1] = 0.0
                for s in range(W):
                    V[r, s] = nxt[s]
    return np.asarray(V)


def fk_forward(Py_ssize_t start, const double[:, :, ::1] factor,
               const double[:, ::1] Q, const double[:, ::1] terminal):
    cdef Py_ssize_t R = factor.shape[0], L = factor.shape[1], W = factor.shape[2]
    cdef Py_ssize_t r, t, s
    cdef double[::1] U = np.empty(W, dtype=np.float64)
    cdef double[::1] nxt = np.empty(W, dtype=np.float64)
    cdef double[::1] res = np.empty(R, dtype=np.float64)
    cdef double m, acc
    with nogil:
        for r in range(R):
            for s in range(W):
                U[s] = 0.0
            U[start] = 1.0
            for t in range(L):
                for s in range(W):
                    nxt[s] = 0.0
                for s in range(1, W):
                    nxt[s] = nxt[s] + U[s - 1] * factor[r, t, s - 1] * Q[t, s - 1]
                for s in range(W - 1):
                    nxt[s] = nxt[s] + U[s + 1] * factor[r, t, s + 1] * (1.0 - Q[t, s + 1])
                for s in range(W):
                    U[s] = nxt[s]
            acc = 0.0
            for s in range(W):
                acc = acc + U[s] * terminal[r, s]
            res[r] = acc
    return np.asarray(res)


def octant_table(const double[:, :, ::1] zeta):
    cdef Py_ssize_t R = zeta.shape[0], P1 = zeta.shape[1], Q1 = zeta.shape[2]
    cdef Py_ssize_t r, i, j, jmax
    out = np.zeros((R, P1, Q1), dtype=np.float64)
    cdef double[:, :, ::1] Z = out
    cdef double acc
    with nogil:
        for r in range(R):
            Z[r, 0, 0] = zeta[r, 0, 0]
            for i in range(1, P1):
                jmax = i if i < Q1 - 1 else Q1 - 1
                for j in range(0, jmax + 1):
                    acc = Z[r, i - 1, j]
                    if j > 0:
                        acc = acc + Z[r, i, j - 1]
                    Z[r, i, j] = zeta[r, i, j] * acc
    return out
