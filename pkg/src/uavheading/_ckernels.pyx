# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched SINR kernels (small dense Hermitian solves by Cholesky)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, NAN
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef double complex cplx


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef int cholesky(cplx* q, cplx* l, int m) noexcept nogil:
    """Lower factor L with L L^H = Q, row-major. Returns -1 if Q is not PD."""
    cdef int i, j, k
    cdef double s
    cdef cplx t
    for j in range(m):
        s = q[j * m + j].real
        for k in range(j):
            s -= abs2(l[j * m + k])
        if s <= 0.0:
            return -1
        s = sqrt(s)
        l[j * m + j] = s
        for i in range(j + 1, m):
            t = q[i * m + j]
            for k in range(j):
                t -= l[i * m + k] * conj(l[j * m + k])
            l[i * m + j] = t / s
        for i in range(j):
            l[i * m + j] = 0.0
    return 0


cdef void forward(cplx* l, cplx* b, cplx* y, int m) noexcept nogil:
    cdef int i, k
    cdef cplx t
    for i in range(m):
        t = b[i]
        for k in range(i):
            t -= l[i * m + k] * y[k]
        y[i] = t / l[i * m + i].real


def sinr_batch(h_in, double rho):
    """Max-SINR output SINR, shape (S, N), for channels of shape (S, N, M)."""
    cdef cplx[:, :, ::1] h = np.ascontiguousarray(h_in, dtype=np.complex128)
    cdef Py_ssize_t ns = h.shape[0], nu = h.shape[1], m = h.shape[2]
    out_arr = np.empty((ns, nu), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef cplx* q = <cplx*> malloc(m * m * sizeof(cplx))
    cdef cplx* l = <cplx*> malloc(m * m * sizeof(cplx))
    cdef cplx* y = <cplx*> malloc(m * sizeof(cplx))
    cdef Py_ssize_t s, i, j, a, b
    cdef double acc
    if q == NULL or l == NULL or y == NULL:
        free(q); free(l); free(y)
        raise MemoryError()
    try:
        with nogil:
            for s in range(ns):
                for i in range(nu):
                    for a in range(m):
                        for b in range(m):
                            q[a * m + b] = 1.0 if a == b else 0.0
                    for j in range(nu):
                        if j == i:
                            continue
                        for a in range(m):
                            for b in range(a + 1):
                                q[a * m + b] += rho * h[s, j, a] * conj(h[s, j, b])
                    if cholesky(q, l, <int> m) != 0:
                        out[s, i] = NAN
                        continue
                    forward(l, &h[s, i, 0], y, <int> m)
                    acc = 0.0
                    for a in range(m):
                        acc += abs2(y[a])
                    out[s, i] = rho * acc
    finally:
        free(q); free(l); free(y)
    return out_arr


def jensen_bound_batch(a_in, r_in, gain_in, double los_power, double scatter_power):
    """Jensen lower bound on E{SINR}, shape (G, N).

    a: (G, N, M) unit steering vectors; r: (G, N, M, M) correlations;
    gain: (G, N) rho / d^(2 alpha).
    """
    cdef cplx[:, :, ::1] av = np.ascontiguousarray(a_in, dtype=np.complex128)
    cdef cplx[:, :, :, ::1] rv = np.ascontiguousarray(r_in, dtype=np.complex128)
    cdef double[:, ::1] gv = np.ascontiguousarray(gain_in, dtype=np.float64)
    cdef Py_ssize_t ng = av.shape[0], nu = av.shape[1], m = av.shape[2]
    out_arr = np.empty((ng, nu), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef cplx* q = <cplx*> malloc(m * m * sizeof(cplx))
    cdef cplx* l = <cplx*> malloc(m * m * sizeof(cplx))
    cdef cplx* ycol = <cplx*> malloc(m * m * sizeof(cplx))
    cdef cplx* tmp = <cplx*> malloc(m * sizeof(cplx))
    cdef cplx* col = <cplx*> malloc(m * sizeof(cplx))
    cdef Py_ssize_t g, i, j, p, c, k
    cdef double quad, tr, wj
    if q == NULL or l == NULL or ycol == NULL or tmp == NULL or col == NULL:
        free(q); free(l); free(ycol); free(tmp); free(col)
        raise MemoryError()
    try:
        with nogil:
            for g in range(ng):
                for i in range(nu):
                    for p in range(m):
                        for c in range(m):
                            q[p * m + c] = 1.0 if p == c else 0.0
                    for j in range(nu):
                        if j == i:
                            continue
                        wj = gv[g, j]
                        for p in range(m):
                            for c in range(p + 1):
                                q[p * m + c] += wj * (
                                    los_power * av[g, j, p] * conj(av[g, j, c])
                                    + scatter_power * rv[g, j, p, c]
                                )
                    if cholesky(q, l, <int> m) != 0:
                        out[g, i] = NAN
                        continue
                    forward(l, &av[g, i, 0], tmp, <int> m)
                    quad = 0.0
                    for p in range(m):
                        quad += abs2(tmp[p])
                    tr = 0.0
                    if scatter_power != 0.0:
                        # Y = L^-1 R column by column, stored row-major in ycol
                        for c in range(m):
                            for p in range(m):
                                col[p] = rv[g, i, p, c]
                            forward(l, col, tmp, <int> m)
                            for p in range(m):
                                ycol[p * m + c] = tmp[p]
                        # trace(L^-1 R L^-H) = sum_k conj((L^-1 Y^H)_kk)
                        for k in range(m):
                            for p in range(m):
                                col[p] = conj(ycol[k * m + p])
                            forward(l, col, tmp, <int> m)
                            tr += tmp[k].real
                    out[g, i] = gv[g, i] * (los_power * quad + scatter_power * tr)
    finally:
        free(q); free(l); free(ycol); free(tmp); free(col)
    return out_arr
