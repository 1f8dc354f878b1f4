# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched cyclic Jacobi on Hermitian matrices and the
Lindley backlog recursion. depctl.kernels falls back to the numpy twins in
_kernels_py when this module is unavailable."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def jacobi_eigh_batch(cnp.complex128_t[:, :, ::1] A, double tol=1e-13, int max_sweeps=60):
    """Diagonalize a batch of Hermitian matrices in place-copy.

    Returns (eigenvalues ascending (b, n), eigenvectors (b, n, n) with
    orthonormal columns, sweep counts (b,)). Convergence: off-diagonal
    Frobenius mass below tol times the matrix Frobenius norm.
    """
    cdef Py_ssize_t b = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] work = np.array(A, dtype=np.complex128, copy=True)
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] vecs = np.zeros((b, n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vals = np.empty((b, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] sweeps = np.zeros(b, dtype=np.int32)

    cdef cnp.complex128_t[:, :, ::1] Wv = work
    cdef cnp.complex128_t[:, :, ::1] Vv = vecs
    cdef cnp.float64_t[:, ::1] Lv = vals
    cdef cnp.int32_t[::1] Sv = sweeps

    cdef Py_ssize_t k, i, j, p, q, sweep
    cdef double norm_f, off, r, tau, t, c, s, app, aqq
    cdef double complex apq, w, wc, xp, xq

    for k in range(b):
        for i in range(n):
            Vv[k, i, i] = 1.0
        norm_f = 0.0
        for i in range(n):
            for j in range(n):
                norm_f += (Wv[k, i, j].real * Wv[k, i, j].real
                           + Wv[k, i, j].imag * Wv[k, i, j].imag)
        norm_f = sqrt(norm_f)
        if norm_f == 0.0:
            for i in range(n):
                Lv[k, i] = 0.0
            continue

        for sweep in range(max_sweeps):
            off = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    off += 2.0 * (Wv[k, i, j].real * Wv[k, i, j].real
                                  + Wv[k, i, j].imag * Wv[k, i, j].imag)
            off = sqrt(off)
            if off < tol * norm_f:
                break
            for p in range(n):
                for q in range(p + 1, n):
                    apq = Wv[k, p, q]
                    r = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                    if r <= 1e-300:
                        continue
                    w = apq / r
                    wc = w.conjugate()
                    app = Wv[k, p, p].real
                    aqq = Wv[k, q, q].real
                    tau = (aqq - app) / (2.0 * r)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    # columns: A <- A G, G = [[c, s], [-s*conj(w), c*conj(w)]]
                    for i in range(n):
                        xp = Wv[k, i, p]
                        xq = Wv[k, i, q]
                        Wv[k, i, p] = c * xp - s * wc * xq
                        Wv[k, i, q] = s * xp + c * wc * xq
                    # rows: A <- G* A
                    for j in range(n):
                        xp = Wv[k, p, j]
                        xq = Wv[k, q, j]
                        Wv[k, p, j] = c * xp - s * w * xq
                        Wv[k, q, j] = s * xp + c * w * xq
                    Wv[k, p, q] = 0.0
                    Wv[k, q, p] = 0.0
                    Wv[k, p, p] = Wv[k, p, p].real
                    Wv[k, q, q] = Wv[k, q, q].real
                    for i in range(n):
                        xp = Vv[k, i, p]
                        xq = Vv[k, i, q]
                        Vv[k, i, p] = c * xp - s * wc * xq
                        Vv[k, i, q] = s * xp + c * wc * xq
            Sv[k] = sweep + 1
        for i in range(n):
            Lv[k, i] = Wv[k, i, i].real

    order = np.argsort(vals, axis=1, kind="stable")
    vals_sorted = np.take_along_axis(vals, order, axis=1)
    vecs_sorted = np.take_along_axis(vecs, order[:, None, :], axis=2)
    return vals_sorted, vecs_sorted, sweeps


def lindley_batch(cnp.float64_t[:, ::1] increments):
    """Backlog paths from arrival-minus-service increments.

    B[t] = max(B[t-1] + x[t], 0) with B starting at zero, one row per path.
    """
    cdef Py_ssize_t P = increments.shape[0]
    cdef Py_ssize_t T = increments.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((P, T), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] Ov = out
    cdef Py_ssize_t p, t
    cdef double backlog
    for p in range(P):
        backlog = 0.0
        for t in range(T):
            backlog += increments[p, t]
            if backlog < 0.0:
                backlog = 0.0
            Ov[p, t] = backlog
    return out
