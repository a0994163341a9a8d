# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-trial ZF precoding and downlink moment kernel.

For each trial the kernel factors the Gram matrix of the estimated
channels (Cholesky), forms the normalised pseudo-inverse columns w_k and
evaluates the effective gains h_k^H w_i against the true channels.

Complex numbers are handled as interleaved (re, im) doubles.
"""

import numpy as np
from libc.math cimport sqrt, isfinite


cdef inline void _dot(const double* xr, const double* xi, const double* yr, const double* yi,
                      Py_ssize_t n, double* outr, double* outi) noexcept nogil:
    # sum conj(x) * y
    cdef Py_ssize_t m
    cdef double ar = 0.0, ai = 0.0
    for m in range(n):
        ar += xr[m] * yr[m] + xi[m] * yi[m]
        ai += xr[m] * yi[m] - xi[m] * yr[m]
    outr[0] = ar
    outi[0] = ai


cdef inline double _sqnorm(const double* xr, const double* xi, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t m
    cdef double s = 0.0
    for m in range(n):
        s += xr[m] * xr[m] + xi[m] * xi[m]
    return s


cdef int _one_trial(const double[:, ::1] Hh, const double[:, ::1] H,
                    double[:, ::1] Ar, double[:, ::1] Ai,
                    double[:, ::1] Br, double[:, ::1] Bi,
                    double[:, ::1] Gr, double[:, ::1] Gi,
                    double[:, ::1] Lr, double[:, ::1] Li,
                    double[:, ::1] Ir, double[:, ::1] Ii,
                    double[:, ::1] Wr, double[:, ::1] Wi,
                    double[::1] out_gain, double[::1] leak,
                    double[::1] inva, double* resid, bint check) noexcept nogil:
    # Hh, H: (M, 2K) interleaved; A/B/W scratch: (K, M) split re/im
    cdef Py_ssize_t M = Hh.shape[0]
    cdef Py_ssize_t K = Hh.shape[1] // 2
    cdef Py_ssize_t i, j, p, m
    cdef double ar, ai, gr, gi, d, r, hn, worst

    for m in range(M):
        for i in range(K):
            Ar[i, m] = Hh[m, 2 * i]
            Ai[i, m] = Hh[m, 2 * i + 1]
            Br[i, m] = H[m, 2 * i]
            Bi[i, m] = H[m, 2 * i + 1]

    # Gram matrix, lower triangle: G[i, j] = hh_i^H hh_j
    for i in range(K):
        for j in range(i + 1):
            _dot(&Ar[i, 0], &Ai[i, 0], &Ar[j, 0], &Ai[j, 0], M, &Gr[i, j], &Gi[i, j])

    # Cholesky G = L L^H (L lower, real positive diagonal)
    for j in range(K):
        d = Gr[j, j]
        for p in range(j):
            d -= Lr[j, p] * Lr[j, p] + Li[j, p] * Li[j, p]
        if not (d > 0.0) or not isfinite(d):
            return 1
        d = sqrt(d)
        Lr[j, j] = d
        Li[j, j] = 0.0
        for i in range(j + 1, K):
            ar = Gr[i, j]
            ai = Gi[i, j]
            for p in range(j):
                # L[i, p] * conj(L[j, p])
                ar -= Lr[i, p] * Lr[j, p] + Li[i, p] * Li[j, p]
                ai -= Li[i, p] * Lr[j, p] - Lr[i, p] * Li[j, p]
            Lr[i, j] = ar / d
            Li[i, j] = ai / d

    # I = L^{-1}, lower triangular
    for j in range(K):
        for i in range(K):
            Ir[i, j] = 0.0
            Ii[i, j] = 0.0
        Ir[j, j] = 1.0 / Lr[j, j]
        for i in range(j + 1, K):
            ar = 0.0
            ai = 0.0
            for p in range(j, i):
                ar += Lr[i, p] * Ir[p, j] - Li[i, p] * Ii[p, j]
                ai += Lr[i, p] * Ii[p, j] + Li[i, p] * Ir[p, j]
            Ir[i, j] = -ar / Lr[i, i]
            Ii[i, j] = -ai / Lr[i, i]

    # G^{-1} = I^H I, written over G (full matrix)
    for i in range(K):
        for j in range(K):
            ar = 0.0
            ai = 0.0
            for p in range(i if i > j else j, K):
                # conj(I[p, i]) * I[p, j]
                ar += Ir[p, i] * Ir[p, j] + Ii[p, i] * Ii[p, j]
                ai += Ir[p, i] * Ii[p, j] - Ii[p, i] * Ir[p, j]
            Gr[i, j] = ar
            Gi[i, j] = ai

    # w_j = sum_p hh_p G^{-1}[p, j], then normalise
    for j in range(K):
        for m in range(M):
            Wr[j, m] = 0.0
            Wi[j, m] = 0.0
        for p in range(K):
            gr = Gr[p, j]
            gi = Gi[p, j]
            for m in range(M):
                Wr[j, m] += Ar[p, m] * gr - Ai[p, m] * gi
                Wi[j, m] += Ar[p, m] * gi + Ai[p, m] * gr
        d = 0.0
        for m in range(M):
            d += Wr[j, m] * Wr[j, m] + Wi[j, m] * Wi[j, m]
        d = 1.0 / sqrt(d)
        inva[j] = d
        for m in range(M):
            Wr[j, m] *= d
            Wi[j, m] *= d

    # h_i^H w_j against the true channels
    for i in range(K):
        leak[i] = 0.0
        for j in range(K):
            _dot(&Br[i, 0], &Bi[i, 0], &Wr[j, 0], &Wi[j, 0], M, &ar, &ai)
            if i == j:
                out_gain[2 * i] = ar
                out_gain[2 * i + 1] = ai
            else:
                leak[i] += ar * ar + ai * ai

    # nulling residual: max_{i != j} |hh_i^H w_j| / ||hh_i||
    worst = 0.0
    if not check:
        resid[0] = worst
        return 0
    for i in range(K):
        hn = sqrt(_sqnorm(&Ar[i, 0], &Ai[i, 0], M))
        for j in range(K):
            if i == j:
                continue
            _dot(&Ar[i, 0], &Ai[i, 0], &Wr[j, 0], &Wi[j, 0], M, &ar, &ai)
            r = sqrt(ar * ar + ai * ai) / hn
            if r > worst:
                worst = r
    resid[0] = worst
    return 0


def zf_moments(Hh_all, H_all, bint check=True):
    """Batch kernel over the leading trial axis.

    Parameters
    ----------
    Hh_all, H_all : complex arrays, shape (T, M, K)
        Estimated and true user channels.
    check : bool
        Also compute the nulling residual (otherwise reported as 0).

    Returns
    -------
    gain : complex (T, K)   h_k^H w_k
    leak : float (T, K)     sum_{i != k} |h_k^H w_i|^2
    inv_a_norm : float (T, K)
    resid : float (T,)      worst relative nulling residual
    ok : bool (T,)          False where the Gram factorisation failed
    """
    Hh_c = np.ascontiguousarray(Hh_all, dtype=np.complex128)
    H_c = np.ascontiguousarray(H_all, dtype=np.complex128)
    if Hh_c.shape != H_c.shape or Hh_c.ndim != 3:
        raise ValueError("estimated and true channel stacks must share shape (T, M, K)")
    cdef Py_ssize_t T = Hh_c.shape[0], M = Hh_c.shape[1], K = Hh_c.shape[2]
    cdef const double[:, :, ::1] Hh = Hh_c.view(np.float64)
    cdef const double[:, :, ::1] H = H_c.view(np.float64)

    gain_a = np.zeros((T, K), dtype=np.complex128)
    leak_a = np.zeros((T, K))
    inva_a = np.zeros((T, K))
    resid_a = np.zeros(T)
    fail_a = np.zeros(T, dtype=np.intc)
    cdef double[:, ::1] gain = gain_a.view(np.float64)
    cdef double[:, ::1] leak = leak_a
    cdef double[:, ::1] inva = inva_a
    cdef double[::1] resid = resid_a
    cdef int[::1] fail = fail_a

    cdef double[:, ::1] Ar = np.zeros((K, M))
    cdef double[:, ::1] Ai = np.zeros((K, M))
    cdef double[:, ::1] Br = np.zeros((K, M))
    cdef double[:, ::1] Bi = np.zeros((K, M))
    cdef double[:, ::1] Gr = np.zeros((K, K))
    cdef double[:, ::1] Gi = np.zeros((K, K))
    cdef double[:, ::1] Lr = np.zeros((K, K))
    cdef double[:, ::1] Li = np.zeros((K, K))
    cdef double[:, ::1] Ir = np.zeros((K, K))
    cdef double[:, ::1] Ii = np.zeros((K, K))
    cdef double[:, ::1] Wr = np.zeros((K, M))
    cdef double[:, ::1] Wi = np.zeros((K, M))
    cdef Py_ssize_t t

    with nogil:
        for t in range(T):
            fail[t] = _one_trial(Hh[t], H[t], Ar, Ai, Br, Bi, Gr, Gi, Lr, Li, Ir, Ii, Wr, Wi,
                                 gain[t], leak[t], inva[t], &resid[t], check)
            if fail[t]:
                resid[t] = 0.0
                for i in range(2 * K):
                    gain[t, i] = 0.0
                for i in range(K):
                    leak[t, i] = 0.0
                    inva[t, i] = 0.0
    return gain_a, leak_a, inva_a, resid_a, fail_a == 0
