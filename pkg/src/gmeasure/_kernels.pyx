# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernels; see ``_fallback.py`` for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, sqrt, INFINITY
from scipy.linalg.cython_blas cimport ddot

cnp.import_array()


cdef inline double _phi(double t) nogil:
    if t <= -350.0:
        return 0.0
    return 1.0 / (1.0 + exp(-2.0 * t))


def linear_pair_path(a, field_b, delta, u):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] fb = np.ascontiguousarray(field_b, dtype=np.float64)
    cdef const double[::1] dl = np.ascontiguousarray(delta, dtype=np.float64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t N = uv.shape[0]
    if av.shape[0] < N - 1 or fb.shape[0] < N or dl.shape[0] < N:
        raise ValueError("weights and fields must cover every step")
    w_arr = np.empty(N, dtype=np.int64)
    alpha_arr = np.empty(N, dtype=np.float64)
    d_arr = np.empty(N, dtype=np.float64)
    wrev_arr = np.zeros(max(N, 1), dtype=np.float64)
    cdef cnp.int64_t[::1] w = w_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] d = d_arr
    cdef double[::1] wrev = wrev_arr
    cdef Py_ssize_t i, n
    cdef int m, one = 1
    cdef double hc = 0.0, tb, ta, pb, qb, pa, qa, diff, s1, s2, acc
    with nogil:
        for i in range(N):
            n = i + 1
            if n > 1:
                m = <int>(n - 1)
                hc = ddot(&m, <double*>&av[0], &one, &wrev[N - n + 1], &one)
            tb = hc + fb[i]
            ta = tb + dl[i]
            pb = _phi(tb)
            qb = _phi(-tb)
            pa = _phi(ta)
            qa = _phi(-ta)
            if uv[i] < pb:
                w[i] = 1
                alpha[i] = pb / pa if pa > 0.0 else INFINITY
            else:
                w[i] = -1
                alpha[i] = qb / qa if qa > 0.0 else INFINITY
            diff = pb * qa * -expm1(2.0 * dl[i])
            s1 = sqrt(pb) + sqrt(pa)
            s2 = sqrt(qb) + sqrt(qa)
            acc = 0.0
            if s1 > 0.0:
                acc = acc + 1.0 / (s1 * s1)
            if s2 > 0.0:
                acc = acc + 1.0 / (s2 * s2)
            d[i] = diff * diff * acc
            wrev[N - n] = <double>w[i]
    return w_arr, alpha_arr, d_arr


def table_pair_path(table, int k, long long state_a, long long state_b, u):
    cdef const double[:, ::1] tb = np.ascontiguousarray(table, dtype=np.float64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t S = tb.shape[1]
    cdef Py_ssize_t N = uv.shape[0]
    cdef long long top = S ** (k - 1) if k > 0 else 0
    w_arr = np.empty(N, dtype=np.int64)
    alpha_arr = np.empty(N, dtype=np.float64)
    d_arr = np.empty(N, dtype=np.float64)
    cdef cnp.int64_t[::1] w = w_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] d = d_arr
    cdef Py_ssize_t i, j
    cdef long long sa = state_a, sb = state_b, sym
    cdef double cum, acc, t
    with nogil:
        for i in range(N):
            cum = 0.0
            sym = -1
            for j in range(S):
                cum = cum + tb[sb, j]
                if uv[i] < cum:
                    sym = j
                    break
            if sym < 0:
                for j in range(S - 1, -1, -1):
                    if tb[sb, j] > 0.0:
                        sym = j
                        break
            w[i] = sym
            alpha[i] = tb[sb, sym] / tb[sa, sym] if tb[sa, sym] > 0.0 else INFINITY
            if sa == sb:
                d[i] = 0.0
            else:
                acc = 0.0
                for j in range(S):
                    t = sqrt(tb[sa, j]) - sqrt(tb[sb, j])
                    acc = acc + t * t
                d[i] = acc
            if k > 0:
                sa = sym * top + sa // S
                sb = sym * top + sb // S
    return w_arr, alpha_arr, d_arr
