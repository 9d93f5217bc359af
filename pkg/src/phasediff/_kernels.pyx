# cython: language_level=3
"""Compiled versions of the kernels in ``_kernels_py``.

Same signatures and semantics; see the numpy module for the math.
"""

import numpy as np

from libc.math cimport cosh, sinh, tanh, exp, log, sqrt, fabs, copysign, cos, sin, INFINITY
from libc.stdlib cimport qsort, malloc, free

cdef double _BIG = 1e150
cdef double _LOG_BIG = log(1e150)


def displaced_squeezed_amplitudes(double alpha, double r, Py_ssize_t n_max):
    cdef double ch = cosh(r), sh = sinh(r)
    cdef double drive = alpha * exp(r)
    cdef double log_c0 = -0.5 * alpha * alpha * (1.0 + tanh(r)) - 0.5 * log(ch)
    cdef double prev = 0.0, cur = 1.0, nxt
    cdef double log_scale = log_c0
    cdef Py_ssize_t n
    out_arr = np.zeros(n_max + 1)
    cdef double[::1] out = out_arr
    out[0] = exp(log_c0)
    for n in range(n_max):
        nxt = (drive * cur - sh * sqrt(<double>n) * prev) / (ch * sqrt(<double>(n + 1)))
        prev = cur
        cur = nxt
        if fabs(cur) > _BIG:
            prev /= _BIG
            cur /= _BIG
            log_scale += _LOG_BIG
        if cur != 0.0:
            out[n + 1] = copysign(exp(log(fabs(cur)) + log_scale), cur)
    return out_arr


def hermite_functions(x, Py_ssize_t n_max):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=float).ravel()
    cdef Py_ssize_t k = xv.shape[0], i, n
    table_arr = np.empty((n_max + 1, k))
    cdef double[:, ::1] table = table_arr
    cdef double log_norm = 0.25 * log(2.0 / 3.141592653589793)
    cdef double xi, prev, cur, nxt, log_scale, scale
    for i in range(k):
        xi = xv[i]
        log_scale = log_norm - xi * xi
        scale = exp(log_scale)
        prev = 0.0
        cur = 1.0
        table[0, i] = scale
        for n in range(n_max):
            nxt = (2.0 * xi * cur - sqrt(<double>n) * prev) / sqrt(<double>(n + 1))
            prev = cur
            cur = nxt
            if fabs(cur) > _BIG:
                prev /= _BIG
                cur /= _BIG
                log_scale += _LOG_BIG
                scale = exp(log_scale)
            table[n + 1, i] = cur * scale
    return table_arr


def harmonic_table(rho_re, rho_im, psi):
    cdef const double[:, ::1] rr = np.ascontiguousarray(rho_re, dtype=float)
    cdef const double[:, ::1] ri = np.ascontiguousarray(rho_im, dtype=float)
    cdef const double[:, ::1] ps = np.ascontiguousarray(psi, dtype=float)
    cdef Py_ssize_t dim = ps.shape[0], k = ps.shape[1]
    cdef Py_ssize_t d, m, i
    cdef double a, b, p
    c_re_arr = np.zeros((dim, k))
    c_im_arr = np.zeros((dim, k))
    cdef double[:, ::1] c_re = c_re_arr
    cdef double[:, ::1] c_im = c_im_arr
    for d in range(dim):
        for m in range(dim - d):
            a = rr[m + d, m]
            b = ri[m + d, m]
            if a == 0.0 and b == 0.0:
                continue
            for i in range(k):
                p = ps[m + d, i] * ps[m, i]
                c_re[d, i] += a * p
                c_im[d, i] += b * p
    return c_re_arr, c_im_arr


cdef int _cmp_double(const void* x, const void* y) noexcept nogil:
    cdef double a = (<double*>x)[0], b = (<double*>y)[0]
    return (a > b) - (a < b)


def qfi_pair_sum(lam, g2, double delta_deg):
    cdef const double[::1] lv = np.ascontiguousarray(lam, dtype=float)
    cdef const double[:, ::1] gv = np.ascontiguousarray(g2, dtype=float)
    cdef Py_ssize_t dim = lv.shape[0], i, j, cnt = 0, total
    cdef double s, diff, t, acc = 0.0, comp = 0.0
    total = dim * (dim - 1) // 2
    cdef double* buf = <double*>malloc(max(total, 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        for i in range(dim):
            for j in range(i + 1, dim):
                s = lv[i] + lv[j]
                if s > delta_deg:
                    diff = lv[i] - lv[j]
                    buf[cnt] = diff * diff / s * gv[i, j]
                    cnt += 1
        qsort(buf, cnt, sizeof(double), _cmp_double)
        # Neumaier compensated summation
        for i in range(cnt):
            t = acc + buf[i]
            if fabs(acc) >= fabs(buf[i]):
                comp += (acc - t) + buf[i]
            else:
                comp += (buf[i] - t) + acc
            acc = t
    finally:
        free(buf)
    return 4.0 * (acc + comp), 2 * cnt, 2 * (total - cnt)


def harmonic_loglik(counts, b0, b_re, b_im, double phi):
    cdef const double[::1] cv = np.ascontiguousarray(counts, dtype=float)
    cdef const double[::1] b0v = np.ascontiguousarray(b0, dtype=float)
    cdef const double[:, ::1] br = np.ascontiguousarray(b_re, dtype=float)
    cdef const double[:, ::1] bi = np.ascontiguousarray(b_im, dtype=float)
    cdef Py_ssize_t nd = br.shape[0], nc = br.shape[1], d, j
    cdef double total = 0.0, c, s
    acc_arr = np.zeros(nc)
    cdef double[::1] acc = acc_arr
    for d in range(nd):
        c = cos((d + 1) * phi)
        s = sin((d + 1) * phi)
        for j in range(nc):
            acc[j] += c * br[d, j] + s * bi[d, j]
    for j in range(nc):
        if cv[j] == 0.0:
            continue
        acc[j] = b0v[j] + 2.0 * acc[j]
        if acc[j] <= 0.0:
            return -INFINITY
        total += cv[j] * log(acc[j])
    return total
