# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Operation order mirrors ``_pykernels`` exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


cdef inline void _rotation(double app, double aqq, double apq, double* c, double* s) noexcept nogil:
    cdef double theta = (aqq - app) / (2.0 * apq)
    cdef double t
    if fabs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c[0] = 1.0 / sqrt(t * t + 1.0)
    s[0] = t * c[0]


def jacobi_eig(double[:, ::1] a, double tol, int max_sweeps):
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k, i, j
    cdef double off, apq, c, s, x, y
    cdef int sweeps = 0
    with nogil:
        while True:
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off = off + a[i, j] * a[i, j]
                    else:
                        off = off + 0.0
            if sqrt(off) <= tol or sweeps == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    _rotation(a[p, p], a[q, q], apq, &c, &s)
                    for k in range(n):
                        x = a[k, p]
                        y = a[k, q]
                        a[k, p] = c * x - s * y
                        a[k, q] = s * x + c * y
                    for k in range(n):
                        x = a[p, k]
                        y = a[q, k]
                        a[p, k] = c * x - s * y
                        a[q, k] = s * x + c * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for k in range(n):
                        x = v[k, p]
                        y = v[k, q]
                        v[k, p] = c * x - s * y
                        v[k, q] = s * x + c * y
            sweeps += 1
    diag = np.array([a[i, i] for i in range(n)], dtype=np.float64)
    return diag, v_arr, sweeps


def csr_matmul(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               const double[::1] data, const double[:, ::1] b):
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t ncol = b.shape[1]
    out_arr = np.zeros((m, ncol))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, j, col
    cdef double val
    with nogil:
        for i in range(m):
            for k in range(indptr[i], indptr[i + 1]):
                val = data[k]
                col = indices[k]
                for j in range(ncol):
                    out[i, j] = out[i, j] + val * b[col, j]
    return out_arr


def csr_row_norms_sq(const cnp.int64_t[::1] indptr, const double[::1] data):
    cdef Py_ssize_t m = indptr.shape[0] - 1
    out_arr = np.zeros(m)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double acc
    with nogil:
        for i in range(m):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc = acc + data[k] * data[k]
            out[i] = acc
    return out_arr


def sequential_sum(const double[::1] x):
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(x.shape[0]):
        acc = acc + x[i]
    return acc


def lis_length(const cnp.int64_t[::1] seq):
    cdef Py_ssize_t n = seq.shape[0]
    tails_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] tails = tails_arr
    cdef Py_ssize_t size = 0, lo, hi, mid, i
    cdef cnp.int64_t x
    with nogil:
        for i in range(n):
            x = seq[i]
            lo = 0
            hi = size
            while lo < hi:
                mid = (lo + hi) >> 1
                if tails[mid] < x:
                    lo = mid + 1
                else:
                    hi = mid
            tails[lo] = x
            if lo == size:
                size += 1
    return size


def svdpp_epoch(const cnp.int64_t[::1] order, const cnp.int64_t[::1] users,
                const cnp.int64_t[::1] items, const double[::1] ratings,
                const cnp.int64_t[::1] r_indptr, const cnp.int64_t[::1] r_indices,
                double mu, double[::1] bu, double[::1] bi,
                double[:, ::1] p, double[:, ::1] q, double[:, ::1] y,
                double lr, double reg):
    cdef Py_ssize_t f = p.shape[1]
    z_arr = np.empty(f)
    pu_arr = np.empty(f)
    qi_arr = np.empty(f)
    cdef double[::1] z = z_arr
    cdef double[::1] pu = pu_arr
    cdef double[::1] qi = qi_arr
    cdef Py_ssize_t t, u, i, j, lo, hi, jj, d
    cdef double norm, dot, err, sse = 0.0
    with nogil:
        for t in range(order.shape[0]):
            u = users[order[t]]
            i = items[order[t]]
            lo = r_indptr[u]
            hi = r_indptr[u + 1]
            for d in range(f):
                z[d] = 0.0
            if hi > lo:
                norm = 1.0 / sqrt(<double>(hi - lo))
                for jj in range(lo, hi):
                    j = r_indices[jj]
                    for d in range(f):
                        z[d] = z[d] + y[j, d]
                for d in range(f):
                    z[d] = z[d] * norm
            else:
                norm = 0.0
            dot = 0.0
            for d in range(f):
                pu[d] = p[u, d]
                qi[d] = q[i, d]
                dot = dot + qi[d] * (pu[d] + z[d])
            err = ratings[order[t]] - (mu + bi[i] + bu[u] + dot)
            sse = sse + err * err
            bu[u] = bu[u] + lr * (err - reg * bu[u])
            bi[i] = bi[i] + lr * (err - reg * bi[i])
            for d in range(f):
                p[u, d] = pu[d] + lr * (err * qi[d] - reg * pu[d])
                q[i, d] = qi[d] + lr * (err * (pu[d] + z[d]) - reg * qi[d])
            if hi > lo:
                for jj in range(lo, hi):
                    j = r_indices[jj]
                    for d in range(f):
                        y[j, d] = y[j, d] + lr * (err * norm * qi[d] - reg * y[j, d])
    return sse
