"""Pure-Python/numpy versions of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature and
the same floating-point operation order, so both backends agree to the last
bit on the sparse product, row norms and LIS, and to rounding on the rest.
"""

from __future__ import annotations

import math
from bisect import bisect_left

import numpy as np


def jacobi_eig(a, tol, max_sweeps):
    """Cyclic Jacobi on a symmetric matrix, in place on ``a``.

    Returns ``(diag, vectors, sweeps)``; eigenvalues are unsorted.
    """
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    for sweeps in range(max_sweeps + 1):
        sq = a * a
        np.fill_diagonal(sq, 0.0)
        off = sequential_sum(sq.ravel())
        if math.sqrt(off) <= tol or sweeps == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                c, s = _rotation(float(a[p, p]), float(a[q, q]), apq)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p].copy()
                row_q = a[q].copy()
                a[p] = c * row_p - s * row_q
                a[q] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c


def csr_matmul(indptr, indices, data, b):
    m = indptr.shape[0] - 1
    out = np.zeros((m, b.shape[1]))
    for i in range(m):
        acc = out[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * b[indices[k]]
    return out


def csr_row_norms_sq(indptr, data):
    m = indptr.shape[0] - 1
    out = np.zeros(m)
    sq = data * data
    for i in range(m):
        lo, hi = indptr[i], indptr[i + 1]
        if hi > lo:
            # cumsum is a strict left-to-right accumulation
            out[i] = np.cumsum(sq[lo:hi])[-1]
    return out


def sequential_sum(x):
    if x.shape[0] == 0:
        return 0.0
    return float(np.cumsum(x)[-1])


def lis_length(seq):
    """Length of the longest strictly increasing subsequence (patience piles)."""
    tails: list[int] = []
    for x in seq.tolist():
        pos = bisect_left(tails, x)
        if pos == len(tails):
            tails.append(x)
        else:
            tails[pos] = x
    return len(tails)


def svdpp_epoch(order, users, items, ratings, r_indptr, r_indices,
                mu, bu, bi, p, q, y, lr, reg):
    """One SGD pass of SVD++ over ``order``; parameters are updated in place.

    Returns the sum of squared pre-update errors.
    """
    sse = 0.0
    for k in order.tolist():
        u = users[k]
        i = items[k]
        lo, hi = r_indptr[u], r_indptr[u + 1]
        ru = r_indices[lo:hi]
        if hi > lo:
            norm = 1.0 / math.sqrt(hi - lo)
            z = y[ru].sum(axis=0) * norm
        else:
            norm = 0.0
            z = np.zeros(p.shape[1])
        pu = p[u].copy()
        qi = q[i].copy()
        err = ratings[k] - (mu + bi[i] + bu[u] + float(np.dot(qi, pu + z)))
        sse += err * err
        bu[u] += lr * (err - reg * bu[u])
        bi[i] += lr * (err - reg * bi[i])
        p[u] = pu + lr * (err * qi - reg * pu)
        q[i] = qi + lr * (err * (pu + z) - reg * qi)
        if hi > lo:
            y[ru] += lr * (err * norm * qi - reg * y[ru])
    return sse
