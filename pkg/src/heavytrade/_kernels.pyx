# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-round hot loops.

Mirror of ``_kernels_py`` (same functions, same semantics); see that module
for the profile encoding. Single-pass C loops instead of vectorized numpy.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, fabs, log1p, pow, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double SQRT_2PI = sqrt(2.0 * 3.141592653589793238462643383279502884)


def gain_batch(price, v, w):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_ = np.ascontiguousarray(price, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_ = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_ = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = p_.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double lo, hi
    for i in range(n):
        if v_[i] <= w_[i]:
            lo = v_[i]; hi = w_[i]
        else:
            lo = w_[i]; hi = v_[i]
        if lo <= p_[i] <= hi:
            out[i] = hi - lo
        else:
            out[i] = 0.0
    return out


cdef inline double _piece_J(double d, const double* left, const double* right,
                            const double* height, int k) nogil:
    cdef double lo = d if d < 0.0 else 0.0
    cdef double hi = d if d > 0.0 else 0.0
    cdef double total = 0.0, a, b
    cdef int i
    for i in range(k):
        a = left[i] if left[i] > lo else lo
        b = right[i] if right[i] < hi else hi
        if b > a:
            total += 0.5 * (b * fabs(b) - a * fabs(a)) * height[i]
    return total


def profile_partial_moment(deltas, code, params):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_ = np.ascontiguousarray(
        np.atleast_1d(deltas), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] par = np.ascontiguousarray(params, dtype=np.float64)
    cdef Py_ssize_t n = d_.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef int code_ = code
    cdef Py_ssize_t i
    cdef double sigma, a, nu, c, f0, reach
    cdef int k
    if code_ == 0:
        sigma = par[0]
        f0 = 1.0 / (sigma * SQRT_2PI)
        for i in range(n):
            out[i] = -sigma * sigma * f0 * expm1(-0.5 * (d_[i] / sigma) ** 2)
    elif code_ == 1:
        a = par[0]
        for i in range(n):
            reach = fabs(d_[i])
            if reach > a:
                reach = a
            out[i] = reach * reach / (4.0 * a)
    elif code_ == 2:
        nu = par[0]; c = par[1]
        for i in range(n):
            # (1 + d^2/nu)^((1-nu)/2) via expm1/log1p: faster than pow and
            # accurate for small d
            out[i] = -c * nu / (nu - 1.0) * expm1(
                0.5 * (1.0 - nu) * log1p(d_[i] * d_[i] / nu))
    elif code_ == 3:
        k = <int> par[0]
        for i in range(n):
            out[i] = _piece_J(d_[i], &par[1], &par[1 + k], &par[1 + 2 * k], k)
    else:
        raise ValueError(f"unknown profile code {code}")
    return out


def regret_profile(deltas, code_xi, params_xi, code_zeta, params_zeta):
    return (profile_partial_moment(deltas, code_xi, params_xi)
            + profile_partial_moment(deltas, code_zeta, params_zeta))


def truncated_mean_given_tau(y, tau):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_ = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = y_.shape[0]
    cdef double tau_ = tau, total = 0.0
    cdef Py_ssize_t i
    cdef long kept = 0
    for i in range(n):
        if fabs(y_[i]) <= tau_:
            total += y_[i]
            kept += 1
    return total / n, int(kept)


def score_truncated_means(contexts, responses, tau):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.ascontiguousarray(contexts, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.ascontiguousarray(responses, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mu = np.zeros(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kept = np.zeros(d, dtype=np.int64)
    cdef double tau_ = tau, s
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            s = x[i, j] * y[i]
            if fabs(s) <= tau_:
                mu[j] += s
                kept[j] += 1
    for j in range(d):
        mu[j] /= n
    return np.asarray(mu), np.asarray(kept)


def cell_truncated_stats(cells, responses, n_cells, u, p, log_term):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] c_ = np.ascontiguousarray(cells, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_ = np.ascontiguousarray(responses, dtype=np.float64)
    cdef Py_ssize_t n = c_.shape[0], m = n_cells
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tau = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sums = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kept = np.zeros(m, dtype=np.int64)
    cdef double u_ = u, p_ = p, lt = log_term
    cdef Py_ssize_t i
    for i in range(n):
        counts[c_[i]] += 1
    for i in range(m):
        if counts[i] > 0:
            tau[i] = pow(u_ * counts[i] / lt, 1.0 / p_)
    for i in range(n):
        if fabs(y_[i]) <= tau[c_[i]]:
            sums[c_[i]] += y_[i]
            kept[c_[i]] += 1
    return np.asarray(counts), np.asarray(sums), np.asarray(kept)
