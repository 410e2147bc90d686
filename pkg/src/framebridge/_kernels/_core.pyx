"""Compiled implementations of the hot sampling kernels.

Semantics must match ``_numpy`` exactly; the test suite checks parity on
randomized inputs. Arrays are C-contiguous float64 throughout.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def euler_step(const double[:, ::1] x_t, const double[:, ::1] x0_hat, double ratio):
    cdef Py_ssize_t f = x_t.shape[0], d = x_t.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f):
        for j in range(d):
            out[i, j] = x0_hat[i, j] + ratio * (x_t[i, j] - x0_hat[i, j])
    return out_arr


def cfgpp_euler_step(const double[:, ::1] x_t, const double[:, ::1] x0_guided,
                     const double[:, ::1] x0_uncond, double ratio):
    cdef Py_ssize_t f = x_t.shape[0], d = x_t.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f):
        for j in range(d):
            out[i, j] = x0_guided[i, j] + ratio * (x_t[i, j] - x0_uncond[i, j])
    return out_arr


def cfg_combine(const double[:, ::1] cond, const double[:, ::1] uncond, double scale):
    cdef Py_ssize_t f = cond.shape[0], d = cond.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f):
        for j in range(d):
            out[i, j] = uncond[i, j] + scale * (cond[i, j] - uncond[i, j])
    return out_arr


def lerp(const double[:, ::1] a, const double[:, ::1] b, double lam):
    cdef Py_ssize_t f = a.shape[0], d = a.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f):
        for j in range(d):
            out[i, j] = lam * a[i, j] + (1.0 - lam) * b[i, j]
    return out_arr


def add_scaled(const double[:, ::1] x, double scale, const double[:, ::1] eps):
    cdef Py_ssize_t f = x.shape[0], d = x.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f):
        for j in range(d):
            out[i, j] = x[i, j] + scale * eps[i, j]
    return out_arr


def flip(const double[:, ::1] v):
    cdef Py_ssize_t f = v.shape[0], d = v.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f):
        for j in range(d):
            out[i, j] = v[f - 1 - i, j]
    return out_arr


def set_last_frame(const double[:, ::1] v, const double[::1] target):
    cdef Py_ssize_t f = v.shape[0], d = v.shape[1], i, j
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(f - 1):
        for j in range(d):
            out[i, j] = v[i, j]
    for j in range(d):
        out[f - 1, j] = target[j]
    return out_arr


def temporal_shrink_apply(const double[:, ::1] evecs, const double[::1] weights,
                          const double[:, ::1] x, const double[:, ::1] mean):
    cdef Py_ssize_t f = x.shape[0], d = x.shape[1], i, j, k
    cdef double acc
    tmp_arr = np.empty((f, d), dtype=np.float64)
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[:, ::1] tmp = tmp_arr
    cdef double[:, ::1] out = out_arr
    # tmp = diag(w) V^T (x - mean)
    for i in range(f):
        for j in range(d):
            acc = 0.0
            for k in range(f):
                acc += evecs[k, i] * (x[k, j] - mean[k, j])
            tmp[i, j] = weights[i] * acc
    # out = mean + V tmp
    for i in range(f):
        for j in range(d):
            acc = 0.0
            for k in range(f):
                acc += evecs[i, k] * tmp[k, j]
            out[i, j] = mean[i, j] + acc
    return out_arr


def lowrank_shrink_apply(const double[:, ::1] basis, const double[::1] weights,
                         const double[:, ::1] x, const double[:, ::1] mean):
    cdef Py_ssize_t f = x.shape[0], d = x.shape[1], n = f * d
    cdef Py_ssize_t r = basis.shape[1], i, j, k
    cdef double acc
    coef_arr = np.empty(r, dtype=np.float64)
    out_arr = np.empty((f, d), dtype=np.float64)
    cdef double[::1] coef = coef_arr
    cdef double[:, ::1] out = out_arr
    # coef = diag(w) U^T vec(x - mean)
    for k in range(r):
        acc = 0.0
        for i in range(f):
            for j in range(d):
                acc += basis[i * d + j, k] * (x[i, j] - mean[i, j])
        coef[k] = weights[k] * acc
    # out = mean + unvec(U coef)
    for i in range(f):
        for j in range(d):
            acc = 0.0
            for k in range(r):
                acc += basis[i * d + j, k] * coef[k]
            out[i, j] = mean[i, j] + acc
    return out_arr
