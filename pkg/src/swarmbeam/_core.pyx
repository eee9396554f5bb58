# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``swarmbeam._core_py``.

Every per-cell sum runs sequentially in element order, so results do not
depend on how callers split the outer loops across threads.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt, M_PI


def array_factor(const double[::1] x, const double[::1] y,
                 const double[::1] w_re, const double[::1] w_im,
                 const double[::1] sin_o, const double[::1] cos_o):
    cdef Py_ssize_t n_el = x.shape[0], n_obs = sin_o.shape[0]
    out = np.empty(n_obs, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t j, n
    cdef double ph, c, s, re, im
    with nogil:
        for j in range(n_obs):
            re = 0.0
            im = 0.0
            for n in range(n_el):
                ph = 2.0 * M_PI * (x[n] * sin_o[j] + y[n] * cos_o[j])
                c = cos(ph)
                s = sin(ph)
                re = re + w_re[n] * c - w_im[n] * s
                im = im + w_re[n] * s + w_im[n] * c
            o[j] = re + 1j * im
    return out


def weight_sum(const double[::1] mag):
    cdef Py_ssize_t n
    cdef double total = 0.0
    with nogil:
        for n in range(mag.shape[0]):
            total = total + mag[n]
    return total


def steered_factor(const double[::1] x, const double[::1] y, const double[::1] mag,
                   const double[::1] sin_s, const double[::1] cos_s,
                   const double[::1] sin_o, const double[::1] cos_o):
    cdef Py_ssize_t n_el = x.shape[0], n_st = sin_s.shape[0], n_obs = sin_o.shape[0]
    out = np.empty((n_st, n_obs), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t i, j, n
    cdef double ph, re, im, ds, dc
    with nogil:
        for i in range(n_st):
            for j in range(n_obs):
                ds = sin_o[j] - sin_s[i]
                dc = cos_o[j] - cos_s[i]
                re = 0.0
                im = 0.0
                for n in range(n_el):
                    ph = 2.0 * M_PI * (x[n] * ds + y[n] * dc)
                    re = re + mag[n] * cos(ph)
                    im = im + mag[n] * sin(ph)
                o[i, j] = re + 1j * im
    return out


def perturbed_factor(const double[::1] x, const double[::1] y,
                     const double[:, ::1] dx, const double[:, ::1] dy,
                     const double[::1] w_re, const double[::1] w_im,
                     const double[::1] sin_o, const double[::1] cos_o):
    cdef Py_ssize_t n_tr = dx.shape[0], n_el = x.shape[0], n_obs = sin_o.shape[0]
    out = np.empty((n_tr, n_obs), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t t, j, n
    cdef double ph, c, s, re, im
    with nogil:
        for t in range(n_tr):
            for j in range(n_obs):
                re = 0.0
                im = 0.0
                for n in range(n_el):
                    ph = 2.0 * M_PI * ((x[n] + dx[t, n]) * sin_o[j] + (y[n] + dy[t, n]) * cos_o[j])
                    c = cos(ph)
                    s = sin(ph)
                    re = re + w_re[n] * c - w_im[n] * s
                    im = im + w_re[n] * s + w_im[n] * c
                o[t, j] = re + 1j * im
    return out


def kernel_pair(const double[:, ::1] pts, double wavenumber):
    cdef Py_ssize_t n = pts.shape[0]
    cos_out = np.zeros((n, n), dtype=np.float64)
    sinc_out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] C = cos_out
    cdef double[:, ::1] S = sinc_out
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, kr, cv, sv
    cdef double rmin = np.inf
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dx = pts[i, 0] - pts[j, 0]
                dy = pts[i, 1] - pts[j, 1]
                dz = pts[i, 2] - pts[j, 2]
                kr = wavenumber * sqrt(dx * dx + dy * dy + dz * dz)
                if kr < rmin:
                    rmin = kr
                if kr == 0.0:
                    continue
                cv = cos(kr) / (-kr)
                sv = sin(kr) / kr
                C[i, j] = cv
                C[j, i] = cv
                S[i, j] = sv
                S[j, i] = sv
    return cos_out, sinc_out, (rmin / wavenumber if n > 1 else np.inf)
