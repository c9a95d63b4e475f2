# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels (see _py.py for the reference
semantics and docstrings)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, log2

cnp.import_array()


def phase_sums(double[::1] base, double[::1] phases, double[::1] wavenumbers):
    cdef Py_ssize_t num_bands = wavenumbers.shape[0]
    cdef Py_ssize_t num_elem = base.shape[0]
    out = np.empty(num_bands, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t i, n
    cdef double re_acc, im_acc, ang, k
    for i in range(num_bands):
        k = wavenumbers[i]
        re_acc = 0.0
        im_acc = 0.0
        for n in range(num_elem):
            ang = phases[n] - k * base[n]
            re_acc += cos(ang)
            im_acc += sin(ang)
        ov[i] = re_acc + 1j * im_acc
    return out


def candidate_scores(double[:, ::1] cand_xy, double[:, ::1] ue_xy,
                     double alt_sq, double irs_x, double irs_dz_sq,
                     long long[::1] band_ue,
                     double[::1] slope_ue, double[::1] slope_irs,
                     double[::1] offset, double[::1] snr_scale,
                     double[::1] bandwidth, double[::1] resid):
    cdef Py_ssize_t num_cand = cand_xy.shape[0]
    cdef Py_ssize_t num_ue = ue_xy.shape[0]
    cdef Py_ssize_t num_bands = band_ue.shape[0]
    scores = np.empty(num_cand, dtype=np.float64)
    cdef double[::1] sv = scores
    dist = np.empty(num_ue, dtype=np.float64)
    acc = np.empty(num_ue, dtype=np.float64)
    cdef double[::1] dv = dist
    cdef double[::1] av = acc
    cdef Py_ssize_t m, u, i
    cdef double cx, cy, ddx, ddy, r, lin, best
    for m in range(num_cand):
        cx = cand_xy[m, 0]
        cy = cand_xy[m, 1]
        for u in range(num_ue):
            ddx = cx - ue_xy[u, 0]
            ddy = cy - ue_xy[u, 1]
            dv[u] = sqrt(ddx * ddx + ddy * ddy + alt_sq)
            av[u] = resid[u]
        ddx = cx - irs_x
        r = sqrt(ddx * ddx + cy * cy + irs_dz_sq)
        for i in range(num_bands):
            lin = slope_ue[i] * dv[band_ue[i]] + slope_irs[i] * r + offset[i]
            if lin > 0.0:
                av[band_ue[i]] += bandwidth[i] * log2(1.0 + snr_scale[i] * lin)
        best = av[0]
        for u in range(1, num_ue):
            if av[u] < best:
                best = av[u]
        sv[m] = best
    return scores
