# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element kernels for the convective terms; see _kernels_py for the contract."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def convection_local(const double[:, :, ::1] wloc, const double[:, ::1] phi,
                     const double[:, :, :, ::1] grad, const double[:, ::1] wdet):
    cdef Py_ssize_t E = wloc.shape[0], Q = phi.shape[0]
    cdef Py_ssize_t e, q, i, j
    cdef double wx, wy, a
    cdef double adv[6]
    out_arr = np.zeros((E, 6, 6))
    cdef double[:, :, ::1] out = out_arr
    cdef double k[6][6]
    for e in range(E):
        for i in range(6):
            for j in range(6):
                k[i][j] = 0.0
        for q in range(Q):
            wx = 0.0
            wy = 0.0
            for j in range(6):
                wx += phi[q, j] * wloc[e, j, 0]
                wy += phi[q, j] * wloc[e, j, 1]
            for j in range(6):
                adv[j] = wx * grad[e, q, j, 0] + wy * grad[e, q, j, 1]
            for i in range(6):
                a = wdet[e, q] * phi[q, i]
                for j in range(6):
                    k[i][j] += a * adv[j]
        for i in range(6):
            for j in range(6):
                out[e, i, j] = 0.5 * (k[i][j] - k[j][i])
    return out_arr


def newton_local(const double[:, :, ::1] wloc, const double[:, ::1] phi,
                 const double[:, :, :, ::1] grad, const double[:, ::1] wdet):
    cdef Py_ssize_t E = wloc.shape[0], Q = phi.shape[0]
    cdef Py_ssize_t e, q, i, j, c, d
    cdef double wq[2]
    cdef double gw[2][2]
    cdef double adv[6]
    cdef double wd, a, b
    mat_arr = np.zeros((E, 12, 12))
    rhs_arr = np.zeros((E, 12))
    cdef double[:, :, ::1] mat = mat_arr
    cdef double[:, ::1] rhs = rhs_arr
    for e in range(E):
        for q in range(Q):
            wd = 0.5 * wdet[e, q]
            for c in range(2):
                wq[c] = 0.0
                for d in range(2):
                    gw[c][d] = 0.0
            for j in range(6):
                for c in range(2):
                    wq[c] += phi[q, j] * wloc[e, j, c]
                    for d in range(2):
                        gw[c][d] += grad[e, q, j, d] * wloc[e, j, c]
            for j in range(6):
                adv[j] = wq[0] * grad[e, q, j, 0] + wq[1] * grad[e, q, j, 1]
            for c in range(2):
                for i in range(6):
                    rhs[e, c * 6 + i] += wd * ((wq[0] * gw[c][0] + wq[1] * gw[c][1]) * phi[q, i]
                                               - adv[i] * wq[c])
                    for d in range(2):
                        a = wd * phi[q, i] * gw[c][d]
                        b = wd * grad[e, q, i, d] * wq[c]
                        for j in range(6):
                            mat[e, c * 6 + i, d * 6 + j] += phi[q, j] * (a - b)
    return mat_arr, rhs_arr
