# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels for the periodic fine/coarse mesh pair."""

import numpy as np
cimport numpy as cnp


def stencil9_const_apply(double[::1] const9, double[:, ::1] u, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double c0 = const9[0], c1 = const9[1], c2 = const9[2]
    cdef double c3 = const9[3], c4 = const9[4], c5 = const9[5]
    cdef double c6 = const9[6], c7 = const9[7], c8 = const9[8]
    cdef double acc
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        for j in range(n):
            jm = j - 1 if j > 0 else n - 1
            jp = j + 1 if j < n - 1 else 0
            acc = c0 * u[im, jm] + c1 * u[im, j] + c2 * u[im, jp]
            acc += c3 * u[i, jm] + c4 * u[i, j] + c5 * u[i, jp]
            acc += c6 * u[ip, jm] + c7 * u[ip, j] + c8 * u[ip, jp]
            out[i, j] = acc


def stencil9_apply(double[:, :, ::1] conv, double[::1] const9,
                   double[:, ::1] u, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double c0 = const9[0], c1 = const9[1], c2 = const9[2]
    cdef double c3 = const9[3], c4 = const9[4], c5 = const9[5]
    cdef double c6 = const9[6], c7 = const9[7], c8 = const9[8]
    cdef double acc
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        for j in range(n):
            jm = j - 1 if j > 0 else n - 1
            jp = j + 1 if j < n - 1 else 0
            acc = (c0 + conv[0, i, j]) * u[im, jm]
            acc += (c1 + conv[1, i, j]) * u[im, j]
            acc += (c2 + conv[2, i, j]) * u[im, jp]
            acc += (c3 + conv[3, i, j]) * u[i, jm]
            acc += (c4 + conv[4, i, j]) * u[i, j]
            acc += (c5 + conv[5, i, j]) * u[i, jp]
            acc += (c6 + conv[6, i, j]) * u[ip, jm]
            acc += (c7 + conv[7, i, j]) * u[ip, j]
            acc += (c8 + conv[8, i, j]) * u[ip, jp]
            out[i, j] = acc


def convection_assemble(double[:, ::1] tmat, double[:, ::1] wx, double[:, ::1] wy,
                        double[:, :, ::1] conv9):
    """Gather nodal convecting velocities per cell, contract with the fixed
    8x16 local tensor, and scatter into the 9-offset stencil arrays."""
    cdef Py_ssize_t n = wx.shape[0]
    cdef Py_ssize_t cx, cy, cxp, cyp, c, k, i, j
    cdef double w8[8]
    cdef double nloc[16]
    # offset index of (corner_j - corner_i) in row-major (dx, dy) order
    cdef int oidx[16]
    cdef int rloc[4]
    cdef int cloc[4]
    cdef int corners_x[4]
    cdef int corners_y[4]
    corners_x[0] = 0; corners_x[1] = 1; corners_x[2] = 0; corners_x[3] = 1
    corners_y[0] = 0; corners_y[1] = 0; corners_y[2] = 1; corners_y[3] = 1
    for i in range(4):
        for j in range(4):
            oidx[4 * i + j] = (corners_x[j] - corners_x[i] + 1) * 3 \
                + (corners_y[j] - corners_y[i] + 1)
    conv9[:, :, :] = 0.0
    for cx in range(n):
        cxp = cx + 1 if cx < n - 1 else 0
        for cy in range(n):
            cyp = cy + 1 if cy < n - 1 else 0
            w8[0] = wx[cx, cy]
            w8[1] = wx[cxp, cy]
            w8[2] = wx[cx, cyp]
            w8[3] = wx[cxp, cyp]
            w8[4] = wy[cx, cy]
            w8[5] = wy[cxp, cy]
            w8[6] = wy[cx, cyp]
            w8[7] = wy[cxp, cyp]
            for k in range(16):
                nloc[k] = (w8[0] * tmat[0, k] + w8[1] * tmat[1, k]
                           + w8[2] * tmat[2, k] + w8[3] * tmat[3, k]
                           + w8[4] * tmat[4, k] + w8[5] * tmat[5, k]
                           + w8[6] * tmat[6, k] + w8[7] * tmat[7, k])
            rloc[0] = cx; cloc[0] = cy
            rloc[1] = cxp; cloc[1] = cy
            rloc[2] = cx; cloc[2] = cyp
            rloc[3] = cxp; cloc[3] = cyp
            for i in range(4):
                for j in range(4):
                    conv9[oidx[4 * i + j], rloc[i], cloc[i]] += nloc[4 * i + j]


def twoscale_restrict(double[:, ::1] d5, double[:, ::1] u, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = out.shape[0]
    cdef Py_ssize_t J1, J2, a, b, i1, i2
    cdef double acc, c
    for J1 in range(m):
        for J2 in range(m):
            acc = 0.0
            for a in range(5):
                i1 = 2 * J1 + a - 2
                if i1 < 0:
                    i1 += n
                elif i1 >= n:
                    i1 -= n
                for b in range(5):
                    c = d5[a, b]
                    if c == 0.0:
                        continue
                    i2 = 2 * J2 + b - 2
                    if i2 < 0:
                        i2 += n
                    elif i2 >= n:
                        i2 -= n
                    acc += c * u[i1, i2]
            out[J1, J2] += acc


def twoscale_prolong(double[:, ::1] d5, double[:, ::1] p, double[:, ::1] out):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t J1, J2, a, b, i1, i2
    cdef double v, c
    for J1 in range(m):
        for J2 in range(m):
            v = p[J1, J2]
            if v == 0.0:
                continue
            for a in range(5):
                i1 = 2 * J1 + a - 2
                if i1 < 0:
                    i1 += n
                elif i1 >= n:
                    i1 -= n
                for b in range(5):
                    c = d5[a, b]
                    if c == 0.0:
                        continue
                    i2 = 2 * J2 + b - 2
                    if i2 < 0:
                        i2 += n
                    elif i2 >= n:
                        i2 -= n
                    out[i1, i2] += c * v
