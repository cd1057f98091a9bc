# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for circle and torus geometry.

Signatures mirror :mod:`cantorfence._kernels_py` exactly.
"""
import numpy as np
from libc.math cimport sin, cos, sqrt, M_PI


def gauss_linking_circles(double[::1] c1, double[::1] u1, double[::1] v1, double r1,
                          double[::1] c2, double[::1] u2, double[::1] v2, double r2,
                          int m):
    cdef double h = 2.0 * M_PI / m
    cdef double total = 0.0
    cdef Py_ssize_t i, j
    cdef double ct, st, cp, sp
    cdef double x0, x1, x2, d0, d1, d2
    cdef double y0, y1, y2, e0, e1, e2
    cdef double w0, w1, w2, n0, n1, n2, dist2, dist
    cdef double[:, ::1] xa = np.empty((m, 3))
    cdef double[:, ::1] da = np.empty((m, 3))
    for i in range(m):
        ct = cos(i * h)
        st = sin(i * h)
        for j in range(3):
            xa[i, j] = c2[j] + r2 * (ct * u2[j] + st * v2[j])
            da[i, j] = r2 * (-st * u2[j] + ct * v2[j])
    for i in range(m):
        ct = cos(i * h)
        st = sin(i * h)
        x0 = c1[0] + r1 * (ct * u1[0] + st * v1[0])
        x1 = c1[1] + r1 * (ct * u1[1] + st * v1[1])
        x2 = c1[2] + r1 * (ct * u1[2] + st * v1[2])
        d0 = r1 * (-st * u1[0] + ct * v1[0])
        d1 = r1 * (-st * u1[1] + ct * v1[1])
        d2 = r1 * (-st * u1[2] + ct * v1[2])
        for j in range(m):
            w0 = x0 - xa[j, 0]
            w1 = x1 - xa[j, 1]
            w2 = x2 - xa[j, 2]
            e0 = da[j, 0]
            e1 = da[j, 1]
            e2 = da[j, 2]
            n0 = d1 * e2 - d2 * e1
            n1 = d2 * e0 - d0 * e2
            n2 = d0 * e1 - d1 * e0
            dist2 = w0 * w0 + w1 * w1 + w2 * w2
            dist = sqrt(dist2)
            total += (w0 * n0 + w1 * n1 + w2 * n2) / (dist2 * dist)
    return total * h * h / (4.0 * M_PI)


def circle_pair_distances(double[::1] c1, double[::1] u1, double[::1] v1, double r1,
                          double[::1] c2, double[::1] u2, double[::1] v2, double r2,
                          double[::1] theta, double[::1] phi):
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t i, j
    cdef double ct, st, cp, sp, acc, w
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        ct = cos(theta[i])
        st = sin(theta[i])
        cp = cos(phi[i])
        sp = sin(phi[i])
        acc = 0.0
        for j in range(3):
            w = (c1[j] + r1 * (ct * u1[j] + st * v1[j])) - (c2[j] + r2 * (cp * u2[j] + sp * v2[j]))
            acc += w * w
        o[i] = sqrt(acc)
    return out


def max_core_distance_on_torus(double[::1] pc, double[::1] pa, double pmajor,
                               double[::1] c, double[::1] e1, double[::1] e2, double[::1] ax,
                               double major, double minor, int grid):
    cdef double h = 2.0 * M_PI / grid
    cdef double best = 0.0
    cdef Py_ssize_t i, j, k
    cdef double ct, st, cp, sp, z, rad2, rad, d
    cdef double p[3]
    cdef double w[3]
    cdef double nrm[3]
    for i in range(grid):
        ct = cos(i * h)
        st = sin(i * h)
        for k in range(3):
            nrm[k] = ct * e1[k] + st * e2[k]
        for j in range(grid):
            cp = cos(j * h)
            sp = sin(j * h)
            for k in range(3):
                p[k] = c[k] + (major + minor * cp) * nrm[k] + minor * sp * ax[k]
                w[k] = p[k] - pc[k]
            z = w[0] * pa[0] + w[1] * pa[1] + w[2] * pa[2]
            rad2 = 0.0
            for k in range(3):
                rad2 += (w[k] - z * pa[k]) ** 2
            rad = sqrt(rad2)
            d = sqrt((rad - pmajor) ** 2 + z * z)
            if d > best:
                best = d
    return best
