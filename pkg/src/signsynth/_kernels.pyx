# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pixel kernels. Arithmetic order matches ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, isfinite

cnp.import_array()

BACKEND = "cython"


cdef inline Py_ssize_t _clampi(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def remap(src, map_x, map_y, fill, bint use_fill):
    cdef const double[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef const double[:, ::1] mx = np.ascontiguousarray(map_x, dtype=np.float64)
    cdef const double[:, ::1] my = np.ascontiguousarray(map_y, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    cdef Py_ssize_t oh = mx.shape[0], ow = mx.shape[1]
    cdef const double[::1] f = np.ascontiguousarray(
        np.broadcast_to(np.asarray(fill, dtype=np.float64), (c,)))
    out_arr = np.empty((oh, ow, c), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, x0, y0, x1, y1
    cdef double x, y, xc, yc, fx, fy, gx, gy, top, bot
    cdef bint finite, outside
    cdef double wmax = w - 1.0, hmax = h - 1.0
    with nogil:
        for i in range(oh):
            for j in range(ow):
                x = mx[i, j]
                y = my[i, j]
                finite = isfinite(x) and isfinite(y)
                if not finite:
                    x = 0.0
                    y = 0.0
                if use_fill:
                    outside = (not finite) or x < -0.5 or x > w - 0.5 or y < -0.5 or y > h - 0.5
                    if outside:
                        for k in range(c):
                            out[i, j, k] = f[k]
                        continue
                xc = x
                if xc < 0.0:
                    xc = 0.0
                if xc > wmax:
                    xc = wmax
                yc = y
                if yc < 0.0:
                    yc = 0.0
                if yc > hmax:
                    yc = hmax
                x0 = <Py_ssize_t>floor(xc)
                y0 = <Py_ssize_t>floor(yc)
                fx = xc - <double>x0
                fy = yc - <double>y0
                gx = 1.0 - fx
                gy = 1.0 - fy
                x1 = _clampi(x0 + 1, 0, w - 1)
                y1 = _clampi(y0 + 1, 0, h - 1)
                for k in range(c):
                    top = s[y0, x0, k] * gx + s[y0, x1, k] * fx
                    bot = s[y1, x0, k] * gx + s[y1, x1, k] * fx
                    out[i, j, k] = top * gy + bot * fy
    return out_arr


def blur(src, kernel):
    cdef const double[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef const double[::1] kern = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    cdef Py_ssize_t n = kern.shape[0], r = (n - 1) // 2
    tmp_arr = np.zeros((h, w, c), dtype=np.float64)
    out_arr = np.zeros((h, w, c), dtype=np.float64)
    cdef double[:, :, ::1] tmp = tmp_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, k, t, src_i
    cdef double acc
    with nogil:
        for y in range(h):
            for x in range(w):
                for k in range(c):
                    acc = 0.0
                    for t in range(n):
                        src_i = _clampi(x + t - r, 0, w - 1)
                        acc = acc + kern[t] * s[y, src_i, k]
                    tmp[y, x, k] = acc
        for y in range(h):
            for x in range(w):
                for k in range(c):
                    acc = 0.0
                    for t in range(n):
                        src_i = _clampi(y + t - r, 0, h - 1)
                        acc = acc + kern[t] * tmp[src_i, x, k]
                    out[y, x, k] = acc
    return out_arr


def morph(src, int radius, bint dilate):
    cdef const cnp.uint8_t[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.uint8)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    tmp_arr = np.empty((h, w, c), dtype=np.uint8)
    out_arr = np.empty((h, w, c), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] tmp = tmp_arr
    cdef cnp.uint8_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, k, d
    cdef cnp.uint8_t best, v
    with nogil:
        for y in range(h):
            for x in range(w):
                for k in range(c):
                    best = s[y, x, k]
                    for d in range(-radius, radius + 1):
                        v = s[y, _clampi(x + d, 0, w - 1), k]
                        if (dilate and v > best) or (not dilate and v < best):
                            best = v
                    tmp[y, x, k] = best
        for y in range(h):
            for x in range(w):
                for k in range(c):
                    best = tmp[y, x, k]
                    for d in range(-radius, radius + 1):
                        v = tmp[_clampi(y + d, 0, h - 1), x, k]
                        if (dilate and v > best) or (not dilate and v < best):
                            best = v
                    out[y, x, k] = best
    return out_arr
