# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot pixel kernels (see ``_pykernels`` for the
reference semantics)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

from .errors import MalformedFile

cnp.import_array()


def png_unfilter(raw, Py_ssize_t height, Py_ssize_t stride, Py_ssize_t bpp):
    cdef const unsigned char[:] src = np.ascontiguousarray(raw, dtype=np.uint8)
    out_arr = np.zeros((height, stride), dtype=np.uint8)
    cdef unsigned char[:, :] out = out_arr
    cdef Py_ssize_t r, i, base
    cdef int ftype, a, b, c, p, pa, pb, pc, pred
    for r in range(height):
        base = r * (stride + 1)
        ftype = src[base]
        if ftype > 4:
            raise MalformedFile(f"unknown PNG filter type {ftype}")
        for i in range(stride):
            a = out[r, i - bpp] if i >= bpp else 0
            b = out[r - 1, i] if r > 0 else 0
            c = out[r - 1, i - bpp] if (r > 0 and i >= bpp) else 0
            if ftype == 0:
                pred = 0
            elif ftype == 1:
                pred = a
            elif ftype == 2:
                pred = b
            elif ftype == 3:
                pred = (a + b) >> 1
            else:
                p = a + b - c
                pa = p - a if p >= a else a - p
                pb = p - b if p >= b else b - p
                pc = p - c if p >= c else c - p
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
            out[r, i] = <unsigned char>((src[base + 1 + i] + pred) & 0xFF)
    return out_arr


cdef inline double _flux(double d, double kappa, int kind) nogil:
    cdef double t = d / kappa
    if kind == 0:
        return exp(-(t * t)) * d
    return (1.0 / (1.0 + t * t)) * d


def diffuse_step(u_in, double lam, double kappa, int kind):
    cdef const double[:, :] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t h = u.shape[0], w = u.shape[1], y, x
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, :] out = out_arr
    # each edge flux is shared by its two pixels (with opposite sign)
    east_arr = np.zeros((h, w), dtype=np.float64)
    south_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, :] east = east_arr
    cdef double[:, :] south = south_arr
    cdef double flux
    with nogil:
        for y in range(h):
            for x in range(w - 1):
                east[y, x] = _flux(u[y, x + 1] - u[y, x], kappa, kind)
            if y < h - 1:
                for x in range(w):
                    south[y, x] = _flux(u[y + 1, x] - u[y, x], kappa, kind)
        for y in range(h):
            for x in range(w):
                # order N, S, E, W as in the reference implementation
                flux = -south[y - 1, x] if y > 0 else 0.0
                flux = flux + (south[y, x] if y < h - 1 else 0.0)
                flux = flux + (east[y, x] if x < w - 1 else 0.0)
                flux = flux + (-east[y, x - 1] if x > 0 else 0.0)
                out[y, x] = u[y, x] + lam * flux
    return out_arr


def convolve(img, kernel):
    cdef Py_ssize_t k = kernel.shape[0]
    cdef Py_ssize_t r = k // 2
    pad_arr = np.pad(np.asarray(img, dtype=np.float64), r, mode="edge")
    cdef const double[:, :] pad = pad_arr
    cdef const double[:, :] ker = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1], y, x, i, j
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef double acc
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(k):
                for j in range(k):
                    acc = acc + ker[i, j] * pad[y + 2 * r - i, x + 2 * r - j]
            out[y, x] = acc
    return out_arr


def nms(mag_in, direction_in):
    cdef const double[:, :] mag = np.ascontiguousarray(mag_in, dtype=np.float64)
    cdef const signed char[:, :] direction = np.ascontiguousarray(direction_in, dtype=np.int8)
    cdef Py_ssize_t h = mag.shape[0], w = mag.shape[1], y, x, fx, fy, bx, by
    cdef int dx, dy, code
    cdef double m, fwd, bwd
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef int sx[4]
    cdef int sy[4]
    sx[:] = [1, 1, 0, -1]
    sy[:] = [0, 1, 1, 1]
    for y in range(h):
        for x in range(w):
            m = mag[y, x]
            code = direction[y, x]
            if code < 0 or code > 3:
                continue
            dx = sx[code]
            dy = sy[code]
            fx = x + dx
            fy = y + dy
            bx = x - dx
            by = y - dy
            fwd = mag[fy, fx] if (0 <= fx < w and 0 <= fy < h) else 0.0
            bwd = mag[by, bx] if (0 <= bx < w and 0 <= by < h) else 0.0
            if m > fwd and m >= bwd:
                out[y, x] = m
    return out_arr


def hysteresis(labels_in):
    cdef const unsigned char[:, :] labels = np.ascontiguousarray(labels_in, dtype=np.uint8)
    cdef Py_ssize_t h = labels.shape[0], w = labels.shape[1], y, x, ny, nx, top
    keep_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, :] keep = keep_arr
    stack_arr = np.empty(h * w * 2 + 2, dtype=np.intp)
    cdef Py_ssize_t[:] stack = stack_arr
    cdef int oy, ox
    top = 0
    for y in range(h):
        for x in range(w):
            if labels[y, x] == 2 and not keep[y, x]:
                keep[y, x] = 1
                stack[top] = y
                stack[top + 1] = x
                top += 2
                while top > 0:
                    top -= 2
                    ny = stack[top]
                    nx = stack[top + 1]
                    for oy in range(-1, 2):
                        for ox in range(-1, 2):
                            if 0 <= ny + oy < h and 0 <= nx + ox < w:
                                if labels[ny + oy, nx + ox] > 0 and not keep[ny + oy, nx + ox]:
                                    keep[ny + oy, nx + ox] = 1
                                    stack[top] = ny + oy
                                    stack[top + 1] = nx + ox
                                    top += 2
    return keep_arr.astype(bool)


def profile_stats(w_in, offsets_in):
    cdef const double[:, :] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[:, :] off = np.ascontiguousarray(
        np.asarray(offsets_in, dtype=np.float64).reshape(-1, 2))
    cdef Py_ssize_t n = w.shape[0], m = off.shape[0], k, i
    means_arr = np.empty(m, dtype=np.float64)
    vars_arr = np.empty(m, dtype=np.float64)
    cdef double[:] means = means_arr
    cdef double[:] variances = vars_arr
    cdef double[:] d = np.empty(n, dtype=np.float64)
    cdef double dx, dy, s, mu, acc
    for k in range(m):
        s = 0.0
        for i in range(n):
            dx = off[k, 0] - w[i, 0]
            dy = off[k, 1] - w[i, 1]
            d[i] = sqrt(dx * dx + dy * dy)
            s = s + d[i]
        mu = s / n
        acc = 0.0
        for i in range(n):
            acc = acc + (d[i] - mu) * (d[i] - mu)
        means[k] = mu
        variances[k] = acc / n
    return means_arr, vars_arr
