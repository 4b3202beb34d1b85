# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled render kernel: per-pixel point-to-polyline distance test."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def classify_pixels(
    double[:, ::1] wx,
    double[:, ::1] wy,
    cnp.uint8_t[:, ::1] valid not None,
    double[:, ::1] seg_start,
    double[:, ::1] seg_vec,
    double[::1] seg_len2,
    double hw2,
):
    cdef Py_ssize_t h = wx.shape[0]
    cdef Py_ssize_t w = wx.shape[1]
    cdef Py_ssize_t nseg = seg_len2.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] ov = out
    cdef Py_ssize_t r, c, k
    cdef double px, py, rx, ry, t, dx, dy, d2

    for r in range(h):
        for c in range(w):
            if not valid[r, c]:
                continue
            px = wx[r, c]
            py = wy[r, c]
            for k in range(nseg):
                rx = px - seg_start[k, 0]
                ry = py - seg_start[k, 1]
                t = (rx * seg_vec[k, 0] + ry * seg_vec[k, 1]) / seg_len2[k]
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                dx = rx - t * seg_vec[k, 0]
                dy = ry - t * seg_vec[k, 1]
                d2 = dx * dx + dy * dy
                if d2 <= hw2:
                    ov[r, c] = 1
                    break
    return out
