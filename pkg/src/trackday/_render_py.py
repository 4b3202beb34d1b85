"""Numpy fallback for the mask render kernel.

Same contract as the compiled version in ``_render_c.pyx``: classify every
valid pixel's world ground point as drivable iff its squared distance to the
nearest centerline segment is at most hw2.
"""

from __future__ import annotations

import numpy as np


def classify_pixels(wx, wy, valid, seg_start, seg_vec, seg_len2, hw2):
    h, w = wx.shape
    out = np.zeros((h, w), dtype=np.uint8)
    idx = np.nonzero(valid)
    px = wx[idx]
    py = wy[idx]
    # (npix, nseg) distance table; pixel counts are modest after culling
    rx = px[:, None] - seg_start[None, :, 0]
    ry = py[:, None] - seg_start[None, :, 1]
    t = (rx * seg_vec[None, :, 0] + ry * seg_vec[None, :, 1]) / seg_len2[None, :]
    np.clip(t, 0.0, 1.0, out=t)
    dx = rx - t * seg_vec[None, :, 0]
    dy = ry - t * seg_vec[None, :, 1]
    d2 = (dx * dx + dy * dy).min(axis=1)
    out[idx] = d2 <= hw2
    return out
