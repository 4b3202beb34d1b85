"""Synthetic driver-view perception.

The drivable-area mask is rendered analytically (pinhole camera, flat ground)
instead of being predicted by a segmentation network; a seeded corruption
model stands in for prediction error so the fine-tune selection loop can be
exercised. Downstream consumers are the centerline extractor (steering), the
chunked curvature estimator (acceleration) and the pooled feature vector
(localisation classifier).

Masks are plain ``numpy`` arrays of shape (height, width), dtype uint8,
1 = drivable. Row 0 is the top of the image.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .track import TrackDefinition

DEFAULT_MASK_HEIGHT = 384
DEFAULT_MASK_WIDTH = 512
MIN_CENTERLINE_RUN = 3
MAX_CENTERLINE_JUMP = 40  # px, row-to-row midpoint continuity limit

# Backend selection: compiled kernel if the extension built, numpy otherwise.
# TRACKDAY_PURE=1 forces the fallback (used by the benchmark).
if os.environ.get("TRACKDAY_PURE"):
    _render_kernel = None
else:
    try:
        from . import _render_c

        _render_kernel = _render_c.classify_pixels
    except ImportError:
        _render_kernel = None

from ._render_py import classify_pixels as _classify_pixels_py

RENDER_BACKEND = "compiled" if _render_kernel is not None else "numpy"


@dataclass(frozen=True)
class CameraModel:
    """Forward-facing pinhole camera mounted above the rear axle."""

    mount_height: float = 1.2  # m above ground
    pitch: float = 0.12  # rad, downward positive
    fov: float = 1.4  # rad, horizontal
    max_distance: float = 60.0  # m, view range cutoff

    def __post_init__(self):
        if not 0.0 < self.fov < math.pi:
            raise ValueError("fov must lie in (0, pi)")
        if self.mount_height <= 0 or self.max_distance <= 0:
            raise ValueError("camera distances must be positive")

    def focal_px(self, width: int) -> float:
        return (width / 2.0) / math.tan(self.fov / 2.0)


@lru_cache(maxsize=8)
def _ground_grid(camera: CameraModel, height: int, width: int):
    """Per-pixel ground intersection in the vehicle frame (x fwd, y left).

    Returns (gx, gy, valid); valid is False above the horizon or beyond the
    camera's view range. Cached per camera/raster geometry.
    """
    f = camera.focal_px(width)
    cols = (np.arange(width, dtype=np.float64) + 0.5 - width / 2.0) / f
    rows = (np.arange(height, dtype=np.float64) + 0.5 - height / 2.0) / f
    x_img, y_img = np.meshgrid(cols, rows)
    sin_p, cos_p = math.sin(camera.pitch), math.cos(camera.pitch)
    denom = sin_p + y_img * cos_p
    below_horizon = denom > 1e-9
    t = np.where(below_horizon, camera.mount_height / np.where(below_horizon, denom, 1.0), np.inf)
    gx = t * (cos_p - y_img * sin_p)
    gy = -t * x_img
    valid = below_horizon & (gx > 0.0) & (gx * gx + gy * gy <= camera.max_distance**2)
    gx = np.ascontiguousarray(np.where(valid, gx, 0.0))
    gy = np.ascontiguousarray(np.where(valid, gy, 0.0))
    return gx, gy, np.ascontiguousarray(valid.astype(np.uint8))


def _cull_segments(track: TrackDefinition, pos, reach: float):
    """Indices of centerline segments within reach of the vehicle."""
    rel = np.asarray(pos, dtype=np.float64) - track._seg_start
    t = np.clip(
        (rel[:, 0] * track._seg_vec[:, 0] + rel[:, 1] * track._seg_vec[:, 1]) / track._seg_len**2,
        0.0,
        1.0,
    )
    foot = track._seg_start + t[:, None] * track._seg_vec
    d2 = (pos[0] - foot[:, 0]) ** 2 + (pos[1] - foot[:, 1]) ** 2
    return np.flatnonzero(d2 <= reach * reach)


def render_mask(
    state,
    track: TrackDefinition,
    camera: CameraModel,
    height: int = DEFAULT_MASK_HEIGHT,
    width: int = DEFAULT_MASK_WIDTH,
) -> np.ndarray:
    """Render the ground-truth drivable-area mask for a vehicle state.

    Each pixel is back-projected to the ground plane and set to 1 iff the
    ground point lies within half_width of the track centerline.
    """
    gx, gy, valid = _ground_grid(camera, height, width)
    c, s = math.cos(state.heading), math.sin(state.heading)
    px, py = float(state.position[0]), float(state.position[1])
    wx = px + c * gx - s * gy
    wy = py + s * gx + c * gy
    keep = _cull_segments(track, (px, py), camera.max_distance + track.half_width)
    if len(keep) == 0:
        return np.zeros((height, width), dtype=np.uint8)
    seg_start = np.ascontiguousarray(track._seg_start[keep])
    seg_vec = np.ascontiguousarray(track._seg_vec[keep])
    seg_len2 = np.ascontiguousarray(track._seg_len[keep] ** 2)
    kernel = _render_kernel if _render_kernel is not None else _classify_pixels_py
    return kernel(
        np.ascontiguousarray(wx),
        np.ascontiguousarray(wy),
        valid,
        seg_start,
        seg_vec,
        seg_len2,
        track.half_width**2,
    )


def corrupt_mask(mask: np.ndarray, noise_level: float, seed: int) -> np.ndarray:
    """Flip each cell independently with probability noise_level (seeded)."""
    if not 0.0 <= noise_level <= 1.0:
        raise ValueError("noise_level must lie in [0, 1]")
    if noise_level == 0.0:
        return mask.copy()
    rng = np.random.default_rng(seed)
    flips = rng.random(mask.shape) < noise_level
    return (mask.astype(bool) ^ flips).astype(np.uint8)


def dice_loss(pred: np.ndarray, truth: np.ndarray) -> float:
    """Dice loss 1 - 2*TP / (2*TP + FP + FN) between two binary masks."""
    if pred.shape != truth.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    p = pred.astype(bool)
    t = truth.astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    if tp + fp + fn == 0:
        return 0.0  # both empty: perfect agreement
    return 1.0 - 2.0 * tp / (2.0 * tp + fp + fn)


def select_finetune_sample(pred: np.ndarray, truth: np.ndarray, threshold: float) -> bool:
    """Whether a frame is bad enough to keep for fine-tuning (loss > threshold)."""
    return dice_loss(pred, truth) > threshold


def extract_centerline(
    mask: np.ndarray, min_run: int = MIN_CENTERLINE_RUN, max_jump: int = MAX_CENTERLINE_JUMP
) -> np.ndarray:
    """Estimated centerline pixels from a drivable-area mask.

    For every row whose widest contiguous drivable run spans at least
    ``min_run`` pixels, emits (P_i, P_j): the midpoint column of that run and
    the number of rows above the image bottom. Runs touching the image border
    are discarded when any interior run exists: their midpoint is an artifact
    of the clipped view, not the road center. When every run is clipped (the
    whole visible road bends out of frame in a tight corner) the clipped runs
    are kept, since a biased midpoint still beats no signal.

    Rows are chained bottom-up by continuity: the nearest row contributes its
    widest run (leftmost on ties) and every following row contributes the run
    whose midpoint is closest to the previous pick. The chain stops when the
    nearest candidate jumps more than ``max_jump`` columns, which keeps a
    disconnected stretch of road (e.g. the far leg of a hairpin crossing the
    view) from masquerading as the road ahead. Result is ordered near to far
    (P_j strictly increasing); shape (m, 2), empty when no road is visible.
    """
    h, w = mask.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = mask != 0
    d = np.diff(padded, axis=1)
    run_row, run_start = np.nonzero(d == 1)
    end_row, run_end = np.nonzero(d == -1)
    lengths = run_end - run_start
    ok = (lengths >= min_run) & (run_start > 0) & (run_end < w)
    if not ok.any():
        ok = lengths >= min_run
    run_row, run_start, run_end, lengths = run_row[ok], run_start[ok], run_end[ok], lengths[ok]
    if len(run_row) == 0:
        return np.empty((0, 2), dtype=np.int64)
    mids = (run_start + run_end - 1) // 2
    out = []
    prev = None
    for r in np.unique(run_row)[::-1]:  # bottom (nearest) row first
        sel = np.flatnonzero(run_row == r)
        if prev is None:
            # widest run, leftmost on ties
            k = sel[np.lexsort((run_start[sel], -lengths[sel]))[0]]
        else:
            k = sel[np.argmin(np.abs(mids[sel] - prev))]
            if abs(int(mids[k]) - prev) > max_jump:
                break
        prev = int(mids[k])
        out.append((prev, h - r))
    result = np.array(out, dtype=np.int64)
    return result[np.argsort(result[:, 1])]


def ground_centerline(
    centerline: np.ndarray,
    camera: CameraModel,
    height: int = DEFAULT_MASK_HEIGHT,
    width: int = DEFAULT_MASK_WIDTH,
) -> np.ndarray:
    """Back-project centerline pixels onto the ground plane.

    Input rows are (P_i, P_j) as produced by :func:`extract_centerline`
    (columns may be fractional after smoothing). Output rows are (forward,
    left) in metres in the vehicle frame, same order. Image curvature is
    perspective-dependent (the same bend looks far sharper near the horizon),
    so curvature thresholds only make physical sense after this projection.
    """
    pts = np.asarray(centerline, dtype=np.float64)
    if len(pts) == 0:
        return np.empty((0, 2), dtype=np.float64)
    f = camera.focal_px(width)
    rows = height - pts[:, 1]
    x_img = (pts[:, 0] + 0.5 - width / 2.0) / f
    y_img = (rows + 0.5 - height / 2.0) / f
    sin_p, cos_p = math.sin(camera.pitch), math.cos(camera.pitch)
    denom = sin_p + y_img * cos_p
    t = camera.mount_height / np.maximum(denom, 1e-9)
    forward = t * (cos_p - y_img * sin_p)
    left = -t * x_img
    return np.column_stack([forward, left])


def pooled_features(mask: np.ndarray, pool_h: int = 12, pool_w: int = 16) -> np.ndarray:
    """Block-mean pooled mask, flattened row-major; values in [0, 1]."""
    h, w = mask.shape
    if h % pool_h or w % pool_w:
        raise ValueError(f"pool dims ({pool_h}, {pool_w}) must divide mask dims ({h}, {w})")
    blocks = mask.astype(np.float64).reshape(pool_h, h // pool_h, pool_w, w // pool_w)
    return blocks.mean(axis=(1, 3)).ravel()


def write_pgm(mask: np.ndarray, path) -> None:
    """Dump a mask as binary PGM (P5, 0/255) for eyeballing."""
    h, w = mask.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write((mask.astype(np.uint8) * 255).tobytes())
