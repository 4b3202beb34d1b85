"""Track geometry: file ingestion, arclength queries, section and zone labels.

A track is described by a closed centerline polyline of constant half width,
an optional list of section keypoints (nearest-keypoint assignment splits the
lap into sections) and optional axis-aligned zone boxes labelled 0/1/2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

NUM_COARSE_SEGMENTS = 10


class TrackFormatError(ValueError):
    """Raised when a track file is malformed or violates an invariant."""


@dataclass(frozen=True)
class ZoneBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    label: int

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class TrackPose:
    """Vehicle position expressed in track coordinates."""

    arclength: float
    lateral_offset: float
    section_index: int
    segment_index: int


@dataclass
class TrackDefinition:
    """Immutable world model; safe for concurrent reads once built."""

    centerline: np.ndarray  # (n, 2) float64, closed: last point == first
    half_width: float
    section_keypoints: np.ndarray  # (k, 2) float64, may be empty
    zone_boxes: list[ZoneBox]
    total_length: float = field(init=False)
    # per-segment caches for projection queries
    _seg_start: np.ndarray = field(init=False, repr=False)
    _seg_vec: np.ndarray = field(init=False, repr=False)
    _seg_len: np.ndarray = field(init=False, repr=False)
    _cum_len: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise TrackFormatError("centerline must be a list of [x, y] pairs")
        if len(pts) < 3:
            raise TrackFormatError("centerline needs at least 3 points")
        # close the polyline if the closure edge is implied
        if not np.array_equal(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[0]])
        diffs = np.diff(pts, axis=0)
        seg_len = np.hypot(diffs[:, 0], diffs[:, 1])
        if np.any(seg_len == 0.0):
            raise TrackFormatError("centerline has repeated consecutive points")
        if self.half_width <= 0:
            raise TrackFormatError("half_width must be positive")
        for box in self.zone_boxes:
            if box.label not in (0, 1, 2):
                raise TrackFormatError(f"zone label {box.label} not in {{0, 1, 2}}")
            if not (box.xmin < box.xmax and box.ymin < box.ymax):
                raise TrackFormatError("zone box must satisfy xmin < xmax, ymin < ymax")
        self.centerline = pts
        self.section_keypoints = np.asarray(self.section_keypoints, dtype=np.float64).reshape(-1, 2)
        self._seg_start = pts[:-1]
        self._seg_vec = diffs
        self._seg_len = seg_len
        self._cum_len = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.total_length = float(self._cum_len[-1])

    def point_at(self, arclength: float) -> np.ndarray:
        """Point on the centerline at the given (wrapped) arclength."""
        s = arclength % self.total_length
        i = int(np.searchsorted(self._cum_len, s, side="right") - 1)
        i = min(i, len(self._seg_len) - 1)
        t = (s - self._cum_len[i]) / self._seg_len[i]
        return self._seg_start[i] + t * self._seg_vec[i]

    def heading_at(self, arclength: float) -> float:
        """Travel direction (radians) of the centerline at an arclength."""
        s = arclength % self.total_length
        i = int(np.searchsorted(self._cum_len, s, side="right") - 1)
        i = min(i, len(self._seg_len) - 1)
        v = self._seg_vec[i]
        return math.atan2(v[1], v[0])


def load_track(path) -> TrackDefinition:
    """Load and validate a track JSON file (see the bundled data files)."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TrackFormatError(f"{path}: not valid JSON ({exc})") from exc
    return track_from_dict(raw, origin=str(path))


def track_from_dict(raw: dict, origin: str = "<dict>") -> TrackDefinition:
    if "centerline" not in raw:
        raise TrackFormatError(f"{origin}: missing required key 'centerline'")
    if "half_width" not in raw:
        raise TrackFormatError(f"{origin}: missing required key 'half_width'")
    try:
        half_width = float(raw["half_width"])
    except (TypeError, ValueError):
        raise TrackFormatError(f"{origin}: 'half_width' must be a number")
    zones = []
    for i, z in enumerate(raw.get("zones", [])):
        try:
            zones.append(
                ZoneBox(
                    xmin=float(z["xmin"]),
                    ymin=float(z["ymin"]),
                    xmax=float(z["xmax"]),
                    ymax=float(z["ymax"]),
                    label=int(z["label"]),
                )
            )
        except (KeyError, TypeError, ValueError):
            raise TrackFormatError(f"{origin}: zones[{i}] must have numeric xmin/ymin/xmax/ymax and integer label")
    keypoints = raw.get("section_keypoints", [])
    return TrackDefinition(
        centerline=np.asarray(raw["centerline"], dtype=np.float64),
        half_width=half_width,
        section_keypoints=np.asarray(keypoints, dtype=np.float64).reshape(-1, 2),
        zone_boxes=zones,
    )


def assign_section(pos, keypoints) -> int:
    """Index of the Euclidean-nearest keypoint; ties go to the lowest index."""
    kp = np.asarray(keypoints, dtype=np.float64).reshape(-1, 2)
    if len(kp) == 0:
        raise ValueError("assign_section requires at least one keypoint")
    d2 = (kp[:, 0] - pos[0]) ** 2 + (kp[:, 1] - pos[1]) ** 2
    return int(np.argmin(d2))


def assign_zone(pos, zones: list[ZoneBox]) -> int:
    """Label of the first box containing pos (inclusive); 0 outside all boxes."""
    for box in zones:
        if box.contains(pos[0], pos[1]):
            return box.label
    return 0


def locate(pos, heading: float, track: TrackDefinition) -> TrackPose:
    """Project a world position onto the track.

    Returns the arclength of the nearest centerline point, the signed lateral
    offset (positive to the left of the travel direction), the section index
    (nearest keypoint, -1 when the track has none) and the coarse segment
    index (10 equal-arclength bins).
    """
    p = np.asarray(pos, dtype=np.float64)
    rel = p - track._seg_start
    t = np.clip(
        (rel[:, 0] * track._seg_vec[:, 0] + rel[:, 1] * track._seg_vec[:, 1]) / track._seg_len**2,
        0.0,
        1.0,
    )
    foot = track._seg_start + t[:, None] * track._seg_vec
    d2 = (p[0] - foot[:, 0]) ** 2 + (p[1] - foot[:, 1]) ** 2
    i = int(np.argmin(d2))
    arclength = float(track._cum_len[i] + t[i] * track._seg_len[i])
    if arclength >= track.total_length:
        arclength -= track.total_length
    # sign via the cross product of travel direction and the offset vector
    tangent = track._seg_vec[i] / track._seg_len[i]
    off = p - foot[i]
    lateral = float(tangent[0] * off[1] - tangent[1] * off[0])
    section = assign_section(p, track.section_keypoints) if len(track.section_keypoints) else -1
    segment = int(NUM_COARSE_SEGMENTS * arclength / track.total_length)
    segment = min(segment, NUM_COARSE_SEGMENTS - 1)
    return TrackPose(arclength=arclength, lateral_offset=lateral, section_index=section, segment_index=segment)


def progress_delta(prev_arclength: float, new_arclength: float, total_length: float) -> float:
    """Wrap-aware signed arclength progress between two samples."""
    half = total_length / 2.0
    return (new_arclength - prev_arclength + half) % total_length - half
