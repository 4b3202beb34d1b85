"""Synthetic track builders and the generator for the bundled track files.

The bundled circuits are unequal-radius stadiums: two circular ends joined
by their external tangents. ``hairpin`` pairs a gentle east curve with a
tight west hairpin; ``oval`` uses two gentle ends.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .track import TrackDefinition, ZoneBox


def circle_track(radius: float, n: int = 120, half_width: float = 5.0, keypoints: int = 0) -> TrackDefinition:
    """Counterclockwise circular track centred on the origin."""
    ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    pts = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    kp = pts[:: max(1, n // keypoints)][:keypoints] if keypoints else np.empty((0, 2))
    return TrackDefinition(centerline=pts, half_width=half_width, section_keypoints=kp, zone_boxes=[])


def stadium_points(center_dist: float, r_east: float, r_west: float, ds: float = 4.0) -> np.ndarray:
    """Closed counterclockwise centerline of a two-circle stadium.

    West circle at the origin, east circle at (center_dist, 0). Travel order:
    east arc (gentle end), upper tangent westward, west arc (hairpin end),
    lower tangent eastward.
    """
    theta = math.asin((r_east - r_west) / center_dist)
    a_up = math.pi / 2 + theta

    def arc(cx, cy, r, a0, a1):
        n = max(3, int(abs(a1 - a0) * r / ds))
        a = np.linspace(a0, a1, n, endpoint=False)
        return np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)])

    def straight(p0, p1):
        n = max(2, int(math.dist(p0, p1) / ds))
        t = np.linspace(0.0, 1.0, n, endpoint=False)
        return np.asarray(p0) + t[:, None] * (np.asarray(p1) - np.asarray(p0))

    east_up = (center_dist + r_east * math.cos(a_up), r_east * math.sin(a_up))
    west_up = (r_west * math.cos(a_up), r_west * math.sin(a_up))
    west_lo = (r_west * math.cos(-a_up), r_west * math.sin(-a_up))
    east_lo = (center_dist + r_east * math.cos(-a_up), r_east * math.sin(-a_up))

    pts = np.vstack(
        [
            arc(center_dist, 0.0, r_east, -a_up, a_up),
            straight(east_up, west_up),
            arc(0.0, 0.0, r_west, a_up, 2 * math.pi - a_up),
            straight(west_lo, east_lo),
        ]
    )
    # start on the lower straight so the start line sits mid-straight
    start = len(pts) - max(2, int(math.dist(west_lo, east_lo) / ds)) // 2
    return np.roll(pts, -start, axis=0)


def evenly_spaced_keypoints(pts: np.ndarray, n: int) -> np.ndarray:
    """n keypoints evenly spaced in arclength along a closed polyline."""
    closed = np.vstack([pts, pts[0]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], n, endpoint=False)
    out = []
    for s in targets:
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
        t = (s - cum[i]) / seg[i]
        out.append(closed[i] + t * (closed[i + 1] - closed[i]))
    return np.asarray(out)


def hairpin_track(half_width: float = 5.0, n_sections: int = 40) -> TrackDefinition:
    """The straight+hairpin circuit: gentle 180 east, tight hairpin west.

    Zone boxes: a hard-braking approach (2) on the upper straight starting
    where the hairpin becomes clearly visible in the mask (so the label is
    recoverable from appearance alone), and the hairpin arc itself (1). The
    gentle east curve stays zone 0: it is lappable at full speed, so it
    belongs to the high-speed background class.
    """
    pts = stadium_points(center_dist=300.0, r_east=60.0, r_west=20.0)
    zones = [
        ZoneBox(xmin=-1.0, ymin=10.0, xmax=40.0, ymax=30.0, label=2),  # hairpin approach
        ZoneBox(xmin=-27.0, ymin=-23.0, xmax=-1.0, ymax=23.0, label=1),  # hairpin arc
    ]
    return TrackDefinition(
        centerline=pts,
        half_width=half_width,
        section_keypoints=evenly_spaced_keypoints(pts, n_sections),
        zone_boxes=zones,
    )


def oval_track(half_width: float = 5.0, n_sections: int = 20) -> TrackDefinition:
    """Gentle two-ended stadium; no zone annotations needed to lap it."""
    pts = stadium_points(center_dist=220.0, r_east=55.0, r_west=45.0)
    return TrackDefinition(
        centerline=pts,
        half_width=half_width,
        section_keypoints=evenly_spaced_keypoints(pts, n_sections),
        zone_boxes=[],
    )


def long_straight_track(length: float = 2000.0, width: float = 600.0, half_width: float = 5.0) -> TrackDefinition:
    """Huge rounded rectangle; the lower side is a long straight for
    stability and renderer tests."""
    pts = stadium_points(center_dist=length, r_east=width / 2, r_west=width / 2, ds=8.0)
    return TrackDefinition(centerline=pts, half_width=half_width, section_keypoints=np.empty((0, 2)), zone_boxes=[])


def track_to_dict(track: TrackDefinition) -> dict:
    return {
        "centerline": [[float(x), float(y)] for x, y in track.centerline[:-1]],
        "half_width": track.half_width,
        "section_keypoints": [[float(x), float(y)] for x, y in track.section_keypoints],
        "zones": [
            {"xmin": z.xmin, "ymin": z.ymin, "xmax": z.xmax, "ymax": z.ymax, "label": z.label}
            for z in track.zone_boxes
        ],
    }


def write_track_json(track: TrackDefinition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(track_to_dict(track), fh, indent=1)
        fh.write("\n")
