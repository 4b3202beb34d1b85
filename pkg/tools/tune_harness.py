"""Tuning harness: race the driver with ground-truth (oracle) zones or
without localisation, reporting safety margins. Dev tool, not shipped."""

import math

from trackday import percept
from trackday.driver import Driver, DriverConfig
from trackday.sim import Observation, SimConfig, VehicleState, step as sim_step
from trackday.track import assign_zone, locate, progress_delta


def race(tr, laps=3, layout=None, release=6.0, oracle=False, sim_cfg=None, cam=None,
         driver_cfg=None, trace=False):
    boxes = layout if layout is not None else tr.zone_boxes
    cfg = sim_cfg or SimConfig()
    cam = cam or percept.CameraModel()
    drv = Driver(driver_cfg or DriverConfig(zone2_release_speed=release))
    true_zone = [0]
    if oracle:
        drv.localizer = lambda feats: true_zone[0]
    p0 = tr.point_at(0.0)
    st = VehicleState(position=(float(p0[0]), float(p0[1])), heading=tr.heading_at(0.0))
    pose = locate(st.position, st.heading, tr)
    t = 0.0
    progress = 0.0
    dist = 0.0
    minsp = 99.0
    offc = 0
    was_off = False
    maxlat = 0.0
    rows = []
    for i in range(20000):
        true_zone[0] = assign_zone(st.position, boxes)
        mask = percept.render_mask(st, tr, cam)
        a = drv(Observation(mask=mask, speed=st.speed, time=t, dt=cfg.dt))
        new = sim_step(st, a, cfg)
        npose = locate(new.position, new.heading, tr)
        off = abs(npose.lateral_offset) > tr.half_width
        maxlat = max(maxlat, abs(npose.lateral_offset))
        if off and not was_off:
            offc += 1
        if trace:
            rows.append((round(t, 2), round(new.position[0], 1), round(new.position[1], 1),
                         round(new.speed, 1), round(a.steering, 2), a.acceleration,
                         true_zone[0], round(npose.lateral_offset, 2)))
        if abs(npose.lateral_offset) > tr.half_width + 0.5:
            return dict(dnf=True, at=(round(new.position[0], 1), round(new.position[1], 1)),
                        speed=round(new.speed, 1), kph=round(3.6 * dist / t, 1) if t else 0, rows=rows)
        progress += progress_delta(pose.arclength, npose.arclength, tr.total_length)
        dist += math.hypot(new.position[0] - st.position[0], new.position[1] - st.position[1])
        t += cfg.dt
        st, pose, was_off = new, npose, off
        if new.speed > 0.1:
            minsp = min(minsp, new.speed)
        if progress >= laps * tr.total_length:
            return dict(dnf=False, off=offc, kph=round(3.6 * dist / t, 1), time=round(t, 1),
                        minspeed=round(minsp, 1), maxlat=round(maxlat, 2), rows=rows)
    return dict(dnf=False, off=offc, kph=round(3.6 * dist / t, 1), timeout=True, maxlat=round(maxlat, 2), rows=rows)
