from __future__ import annotations

import numpy as np
import pytest

from trackday.driver import Driver, DriverConfig
from trackday.percept import CameraModel, render_mask
from trackday.sim import Observation, VehicleState


def obs_at(track, arclength, speed, camera=None, t=0.0):
    camera = camera or CameraModel()
    p = track.point_at(arclength)
    state = VehicleState(position=(float(p[0]), float(p[1])),
                         heading=track.heading_at(arclength), speed=speed)
    return Observation(mask=render_mask(state, track, camera), speed=speed, time=t, dt=0.15)


class TestDriverRace:
    def test_full_throttle_on_open_straight(self, straight):
        driver = Driver()
        action = driver(obs_at(straight, 0.0, speed=3.0))
        assert action.acceleration == 1.0
        assert abs(action.steering) < 0.1

    def test_holds_last_action_when_blind(self, straight):
        driver = Driver()
        first = driver(obs_at(straight, 0.0, speed=3.0))
        blind = Observation(mask=np.zeros((384, 512), dtype=np.uint8), speed=3.0, time=1.0, dt=0.15)
        assert driver(blind) == first

    def test_creep_floor_in_tight_corner(self, hairpin):
        # mid hairpin at low speed: never commands full brake below creep speed
        driver = Driver()
        s_hairpin = None
        for s in np.linspace(0, hairpin.total_length, 200, endpoint=False):
            p = hairpin.point_at(s)
            if p[0] < -15.0:
                s_hairpin = s
                break
        assert s_hairpin is not None
        action = driver(obs_at(hairpin, s_hairpin, speed=1.0))
        assert action.acceleration >= 0.0

    def test_reset_clears_state(self, straight):
        driver = Driver()
        driver(obs_at(straight, 0.0, speed=3.0))
        driver.reset()
        assert driver.last_action.steering == 0.0
        assert driver.pid.prev_error is None


class TestDriverPractice:
    def test_throttles_below_practice_speed(self, straight):
        driver = Driver(practice=True)
        assert driver(obs_at(straight, 0.0, speed=2.0)).acceleration == 1.0

    def test_coasts_at_practice_speed(self, straight):
        driver = Driver(practice=True)
        cfg = driver.config
        assert driver(obs_at(straight, 0.0, speed=cfg.practice_speed + 0.5)).acceleration == 0.0


class TestDriverZoneOverrides:
    def test_zone0_ignores_camera_curvature(self, hairpin):
        # on the straight approach the vision rule coasts for the visible
        # hairpin; a trusted zone-0 label keeps full throttle
        obs = obs_at(hairpin, 30.0, speed=20.0)
        vision = Driver()(obs)
        localized = Driver(localizer=lambda f: 0)(obs)
        assert localized.acceleration >= vision.acceleration
        assert localized.acceleration == 1.0

    def test_zone2_brakes_above_release_speed(self, hairpin):
        driver = Driver(localizer=lambda f: 2)
        fast = obs_at(hairpin, 0.0, speed=driver.config.zone2_release_speed + 5.0)
        assert driver(fast).acceleration == -1.0

    def test_zone2_feathers_below_release_speed(self, hairpin):
        driver = Driver(localizer=lambda f: 2)
        slow = obs_at(hairpin, 0.0, speed=0.5 * driver.config.zone2_release_speed)
        assert driver(slow).acceleration in (0.2, 0.4)

    def test_zone1_holds_corner_speed(self, hairpin):
        driver = Driver(localizer=lambda f: 1)
        target = driver.config.zone1_corner_speed
        assert driver(obs_at(hairpin, 0.0, speed=target + 3.0)).acceleration == -1.0
        assert driver(obs_at(hairpin, 0.0, speed=target)).acceleration == 0.0

    def test_zone1_throttle_capped(self, hairpin):
        driver = Driver(localizer=lambda f: 1)
        slow = obs_at(hairpin, 0.0, speed=0.5)
        assert driver(slow).acceleration <= 0.4

    def test_last_zone_recorded(self, hairpin):
        driver = Driver(localizer=lambda f: 2)
        driver(obs_at(hairpin, 0.0, speed=5.0))
        assert driver.last_zone == 2

    def test_localizer_receives_pooled_features(self, hairpin):
        shapes = []
        driver = Driver(localizer=lambda f: shapes.append(f.shape) or 0)
        driver(obs_at(hairpin, 0.0, speed=5.0))
        cfg = driver.config
        assert shapes == [(cfg.pool_h * cfg.pool_w,)]


class TestDriverConfig:
    def test_defaults_materialised(self):
        cfg = DriverConfig()
        assert cfg.pid is not None and cfg.accel is not None

    def test_pid_state_not_shared_between_drivers(self):
        cfg = DriverConfig()
        d1, d2 = Driver(cfg), Driver(cfg)
        d1.pid.integral = 0.7
        assert d2.pid.integral == 0.0
