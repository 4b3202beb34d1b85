"""The full perception-to-control policy used for racing and practice.

Each tick: extract the centerline from the observation mask, steer via PID
on the relative angle, and pick an acceleration with the bang-bang rule.
When a zone localiser is attached it supersedes the camera-limited curvature
lookahead: zone 2 forces braking down to a release speed, zone 1 caps the
throttle, zone 0 runs the bang-bang rule on the velocity weight alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import control, percept
from .control import AccelConfig, NoRoadError, PidState
from .percept import CameraModel
from .sim import Action, Observation

CREEP_SPEED = 3.0  # m/s floor below which braking gives way to a crawl
ZONE2_RELEASE_SPEED = 11.0  # m/s, zone-2 braking target
ZONE1_CORNER_SPEED = 7.0  # m/s, zone-1 hold speed through the tight corner


@dataclass
class DriverConfig:
    pid: PidState = None
    accel: AccelConfig = None
    camera: CameraModel = None  # calibration used to back-project the centerline
    practice_speed: float = 9.5  # m/s throttle set-point in practice mode
    steer_speed_ref: float = 12.0  # m/s speed above which steering gain tapers
    pool_h: int = 12
    pool_w: int = 16
    zone2_release_speed: float = ZONE2_RELEASE_SPEED
    zone1_corner_speed: float = ZONE1_CORNER_SPEED
    creep_speed: float = CREEP_SPEED
    lateral_accel: float = 3.0  # m/s^2 comfortable cornering limit for the PID
    brake_decel: float = 7.0  # m/s^2 deceleration assumed by the speed limit
    blind_speed: float = 6.0  # m/s assumed safe speed beyond the visible road

    def __post_init__(self):
        if self.pid is None:
            self.pid = PidState()
        if self.accel is None:
            self.accel = AccelConfig()
        if self.camera is None:
            self.camera = CameraModel()


class Driver:
    """Stateful step policy: Observation -> Action.

    ``localizer`` is an optional callable mapping a pooled feature vector to
    a zone label in {0, 1, 2}. ``practice`` selects slow centerline-following
    (for sample collection) instead of racing.
    """

    def __init__(self, config: DriverConfig | None = None, localizer=None, practice: bool = False):
        self.config = config or DriverConfig()
        self.pid = replace(self.config.pid)
        self.localizer = localizer
        self.practice = practice
        self.last_action = Action(0.0, 0.0)
        self.last_zone = 0

    def reset(self) -> None:
        self.pid.reset()
        self.last_action = Action(0.0, 0.0)
        self.last_zone = 0

    def __call__(self, obs: Observation) -> Action:
        cfg = self.config
        accel_cfg = cfg.accel
        width = obs.mask.shape[1]
        centerline = percept.extract_centerline(obs.mask)
        if len(centerline) == 0:
            return self.last_action  # no road visible: hold the last command

        try:
            ra = control.relative_angle(centerline, obs.speed, width, max_velocity=accel_cfg.max_velocity)
        except NoRoadError:
            return self.last_action
        # yaw rate per unit steering grows linearly with speed, so above the
        # reference speed the PID output is attenuated to keep the loop gain
        # level; below it the controller keeps full authority for tight turns
        gain = min(1.0, cfg.steer_speed_ref / max(obs.speed, 1e-6))
        steering = gain * control.pid_step(self.pid, -ra, obs.dt)

        if self.practice:
            acceleration = 1.0 if obs.speed < cfg.practice_speed else 0.0
        elif self.localizer is not None:
            acceleration = self._zone_acceleration(obs, steering)
        else:
            h, w = obs.mask.shape
            ground = percept.ground_centerline(
                control.smooth_centerline(centerline), cfg.camera, h, w
            )
            curvatures = control.chunk_curvatures(ground, accel_cfg.num_chunks)
            x = min(1.0, max(0.0, obs.speed / accel_cfg.max_velocity))
            weight = control.gaussian_weight(x, accel_cfg.num_chunks, accel_cfg.sigma)
            acceleration = control.select_acceleration(obs.speed, weight, curvatures, steering, accel_cfg)
            # never outdrive the visible road: brake down to the highest speed
            # from which every curve in sight can still be entered safely
            limit = control.anticipatory_speed_limit(
                ground,
                accel_cfg.num_chunks,
                lateral_accel=cfg.lateral_accel,
                brake_decel=cfg.brake_decel,
                blind_speed=cfg.blind_speed,
                top_speed=accel_cfg.max_velocity,
            )
            if obs.speed > limit:
                acceleration = -1.0
            elif acceleration == 1.0 and obs.speed > 0.9 * limit:
                acceleration = 0.0
            if acceleration <= 0.0 and obs.speed < cfg.creep_speed:
                acceleration = 0.2  # keep crawling through tight corners

        self.last_action = Action(steering=steering, acceleration=acceleration)
        return self.last_action

    def _zone_acceleration(self, obs: Observation, steering: float) -> float:
        cfg = self.config
        accel_cfg = cfg.accel
        features = percept.pooled_features(obs.mask, cfg.pool_h, cfg.pool_w)
        zone = int(self.localizer(features))
        self.last_zone = zone
        if zone == 0:
            # trusted high-speed zone: no camera-range curvature attenuation
            x = min(1.0, max(0.0, obs.speed / accel_cfg.max_velocity))
            w = control.gaussian_weight(x, accel_cfg.num_chunks, accel_cfg.sigma)
            if w < accel_cfg.brake_threshold:
                return -1.0
            if w < accel_cfg.coast_threshold:
                return 0.0
            return control.throttle_action(steering, accel_cfg)
        # caution zones hold a target speed: brake down to it, feather below it
        target = cfg.zone2_release_speed if zone == 2 else cfg.zone1_corner_speed
        if obs.speed > target:
            return -1.0
        if obs.speed < 0.85 * target:
            return control.throttle_action(steering, accel_cfg, cap=0.4)
        return 0.0
