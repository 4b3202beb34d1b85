"""Fixed-timestep vehicle dynamics and the episode loop.

The vehicle is a kinematic bicycle with linear drag and a steering-rate
limit. Episodes run synchronously: one rendered observation, one policy call
and one dynamics step per tick. Identical inputs give bit-identical logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from . import percept
from .reward import RewardConfig, step_reward
from .track import TrackDefinition, assign_zone, locate, progress_delta

PRACTICE_SPEED_CAP = 10.0  # m/s, slow reconnaissance driving
OFF_TRACK_GRACE = 0.5  # m beyond half_width before a race episode ends


@dataclass
class VehicleState:
    position: tuple[float, float]
    heading: float
    speed: float = 0.0
    steering_angle: float = 0.0  # physical wheel angle, left positive


@dataclass(frozen=True)
class Action:
    steering: float = 0.0  # -1 full left .. +1 full right
    acceleration: float = 0.0  # -1 max brake .. +1 max throttle

    def clamped(self) -> "Action":
        return Action(
            steering=min(1.0, max(-1.0, self.steering)),
            acceleration=min(1.0, max(-1.0, self.acceleration)),
        )


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.15
    max_speed: float = 28.0
    max_steer_angle: float = 0.5
    accel_gain: float = 6.0  # m/s^2 at full throttle
    brake_gain: float = 9.0  # m/s^2 at full brake
    drag_coeff: float = 0.18  # 1/s
    steer_rate: float = 3.0  # rad/s slew limit on the wheel angle
    wheelbase: float = 3.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if min(self.accel_gain, self.brake_gain, self.steer_rate, self.max_speed) <= 0:
            raise ValueError("gains must be positive")


@dataclass(frozen=True)
class Observation:
    """What a policy is allowed to see each tick."""

    mask: "percept.np.ndarray"
    speed: float
    time: float
    dt: float


def step(state: VehicleState, action: Action, config: SimConfig) -> VehicleState:
    """Advance the vehicle by one timestep.

    Position integrates along the arc implied by the (updated) steering angle,
    so constant-steering trajectories stay on their analytic circle.
    """
    a = action.clamped()
    # steering command is right-positive, wheel angle left-positive
    target = -a.steering * config.max_steer_angle
    max_delta = config.steer_rate * config.dt
    steer = state.steering_angle + min(max_delta, max(-max_delta, target - state.steering_angle))

    a_cmd = config.accel_gain * a.acceleration if a.acceleration >= 0 else config.brake_gain * a.acceleration
    new_speed = state.speed + (a_cmd - config.drag_coeff * state.speed) * config.dt
    new_speed = min(config.max_speed, max(0.0, new_speed))

    omega = (state.speed / config.wheelbase) * math.tan(steer)
    mid_heading = state.heading + 0.5 * omega * config.dt
    x = state.position[0] + state.speed * config.dt * math.cos(mid_heading)
    y = state.position[1] + state.speed * config.dt * math.sin(mid_heading)
    heading = state.heading + omega * config.dt
    return VehicleState(position=(x, y), heading=heading, speed=new_speed, steering_angle=steer)


@dataclass
class EpisodeLog:
    steps: list[dict] = field(default_factory=list)
    laps_completed: int = 0
    lap_times: list[float] = field(default_factory=list)
    off_track_count: int = 0
    total_distance: float = 0.0
    total_time: float = 0.0
    dnf: bool = False
    incomplete: bool = False

    @property
    def average_speed_kph(self) -> float:
        return 3.6 * self.total_distance / self.total_time if self.total_time > 0 else 0.0

    def summary(self) -> dict:
        return {
            "laps_completed": self.laps_completed,
            "lap_times_s": self.lap_times,
            "average_speed_kph": self.average_speed_kph,
            "off_track_count": self.off_track_count,
            "total_distance_m": self.total_distance,
            "total_time_s": self.total_time,
            "steps": len(self.steps),
            "dnf": self.dnf,
            "incomplete": self.incomplete,
        }

    def save(self, path) -> None:
        """One JSON object per step, then a summary line."""
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.steps:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.write(json.dumps({"summary": self.summary()}, sort_keys=True) + "\n")


def run_episode(
    policy,
    track: TrackDefinition,
    config: SimConfig,
    camera: percept.CameraModel | None = None,
    mode: str = "race",
    laps: int | None = None,
    duration: float | None = None,
    max_steps: int | None = None,
    start_arclength: float = 0.0,
    reward_config: RewardConfig | None = None,
    mask_noise: float = 0.0,
    on_step=None,
) -> EpisodeLog:
    """Run one closed-loop episode and return its log.

    The policy is called once per tick with an :class:`Observation`. Race
    episodes end after ``laps`` (or ``duration``/``max_steps``), or when the
    vehicle leaves the track by more than the grace margin. Practice episodes
    cap speed at 10 m/s and, being forgiving, snap back to the centerline
    instead of terminating when the vehicle runs wide.
    """
    if mode not in ("race", "practice"):
        raise ValueError(f"unknown mode {mode!r}")
    camera = camera or percept.CameraModel()
    reward_config = reward_config or RewardConfig()
    log = EpisodeLog()

    start_pos = track.point_at(start_arclength)
    state = VehicleState(position=(float(start_pos[0]), float(start_pos[1])), heading=track.heading_at(start_arclength))
    pose = locate(state.position, state.heading, track)
    progress = 0.0
    segment_clock = 0.0
    was_off = False
    t = 0.0
    step_index = 0
    lap_threshold = track.total_length

    while True:
        if max_steps is not None and step_index >= max_steps:
            break
        if duration is not None and t >= duration:
            break
        if laps is not None and log.laps_completed >= laps:
            break

        mask = percept.render_mask(state, track, camera)
        if mask_noise > 0.0:
            mask = percept.corrupt_mask(mask, mask_noise, seed=config.rng_seed * 1_000_003 + step_index)
        obs = Observation(mask=mask, speed=state.speed, time=t, dt=config.dt)
        try:
            action = policy(obs).clamped()
        except Exception:
            log.incomplete = True
            break

        new_state = step(state, action, config)
        if mode == "practice":
            new_state.speed = min(new_state.speed, PRACTICE_SPEED_CAP)
        new_pose = locate(new_state.position, new_state.heading, track)

        off = abs(new_pose.lateral_offset) > track.half_width
        if off and not was_off:
            log.off_track_count += 1
        delta = progress_delta(pose.arclength, new_pose.arclength, track.total_length)
        if new_pose.segment_index != pose.segment_index:
            segment_clock = 0.0
        else:
            segment_clock += config.dt
        reward, terms = step_reward(
            progress=delta,
            action=action,
            speed=state.speed,
            off_track=off,
            segment_time=segment_clock,
            config=reward_config,
        )
        zone = assign_zone(new_state.position, track.zone_boxes)
        t += config.dt
        progress += delta
        log.total_distance += math.hypot(
            new_state.position[0] - state.position[0], new_state.position[1] - state.position[1]
        )
        log.total_time = t

        rec = {
            "t": round(t, 9),
            "x": new_state.position[0],
            "y": new_state.position[1],
            "heading": new_state.heading,
            "speed": new_state.speed,
            "steering_angle": new_state.steering_angle,
            "action_steering": action.steering,
            "action_acceleration": action.acceleration,
            "arclength": new_pose.arclength,
            "lateral_offset": new_pose.lateral_offset,
            "section": new_pose.section_index,
            "segment": new_pose.segment_index,
            "zone": zone,
            "off_track": off,
            "reward": reward,
            "reward_terms": terms,
        }
        if on_step is not None:
            on_step(step_index, new_state, new_pose, obs, action, rec)
        log.steps.append(rec)
        step_index += 1

        while progress >= lap_threshold:
            log.laps_completed += 1
            log.lap_times.append(t - sum(log.lap_times))
            lap_threshold += track.total_length

        if off:
            if mode == "practice":
                # forgiving reset: back onto the centerline, settled speed
                s = new_pose.arclength
                p = track.point_at(s)
                new_state = VehicleState(
                    position=(float(p[0]), float(p[1])),
                    heading=track.heading_at(s),
                    speed=min(new_state.speed, 5.0),
                    steering_angle=0.0,
                )
                new_pose = locate(new_state.position, new_state.heading, track)
                if hasattr(policy, "reset"):
                    policy.reset()
            elif abs(new_pose.lateral_offset) > track.half_width + OFF_TRACK_GRACE:
                log.dnf = True
                state, pose, was_off = new_state, new_pose, off
                break

        state, pose, was_off = new_state, new_pose, off

    return log
