"""Rule-based steering and acceleration control.

Steering: a lookahead centerline pixel gives a relative angle in [-1, 1],
which a PID turns into a steering command. Acceleration: centerline pixels
are split into chunks, each chunk contributes a curvature estimate, and a
bang-bang rule over the discrete action set [-1, 0, 0.2, 0.4, 1] picks the
command from a Gaussian-weighted demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTION_SET = (-1.0, 0.0, 0.2, 0.4, 1.0)


class NoRoadError(RuntimeError):
    """Raised when the mask contains no usable centerline pixels."""


@dataclass
class PidState:
    kp: float = 1.2
    ki: float = 0.05
    kd: float = 0.3
    integral_limit: float = 1.0
    integral: float = 0.0
    prev_error: float | None = None

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None


def pid_step(pid: PidState, error: float, dt: float) -> float:
    """One PID update; returns a steering command clamped to [-1, 1]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pid.integral = min(pid.integral_limit, max(-pid.integral_limit, pid.integral + error * dt))
    derivative = 0.0 if pid.prev_error is None else (error - pid.prev_error) / dt
    pid.prev_error = error
    out = pid.kp * error + pid.ki * pid.integral + pid.kd * derivative
    return min(1.0, max(-1.0, out))


@dataclass(frozen=True)
class AccelConfig:
    num_chunks: int = 5
    sigma: float = 0.15
    max_velocity: float = 28.0  # m/s set-point, also the speed-ratio normaliser
    brake_threshold: float = 0.25
    coast_threshold: float = 0.5
    kappa_max: float = 0.04  # 1/m, demand normaliser for ground-plane curvature
    steer_cap_tight: float = 0.5  # |steering| above this -> throttle 0.2
    steer_cap_moderate: float = 0.3  # |steering| above this -> throttle 0.4
    action_set: tuple = field(default=ACTION_SET)

    def __post_init__(self):
        if self.num_chunks < 2:
            raise ValueError("num_chunks must be >= 2")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.brake_threshold < self.coast_threshold < 1.0:
            raise ValueError("need 0 < brake_threshold < coast_threshold < 1")
        if tuple(self.action_set) != ACTION_SET:
            raise ValueError(f"action_set must be exactly {ACTION_SET}")


def relative_angle(
    centerline: np.ndarray,
    speed: float,
    width: int,
    max_velocity: float = 28.0,
    lookahead_lo: float = 0.25,
    lookahead_hi: float = 0.9,
) -> float:
    """Normalized angle to a speed-dependent lookahead centerline pixel.

    0 means the target is dead ahead, negative means it is to the right.
    The lookahead target row scales with speed (farther when faster), with
    band edges keeping it on-screen.
    """
    if len(centerline) == 0:
        raise NoRoadError("no centerline pixels")
    p_i = centerline[:, 0].astype(np.float64)
    p_j = centerline[:, 1].astype(np.float64)
    ratio = min(lookahead_hi, max(lookahead_lo, speed / max_velocity))
    target_j = p_j[-1] * ratio
    k = int(np.argmin(np.abs(p_j - target_j)))
    return (math.atan2(p_j[k], p_i[k] - width / 2.0) - math.pi / 2.0) / (math.pi / 2.0)


def smooth_centerline(centerline: np.ndarray, window: int = 9) -> np.ndarray:
    """Moving-average filter over centerline columns (rows are kept exact).

    Centerline columns are quantized to whole pixels, which aliases a gently
    sloped road edge into a staircase; three-point curvature over short
    chords amplifies that into phantom curvature on straight roads. The
    filter uses a valid-mode convolution and trims half a window from each
    end so no edge-padding bias is introduced. Inputs shorter than the
    window are returned unchanged (as float).
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    pts = np.asarray(centerline, dtype=np.float64)
    if len(pts) <= window:
        return pts
    kernel = np.full(window, 1.0 / window)
    cols = np.convolve(pts[:, 0], kernel, mode="valid")
    half = window // 2
    return np.column_stack([cols, pts[half : len(pts) - half, 1]])


def chunk_curvatures(centerline: np.ndarray, c: int) -> np.ndarray:
    """Per-chunk curvature estimates (1/px), ordered near to far.

    The pixel list is padded (repeating the farthest point) up to 3*c points,
    split into c contiguous chunks, and each chunk contributes a three-point
    turn-angle-per-path-length estimate; straight chunks give ~0.
    """
    if len(centerline) == 0:
        raise ValueError("chunk_curvatures needs a non-empty centerline")
    pts = np.asarray(centerline, dtype=np.float64)
    if len(pts) < 3 * c:
        pad = np.repeat(pts[-1:], 3 * c - len(pts), axis=0)
        pts = np.vstack([pts, pad])
    out = np.zeros(c)
    for k, chunk in enumerate(np.array_split(pts, c)):
        p0, pm, p1 = chunk[0], chunk[len(chunk) // 2], chunk[-1]
        v1 = pm - p0
        v2 = p1 - pm
        n1 = math.hypot(*v1)
        n2 = math.hypot(*v2)
        if n1 == 0.0 or n2 == 0.0:
            continue
        cross = v1[0] * v2[1] - v1[1] * v2[0]
        dot = v1[0] * v2[0] + v1[1] * v2[1]
        turn = abs(math.atan2(cross, dot))
        # chord-to-chord turn is half the arc's heading change
        out[k] = 2.0 * turn / (n1 + n2)
    return out


def anticipatory_speed_limit(
    ground: np.ndarray,
    c: int,
    lateral_accel: float = 3.0,
    brake_decel: float = 7.0,
    blind_speed: float = 6.0,
    top_speed: float = 28.0,
) -> float:
    """Highest safe current speed given the visible road ahead.

    ``ground`` is the centerline in vehicle-frame metres (forward, left),
    near to far. Each of the ``c`` chunks allows a cornering speed
    sqrt(lateral_accel / curvature); the car may only go as fast as lets it
    brake (at ``brake_decel``) down to that speed over the distance to the
    chunk. Beyond the last visible point the road is assumed to demand
    ``blind_speed``, so sight distance caps speed on its own: never drive
    faster than the view allows stopping for.
    """
    if len(ground) == 0:
        return blind_speed
    if min(lateral_accel, brake_decel, blind_speed, top_speed) <= 0:
        raise ValueError("speed-limit parameters must be positive")
    kappas = chunk_curvatures(ground, c)
    pts = np.asarray(ground, dtype=np.float64)
    if len(pts) < 3 * c:
        pts = np.vstack([pts, np.repeat(pts[-1:], 3 * c - len(pts), axis=0)])
    limit = float(top_speed)
    for chunk, kappa in zip(np.array_split(pts, c), kappas):
        corner = top_speed if kappa * top_speed**2 <= lateral_accel else math.sqrt(lateral_accel / kappa)
        dist = max(0.0, float(chunk[0, 0]))
        limit = min(limit, math.sqrt(corner**2 + 2.0 * brake_decel * dist))
    sight = max(0.0, float(pts[-1, 0]))
    return min(limit, math.sqrt(blind_speed**2 + 2.0 * brake_decel * sight))


def _chunk_centers(c: int) -> np.ndarray:
    return np.arange(c) / (c - 1)


def gaussian_weight(x: float, c: int, sigma: float) -> float:
    """W = 1 - mean of Gaussian bumps centred on c evenly spaced values."""
    if c < 2:
        raise ValueError("c must be >= 2")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    mu = _chunk_centers(c)
    return float(1.0 - np.mean(np.exp(-0.5 * ((x - mu) / sigma) ** 2)))


def curvature_lookahead(curvatures, x: float, c: int, sigma: float) -> float:
    """Curvature summary weighted by the same Gaussian kernel as W.

    Higher speed ratio x shifts weight toward the far chunks.
    """
    kappa = np.asarray(curvatures, dtype=np.float64)
    g = np.exp(-0.5 * ((x - _chunk_centers(c)) / sigma) ** 2)
    return float(np.dot(g, kappa[:c]) / np.sum(g))


def throttle_action(steering: float, config: AccelConfig, cap: float = 1.0) -> float:
    """Throttle value under the steering caps (tighter cap wins)."""
    if abs(steering) > config.steer_cap_tight:
        value = 0.2
    elif abs(steering) > config.steer_cap_moderate:
        value = 0.4
    else:
        value = 1.0
    return min(value, cap)


def select_acceleration(
    velocity: float,
    w: float,
    curvatures,
    steering: float,
    config: AccelConfig,
) -> float:
    """Bang-bang acceleration choice from the five-value action set."""
    x = min(1.0, max(0.0, velocity / config.max_velocity))
    kappa = curvature_lookahead(curvatures, x, config.num_chunks, config.sigma)
    demand = w * (1.0 - kappa / config.kappa_max)
    demand = min(1.0, max(0.0, demand))
    if demand < config.brake_threshold:
        return -1.0
    if demand < config.coast_threshold:
        return 0.0
    return throttle_action(steering, config)
