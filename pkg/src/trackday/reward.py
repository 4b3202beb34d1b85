"""Shaped step reward: centerline progress, boundary hits, and the two
smoothing penalties (steering magnitude vs speed, time spent per segment)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RewardConfig:
    progress_scale: float = 1.0  # reward per meter of centerline progress
    boundary_penalty: float = 5.0  # one-time hit while off-track
    steering_penalty_enabled: bool = True
    segment_penalty_enabled: bool = True
    max_velocity: float = 28.0  # normaliser for the speed ratio
    literal_steering_penalty: bool = False  # -s * speed^4 / 10, unnormalised

    def __post_init__(self):
        if self.progress_scale <= 0:
            raise ValueError("progress_scale must be positive")


def steering_penalty(speed: float, steering: float, config: RewardConfig) -> float:
    """Quartic-in-speed steering penalty, always <= 0.

    Default form uses |steering| and the speed ratio clamped to [0, 1]; the
    literal variant (raw signed steering, raw speed) is kept behind a flag
    for comparison.
    """
    if config.literal_steering_penalty:
        return -(steering * speed**4) / 10.0
    alpha = min(1.0, max(0.0, speed / config.max_velocity))
    return -(abs(steering) * alpha**4) / 10.0


def segment_penalty(t: float) -> float:
    """Fourth-root time penalty while sitting in one track segment."""
    if t < 0:
        raise ValueError("segment time must be non-negative")
    return -(t**0.25) / 100.0


def step_reward(
    progress: float,
    action,
    speed: float,
    off_track: bool,
    segment_time: float,
    config: RewardConfig,
) -> tuple[float, dict]:
    """Per-step reward and its term breakdown."""
    terms = {
        "progress": config.progress_scale * progress,
        "boundary": -config.boundary_penalty if off_track else 0.0,
        "steering": steering_penalty(speed, action.steering, config) if config.steering_penalty_enabled else 0.0,
        "segment": segment_penalty(segment_time) if config.segment_penalty_enabled else 0.0,
    }
    return sum(terms.values()), terms
