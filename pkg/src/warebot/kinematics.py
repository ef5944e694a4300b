"""Mecanum drive kinematics, odometry integration, and dual-gyro heading fusion.

Wheel ordering is fixed as front-left, front-right, rear-left, rear-right.
The wheel model for body velocities (vx forward, vy left, omega CCW) with
wheel radius r and half-geometry lx, ly:

    vx    = r * ( w_fl + w_fr + w_rl + w_rr) / 4
    vy    = r * (-w_fl + w_fr + w_rl - w_rr) / 4
    omega = r * (-w_fl + w_fr - w_rl + w_rr) / (4 * (lx + ly))

and its exact inverse for wheel speeds from a commanded twist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2D, Twist2D, WorldConfig, normalize_angle


class DegenerateFusionError(Exception):
    """Heading fusion is undefined: the weighted unit vectors cancel out."""


@dataclass(frozen=True)
class WheelSpeeds:
    """Angular wheel speeds in rad/s, order FL, FR, RL, RR."""

    w_fl: float = 0.0
    w_fr: float = 0.0
    w_rl: float = 0.0
    w_rr: float = 0.0

    def __post_init__(self):
        for v in (self.w_fl, self.w_fr, self.w_rl, self.w_rr):
            if not math.isfinite(v):
                raise ValueError(f"wheel speeds must be finite, got {self}")


@dataclass(frozen=True)
class HeadingEstimate:
    """Fused heading and the weight given to the first gyro."""

    theta: float
    weight_a: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.weight_a <= 1.0:
            raise ValueError("weight_a must be in [0, 1]")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


def forward_kinematics(ws: WheelSpeeds, cfg: WorldConfig) -> Twist2D:
    """Body twist produced by the given wheel speeds."""
    r = cfg.wheel_radius
    s = cfg.lx + cfg.ly
    vx = r * (ws.w_fl + ws.w_fr + ws.w_rl + ws.w_rr) / 4.0
    vy = r * (-ws.w_fl + ws.w_fr + ws.w_rl - ws.w_rr) / 4.0
    omega = r * (-ws.w_fl + ws.w_fr - ws.w_rl + ws.w_rr) / (4.0 * s)
    return Twist2D(vx, vy, omega)


def inverse_kinematics(t: Twist2D, cfg: WorldConfig) -> WheelSpeeds:
    """Wheel speeds realizing the given body twist; exact right-inverse of forward_kinematics."""
    r = cfg.wheel_radius
    s = cfg.lx + cfg.ly
    return WheelSpeeds(
        w_fl=(t.vx - t.vy - s * t.omega) / r,
        w_fr=(t.vx + t.vy + s * t.omega) / r,
        w_rl=(t.vx + t.vy - s * t.omega) / r,
        w_rr=(t.vx - t.vy + s * t.omega) / r,
    )


def integrate_odometry(pose: Pose2D, t: Twist2D, dt: float) -> Pose2D:
    """Euler-integrate a body twist over dt seconds.

    The twist is rotated into the world frame at the current heading, then
    position and heading advance linearly; heading is renormalized.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return Pose2D(
        x=pose.x + dt * (t.vx * c - t.vy * s),
        y=pose.y + dt * (t.vx * s + t.vy * c),
        theta=pose.theta + dt * t.omega,
    )


def fuse_heading(theta_a: float, theta_b: float, weight_a: float = 0.5) -> float:
    """Circular weighted mean of two headings.

    Averages the headings as unit vectors weighted by weight_a and
    1 - weight_a. Raises DegenerateFusionError when the weighted sum has
    negligible norm (antipodal headings at equal weight), where the mean
    is undefined.
    """
    if not 0.0 <= weight_a <= 1.0:
        raise ValueError("weight_a must be in [0, 1]")
    wb = 1.0 - weight_a
    x = weight_a * math.cos(theta_a) + wb * math.cos(theta_b)
    y = weight_a * math.sin(theta_a) + wb * math.sin(theta_b)
    if math.hypot(x, y) < 1e-9:
        raise DegenerateFusionError(
            f"headings {theta_a:.6f} and {theta_b:.6f} cancel at weight {weight_a}"
        )
    return normalize_angle(math.atan2(y, x))
