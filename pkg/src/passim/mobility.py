"""User motion: Gauss-Markov velocity process and the deterministic L-walk.

Velocity follows a first-order autoregression toward a mean velocity with
per-axis Gaussian innovations; position integrates velocity over one slot.
Users bounce elastically off the service-area walls and never exceed the
configured speed cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class UserState:
    position: np.ndarray  # (2,), m, inside [0, D]^2
    velocity: np.ndarray  # (2,), m/s, speed <= v_max

    def copy(self) -> "UserState":
        return UserState(self.position.copy(), self.velocity.copy())


@dataclass
class MobilityParams:
    alpha: float                # memory coefficient, [0, 1)
    mean_velocity: np.ndarray   # (2,), m/s
    noise_std: float            # m/s per axis
    dt: float                   # s
    v_max: float                # m/s
    area_side: float            # D, m

    def __post_init__(self):
        self.mean_velocity = np.asarray(self.mean_velocity, dtype=float)
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must be in [0, 1)")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be non-negative")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


def gauss_markov_velocity(velocity, alpha, mean_velocity, noise) -> np.ndarray:
    """One autoregressive velocity update: alpha*v + (1-alpha)*vbar + noise."""
    return alpha * np.asarray(velocity, float) + (1.0 - alpha) * np.asarray(
        mean_velocity, float
    ) + np.asarray(noise, float)


def clip_speed(velocity: np.ndarray, v_max: float) -> np.ndarray:
    """Rescale to speed v_max when exceeded; heading is preserved."""
    speed = float(np.hypot(velocity[0], velocity[1]))
    if speed > v_max:
        return velocity * (v_max / speed)
    return velocity


def _reflect_axis(p: float, v: float, lo: float, hi: float):
    # elastic bounce; loop covers steps overshooting more than one wall
    while p < lo or p > hi:
        if p < lo:
            p = 2.0 * lo - p
        else:
            p = 2.0 * hi - p
        v = -v
    return p, v


def step_mobility(state: UserState, params: MobilityParams,
                  rng: np.random.Generator) -> UserState:
    """Advance one slot: velocity AR update, speed cap, move, wall bounce."""
    if params.noise_std > 0.0:
        noise = rng.normal(0.0, params.noise_std, size=2)
    else:
        noise = np.zeros(2)
    v = gauss_markov_velocity(state.velocity, params.alpha,
                              params.mean_velocity, noise)
    v = clip_speed(v, params.v_max)
    pos = state.position + v * params.dt
    px, vx = _reflect_axis(float(pos[0]), float(v[0]), 0.0, params.area_side)
    py, vy = _reflect_axis(float(pos[1]), float(v[1]), 0.0, params.area_side)
    return UserState(np.array([px, py]), np.array([vx, vy]))


def init_user_state(params: MobilityParams, rng: np.random.Generator) -> UserState:
    """Episode-start draw: uniform over the inner 80% of the area."""
    lo, hi = 0.1 * params.area_side, 0.9 * params.area_side
    pos = rng.uniform(lo, hi, size=2)
    if params.noise_std > 0.0:
        noise = rng.normal(0.0, params.noise_std, size=2)
    else:
        noise = np.zeros(2)
    v = clip_speed(params.mean_velocity + noise, params.v_max)
    return UserState(pos, v)


@dataclass
class LShapeParams:
    starts: tuple         # per-user (x, y) start points, m
    leg1_lengths: tuple   # per-user first-leg length along x, m
    x_dirs: tuple         # +1 / -1 per user
    y_dirs: tuple         # +1 / -1 per user
    speed: float          # m/s, constant along the walk
    dt: float             # s
    max_steps: int


def _lshape_position(k: int, t: int, params: LShapeParams) -> np.ndarray:
    sx, sy = params.starts[k]
    leg1 = params.leg1_lengths[k]
    s = params.speed * params.dt * t  # arc length walked so far
    if s <= leg1:
        return np.array([sx + params.x_dirs[k] * s, sy])
    return np.array([sx + params.x_dirs[k] * leg1,
                     sy + params.y_dirs[k] * (s - leg1)])


def lshape_trajectory(k: int, t: int, params: LShapeParams) -> UserState:
    """Deterministic waypoint walk for user k at step t.

    Velocity is the finite difference of consecutive positions over dt
    (forward difference at t = 0).
    """
    if t < 0 or t > params.max_steps:
        raise ValueError(f"t={t} outside [0, {params.max_steps}]")
    pos = _lshape_position(k, t, params)
    if t == 0:
        vel = (_lshape_position(k, 1, params) - pos) / params.dt
    else:
        vel = (pos - _lshape_position(k, t - 1, params)) / params.dt
    return UserState(pos, vel)
