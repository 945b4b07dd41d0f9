"""Synthetic ball-throw trajectories for desk-scale testing.

Each session is a chain of minimum-jerk segments through five poses
(rest -> ball -> apex -> release -> follow-through). The ball pedestal is
shared by everyone; the apex, release timing and speed are per user. The
trigger is held from grabbing the ball until release.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigurationError
from .sessions import N_TIMESTAMPS, Session

BALL = np.array([0.30, 0.95, 0.25])
REST_OFFSET = np.array([0.05, -0.10, -0.12])
RELEASE_OFFSET = np.array([-0.05, -0.10, 0.65])
FOLLOW_OFFSET = np.array([-0.25, -0.55, 0.30])


@dataclass(frozen=True)
class SyntheticUserParams:
    rng_seed: int
    apex: tuple = (0.35, 1.65, -0.20)
    duration_scale: float = 1.0
    release_fraction: float = 0.55
    noise_sigma: float = 0.005
    trigger_on: float = 0.10
    trigger_off: float = 0.55
    pose_jitter: float = 0.02
    timing_jitter: float = 0.02

    def __post_init__(self):
        if self.noise_sigma < 0 or self.pose_jitter < 0 or self.timing_jitter < 0:
            raise ConfigurationError("noise and jitter scales must be >= 0")
        for name in ("release_fraction", "trigger_on", "trigger_off"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1)")
        if self.trigger_on >= self.trigger_off:
            raise ConfigurationError("trigger_on must precede trigger_off")
        if self.duration_scale <= 0:
            raise ConfigurationError("duration_scale must be positive")


def min_jerk(p0, p1, s):
    """Minimum-jerk interpolation from p0 to p1 at phase s in [0, 1]."""
    s = np.clip(s, 0.0, 1.0)[:, None]
    return p0 + (p1 - p0) * (10 * s**3 - 15 * s**4 + 6 * s**5)


def random_user_params(rng, seed):
    """Draw a plausible, distinct thrower."""
    release = float(rng.uniform(0.45, 0.65))
    return SyntheticUserParams(
        rng_seed=seed,
        apex=tuple((np.array([0.35, 1.65, -0.20]) + rng.normal(0, [0.08, 0.08, 0.08])).round(6)),
        duration_scale=float(rng.uniform(0.85, 1.15)),
        release_fraction=release,
        noise_sigma=0.005,
        trigger_on=float(rng.uniform(0.06, 0.12)),
        trigger_off=release,
        pose_jitter=0.025,
        timing_jitter=0.02,
    )


def synthesize_session(params, rng, n_timestamps=N_TIMESTAMPS, day_offset=None):
    """One (T, 4) trajectory. ``day_offset`` shifts all user-specific poses."""
    jit = params.pose_jitter
    tj = params.timing_jitter
    shift = np.zeros(3) if day_offset is None else day_offset
    apex = np.asarray(params.apex, dtype=np.float64) + shift + rng.normal(0, jit, 3)
    rest = BALL + REST_OFFSET + shift * 0.5
    release = apex + RELEASE_OFFSET + rng.normal(0, jit, 3)
    follow = release + FOLLOW_OFFSET

    dt = rng.normal(0, tj, 2)
    t_ball = np.clip(params.trigger_on * params.duration_scale, 0.02, 0.3)
    t_release = np.clip(params.release_fraction * params.duration_scale + dt[0], t_ball + 0.15, 0.9)
    t_apex = t_ball + (t_release - t_ball) * np.clip(0.6 + dt[1], 0.3, 0.9)
    knots = np.array([0.0, t_ball, t_apex, t_release, 1.0])
    poses = [rest, BALL, apex, release, follow]

    tau = np.arange(n_timestamps) / (n_timestamps - 1)
    xyz = np.empty((n_timestamps, 3))
    for k in range(4):
        sel = (tau >= knots[k]) & (tau <= knots[k + 1])
        s = (tau[sel] - knots[k]) / (knots[k + 1] - knots[k])
        xyz[sel] = min_jerk(poses[k], poses[k + 1], s)
    if params.noise_sigma > 0:
        xyz += rng.normal(0, params.noise_sigma, xyz.shape)

    on = params.trigger_on * params.duration_scale
    off = np.clip(params.trigger_off * params.duration_scale + dt[0], on + 0.05, 0.98)
    trigger = ((tau >= on) & (tau < off)).astype(np.float64)
    return np.column_stack([xyz, trigger])


def generate_synthetic_dataset(n_users, params=None, seed=0, n_sessions=10, days=(1, 2),
                               n_timestamps=N_TIMESTAMPS):
    """Sessions for ``n_users`` users (ids ``u00``, ``u01``, ...).

    ``params`` optionally gives one SyntheticUserParams per user; otherwise
    users are drawn from ``seed``. Every (user, day, session) uses its own
    child RNG stream.
    """
    if n_users < 2:
        raise ConfigurationError("need at least 2 users")
    root = np.random.SeedSequence(seed)
    if params is None:
        draw = np.random.default_rng(root.spawn(1)[0])
        params = [random_user_params(draw, seed * 1000 + u) for u in range(n_users)]
    elif len(params) != n_users:
        raise ConfigurationError("need one SyntheticUserParams per user")
    sessions = []
    for u, p in enumerate(params):
        for day in days:
            day_rng = np.random.default_rng(np.random.SeedSequence([p.rng_seed, day]))
            day_offset = day_rng.normal(0, p.pose_jitter * 0.5, 3) if p.pose_jitter > 0 else None
            for i in range(n_sessions):
                rng = np.random.default_rng(np.random.SeedSequence([p.rng_seed, day, i]))
                samples = synthesize_session(p, rng, n_timestamps, day_offset)
                sessions.append(Session(f"u{u:02d}", day, i, samples))
    return sessions


def with_zero_noise(params):
    return replace(params, noise_sigma=0.0, pose_jitter=0.0, timing_jitter=0.0)
