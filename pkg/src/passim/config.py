"""Run configuration: dataclass sections, flat-key files, CLI overrides.

Config files are flat ``key = value`` lines (``#`` comments allowed) where
keys are dotted paths into the sections below, e.g. ``channel.noise_power =
1e-10``. Values use Python literal syntax. Defaults reproduce the standard
simulation setup; anything the model leaves open is an explicit field here.
"""

from __future__ import annotations

import ast
import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class ConfigError(ValueError):
    """Bad key, bad value type, or an invariant violated at load time."""


@dataclass
class SystemConfig:
    # Geometry and physical-layer constants
    area_side: float = 100.0            # D, m (service area D x D, waveguide length)
    pa_height: float = 10.0             # H, m
    n_pas: int = 4                      # N, one PA per waveguide
    n_users: int = 3                    # K
    carrier_freq: float = 28e9          # Hz
    waveguide_y: tuple = (20.0, 40.0, 60.0, 80.0)   # m, strictly increasing
    effective_index: float = 1.4        # waveguide n_eff; guided wavelength = lambda / n_eff
    delta_max: float = 3.0              # m, max PA slide per slot
    lambda_move: float = 0.03           # movement penalty weight
    p_max: float = 1.0                  # normalized total transmit power
    dt: float = 4.0                     # s, decision interval
    steps_per_episode: int = 80
    gain_clip_db: tuple = (-140.0, -40.0)   # observation gain normalization range


@dataclass
class MobilityConfig:
    alpha: float = 0.85                 # velocity memory coefficient, [0, 1)
    mean_velocity: tuple = (0.0, 0.0)   # m/s
    noise_std: float = 0.3              # m/s per axis
    v_max: float = 1.2                  # m/s speed cap


@dataclass
class ChannelConfig:
    user_height: float = 1.5            # m
    eta_los: float = 2.1                # path-loss exponents (TR 38.901 UMi-style)
    eta_nlos: float = 3.19
    ref_gain: Optional[float] = None    # path-loss scale at 1 m; None -> Friis (lambda/4pi)^2
    blockage_persistence: float = 0.8   # Markov chain memory q, [0, 1)
    noise_power: float = 1e-10          # sigma_n^2, same normalized units as p_max


@dataclass
class LShapeConfig:
    # Deterministic case-study walk: one x-parallel leg, a 90 degree turn,
    # then a y-parallel leg, at constant speed. One row per user.
    speed: float = 0.25                 # m/s -> exactly 1 m per 4 s slot
    starts: tuple = ((10.0, 20.0), (20.0, 80.0), (90.0, 30.0))
    leg1_lengths: tuple = (40.0, 50.0, 40.0)
    x_dirs: tuple = (1, 1, -1)
    y_dirs: tuple = (1, -1, 1)


@dataclass
class SacConfig:
    gamma: float = 0.99
    tau: float = 0.005                  # Polyak averaging rate
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    lr_alpha: float = 3e-4
    batch_size: int = 256
    buffer_capacity: int = 200_000
    hidden: tuple = (256, 256)
    target_entropy: float = -4.0        # -N by convention
    warmup_steps: int = 1000            # uniform-random steps before learning
    updates_per_step: int = 1
    episodes: int = 400
    eval_every: int = 10                # episodes between deterministic eval rounds
    eval_episodes: int = 5


@dataclass
class EvalConfig:
    seeds: tuple = (0, 1, 2, 3, 4)
    episodes_per_seed: int = 100
    snapshot_steps: tuple = (20, 40, 60, 80)


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    lshape: LShapeConfig = field(default_factory=LShapeConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    out: str = "runs"

    # -- derived quantities ------------------------------------------------
    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.system.carrier_freq

    @property
    def guided_wavelength(self) -> float:
        return self.wavelength / self.system.effective_index

    def mobility_params(self):
        from .mobility import MobilityParams

        return MobilityParams(
            alpha=self.mobility.alpha,
            mean_velocity=np.asarray(self.mobility.mean_velocity, dtype=float),
            noise_std=self.mobility.noise_std,
            dt=self.system.dt,
            v_max=self.mobility.v_max,
            area_side=self.system.area_side,
        )

    def channel_params(self):
        from .channel import ChannelParams

        return ChannelParams(
            carrier_freq=self.system.carrier_freq,
            pa_height=self.system.pa_height,
            user_height=self.channel.user_height,
            eta_los=self.channel.eta_los,
            eta_nlos=self.channel.eta_nlos,
            ref_gain=self.channel.ref_gain,
            blockage_persistence=self.channel.blockage_persistence,
            noise_power=self.channel.noise_power,
        )

    def initial_antennas(self):
        from .beamforming import AntennaConfig

        sys = self.system
        return AntennaConfig(
            x=np.full(sys.n_pas, sys.area_side / 2.0),
            y_wg=np.asarray(sys.waveguide_y, dtype=float),
            guided_wavelength=self.guided_wavelength,
            height=sys.pa_height,
            area_side=sys.area_side,
        )

    def lshape_params(self):
        from .mobility import LShapeParams

        ls = self.lshape
        return LShapeParams(
            starts=ls.starts,
            leg1_lengths=ls.leg1_lengths,
            x_dirs=ls.x_dirs,
            y_dirs=ls.y_dirs,
            speed=ls.speed,
            dt=self.system.dt,
            max_steps=self.system.steps_per_episode,
        )

    @property
    def obs_dim(self) -> int:
        sys = self.system
        return 4 * sys.n_users + sys.n_pas + 2 * sys.n_users * sys.n_pas


_SECTIONS = ("system", "mobility", "channel", "lshape", "sac", "evaluation")
_TOP_LEVEL = ("seed", "out")


def _coerce(key: str, value, target_type):
    if target_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if target_type is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list/tuple, got {value!r}")
        return tuple(tuple(v) if isinstance(v, (list, tuple)) else v for v in value)
    if target_type is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if target_type is Optional[float]:
        if value is None:
            return None
        return _coerce(key, value, float)
    raise ConfigError(f"{key}: unsupported config field type {target_type!r}")


def set_key(cfg: RunConfig, key: str, value) -> None:
    """Assign one dotted key, coercing the value to the field's type."""
    if key in _TOP_LEVEL:
        target_type = int if key == "seed" else str
        setattr(cfg, key, _coerce(key, value, target_type))
        return
    if "." not in key:
        raise ConfigError(f"unknown config key {key!r}")
    section_name, _, leaf = key.partition(".")
    if section_name not in _SECTIONS:
        raise ConfigError(f"unknown config section in key {key!r}")
    section = getattr(cfg, section_name)
    if leaf not in {f.name for f in fields(section)}:
        raise ConfigError(f"unknown config key {key!r}")
    setattr(section, leaf, _coerce(key, value, _field_type(section, leaf)))


def _field_type(section, leaf):
    # dataclass field types arrive as strings under `from __future__ import
    # annotations`; resolve the handful we actually use.
    raw = {f.name: f.type for f in fields(section)}[leaf]
    if not isinstance(raw, str):
        return raw
    return {
        "float": float,
        "int": int,
        "tuple": tuple,
        "str": str,
        "Optional[float]": Optional[float],
    }[raw]


def parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        # bare strings (paths etc.) pass through unquoted
        return raw


def apply_overrides(cfg: RunConfig, overrides) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        set_key(cfg, key.strip(), parse_value(key.strip(), raw))


def load_config(path: Optional[str] = None, overrides=()) -> RunConfig:
    """Defaults, then file values, then overrides; validated before return."""
    cfg = RunConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, raw = line.partition("=")
                set_key(cfg, key.strip(), parse_value(key.strip(), raw))
    apply_overrides(cfg, overrides)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    sys, mob, chan = cfg.system, cfg.mobility, cfg.channel
    if sys.n_pas < sys.n_users:
        raise ConfigError(
            f"system.n_pas={sys.n_pas} < system.n_users={sys.n_users}: N must be >= K"
        )
    if sys.area_side <= 0:
        raise ConfigError("system.area_side must be positive")
    if sys.dt <= 0:
        raise ConfigError("system.dt must be positive")
    if len(sys.waveguide_y) != sys.n_pas:
        raise ConfigError(
            f"system.waveguide_y has {len(sys.waveguide_y)} entries, need system.n_pas={sys.n_pas}"
        )
    if any(b <= a for a, b in zip(sys.waveguide_y, sys.waveguide_y[1:])):
        raise ConfigError("system.waveguide_y must be strictly increasing")
    if sys.delta_max <= 0:
        raise ConfigError("system.delta_max must be positive")
    if sys.lambda_move < 0:
        raise ConfigError("system.lambda_move must be non-negative")
    if not 0.0 <= mob.alpha < 1.0:
        raise ConfigError("mobility.alpha must be in [0, 1)")
    if mob.noise_std < 0:
        raise ConfigError("mobility.noise_std must be non-negative")
    if mob.v_max <= 0:
        raise ConfigError("mobility.v_max must be positive")
    if chan.eta_los <= 0 or chan.eta_nlos <= 0:
        raise ConfigError("channel path-loss exponents must be positive")
    if not 0.0 <= chan.blockage_persistence < 1.0:
        raise ConfigError("channel.blockage_persistence must be in [0, 1)")
    if chan.noise_power <= 0:
        raise ConfigError("channel.noise_power must be positive")
    if not 0.0 <= cfg.sac.gamma < 1.0:
        raise ConfigError("sac.gamma must be in [0, 1)")
    if len(cfg.lshape.starts) < sys.n_users:
        raise ConfigError("lshape.starts must have one entry per user")


def _flat_items(cfg: RunConfig):
    for key in _TOP_LEVEL:
        yield key, getattr(cfg, key)
    for section_name in _SECTIONS:
        section = getattr(cfg, section_name)
        for f in fields(section):
            yield f"{section_name}.{f.name}", getattr(section, f.name)


def format_config(cfg: RunConfig) -> str:
    """Flat key = value dump, re-loadable by `load_config`."""
    lines = []
    for key, value in _flat_items(cfg):
        if isinstance(value, str):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_equal(a: RunConfig, b: RunConfig) -> bool:
    return dataclasses.asdict(a) == dataclasses.asdict(b)
