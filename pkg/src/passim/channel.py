"""PA-to-user links: LoS probability, Markov blockage, path loss, fading.

The UMi LoS probability depends only on the 2D horizontal distance; the
realized link state evolves as a two-state Markov chain whose stationary
distribution matches that probability at the current distance. The channel
coefficient combines distance-power-law path loss with either a
deterministic plane-wave phase (LoS) or unit-variance Rayleigh fading
(NLoS).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import SPEED_OF_LIGHT
from .mobility import UserState

logger = logging.getLogger(__name__)

# Distances below this are outside the power-law model's valid region.
MIN_PATHLOSS_DISTANCE = 1.0  # m
_TINY_D2D = 1e-12            # m, guards the user-directly-under-PA case


@dataclass
class ChannelParams:
    carrier_freq: float           # Hz
    pa_height: float              # H, m
    user_height: float            # m
    eta_los: float                # path-loss exponent, LoS
    eta_nlos: float               # path-loss exponent, NLoS
    ref_gain: Optional[float]     # gain at 1 m; None -> Friis (lambda/4pi)^2
    blockage_persistence: float   # q, [0, 1)
    noise_power: float            # sigma_n^2, normalized

    def __post_init__(self):
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.eta_los <= 0 or self.eta_nlos <= 0:
            raise ValueError("path-loss exponents must be positive")
        if not 0.0 <= self.blockage_persistence < 1.0:
            raise ValueError("blockage_persistence must be in [0, 1)")
        if self.ref_gain is None:
            self.ref_gain = (self.wavelength / (4.0 * np.pi)) ** 2

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq


@dataclass
class LinkState:
    los: bool     # realized link state this slot
    d2d: float    # m, horizontal distance
    d3d: float    # m
    h: complex    # effective channel coefficient


def los_probability(d2d: float) -> float:
    """UMi street-canyon LoS probability at 2D distance d2d (meters)."""
    if d2d <= 0.0:
        raise ValueError(f"d2d must be positive, got {d2d}")
    if d2d <= 18.0:
        return 1.0
    return 18.0 / d2d + np.exp(-d2d / 36.0) * (1.0 - 18.0 / d2d)


def los_transition_prob(current_los: bool, p_target: float, q: float) -> float:
    """P(next state is LoS) for the persistence-q chain with stationary p."""
    return q * (1.0 if current_los else 0.0) + (1.0 - q) * p_target


def step_blockage(current_los: bool, p_target: float, q: float,
                  rng: np.random.Generator) -> bool:
    return rng.random() < los_transition_prob(current_los, p_target, q)


def path_loss(d3d: float, los: bool, params: ChannelParams) -> float:
    """Large-scale gain ref_gain * d3d^-eta, with eta picked by link state."""
    if d3d < MIN_PATHLOSS_DISTANCE:
        logger.warning("path_loss: d3d=%.3g m below %.0f m, clamping",
                       d3d, MIN_PATHLOSS_DISTANCE)
        d3d = MIN_PATHLOSS_DISTANCE
    eta = params.eta_los if los else params.eta_nlos
    return params.ref_gain * d3d ** (-eta)


def small_scale(los: bool, d3d: float, params: ChannelParams,
                rng: np.random.Generator) -> complex:
    """Unit-power fading factor: plane-wave phase (LoS) or CN(0,1) (NLoS)."""
    if los:
        return np.exp(-2j * np.pi * d3d / params.wavelength)
    scale = np.sqrt(0.5)
    return complex(rng.normal(0.0, scale), rng.normal(0.0, scale))


def link_geometry(user_pos, pa_x: float, pa_y: float,
                  params: ChannelParams) -> tuple[float, float]:
    """(d2d, d3d) between a PA and a user; d2d floored away from zero."""
    dx = float(user_pos[0]) - pa_x
    dy = float(user_pos[1]) - pa_y
    d2d = max(float(np.hypot(dx, dy)), _TINY_D2D)
    dz = params.pa_height - params.user_height
    d3d = float(np.sqrt(d2d * d2d + dz * dz))
    return d2d, d3d


def init_link(user: UserState, pa_x: float, pa_y: float, params: ChannelParams,
              blockage_rng: np.random.Generator,
              fading_rng: np.random.Generator) -> LinkState:
    """Episode-start link: blockage drawn from the stationary distribution."""
    d2d, d3d = link_geometry(user.position, pa_x, pa_y, params)
    los = bool(blockage_rng.random() < los_probability(d2d))
    return _finish_link(los, d2d, d3d, params, fading_rng)


def _finish_link(los: bool, d2d: float, d3d: float, params: ChannelParams,
                 fading_rng: np.random.Generator) -> LinkState:
    # The fading stream always advances by one CN(0,1) draw per link per
    # slot, LoS or not, so paired runs (common random numbers) stay aligned
    # even when their blockage histories differ.
    g = small_scale(False, d3d, params, fading_rng)
    htilde = small_scale(True, d3d, params, fading_rng) if los else g
    beta = path_loss(d3d, los, params)
    return LinkState(los=los, d2d=d2d, d3d=d3d, h=np.sqrt(beta) * htilde)


def step_link(link: LinkState, user: UserState, pa_x: float, pa_y: float,
              params: ChannelParams, blockage_rng: np.random.Generator,
              fading_rng: np.random.Generator) -> LinkState:
    """Advance one slot: new geometry, Markov blockage, fresh fading."""
    d2d, d3d = link_geometry(user.position, pa_x, pa_y, params)
    los = step_blockage(link.los, los_probability(d2d),
                        params.blockage_persistence, blockage_rng)
    return _finish_link(los, d2d, d3d, params, fading_rng)


def channel_vector(user: UserState, antennas, links, params: ChannelParams,
                   blockage_rngs, fading_rngs):
    """Per-PA update for one user; returns (new links, complex gain vector).

    `blockage_rngs` / `fading_rngs` hold one Generator per PA so draws do
    not depend on evaluation order across links.
    """
    n = len(antennas.x)
    if len(links) != n:
        raise ValueError(f"expected {n} links, got {len(links)}")
    new_links = []
    h = np.empty(n, dtype=complex)
    for i in range(n):
        link = step_link(links[i], user, float(antennas.x[i]),
                         float(antennas.y_wg[i]), params,
                         blockage_rngs[i], fading_rngs[i])
        new_links.append(link)
        h[i] = link.h
    return new_links, h
