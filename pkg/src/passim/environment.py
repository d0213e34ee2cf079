"""MDP wrapper: step/reset over mobility, channel, and beamforming.

One step: slide PAs by the clipped action, move users, refresh every link,
recompute the ZF precoder, and pay reward = sum SE - lambda_move * realized
mechanical displacement. Observations are a fixed 40-entry normalized
vector (4 per user, 1 per PA, gain + LoS flag per link).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import mobility as mob
from .beamforming import (SingularChannelError, effective_channel,
                          matched_filter_precoder, pinching_matrix,
                          sinr_and_se, snr_and_se, zf_precoder)
from .config import RunConfig
from .seeding import subseed

ACTION_SLACK = 1e-6  # actions this far outside [-1, 1] are clipped silently


@dataclass
class EnvState:
    users: list                    # K UserState
    antennas: object               # AntennaConfig
    links: list                    # K lists of N LinkState
    t: int
    last_displacements: np.ndarray  # (N,) realized PA moves, m


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    sum_se: float
    per_user_se: np.ndarray
    movement_cost: float
    done: bool
    info: dict = field(default_factory=dict)


def step_reward(sum_se: float, movement_cost: float, lambda_move: float) -> float:
    return sum_se - lambda_move * movement_cost


def build_observation(state: EnvState, cfg: RunConfig) -> np.ndarray:
    """Normalized state vector: users (4K), PA positions (N), links (2KN).

    Link entries are user-outer ordered, gain first then the LoS flag. The
    gain is |h|^2 in dB clipped to the configured range and mapped to [0, 1].
    """
    sys = cfg.system
    d = sys.area_side
    v_max = cfg.mobility.v_max
    lo_db, hi_db = sys.gain_clip_db
    out = np.empty(cfg.obs_dim)
    i = 0
    for user in state.users:
        out[i] = user.position[0] / d
        out[i + 1] = user.position[1] / d
        out[i + 2] = user.velocity[0] / v_max
        out[i + 3] = user.velocity[1] / v_max
        i += 4
    for x in state.antennas.x:
        out[i] = x / d
        i += 1
    for k in range(sys.n_users):
        for n in range(sys.n_pas):
            link = state.links[k][n]
            power = abs(link.h) ** 2
            g_db = 10.0 * np.log10(max(power, 1e-300))
            g_db = min(max(g_db, lo_db), hi_db)
            out[i] = (g_db - lo_db) / (hi_db - lo_db)
            out[i + 1] = 1.0 if link.los else 0.0
            i += 2
    return out


class PassEnv:
    """Single-instance environment; step/reset mutate internal state.

    Deterministic for a fixed (config, seed, action sequence). Independent
    instances with their own seeds may run in parallel.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.sys = cfg.system
        self.mob_params = cfg.mobility_params()
        self.chan_params = cfg.channel_params()
        self.state: EnvState | None = None
        self._trajectory = None  # optional (k, t) -> UserState override

    def set_trajectory(self, trajectory) -> None:
        """Replace Gauss-Markov motion with a deterministic walk."""
        self._trajectory = trajectory

    # -- episode lifecycle --------------------------------------------------
    def reset(self, seed) -> np.ndarray:
        sys = self.sys
        root = subseed(seed)
        mob_seq, blockage_seq, fading_seq = root.spawn(3)
        self._rng_mob = np.random.default_rng(mob_seq)
        n_links = sys.n_users * sys.n_pas
        self._rng_block = [np.random.default_rng(s)
                           for s in blockage_seq.spawn(n_links)]
        self._rng_fade = [np.random.default_rng(s)
                          for s in fading_seq.spawn(n_links)]

        antennas = self.cfg.initial_antennas()
        if self._trajectory is not None:
            users = [self._trajectory(k, 0) for k in range(sys.n_users)]
        else:
            users = [mob.init_user_state(self.mob_params, self._rng_mob)
                     for _ in range(sys.n_users)]
        links = []
        for k in range(sys.n_users):
            row = []
            for n in range(sys.n_pas):
                idx = k * sys.n_pas + n
                row.append(ch.init_link(users[k], float(antennas.x[n]),
                                        float(antennas.y_wg[n]), self.chan_params,
                                        self._rng_block[idx], self._rng_fade[idx]))
            links.append(row)
        self.state = EnvState(users=users, antennas=antennas, links=links,
                              t=0, last_displacements=np.zeros(sys.n_pas))
        return build_observation(self.state, self.cfg)

    def step(self, action) -> StepResult:
        if self.state is None:
            raise RuntimeError("step() before reset()")
        sys = self.sys
        state = self.state

        a = np.asarray(action, dtype=float)
        if a.shape != (sys.n_pas,):
            raise ValueError(f"action shape {a.shape}, expected ({sys.n_pas},)")
        if np.any(np.abs(a) > 1.0 + ACTION_SLACK):
            raise ValueError(f"action outside [-1, 1]: {a}")
        a = np.clip(a, -1.0, 1.0)

        # PAs move first, then users, then the channel reacts.
        old_x = state.antennas.x
        new_x = np.clip(old_x + a * sys.delta_max, 0.0, sys.area_side)
        realized = new_x - old_x
        movement_cost = float(np.abs(realized).sum())
        state.antennas.x = new_x

        t_next = state.t + 1
        if self._trajectory is not None:
            state.users = [self._trajectory(k, t_next) for k in range(sys.n_users)]
        else:
            state.users = [mob.step_mobility(u, self.mob_params, self._rng_mob)
                           for u in state.users]

        h_rows = []
        for k in range(sys.n_users):
            idx0 = k * sys.n_pas
            state.links[k], h_k = ch.channel_vector(
                state.users[k], state.antennas, state.links[k], self.chan_params,
                self._rng_block[idx0:idx0 + sys.n_pas],
                self._rng_fade[idx0:idx0 + sys.n_pas])
            h_rows.append(h_k)

        g = pinching_matrix(state.antennas)
        h_eff = effective_channel(h_rows, g)
        fallback = False
        try:
            pre = zf_precoder(h_eff, sys.p_max, self.chan_params.noise_power)
            w, zeta = pre.w, pre.zeta
            snr, se, sum_se = snr_and_se(h_rows, g, w, self.chan_params.noise_power)
        except SingularChannelError:
            fallback = True
            w, zeta = matched_filter_precoder(h_eff, sys.p_max), float("nan")
            snr, se, sum_se = sinr_and_se(h_rows, g, w, self.chan_params.noise_power)

        reward = step_reward(sum_se, movement_cost, sys.lambda_move)
        state.t = t_next
        state.last_displacements = realized
        done = t_next >= sys.steps_per_episode

        # problem constraints: position bounds, slide limit, power budget
        assert np.all(state.antennas.x >= 0.0) and np.all(state.antennas.x <= sys.area_side)
        assert np.all(np.abs(realized) <= sys.delta_max + 1e-12)
        w_power = float(np.linalg.norm(w) ** 2)
        assert w_power <= sys.p_max * (1.0 + 1e-9)

        obs = build_observation(state, self.cfg)
        info = {
            "zeta": zeta,
            "los_count": int(sum(l.los for row in state.links for l in row)),
            "fallback": fallback,
            "w_sq": np.abs(w) ** 2,
            "user_positions": np.array([u.position for u in state.users]),
            "pa_positions": state.antennas.x.copy(),
            "los_map": np.array([[l.los for l in row] for row in state.links]),
            "t": t_next,
        }
        return StepResult(obs=obs, reward=reward, sum_se=sum_se,
                          per_user_se=se, movement_cost=movement_cost,
                          done=done, info=info)
