"""Soft actor-critic: squashed-Gaussian actor, twin critics, auto-tuned
temperature, replay buffer, and the training loop.

The actor outputs per-action mean and log-std; actions are tanh-squashed
reparameterized samples. Critic targets use the elementwise minimum of the
two Polyak-averaged target networks minus the entropy term. All gradients
are assembled by hand on top of the neural module; the SAC-specific chain
rules (through the critic's action input and the reparameterization) are
finite-difference checked in the test suite.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import seeding
from .config import RunConfig
from .environment import PassEnv
from .neural import AdamState, Mlp, adam_step, backward, forward, load_checkpoint, save_checkpoint

LOG_SIGMA_MIN = -20.0
LOG_SIGMA_MAX = 2.0
SQUASH_EPS = 1e-6
ALPHA_INIT = 0.2


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring over flat float64 arrays."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a=None, r=None, s_next=None, done=None) -> None:
        """Insert one transition (a Transition or its five fields)."""
        if isinstance(s, Transition):
            s, a, r, s_next, done = s.s, s.a, s.r, s.s_next, s.done
        i = self.cursor
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.done[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        if self.size < batch_size:
            raise ValueError(f"buffer has {self.size} < batch {batch_size} samples")
        idx = rng.integers(0, self.size, size=batch_size)
        return {"s": self.s[idx], "a": self.a[idx], "r": self.r[idx],
                "s_next": self.s_next[idx], "done": self.done[idx]}


@dataclass
class SacAgent:
    actor: Mlp          # state -> [mu, raw log sigma]
    q1: Mlp             # [state, action] -> scalar
    q2: Mlp
    q1_targ: Mlp
    q2_targ: Mlp
    log_alpha: np.ndarray   # shape-() array so Adam can update it in place
    opt_actor: AdamState
    opt_q1: AdamState
    opt_q2: AdamState
    opt_alpha: AdamState
    gamma: float
    tau: float
    target_entropy: float
    state_dim: int
    action_dim: int
    total_env_steps: int = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    @classmethod
    def create(cls, state_dim: int, action_dim: int, cfg, rng: np.random.Generator):
        hidden = list(cfg.hidden)
        actor = Mlp.create([state_dim] + hidden + [2 * action_dim], rng,
                           final_scale=1e-2)
        q1 = Mlp.create([state_dim + action_dim] + hidden + [1], rng,
                        final_scale=1e-2)
        q2 = Mlp.create([state_dim + action_dim] + hidden + [1], rng,
                        final_scale=1e-2)
        log_alpha = np.array(np.log(ALPHA_INIT))
        return cls(
            actor=actor, q1=q1, q2=q2, q1_targ=q1.copy(), q2_targ=q2.copy(),
            log_alpha=log_alpha,
            opt_actor=AdamState.for_params(actor.params(), cfg.lr_actor),
            opt_q1=AdamState.for_params(q1.params(), cfg.lr_critic),
            opt_q2=AdamState.for_params(q2.params(), cfg.lr_critic),
            opt_alpha=AdamState.for_params([log_alpha], cfg.lr_alpha),
            gamma=cfg.gamma, tau=cfg.tau, target_entropy=cfg.target_entropy,
            state_dim=state_dim, action_dim=action_dim)


def squashed_log_prob(u, mu, sigma):
    """Per-dimension log density of a = tanh(u), u ~ Normal(mu, sigma^2)."""
    u = np.asarray(u, float)
    a = np.tanh(u)
    base = (-0.5 * ((u - mu) / sigma) ** 2 - np.log(sigma)
            - 0.5 * np.log(2.0 * np.pi))
    return base - np.log(1.0 - a ** 2 + SQUASH_EPS)


def _actor_heads(agent: SacAgent, states):
    out, cache = forward(agent.actor, states)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("actor produced non-finite output")
    mu = out[..., :agent.action_dim]
    raw = out[..., agent.action_dim:]
    log_sigma = np.clip(raw, LOG_SIGMA_MIN, LOG_SIGMA_MAX)
    return mu, log_sigma, raw, cache


def _squash(u):
    a = np.tanh(u)
    # keep actions strictly inside (-1, 1) even where tanh rounds to +-1
    return np.clip(a, -1.0 + 1e-12, 1.0 - 1e-12)


def sample_action(agent: SacAgent, state, rng: np.random.Generator | None = None,
                  deterministic: bool = False):
    """Returns (action, log_prob); log_prob is None when deterministic."""
    mu, log_sigma, _, _ = _actor_heads(agent, np.asarray(state, float)[None, :])
    if deterministic:
        return _squash(mu[0]), None
    sigma = np.exp(log_sigma)
    eps = rng.standard_normal(mu.shape)
    u = mu + sigma * eps
    logp = float(squashed_log_prob(u, mu, sigma).sum())
    return _squash(u[0]), logp


def _sample_batch(agent: SacAgent, states, eps):
    """Reparameterized batch sample; returns everything update() needs."""
    mu, log_sigma, raw, cache = _actor_heads(agent, states)
    sigma = np.exp(log_sigma)
    u = mu + sigma * eps
    a = _squash(u)
    logp = squashed_log_prob(u, mu, sigma).sum(axis=1)
    return a, logp, mu, log_sigma, raw, sigma, u, cache


def soft_td_target(r, done, q_next_min, logp_next, alpha, gamma):
    """y = r + gamma * (1 - done) * (min Q' - alpha * log pi')."""
    return r + gamma * (1.0 - done) * (q_next_min - alpha * logp_next)


def td_target(agent: SacAgent, batch: dict, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal((batch["s_next"].shape[0], agent.action_dim))
    a_next, logp_next, *_ = _sample_batch(agent, batch["s_next"], eps)
    sa_next = np.concatenate([batch["s_next"], a_next], axis=1)
    q1n, _ = forward(agent.q1_targ, sa_next)
    q2n, _ = forward(agent.q2_targ, sa_next)
    q_min = np.minimum(q1n[:, 0], q2n[:, 0])
    return soft_td_target(batch["r"], batch["done"], q_min, logp_next,
                          agent.alpha, agent.gamma)


def polyak_update(target: Mlp, online: Mlp, tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, parameterwise."""
    for pt, p in zip(target.params(), online.params()):
        pt *= (1.0 - tau)
        pt += tau * p
    target.version += 1


def _critic_step(net: Mlp, opt: AdamState, sa, y):
    q, cache = forward(net, sa)
    diff = q[:, 0] - y
    loss = float(np.mean(diff ** 2))
    grad_out = (2.0 / diff.shape[0]) * diff[:, None]
    grads, _ = backward(net, cache, grad_out)
    adam_step(net.params(), grads, opt)
    net.version += 1
    return loss


def update(agent: SacAgent, buffer: ReplayBuffer, batch_size: int,
           rng: np.random.Generator) -> dict:
    """One SAC gradient step on a sampled batch; returns loss diagnostics."""
    batch = buffer.sample(batch_size, rng)
    b = batch_size
    alpha = agent.alpha

    # -- critics: MSE to the soft TD target ---------------------------------
    y = td_target(agent, batch, rng)
    sa = np.concatenate([batch["s"], batch["a"]], axis=1)
    loss_q1 = _critic_step(agent.q1, agent.opt_q1, sa, y)
    loss_q2 = _critic_step(agent.q2, agent.opt_q2, sa, y)

    # -- actor: maximize E[min Q(s, a~) - alpha * log pi] --------------------
    eps = rng.standard_normal((b, agent.action_dim))
    a, logp, mu, log_sigma, raw, sigma, u, cache_a = _sample_batch(
        agent, batch["s"], eps)
    sa_pi = np.concatenate([batch["s"], a], axis=1)
    q1a, cache1 = forward(agent.q1, sa_pi)
    q2a, cache2 = forward(agent.q2, sa_pi)
    q_min = np.minimum(q1a[:, 0], q2a[:, 0])
    actor_loss = float(np.mean(alpha * logp - q_min))

    # dQ/da via the input gradient of whichever critic attains the min
    pick1 = (q1a[:, 0] <= q2a[:, 0]).astype(float)[:, None]
    _, gin1 = backward(agent.q1, cache1, (-1.0 / b) * pick1, param_grads=False)
    _, gin2 = backward(agent.q2, cache2, (-1.0 / b) * (1.0 - pick1),
                       param_grads=False)
    dloss_da = (gin1 + gin2)[:, agent.state_dim:]   # (B, A), includes -1/B

    t = 1.0 - np.tanh(u) ** 2                        # exact dtanh/du
    dsquash = 2.0 * np.tanh(u) * t / (t + SQUASH_EPS)  # d(-log(1-a^2+eps))/du
    # logp terms: Gaussian part is constant in (mu, sigma) under fixed eps,
    # except -log sigma; the squash correction flows through u.
    dlogp_dmu = dsquash
    dlogp_dlogsig = -1.0 + dsquash * eps * sigma
    dq_dmu = dloss_da * t                            # dloss_da already carries -1/B
    dq_dlogsig = dloss_da * t * eps * sigma
    g_mu = (alpha / b) * dlogp_dmu + dq_dmu
    g_logsig = (alpha / b) * dlogp_dlogsig + dq_dlogsig
    clip_mask = ((raw > LOG_SIGMA_MIN) & (raw < LOG_SIGMA_MAX)).astype(float)
    grad_out = np.concatenate([g_mu, g_logsig * clip_mask], axis=1)
    grads_a, _ = backward(agent.actor, cache_a, grad_out)
    adam_step(agent.actor.params(), grads_a, agent.opt_actor)
    agent.actor.version += 1

    # -- temperature: drive E[log pi] toward -target_entropy ----------------
    alpha_grad = -float(np.mean(logp + agent.target_entropy))
    alpha_loss = -float(agent.log_alpha) * (-alpha_grad)
    adam_step([agent.log_alpha], [np.asarray(alpha_grad)], agent.opt_alpha)

    polyak_update(agent.q1_targ, agent.q1, agent.tau)
    polyak_update(agent.q2_targ, agent.q2, agent.tau)

    return {"critic_loss": 0.5 * (loss_q1 + loss_q2), "actor_loss": actor_loss,
            "alpha_loss": alpha_loss, "alpha": agent.alpha,
            "entropy": float(np.mean(-logp))}


# ---------------------------------------------------------------------------
# training loop

def save_agent(path, agent: SacAgent) -> None:
    nets = {"actor": agent.actor, "q1": agent.q1, "q2": agent.q2,
            "q1_targ": agent.q1_targ, "q2_targ": agent.q2_targ}
    meta = {"gamma": agent.gamma, "tau": agent.tau,
            "target_entropy": agent.target_entropy,
            "state_dim": agent.state_dim, "action_dim": agent.action_dim,
            "total_env_steps": agent.total_env_steps}
    save_checkpoint(path, nets, arrays={"log_alpha": agent.log_alpha}, meta=meta)


def load_agent(path, cfg=None) -> SacAgent:
    """Rebuild an agent from a checkpoint; optimizer state starts fresh."""
    nets, arrays, meta = load_checkpoint(path)
    log_alpha = arrays["log_alpha"].copy()
    lr = cfg.lr_actor if cfg is not None else 3e-4
    agent = SacAgent(
        actor=nets["actor"], q1=nets["q1"], q2=nets["q2"],
        q1_targ=nets["q1_targ"], q2_targ=nets["q2_targ"], log_alpha=log_alpha,
        opt_actor=AdamState.for_params(nets["actor"].params(), lr),
        opt_q1=AdamState.for_params(nets["q1"].params(), lr),
        opt_q2=AdamState.for_params(nets["q2"].params(), lr),
        opt_alpha=AdamState.for_params([log_alpha], lr),
        gamma=meta["gamma"], tau=meta["tau"],
        target_entropy=meta["target_entropy"], state_dim=meta["state_dim"],
        action_dim=meta["action_dim"], total_env_steps=meta["total_env_steps"])
    return agent


def _deterministic_score(agent: SacAgent, cfg: RunConfig, seed) -> float:
    """Mean episode sum SE over the fixed in-training eval episodes."""
    env = PassEnv(cfg)
    totals = []
    for i in range(cfg.sac.eval_episodes):
        obs = env.reset(seeding.subseed(seed, seeding.TRAIN_EVAL, i))
        total = 0.0
        for _ in range(cfg.system.steps_per_episode):
            a, _ = sample_action(agent, obs, deterministic=True)
            res = env.step(a)
            total += res.sum_se
            obs = res.obs
        totals.append(total)
    return float(np.mean(totals))


CURVE_FIELDS = ["episode", "steps", "mean_reward", "sum_se", "critic_loss",
                "actor_loss", "alpha"]


def train(cfg: RunConfig, seed: int | None = None, out_dir: str | None = None,
          log_every: int = 0):
    """Full training run; returns (agent, curve records).

    When out_dir is given, writes training_curve.csv plus final and
    best-eval checkpoints there.
    """
    if seed is None:
        seed = cfg.seed
    sac_cfg = cfg.sac
    env = PassEnv(cfg)
    agent = SacAgent.create(cfg.obs_dim, cfg.system.n_pas, sac_cfg,
                            seeding.substream(seed, seeding.NETWORK_INIT))
    rng = seeding.substream(seed, seeding.EXPLORATION)
    buffer = ReplayBuffer(sac_cfg.buffer_capacity, cfg.obs_dim, cfg.system.n_pas)

    curve = []
    best_score = -np.inf
    total_steps = 0
    for ep in range(sac_cfg.episodes):
        obs = env.reset(seeding.subseed(seed, seeding.ENV_EPISODE, ep))
        ep_reward = ep_se = 0.0
        diags = []
        for _ in range(cfg.system.steps_per_episode):
            if total_steps < sac_cfg.warmup_steps:
                a = rng.uniform(-1.0, 1.0, size=cfg.system.n_pas)
            else:
                a, _ = sample_action(agent, obs, rng)
            res = env.step(a)
            buffer.add(obs, a, res.reward, res.obs, res.done)
            obs = res.obs
            total_steps += 1
            ep_reward += res.reward
            ep_se += res.sum_se
            if total_steps >= sac_cfg.warmup_steps and len(buffer) >= sac_cfg.batch_size:
                for _ in range(sac_cfg.updates_per_step):
                    diags.append(update(agent, buffer, sac_cfg.batch_size, rng))
        agent.total_env_steps = total_steps
        record = {
            "episode": ep,
            "steps": total_steps,
            "mean_reward": ep_reward / cfg.system.steps_per_episode,
            "sum_se": ep_se,
            "critic_loss": float(np.mean([d["critic_loss"] for d in diags])) if diags else float("nan"),
            "actor_loss": float(np.mean([d["actor_loss"] for d in diags])) if diags else float("nan"),
            "alpha": agent.alpha,
        }
        curve.append(record)
        if log_every and (ep + 1) % log_every == 0:
            print(f"episode {ep + 1}/{sac_cfg.episodes} "
                  f"sum_se={record['sum_se']:.2f} alpha={record['alpha']:.4f}",
                  flush=True)
        if (ep + 1) % sac_cfg.eval_every == 0:
            score = _deterministic_score(agent, cfg, seed)
            if score > best_score:
                best_score = score
                if out_dir is not None:
                    save_agent(os.path.join(out_dir, "checkpoint_best.npz"), agent)
    if out_dir is not None:
        save_agent(os.path.join(out_dir, "checkpoint_final.npz"), agent)
        write_curve(os.path.join(out_dir, "training_curve.csv"), curve)
    return agent, curve


def write_curve(path, curve) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_FIELDS)
        for rec in curve:
            writer.writerow([rec["episode"], rec["steps"],
                             repr(rec["mean_reward"]), repr(rec["sum_se"]),
                             repr(rec["critic_loss"]), repr(rec["actor_loss"]),
                             repr(rec["alpha"])])
    os.replace(tmp, path)
