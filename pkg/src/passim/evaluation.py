"""Baselines, multi-seed evaluation, CDF, and the L-walk case study.

Methods are compared under common random numbers: for a given (seed,
episode) pair every method sees the same mobility, blockage, and fading
draws, so score differences reflect the placement policy alone.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import seeding
from .config import RunConfig
from .environment import PassEnv
from .mobility import lshape_trajectory
from .sac import SacAgent, sample_action

METHODS = ("fixed", "random", "sac")


def policy_random(rng: np.random.Generator, n_actions: int) -> np.ndarray:
    """Uniform per-entry action in [-1, 1]."""
    return rng.uniform(-1.0, 1.0, size=n_actions)


def policy_fixed(n_actions: int) -> np.ndarray:
    """Zero action: PAs never move from their initial (center) positions."""
    return np.zeros(n_actions)


def make_policy(method: str, n_actions: int, agent: SacAgent | None = None):
    """Adapter to a common callable(obs, rng) -> action signature."""
    if method == "fixed":
        return lambda obs, rng: policy_fixed(n_actions)
    if method == "random":
        return lambda obs, rng: policy_random(rng, n_actions)
    if method == "sac":
        if agent is None:
            raise ValueError("sac method requires a trained agent")
        return lambda obs, rng: sample_action(agent, obs, deterministic=True)[0]
    raise ValueError(f"unknown method {method!r}")


@dataclass
class EvalReport:
    method: str
    per_seed: dict            # seed -> list of episode sum SE
    seed_means: dict          # seed -> mean episode sum SE
    mean: float               # mean of the per-seed means
    std: float                # std across the per-seed means
    episodes: list            # all episode values, flattened
    cdf: list                 # sorted (value, fraction) pairs


def run_episode(env: PassEnv, policy, env_seed, policy_rng) -> float:
    """One episode; returns the episode sum SE (sum over steps)."""
    obs = env.reset(env_seed)
    total = 0.0
    for _ in range(env.sys.steps_per_episode):
        res = env.step(policy(obs, policy_rng))
        total += res.sum_se
        obs = res.obs
    return total


def report_from_per_seed(method: str, per_seed: dict) -> EvalReport:
    seed_means = {s: float(np.mean(v)) for s, v in per_seed.items()}
    means = np.array(list(seed_means.values()))
    episodes = [v for s in per_seed for v in per_seed[s]]
    return EvalReport(method=method, per_seed=per_seed, seed_means=seed_means,
                      mean=float(means.mean()), std=float(means.std(ddof=0)),
                      episodes=episodes, cdf=empirical_cdf(episodes))


def combine_reports(method: str, reports) -> EvalReport:
    """Merge single-seed reports (e.g. one trained agent per seed)."""
    per_seed = {}
    for rep in reports:
        per_seed.update(rep.per_seed)
    return report_from_per_seed(method, per_seed)


def evaluate(policy, cfg: RunConfig, seeds, episodes_per_seed: int,
             method: str = "policy") -> EvalReport:
    """Run `policy` over seeds x episodes with CRN-paired environments."""
    if not seeds:
        raise ValueError("need at least one seed")
    env = PassEnv(cfg)
    per_seed = {}
    for seed in seeds:
        values = []
        for ep in range(episodes_per_seed):
            env_seed = seeding.subseed(seed, seeding.EVAL, ep)
            policy_rng = seeding.substream(seed, seeding.EXPLORATION, ep)
            values.append(run_episode(env, policy, env_seed, policy_rng))
        per_seed[seed] = values
    return report_from_per_seed(method, per_seed)


def empirical_cdf(values):
    """Sorted (value, i/n) pairs over the order statistics."""
    values = list(values)
    if not values:
        raise ValueError("empirical_cdf needs at least one value")
    ordered = sorted(float(v) for v in values)
    n = len(ordered)
    return [(v, (i + 1) / n) for i, v in enumerate(ordered)]


def improvement_pct(mean_method: float, mean_baseline: float) -> float:
    return 100.0 * (mean_method - mean_baseline) / mean_baseline


def evaluate_methods(cfg: RunConfig, agent: SacAgent | None,
                     seeds=None, episodes_per_seed=None) -> dict:
    """All three methods under common random numbers; keyed by method."""
    seeds = tuple(seeds if seeds is not None else cfg.evaluation.seeds)
    episodes_per_seed = (episodes_per_seed if episodes_per_seed is not None
                         else cfg.evaluation.episodes_per_seed)
    n = cfg.system.n_pas
    reports = {}
    for method in METHODS:
        if method == "sac" and agent is None:
            continue
        policy = make_policy(method, n, agent)
        reports[method] = evaluate(policy, cfg, seeds, episodes_per_seed,
                                   method=method)
    return reports


def case_study(agent: SacAgent, cfg: RunConfig, snapshot_steps=None,
               seed: int | None = None):
    """Deterministic L-walk episode; records geometry and precoder power.

    Returns one record per requested step with user/PA positions, the LoS
    map, and the (N, K) matrix of per-entry precoder power |W_nk|^2.
    """
    snapshot_steps = tuple(snapshot_steps if snapshot_steps is not None
                           else cfg.evaluation.snapshot_steps)
    seed = cfg.seed if seed is None else seed
    params = cfg.lshape_params()
    env = PassEnv(cfg)
    env.set_trajectory(lambda k, t: lshape_trajectory(k, t, params))
    obs = env.reset(seeding.subseed(seed, seeding.EVAL))
    records = []
    for step in range(1, cfg.system.steps_per_episode + 1):
        a, _ = sample_action(agent, obs, deterministic=True)
        res = env.step(a)
        obs = res.obs
        if step in snapshot_steps:
            records.append({
                "step": step,
                "user_positions": res.info["user_positions"],
                "pa_positions": res.info["pa_positions"],
                "waveguide_y": np.asarray(cfg.system.waveguide_y, float),
                "los_map": res.info["los_map"],
                "w_sq": res.info["w_sq"],
                "sum_se": res.sum_se,
            })
    return records


# ---------------------------------------------------------------------------
# CSV artifacts (column names are a stable interface)

def _fmt(x) -> str:
    return repr(float(x))


def _atomic_writer(path):
    return open(path + ".tmp", "w", newline="", encoding="utf-8")


def _finish(path) -> None:
    os.replace(path + ".tmp", path)


def write_eval_csvs(reports: dict, out_dir: str, baseline: str = "fixed") -> None:
    """eval_episodes.csv, eval_summary.csv, cdf.csv."""
    path = os.path.join(out_dir, "eval_episodes.csv")
    with _atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["method", "seed", "episode", "sum_se"])
        for method, rep in reports.items():
            for seed, values in rep.per_seed.items():
                for ep, v in enumerate(values):
                    w.writerow([method, seed, ep, _fmt(v)])
    _finish(path)

    base_mean = reports[baseline].mean
    path = os.path.join(out_dir, "eval_summary.csv")
    with _atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["method", "mean", "std", "improvement_pct"])
        for method, rep in reports.items():
            w.writerow([method, _fmt(rep.mean), _fmt(rep.std),
                        _fmt(improvement_pct(rep.mean, base_mean))])
    _finish(path)

    path = os.path.join(out_dir, "cdf.csv")
    with _atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["method", "value", "fraction"])
        for method, rep in reports.items():
            for value, fraction in rep.cdf:
                w.writerow([method, _fmt(value), _fmt(fraction)])
    _finish(path)


def write_case_study_csvs(records, out_dir: str) -> None:
    """case_study.csv (positions) and power_alloc.csv (|W_nk|^2)."""
    path = os.path.join(out_dir, "case_study.csv")
    with _atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["step", "entity_type", "index", "x", "y"])
        for rec in records:
            for k, pos in enumerate(rec["user_positions"]):
                w.writerow([rec["step"], "user", k, _fmt(pos[0]), _fmt(pos[1])])
            for n, x in enumerate(rec["pa_positions"]):
                w.writerow([rec["step"], "pa", n, _fmt(x),
                            _fmt(rec["waveguide_y"][n])])
    _finish(path)

    path = os.path.join(out_dir, "power_alloc.csv")
    with _atomic_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["step", "n", "k", "w_sq"])
        for rec in records:
            w_sq = rec["w_sq"]
            for n in range(w_sq.shape[0]):
                for k in range(w_sq.shape[1]):
                    w.writerow([rec["step"], n, k, _fmt(w_sq[n, k])])
    _finish(path)
