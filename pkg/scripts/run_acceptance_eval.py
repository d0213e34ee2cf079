#!/usr/bin/env python3
"""Evaluate the trained acceptance seeds and write the CSV bundle.

Loads results/acceptance/seed<k>/checkpoint_final.npz for every seed, runs
the common-random-numbers comparison (fixed / random / SAC, 100 episodes
per seed), the L-walk case study on the seed-0 agent, and writes
eval_episodes.csv, eval_summary.csv, cdf.csv, case_study.csv, and
power_alloc.csv plus seed 0's training_curve.csv copy into
results/acceptance/eval/. Feed that directory to passim-figures.
"""

import argparse
import os
import shutil
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from passim.config import load_config  # noqa: E402
from passim.evaluation import (case_study, combine_reports, evaluate,  # noqa: E402
                               make_policy, write_case_study_csvs,
                               write_eval_csvs)
from passim.sac import load_agent  # noqa: E402

DEFAULT_DIR = os.path.join(os.path.dirname(__file__), "..", "results", "acceptance")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default=DEFAULT_DIR)
    parser.add_argument("--seeds", type=int, nargs="*", default=[0, 1, 2, 3, 4])
    parser.add_argument("--episodes", type=int, default=None)
    args = parser.parse_args()

    cfg = load_config()
    episodes = args.episodes or cfg.evaluation.episodes_per_seed
    seeds = tuple(args.seeds)
    agents = {}
    for seed in seeds:
        ckpt = os.path.join(args.dir, f"seed{seed}", "checkpoint_final.npz")
        if not os.path.exists(ckpt):
            print(f"missing {ckpt}; run scripts/train_acceptance.py first",
                  file=sys.stderr)
            return 1
        agents[seed] = load_agent(ckpt, cfg.sac)

    print(f"evaluating {len(seeds)} seeds x {episodes} episodes per method ...",
          flush=True)
    reports = {
        "fixed": evaluate(make_policy("fixed", 4), cfg, seeds, episodes, "fixed"),
        "random": evaluate(make_policy("random", 4), cfg, seeds, episodes, "random"),
        "sac": combine_reports("sac", [
            evaluate(make_policy("sac", 4, agents[s]), cfg, (s,), episodes, "sac")
            for s in seeds]),
    }
    out_dir = os.path.join(args.dir, "eval")
    os.makedirs(out_dir, exist_ok=True)
    write_eval_csvs(reports, out_dir)
    records = case_study(agents[seeds[0]], cfg)
    write_case_study_csvs(records, out_dir)
    curve_src = os.path.join(args.dir, f"seed{seeds[0]}", "training_curve.csv")
    if os.path.exists(curve_src):
        shutil.copy(curve_src, os.path.join(out_dir, "training_curve.csv"))

    base = reports["fixed"].mean
    for method, rep in reports.items():
        gain = 100.0 * (rep.mean - base) / base
        print(f"{method:7s} mean {rep.mean:8.2f}  std {rep.std:6.2f}  "
              f"improvement {gain:+.1f}%")
    print(f"artifacts in {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
