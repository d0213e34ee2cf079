#!/usr/bin/env python3
"""Train the five acceptance-study seeds with default settings.

Each seed trains a fresh agent (400 episodes x 80 steps) and writes its
curve and checkpoints to results/acceptance/seed<k>/. Roughly 15 minutes
per seed on one desktop core; already-trained seeds are skipped, so the
script is safe to re-run or to stop and resume.
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from passim.config import load_config  # noqa: E402
from passim.evaluation import evaluate, make_policy  # noqa: E402
from passim.sac import load_agent, train  # noqa: E402

DEFAULT_OUT = os.path.join(os.path.dirname(__file__), "..", "results", "acceptance")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="*", default=[0, 1, 2, 3, 4])
    parser.add_argument("--out", default=DEFAULT_OUT)
    args = parser.parse_args()

    for seed in args.seeds:
        out_dir = os.path.join(args.out, f"seed{seed}")
        done_marker = os.path.join(out_dir, "checkpoint_final.npz")
        cfg = load_config()
        if os.path.exists(done_marker):
            print(f"seed {seed}: already trained, skipping")
        else:
            os.makedirs(out_dir, exist_ok=True)
            t0 = time.time()
            print(f"seed {seed}: training {cfg.sac.episodes} episodes ...", flush=True)
            train(cfg, seed=seed, out_dir=out_dir, log_every=25)
            print(f"seed {seed}: done in {(time.time() - t0) / 60:.1f} min", flush=True)
        # quick quality readout on a slice of this seed's eval episodes
        agent = load_agent(done_marker, cfg.sac)
        fixed = evaluate(make_policy("fixed", 4), cfg, (seed,), 20, "fixed")
        sac = evaluate(make_policy("sac", 4, agent), cfg, (seed,), 20, "sac")
        gain = 100.0 * (sac.mean - fixed.mean) / fixed.mean
        print(f"seed {seed}: eval slice fixed {fixed.mean:.1f} sac {sac.mean:.1f} "
              f"({gain:+.1f}%)", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
