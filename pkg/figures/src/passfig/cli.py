"""Render every figure whose input CSVs are present in --in.

Looks for training_curve.csv, eval_episodes.csv, cdf.csv, case_study.csv,
and power_alloc.csv, and writes the corresponding PNGs to --out. Missing
inputs are skipped with a note; malformed inputs abort with exit code 1.
"""

from __future__ import annotations

import argparse
import os
import sys

from .render import FigureSpec, SchemaError, power_steps, render, snapshot_steps


def render_bundle(in_dir: str, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    produced = []

    def have(name):
        return os.path.exists(os.path.join(in_dir, name))

    def path(name):
        return os.path.join(in_dir, name)

    if have("training_curve.csv"):
        produced.append(render(FigureSpec(
            "curve", {"training_curve": path("training_curve.csv")},
            os.path.join(out_dir, "training_curve.png"))))
    if have("eval_episodes.csv"):
        produced.append(render(FigureSpec(
            "bars", {"eval_episodes": path("eval_episodes.csv")},
            os.path.join(out_dir, "seed_bars.png"))))
    if have("cdf.csv"):
        produced.append(render(FigureSpec(
            "cdf", {"cdf": path("cdf.csv")},
            os.path.join(out_dir, "cdf.png"))))
    if have("case_study.csv"):
        for step in snapshot_steps(path("case_study.csv")):
            produced.append(render(FigureSpec(
                "snapshot", {"case_study": path("case_study.csv")},
                os.path.join(out_dir, f"snapshot_t{step}.png"),
                options={"step": step})))
    if have("power_alloc.csv"):
        for step in power_steps(path("power_alloc.csv")):
            produced.append(render(FigureSpec(
                "heatmap", {"power_alloc": path("power_alloc.csv")},
                os.path.join(out_dir, f"power_heatmap_t{step}.png"),
                options={"step": step})))
    return produced


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the CSV artifacts")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for rendered PNGs")
    args = parser.parse_args(argv)
    try:
        produced = render_bundle(args.in_dir, args.out_dir)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not produced:
        print("error: no known CSV inputs found", file=sys.stderr)
        return 1
    for p in produced:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
