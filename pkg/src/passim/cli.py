"""Command-line entry point: train / eval / case-study.

Artifacts for one invocation land in a fresh timestamp + seed directory
under --out, together with an echo of the fully resolved configuration.
Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .config import ConfigError, RunConfig, format_config, load_config
from . import evaluation, sac


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="passim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "eval", "case-study"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output root directory")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="dotted config overrides, e.g. channel.noise_power=1e-10")
        if name == "train":
            p.add_argument("--episodes", type=int, help="training episodes override")
        else:
            p.add_argument("--checkpoint", help="trained agent checkpoint (.npz)")
            p.add_argument("--episodes", type=int,
                           help="evaluation episodes per seed override")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config, args.overrides)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "episodes", None) is not None:
        if args.command == "train":
            cfg.sac.episodes = args.episodes
        else:
            cfg.evaluation.episodes_per_seed = args.episodes
    return cfg


def _make_run_dir(cfg: RunConfig) -> str:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = os.path.join(cfg.out, f"{stamp}_seed{cfg.seed}")
    run_dir, n = base, 0
    while os.path.exists(run_dir):
        n += 1
        run_dir = f"{base}-{n}"
    os.makedirs(run_dir)
    return run_dir


def _echo_config(cfg: RunConfig, run_dir: str) -> None:
    path = os.path.join(run_dir, "resolved_config.txt")
    with open(path + ".tmp", "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
    os.replace(path + ".tmp", path)


def _load_agent_or_fail(args, cfg) -> sac.SacAgent:
    if not args.checkpoint:
        raise _UsageError(f"{args.command} requires --checkpoint for the SAC method")
    if not os.path.exists(args.checkpoint):
        raise _UsageError(f"checkpoint not found: {args.checkpoint}")
    return sac.load_agent(args.checkpoint, cfg.sac)


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _make_run_dir(cfg)
    _echo_config(cfg, run_dir)
    sac.train(cfg, seed=cfg.seed, out_dir=run_dir, log_every=10)
    print(run_dir)
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    agent = _load_agent_or_fail(args, cfg)
    run_dir = _make_run_dir(cfg)
    _echo_config(cfg, run_dir)
    reports = evaluation.evaluate_methods(cfg, agent)
    evaluation.write_eval_csvs(reports, run_dir)
    print(run_dir)
    return 0


def cmd_case_study(args) -> int:
    cfg = _resolve_config(args)
    agent = _load_agent_or_fail(args, cfg)
    run_dir = _make_run_dir(cfg)
    _echo_config(cfg, run_dir)
    records = evaluation.case_study(agent, cfg)
    evaluation.write_case_study_csvs(records, run_dir)
    print(run_dir)
    return 0


_COMMANDS = {"train": cmd_train, "eval": cmd_eval, "case-study": cmd_case_study}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
