"""Command-line entry point: train, eval, and serve subcommands."""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, dump_effective_config, load_run_config, load_scenario


def _cmd_train(args) -> int:
    from . import ppo
    from .env import OBS_DIM, PRIV_DIM, QuadrupedVecEnv
    from .simcore import N_JOINTS

    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output is not None:
        cfg.output_dir = args.output
    os.makedirs(cfg.output_dir, exist_ok=True)
    dump_effective_config(cfg, os.path.join(cfg.output_dir, "config.yaml"))

    env = QuadrupedVecEnv(cfg.env)
    agent = ppo.Agent(
        obs_dim=OBS_DIM,
        act_dim=N_JOINTS,
        priv_dim=PRIV_DIM,
        mode=cfg.train.mode,
        seed=cfg.seed,
    )
    ppo.train(
        env,
        agent,
        cfg.ppo,
        iterations=cfg.train.iterations,
        out_dir=cfg.output_dir,
        seed=cfg.seed,
        gt_mix_iters=cfg.train.gt_mix_iters,
        checkpoint_every=cfg.train.checkpoint_every,
        log=print,
    )
    print(f"training complete; artifacts in {cfg.output_dir}")
    return 0


def _cmd_eval(args) -> int:
    from . import evalkit, ppo
    from .env import EnvConfig

    scenario = load_scenario(args.scenario)
    agent, _ = ppo.Agent.load(args.checkpoint)
    report = evalkit.run_scenario(agent, scenario, EnvConfig())
    os.makedirs(args.out, exist_ok=True)
    report.write_report_csv(os.path.join(args.out, "report.csv"))
    report.write_series_jsonl(os.path.join(args.out, "series.jsonl"))
    print(
        f"ATE {report.ate_mean:.4f} +/- {report.ate_std:.4f}  "
        f"fall rate {report.fall_rate:.2f}  "
        f"({len(report.ate_per_episode)} episodes)"
    )
    print(f"wrote {args.out}/report.csv and {args.out}/series.jsonl")
    return 0


def _cmd_serve(args) -> int:
    from . import ppo, server

    agent, _ = ppo.Agent.load(args.checkpoint)
    print(f"serving on http://{args.host}:{args.port} (ws at /ws)")
    server.serve(agent, port=args.port, host=args.host, seed=args.seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftquad",
        description="Fault-tolerant quadruped locomotion laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a policy from a YAML config")
    p_train.add_argument("--config", required=True, help="run config YAML")
    p_train.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
    p_train.add_argument("--output", default=None,
                         help="override the config output directory")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a scenario")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--scenario", required=True, help="scenario YAML")
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.set_defaults(func=_cmd_eval)

    p_serve = sub.add_parser("serve", help="run the live telemetry server")
    p_serve.add_argument("--checkpoint", required=True)
    p_serve.add_argument("--port", type=int, default=8800)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"file not found: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
