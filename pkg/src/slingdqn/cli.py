"""Command-line interface.

Subcommands: ``collect`` (play episodes into a dataset), ``train``
(experience-replay training), ``evaluate`` (one greedy try per level),
``histogram`` (action statistics from a dataset or a run's
checkpoints), ``play-oracle`` (brute-force every angle on a level).

All commands accept ``--config FILE`` (JSON with RunConfig fields);
individual flags override the file.  Exit codes: 0 success, 2 bad
usage/config, 3 training aborted, 1 other failure.
"""

import argparse
import os
import sys

from slingdqn import config as configmod
from slingdqn import qnet, trainer
from slingdqn.env import levels as levelio
from slingdqn.env import world


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file (RunConfig fields)")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--train-pack", dest="train_pack", help="bundled pack name or directory")
    p.add_argument("--validation-pack", dest="validation_pack")
    p.add_argument("--reward-mode", dest="reward_mode", choices=("clipped", "normalized"))
    p.add_argument("--total-steps", dest="total_steps", type=int)
    p.add_argument("--replay-capacity", dest="replay_capacity", type=int)
    p.add_argument("--replay-warmup", dest="replay_warmup", type=int)
    p.add_argument("--eval-every-episodes", dest="eval_every_episodes", type=int)
    p.add_argument("--conv-filters", dest="conv_filters",
                   help="four comma-separated conv widths, e.g. 16,32,32,128")
    p.add_argument("--batch-size", dest="agent.batch_size", type=int)
    p.add_argument("--learning-rate", dest="agent.learning_rate", type=float)
    p.add_argument("--update-rate", dest="agent.update_rate", type=int)
    p.add_argument("--gamma", dest="agent.gamma", type=float)
    p.add_argument("--tau", dest="agent.tau", type=int)
    p.add_argument("--double-q", dest="agent.double_q", type=int, choices=(0, 1))


def _config_from_args(args):
    overrides = {}
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        if key == "conv_filters" and isinstance(value, str):
            value = tuple(int(v) for v in value.split(","))
        if key == "agent.double_q":
            value = bool(value)
        if key.startswith("agent.") or key in configmod.RunConfig.__dataclass_fields__:
            overrides[key] = value
    return configmod.load_config(args.config, overrides)


def cmd_collect(args):
    cfg = _config_from_args(args)
    out = args.dataset_dir or os.path.join(cfg.out_dir, "dataset")
    n = trainer.collect(
        cfg,
        policy=args.policy,
        episode_count=args.episodes,
        out_dir=out,
        checkpoint=args.checkpoint,
        epsilon=args.epsilon,
    )
    print(f"collected {n} transitions into {out}")
    return 0


def cmd_train(args):
    cfg = _config_from_args(args)
    try:
        result = trainer.train(cfg, resume=args.resume)
    except trainer.TrainingAborted as e:
        print(f"training aborted: {e}", file=sys.stderr)
        return 3
    print(
        f"trained {result.grad_steps} gradient steps over {result.env_steps} "
        f"environment steps ({result.episodes} episodes)"
    )
    print(f"final checkpoint: {result.checkpoint}")
    print(f"metrics: {result.metrics_path}")
    return 0


def cmd_evaluate(args):
    pack = levelio.resolve_pack(args.pack)
    rows = trainer.evaluate_checkpoint(args.checkpoint, pack)
    print(trainer.format_score_table(rows))
    if args.csv:
        trainer.write_score_table(args.csv, rows)
        print(f"wrote {args.csv}")
    return 0


def cmd_histogram(args):
    if bool(args.dataset_dir) == bool(args.run_dir):
        print("histogram needs exactly one of --dataset or --run-dir", file=sys.stderr)
        return 2
    if args.dataset_dir:
        counts = trainer.dataset_action_histogram(args.dataset_dir)
        trainer.write_histogram_csv(args.out, counts)
        print(f"wrote {args.out} ({int(counts.sum())} shots)")
        return 0
    pack = levelio.resolve_pack(args.pack)
    rows = trainer.checkpoint_action_matrix(args.run_dir, pack)
    trainer.write_action_matrix_csv(args.out, rows)
    print(f"wrote {args.out} ({len(rows)} evaluation epochs)")
    return 0


def cmd_play_oracle(args):
    if os.path.exists(args.level):
        level = levelio.load_level(args.level)
    else:
        for pack_name in (levelio.TRAIN_PACK, levelio.VALIDATION_PACK):
            matches = [
                l for l in levelio.load_bundled_pack(pack_name) if l.id == args.level
            ]
            if matches:
                level = matches[0]
                break
        else:
            print(f"no level file or bundled level named {args.level!r}", file=sys.stderr)
            return 2
    timestep = world.TIMESTEP / args.fine
    deltas = world.sweep_first_shot(level, timestep=timestep)
    best = deltas.index(max(deltas))
    for angle, delta in enumerate(deltas):
        print(f"{angle:3d} {delta:8d}{' *' if angle == best else ''}")
    angles, total, won = world.greedy_oracle_episode(level, timestep=timestep)
    print(f"greedy sequence: {angles} -> total {total}, won={won}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="slingdqn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="play episodes into a dataset")
    _add_config_flags(p)
    p.add_argument("--policy", choices=trainer.POLICIES, default="random")
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--dataset-dir", dest="dataset_dir")
    p.add_argument("--checkpoint", help="act through this checkpoint")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="run the training loop")
    _add_config_flags(p)
    p.add_argument("--resume", help="checkpoint-<tag>.json to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="one greedy try per level")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pack", default=levelio.TRAIN_PACK)
    p.add_argument("--csv", help="also write the table to this CSV file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("histogram", help="action statistics")
    p.add_argument("--dataset", dest="dataset_dir")
    p.add_argument("--run-dir", dest="run_dir")
    p.add_argument("--pack", default=levelio.TRAIN_PACK)
    p.add_argument("--out", default="histogram.csv")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("play-oracle", help="brute-force all 91 angles on a level")
    p.add_argument("level", help="level file path or bundled level id")
    p.add_argument("--fine", type=int, default=1,
                   help="divide the integration timestep by this factor")
    p.set_defaults(func=cmd_play_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, world.LevelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
