"""Command-line interface.

Subcommands: train, eval, matrix, oracle-table, profile-synth. Option values
resolve in precedence order: command-line flag, then SLICEBENCH_<NAME>
environment variable, then the [experiment] section of --config (INI), then
the built-in default. Exit codes: 0 success, 2 configuration error,
3 training divergence.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys

from slicebench import harness, oracle, phy
from slicebench.errors import ConfigError, DivergenceError

log = logging.getLogger("slicebench")

ENV_PREFIX = "SLICEBENCH_"

_DEFAULTS = {
    "scenario": "stadium",
    "agent": "hybrid",
    "lam": 0.5,
    "seed": 1,
    "eval_seeds": "101,102,103,104,105",
    "episodes": 20,
    "iterations": 60,
    "out": "runs",
    "jobs": 1,
}


def _parse_seed_list(raw: str) -> tuple[int, ...]:
    seeds = tuple(int(s) for s in str(raw).replace(";", ",").split(",") if s.strip())
    if not seeds:
        raise ConfigError(f"no seeds in {raw!r}")
    return seeds


def _resolve(args: argparse.Namespace, key: str, cast):
    """flag > environment variable > config file > default."""
    value = getattr(args, key, None)
    if value is None:
        value = os.environ.get(ENV_PREFIX + key.upper())
    if value is None and getattr(args, "config", None):
        parser = configparser.ConfigParser()
        if not parser.read(args.config):
            raise ConfigError(f"cannot read config file {args.config}")
        section = parser["experiment"] if parser.has_section("experiment") else {}
        alias = {"lam": "lambda"}.get(key, key)
        if alias in section:
            value = section[alias]
    if value is None:
        value = _DEFAULTS[key]
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


def _spec_from_args(args: argparse.Namespace) -> harness.ExperimentSpec:
    return harness.ExperimentSpec(
        scenario=_resolve(args, "scenario", str),
        agent=_resolve(args, "agent", str),
        lam=_resolve(args, "lam", float),
        train_seeds=(_resolve(args, "seed", int),),
        eval_seeds=_parse_seed_list(_resolve(args, "eval_seeds", str)),
        eval_episodes=_resolve(args, "episodes", int),
        iterations=_resolve(args, "iterations", int),
        out_dir=_resolve(args, "out", str),
    )


def _add_common(p: argparse.ArgumentParser, with_agent: bool = True) -> None:
    p.add_argument("--scenario", help="smart_factory | stadium | smart_city, or a preset .ini")
    if with_agent:
        p.add_argument(
            "--agent", choices=list(harness.AGENTS) + [harness.UNIFORM_AGENT],
            help="reward-signal variant",
        )
    p.add_argument("--lambda", dest="lam", type=float, help="hybrid ensemble weight")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--eval-seeds", dest="eval_seeds", help="comma-separated eval seeds")
    p.add_argument("--episodes", type=int, help="evaluation episode count")
    p.add_argument("--iterations", type=int, help="PPO iterations")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel matrix cells")
    p.add_argument("--config", help="INI file with an [experiment] section")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicebench",
        description="Slice-aware PRB allocation: train and compare RL agents "
        "that differ only in their throughput reward source.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one agent, write curve + checkpoint")
    _add_common(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint (or the uniform baseline)")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", help="checkpoint .npz produced by train")

    p_matrix = sub.add_parser("matrix", help="full agent x scenario comparison grid")
    _add_common(p_matrix, with_agent=False)

    p_table = sub.add_parser(
        "oracle-table", help="dump throughput-vs-received-power curves for all oracles"
    )
    p_table.add_argument("--out", help="output CSV path", default="oracle_table.csv")
    p_table.add_argument("--prbs", type=int, default=106)
    p_table.add_argument("--lambda", dest="lam", type=float, default=0.5)

    p_synth = sub.add_parser("profile-synth", help="emit a synthetic MCS profile CSV")
    p_synth.add_argument("--out", help="output CSV path", default="mcs_profile.csv")
    p_synth.add_argument("--slope", type=float, default=oracle.DEFAULT_PROFILE_SLOPE)
    p_synth.add_argument("--spread", type=float, default=oracle.DEFAULT_PROFILE_SPREAD)
    p_synth.add_argument("--step", type=float, default=1.0, help="grid spacing in dB")
    return parser


def _cmd_train(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    artifacts = harness.run_train(spec)
    print(f"checkpoint: {artifacts.checkpoint_path}")
    print(f"curve:      {artifacts.curve_path}")
    print(f"final mean episode reward: {artifacts.mean_rewards[-1]:.4f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    bundle = harness.run_eval(spec, args.checkpoint)
    harness.export_bundle(bundle, spec.out_dir)
    for name, value in zip(harness.ResultBundle.SUMMARY_HEADER, bundle.summary_row()):
        print(f"{name}: {value}")
    return 0


def _cmd_matrix(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)  # per-cell scenario/agent are overridden
    jobs = _resolve(args, "jobs", int)
    results, failed = harness.run_matrix(spec, jobs=jobs)
    print(f"matrix summary: {os.path.join(spec.out_dir, 'matrix_summary.csv')}")
    for r in results:
        s = r["spec"]
        status = r["status"] if r["status"] == "ok" else f"failed: {r['error']}"
        print(f"  {s.scenario:>13s} x {s.agent:<9s} {status}")
    return 1 if failed else 0


def _cmd_oracle_table(args: argparse.Namespace) -> int:
    cfg = phy.RadioConfig()
    profile = oracle.default_profile(cfg)
    trace = oracle.default_trace(cfg, profile)
    weight = oracle.HybridWeight(args.lam)
    rows = []
    for prx in profile.prx_grid:
        rows.append(
            [
                prx,
                oracle.theoretical_throughput(prx, args.prbs, profile, cfg),
                oracle.practical_throughput(prx, args.prbs, trace, cfg.prb_total),
                oracle.hybrid_throughput(prx, args.prbs, trace, profile, weight, cfg),
            ]
        )
    harness.write_csv(
        args.out, "oracle_table",
        ["prx_db", "theoretical_mbps", "practical_mbps", "hybrid_mbps"], rows,
    )
    print(f"oracle table: {args.out}")
    return 0


def _cmd_profile_synth(args: argparse.Namespace) -> int:
    cfg = phy.RadioConfig()
    grid = oracle.default_prx_grid(cfg, step_db=args.step)
    profile = oracle.synthesize_profile(grid, args.slope, args.spread)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    profile.to_csv(args.out)
    print(f"profile: {args.out} ({len(grid)} received-power points)")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "matrix": _cmd_matrix,
    "oracle-table": _cmd_oracle_table,
    "profile-synth": _cmd_profile_synth,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except DivergenceError as exc:
        log.error("training diverged: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
