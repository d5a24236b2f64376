"""Command-line interface.

Every command takes ``--config``, ``--seed`` and ``--out``. On failure a
single JSON line ``{"error": <type>, "message": <text>}`` goes to stderr and
the exit status is nonzero.
"""

import argparse
import json
import os
import sys

from .analysis import TrajectoryLog, TrajectoryRecorder, analyze_gait, write_tables
from .config import ExperimentConfig
from .errors import MsrlError
from .statics import validate_static
from .td3.agent import load_checkpoint
from .trainer import evaluate, rollout, seed_sweep, train
from .waveform import export_waveform


def _load_config(path):
    return ExperimentConfig() if path is None else ExperimentConfig.load(path)


def _load_policy(args, config):
    path = args.checkpoint or os.path.join(args.out, "policy.npz")
    return load_checkpoint(path, expect_hash=None if args.ignore_hash else config.hash())


def cmd_train(args, config):
    res = train(config, args.seed, args.out)
    return {"seed": args.seed, "out": args.out, "final_ema": res.curve.final_ema if len(res.curve) else None,
            "aborted_at": res.aborted_at, "config_hash": config.hash()}


def cmd_sweep(args, config):
    seeds = [args.seed + s for s in config.train.seeds]
    report = seed_sweep(config, seeds, args.out)
    return {"seeds": seeds, "stable": sorted(s for s, ok in report.stable.items() if ok),
            "failures": {str(k): v for k, v in report.failures.items()},
            "threshold": report.threshold}


def cmd_rollout(args, config):
    agent = _load_policy(args, config)
    env = config.make_env(args.phase, reset_mode="zero")
    rec = TrajectoryRecorder()
    horizon = None if args.duration is None else int(round(args.duration * 100))
    ret, disp, _ = rollout(lambda o: agent.act(o, explore=False), env, horizon, args.seed, rec)
    path = os.path.join(args.out, "trajectory.npz")
    rec.log().save(path)
    return {"return": ret, "displacement_m": disp, "trajectory": path}


def cmd_export(args, config):
    agent = _load_policy(args, config)
    env = config.make_env(args.phase, reset_mode="zero")
    path = os.path.join(args.out, "waveform.csv")
    table = export_waveform(agent, env, args.duration, path, env.cfg.b_max_mT, args.seed)
    return {"waveform": path, "rows": len(table)}


def cmd_static(args, config):
    report = validate_static(config.static)
    os.makedirs(args.out, exist_ok=True)
    cols = {"x": report.positions[:, 0], "y": report.positions[:, 1]}
    write_tables({"static_shape": cols}, args.out)
    return {"max_deflection_m": report.max_deflection,
            "relative_deflection": report.relative_deflection,
            "converged": report.converged}


def cmd_analyze(args, config):
    path = args.trajectory or os.path.join(args.out, "trajectory.npz")
    try:
        log = TrajectoryLog.load(path)
    except OSError as exc:
        raise MsrlError(f"cannot read trajectory {path}: {exc.strerror or exc}") from None
    tables = analyze_gait(log)
    return {"tables": write_tables(tables, args.out)}


def build_parser():
    parser = argparse.ArgumentParser(prog="msrl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML experiment configuration (defaults if omitted)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="runs/latest", help="output directory")
        p.set_defaults(func=func)
        return p

    add("train", cmd_train, "train one seed (scaled phase, then refine phase)")
    add("sweep", cmd_sweep, "train every configured seed, offset by --seed")
    for name, func, text in (("rollout", cmd_rollout, "record a deterministic rollout"),
                             ("export-waveform", cmd_export, "write the field waveform CSV")):
        p = add(name, func, text)
        p.add_argument("--checkpoint", help="policy file (default: <out>/policy.npz)")
        p.add_argument("--duration", type=float, default=None if name == "rollout" else 20.0,
                       help="seconds")
        p.add_argument("--phase", choices=("scaled", "accurate", "as_is"), default="scaled")
        p.add_argument("--ignore-hash", action="store_true",
                       help="accept a checkpoint trained under another config")
    add("validate-static", cmd_static, "relax the configured static scenario")
    p = add("analyze", cmd_analyze, "gait tables from a recorded trajectory")
    p.add_argument("--trajectory", help="trajectory file (default: <out>/trajectory.npz)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        result = args.func(args, config)
    except (MsrlError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(json.dumps({"error": type(exc).__name__, "message": msg}), file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
