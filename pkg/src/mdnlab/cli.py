"""Command-line entry point: ``mdnlab <command> [flags]``.

Exit codes: 0 success, 1 usage or configuration error, 2 file I/O or
format error, 3 numerical abort during training.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, config, pipeline
from .errors import LoadError, ParameterError, TrainingAborted

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _commit(text: str):
    if text == "all":
        return "all"
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a component index or 'all', got {text!r}") from None
    if k < 0:
        raise argparse.ArgumentTypeError(f"component index must be >= 0, got {k}")
    return k


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mdnlab", description="World-model training, dreaming and component attribution.")
    p.add_argument("--version", action="version", version=f"mdnlab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--config", type=Path, help="key = value configuration file")
        c.add_argument("--seed", type=int, help="global seed (overrides config and MDNLAB_SEED)")
        return c

    c = command("collect", "simulate random-policy episodes into a dataset")
    c.add_argument("--episodes", type=_positive)
    c.add_argument("--steps", type=_positive, help="maximum steps per episode")
    c.add_argument("--out", type=Path)

    c = command("train-vae", "train the frame VAE")
    c.add_argument("--data", type=Path, required=True)
    c.add_argument("--epochs", type=_positive)
    c.add_argument("--out", type=Path)

    c = command("encode", "encode a dataset into latent means")
    c.add_argument("--data", type=Path, required=True)
    c.add_argument("--vae", type=Path, required=True)
    c.add_argument("--out", type=Path)

    c = command("train-rnn", "train one MD-RNN on latents")
    c.add_argument("--data", type=Path, required=True, help="latent dataset folder")
    c.add_argument("--vae", type=Path, help="VAE folder copied into --out to make a complete model")
    c.add_argument("--replica", type=int, default=0, help="model index; selects the training seed")
    c.add_argument("--epochs", type=_positive)
    c.add_argument("--out", type=Path)

    c = command("dream", "roll out dreams from trained models")
    c.add_argument("--models", type=Path, nargs="+", required=True)
    c.add_argument("--dreams", type=_positive, help="dreams per model (per component with --commit)")
    c.add_argument("--steps", type=_positive)
    c.add_argument("--commit", type=_commit, help="component index, or 'all'")
    c.add_argument("--pi-temp", type=float)
    c.add_argument("--sigma-temp", type=float)
    c.add_argument("--no-frames", action="store_true", help="do not store decoded frames")
    c.add_argument("--out", type=Path)

    c = command("analyze", "attribution report and plots from traces")
    c.add_argument("--traces", type=Path, nargs="+", required=True)
    c.add_argument("--out", type=Path, help="report path (default <out dir>/report.json)")
    c.add_argument("--plots", type=Path)
    c.add_argument("--no-render", action="store_true", help="write plot CSVs only")

    c = command("run", "every stage in sequence under one folder")
    c.add_argument("--out", type=Path)
    c.add_argument("--no-render", action="store_true")

    c = command("show-config", "print the effective configuration")
    return p


def _config(args) -> config.Config:
    cfg = config.load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    for flag, key in (("episodes", "env.episodes"), ("pi_temp", "dream.pi_temperature"),
                      ("sigma_temp", "dream.sigma_temperature")):
        if getattr(args, flag, None) is not None:
            over[key] = getattr(args, flag)
    if args.command == "collect" and args.steps is not None:
        over["env.max_steps"] = args.steps
    if getattr(args, "epochs", None) is not None:
        over["vae.epochs" if args.command == "train-vae" else "mdrnn.epochs"] = args.epochs
    return config.with_values(cfg, over).validate()


def _out(args, cfg, default: str) -> Path:
    if getattr(args, "out", None) is not None:
        return args.out
    return Path(cfg.out) / default


def run(args) -> int:
    cfg = _config(args)
    cmd = args.command
    if cmd == "collect":
        out = _out(args, cfg, "data")
        s = pipeline.collect(cfg, out)
        print(f"{out}: {s['frames']} frames in {s['episodes']} episodes")
        for name, rate in s["base_rates"].items():
            print(f"  {name:18s} base rate {rate:.4f}  detector agreement {s['detector_agreement'][name]:.4f}")
    elif cmd == "train-vae":
        out = _out(args, cfg, "vae")
        curve = pipeline.train_vae_stage(cfg, args.data, out)
        print(f"{out}: {len(curve)} epochs, final loss {curve[-1]:.4f}")
    elif cmd == "encode":
        out = _out(args, cfg, "latents")
        n = pipeline.encode_stage(args.data, args.vae, out)
        print(f"{out}: {n} latent vectors")
    elif cmd == "train-rnn":
        out = _out(args, cfg, f"models/m{args.replica}")
        m = pipeline.train_rnn_stage(cfg, args.data, out, args.replica, args.vae)
        print(f"{out}: " + json.dumps(m, sort_keys=True))
    elif cmd == "dream":
        out = _out(args, cfg, "dreams")
        paths = pipeline.dream_stage(cfg, args.models, out, args.dreams, args.steps, args.commit,
                                     keep_frames=not args.no_frames)
        print(f"{out}: {len(paths)} traces")
    elif cmd == "analyze":
        report_path = args.out or Path(cfg.out) / "analysis" / "report.json"
        rep = pipeline.analyze_stage(args.traces, report_path, args.plots, render=not args.no_render)
        print(f"{report_path}: {len(rep.rows)} events")
        for r in rep.rows:
            p = "   n/a" if r.p is None else f"{r.p:.4g}"
            print(f"  {r.event:18s} dreams {r.dream_count:3d}  p {p}")
    elif cmd == "run":
        out = args.out or Path(cfg.out)
        pipeline.run_all(cfg, out, render=not args.no_render)
    elif cmd == "show-config":
        sys.stdout.write(config.dump(cfg))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return run(args)
    except TrainingAborted as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (LoadError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except FloatingPointError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
