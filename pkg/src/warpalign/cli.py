"""Command-line entry point.

Subcommands: generate | train | eval | align | check. Exit codes:
0 success, 1 usage or configuration error, 2 runtime or numerical
error. Flags override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import alignment, checks, encoder, metrics, objectives, synthdata, trainer
from ._kernels import BACKEND
from .config import load_config
from .errors import (
    CheckpointError,
    ConfigError,
    InfiniteDivergenceError,
    InvalidInputError,
    NonFiniteLossError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    parser.add_argument("--dataset", help="dataset file path")
    parser.add_argument("--checkpoint", help="checkpoint file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpalign",
        description="Weakly supervised temporal alignment on synthetic benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _add_common(p)
    p.add_argument("--train-videos", dest="train_videos", type=int)
    p.add_argument("--test-videos", dest="test_videos", type=int)
    p.add_argument("--phases", type=int)
    p.add_argument("--d-in", dest="d_in", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--style-amp", dest="style_amp", type=float)
    p.add_argument("--f-min", dest="f_min", type=int)
    p.add_argument("--f-max", dest="f_max", type=int)

    p = sub.add_parser("train", help="train an encoder on a dataset")
    _add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--clip-length", dest="T", type=int)
    p.add_argument("--aug-strength", dest="aug_strength", type=float)
    p.add_argument("--resume", help="checkpoint to continue from")

    p = sub.add_parser("eval", help="compute all metrics for a checkpoint")
    _add_common(p)

    p = sub.add_parser("align", help="align two videos from the dataset")
    _add_common(p)
    p.add_argument("--video-a", type=int, required=True, help="index of the first video")
    p.add_argument("--video-b", type=int, required=True, help="index of the second video")
    p.add_argument("--raw", action="store_true",
                   help="align raw features instead of embeddings")

    p = sub.add_parser("check", help="run the oracle and gradient self-checks")
    _add_common(p)
    return parser


_CONFIG_KEYS = (
    "seed", "out_dir", "threads", "dataset", "checkpoint",
    "train_videos", "test_videos", "phases", "d_in", "noise", "style_amp",
    "f_min", "f_max",
    "epochs", "learning_rate", "weight_decay", "lambda1", "lambda2",
    "tau", "sigma_sq", "gamma", "T", "aug_strength",
)


def _config_from_args(args: argparse.Namespace):
    overrides = {
        key: getattr(args, key)
        for key in _CONFIG_KEYS
        if getattr(args, key, None) is not None
    }
    return load_config(args.config, overrides)


def _out_dir(config) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset_path(config) -> Path:
    path = Path(config.dataset)
    if path.is_absolute() or path.parent != Path("."):
        return path
    return Path(config.out_dir) / path


def _checkpoint_path(config) -> Path:
    path = Path(config.checkpoint)
    if path.is_absolute() or path.parent != Path("."):
        return path
    return Path(config.out_dir) / path


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _out_dir(config)
    n = config.train_videos + config.test_videos
    rng = np.random.default_rng(config.seed)
    videos = synthdata.generate_dataset(
        n, config.phases, config.d_in, rng,
        noise=config.noise, f_range=(config.f_min, config.f_max),
        style_amp=config.style_amp,
    )
    path = _dataset_path(config)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "phases": config.phases, "d_in": config.d_in, "noise": config.noise,
        "style_amp": config.style_amp,
        "f_min": config.f_min, "f_max": config.f_max,
    }
    synthdata.save_dataset(path, videos, config.seed, meta, config.train_videos)
    frame_counts = [v.n_frames for v in videos]
    print(f"wrote {path}: {len(videos)} videos ({config.train_videos} train, "
          f"{config.test_videos} test), F in [{min(frame_counts)}, {max(frame_counts)}], "
          f"P={config.phases}, d_in={config.d_in}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _out_dir(config)
    videos, header = synthdata.load_dataset(_dataset_path(config))
    train_videos, _ = synthdata.split_dataset(videos, header)
    tc = config.train_config()
    params = opt_state = None
    if getattr(args, "resume", None):
        params, opt_state = trainer.load_checkpoint(args.resume)
        if opt_state is None:
            raise InvalidInputError(f"{args.resume} has no optimizer state to resume from")
    ckpt = _checkpoint_path(config)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    params, curve = trainer.train(
        train_videos, tc, params=params, opt_state=opt_state, checkpoint_path=ckpt
    )
    curve_path = out / "curve.csv"
    trainer.write_curve(curve_path, curve)
    last = curve[-1].combined if curve else float("nan")
    print(f"trained on {len(train_videos)} videos for {tc.epochs} epochs "
          f"({len(curve)} steps, backend={BACKEND}); final loss {last:.6f}")
    print(f"checkpoint: {ckpt}")
    print(f"curve: {curve_path}")
    return EXIT_OK


def _embedder(config):
    params, _ = trainer.load_checkpoint(_checkpoint_path(config))

    def embed(features: np.ndarray) -> np.ndarray:
        return encoder.encode(features, params)

    return embed


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _out_dir(config)
    videos, header = synthdata.load_dataset(_dataset_path(config))
    train_videos, test_videos = synthdata.split_dataset(videos, header)
    report = metrics.evaluate(
        _embedder(config), train_videos, test_videos,
        fractions=config.fractions, ks=config.ks,
    )
    json_path = out / "report.json"
    csv_path = out / "report.csv"
    metrics.write_report_json(json_path, report)
    metrics.write_report_csv(csv_path, report)
    print(f"kendall_tau        {report.kendall_tau:.4f}")
    for frac in sorted(report.phase_classification):
        print(f"classification@{frac:<4g} {report.phase_classification[frac]:.4f}")
    print(f"phase_progression  {report.phase_progression:.4f}")
    for k in sorted(report.ap_at_k):
        print(f"ap@{k:<16d} {report.ap_at_k[k]:.4f}")
    print(f"dtw_accuracy       {report.dtw_accuracy:.4f}")
    print(f"report: {json_path} and {csv_path}")
    return EXIT_OK


def cmd_align(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _out_dir(config)
    videos, _ = synthdata.load_dataset(_dataset_path(config))
    for idx in (args.video_a, args.video_b):
        if not 0 <= idx < len(videos):
            raise InvalidInputError(f"video index {idx} out of range (have {len(videos)})")
    va, vb = videos[args.video_a], videos[args.video_b]
    if args.raw:
        za, zb = va.features, vb.features
    else:
        embed = _embedder(config)
        za, zb = embed(va.features), embed(vb.features)
    D = alignment.distance_matrix(za, zb)
    path = alignment.dtw_path(D)
    cost = alignment.dtw_cost(D)
    q = objectives.similarity_distribution(za, zb, config.tau)
    entropy = (-np.sum(q * np.log(q), axis=1)).tolist()
    record = {
        "video_a": args.video_a,
        "video_b": args.video_b,
        "cost": cost,
        "path": [[int(i), int(j)] for i, j in path],
        "step_distances": [float(D[i, j]) for i, j in path],
        "row_entropy": entropy,
    }
    json_path = out / "align.json"
    with open(json_path, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    table_path = out / "align.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "frame_a", "frame_b", "distance", "label_a", "label_b"])
        for s, (i, j) in enumerate(path):
            writer.writerow([s, i, j, f"{D[i, j]:.10g}",
                             int(va.phase_labels[i]), int(vb.phase_labels[j])])
    print(f"aligned video {args.video_a} to {args.video_b}: "
          f"{len(path)} steps, cost {cost:.6f}")
    print(f"alignment: {json_path} and {table_path}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    results = checks.run_checks(seed=config.seed)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed (backend={BACKEND})")
    return EXIT_OK if not failed else EXIT_RUNTIME


_HANDLERS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "align": cmd_align,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to the documented code 1
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, InvalidInputError, FileNotFoundError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteLossError, InfiniteDivergenceError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
