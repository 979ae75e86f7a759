"""Command-line front end: ``posepool {select,similarity,verify,synth,sweep-k}``.

Exit codes: 0 success, 1 I/O error, 2 validation error (including bad flags).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import data_io
from .errors import PosepoolError
from .pose_select import DEFAULT_K, DEFAULT_RESTARTS, select_frames
from .similarity import POOLINGS, pooled_similarity, subset_bag
from .verify import accuracy_at_best_threshold, evaluate, score_pairs, sweep_k

SEED_ENV = "POSEPOOL_SEED"

EXIT_CODES = """\
exit codes:
  0  success
  1  I/O error (missing or unwritable file); no partial output is left behind
  2  validation error (bad flags, malformed or inconsistent data)
"""

FORMATS = """\
file formats:
  poses     CSV header frame,yaw_deg,pitch_deg,roll_deg (degrees, one row per frame)
  features  <id>.feat.bin: 'PSMP', u32 version=1, u32 m, u32 d, m*d float32 LE
            (or <id>.feat.csv with header frame,f0,...,f{d-1}, d <= 64)
  pairs     CSV header pair_id,video_a,video_b,label (1 = same, 0 = different)
  scores    CSV header pair_id,similarity,k_a,k_b,correlations
  roc       CSV header fpr,tpr plus <name>.json {auc, pairs, pooling, k_spec}
  mask      JSON {video_id, m, k, selected, degenerate}
"""

POOLING_HELP = "pooling over the correlation matrix; median takes the lower-middle entry for even counts"


class _Formatter(argparse.RawDescriptionHelpFormatter):
    def _get_help_string(self, action):
        text = action.help or ""
        if action.option_strings and action.default not in (None, False, argparse.SUPPRESS):
            text += " (default: %(default)s)"
        return text


def _k_value(allow_all: bool):
    def parse(text: str):
        if text == "auto" or (allow_all and text == "all"):
            return text
        try:
            k = int(text)
        except ValueError:
            choices = "INT, 'auto'" + (" or 'all'" if allow_all else "")
            raise argparse.ArgumentTypeError(f"expected {choices}, got {text!r}") from None
        if k < 1:
            raise argparse.ArgumentTypeError("k must be >= 1")
        return k

    return parse


def _k_range(text: str):
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    return list(range(lo, hi + 1))


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise PosepoolError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed for k-means++ restarts (default 0, or ${SEED_ENV})")


def _add_selection(p, allow_all=True):
    p.add_argument("--k", type=_k_value(allow_all), default=DEFAULT_K,
                   help="key frames per video: INT, 'auto'" + (", or 'all' (no selection)" if allow_all else ""))
    p.add_argument("--k-min", type=_positive, default=2, help="lower bound for --k auto")
    p.add_argument("--k-max", type=_positive, default=10, help="upper bound for --k auto")
    p.add_argument("--restarts", type=_positive, default=DEFAULT_RESTARTS, help="k-means++ restarts")
    _add_seed(p)


def _add_verify_inputs(p):
    p.add_argument("--dataset", required=True, type=Path, help="dataset directory")
    p.add_argument("--pairs", type=Path, default=None, help="pair list (default: DATASET/pairs.csv)")
    p.add_argument("--pooling", choices=POOLINGS, default="max", help=POOLING_HELP)
    p.add_argument("--workers", type=_positive, default=os.cpu_count() or 1,
                   help="threads for scoring; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posepool",
        description="Pose-diverse key-frame selection and max-correlation video similarity.",
        epilog=FORMATS + "\n" + EXIT_CODES,
        formatter_class=_Formatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="select key frames from a pose file",
                       description="Cluster a video's head poses and write the key-frame mask.",
                       epilog=FORMATS + "\n" + EXIT_CODES, formatter_class=_Formatter)
    p.add_argument("--poses", required=True, type=Path, help="pose CSV")
    _add_selection(p, allow_all=False)
    p.add_argument("--out", type=Path, default=None, help="mask JSON path (default: print to stdout)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("similarity", help="similarity between two videos",
                       description="Print the pooled correlation between two videos (6 decimals). "
                                   "Videos are given as DIR/ID, resolving DIR/ID.pose.csv and DIR/ID.feat.bin.",
                       epilog=FORMATS + "\n" + EXIT_CODES, formatter_class=_Formatter)
    p.add_argument("--a", required=True, help="first video as DIR/ID")
    p.add_argument("--b", required=True, help="second video as DIR/ID")
    p.add_argument("--pooling", choices=POOLINGS, default="max", help=POOLING_HELP)
    _add_selection(p)
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("verify", help="score a pair list and compute ROC / AUC",
                       epilog=FORMATS + "\n" + EXIT_CODES, formatter_class=_Formatter)
    _add_verify_inputs(p)
    _add_selection(p)
    p.add_argument("--scores", type=Path, default=None, help="scores CSV output")
    p.add_argument("--roc", type=Path, default=None, help="ROC CSV output (JSON sidecar alongside)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-k", help="AUC for each k in a range",
                       description="Run verification once per k and write k,auc,mean_correlations.",
                       epilog=FORMATS + "\n" + EXIT_CODES, formatter_class=_Formatter)
    _add_verify_inputs(p)
    p.add_argument("--k-range", required=True, type=_k_range, help="inclusive range A..B")
    p.add_argument("--restarts", type=_positive, default=DEFAULT_RESTARTS, help="k-means++ restarts")
    _add_seed(p)
    p.add_argument("--out", required=True, type=Path, help="sweep CSV output")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("synth", help="generate a synthetic benchmark dataset",
                       epilog=FORMATS + "\n" + EXIT_CODES, formatter_class=_Formatter)
    p.add_argument("--identities", type=_positive, default=50)
    p.add_argument("--videos-per-identity", type=_positive, default=2)
    p.add_argument("--frames", type=_positive, default=100)
    p.add_argument("--dim", type=_positive, default=128)
    p.add_argument("--pose-weight", type=float, default=0.5, help="weight of the pose confound in features")
    p.add_argument("--noise-sigma", type=float, default=0.3, help="per-coordinate feature noise std")
    p.add_argument("--pose-clusters", type=_positive, default=3, help="pose clusters per video")
    _add_seed(p)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def _select_kw(args):
    return {"k_min": args.k_min, "k_max": args.k_max, "restarts": args.restarts}


def cmd_select(args) -> int:
    poses = data_io.read_poses(args.poses)
    if isinstance(args.k, int) and poses.m <= args.k:
        print(f"warning: {poses.m} frames <= k={args.k}; selecting all frames", file=sys.stderr)
    mask = select_frames(poses, args.k, _resolve_seed(args.seed), **_select_kw(args))
    objective = "n/a" if mask.objective is None else f"{mask.objective:.6g}"
    if args.out is None:
        print(json.dumps(mask.to_dict()))
    else:
        data_io.write_mask(args.out, mask)
    print(f"k={mask.k} objective={objective}" + (" degenerate" if mask.degenerate else ""))
    return 0


def _resolve_video(spec: str):
    prefix = Path(spec)
    pose = prefix.parent / (prefix.name + data_io.POSE_SUFFIX)
    for suffix in data_io.FEAT_SUFFIXES:
        feat = prefix.parent / (prefix.name + suffix)
        if feat.exists():
            break
    else:
        raise FileNotFoundError(f"no feature file for {spec} ({' or '.join(data_io.FEAT_SUFFIXES)})")
    return data_io.load_video(pose, feat, prefix.name)


def cmd_similarity(args) -> int:
    seed = _resolve_seed(args.seed)
    bags = []
    for spec in (args.a, args.b):
        poses, bag = _resolve_video(spec)
        if args.k != "all":
            bag = subset_bag(bag, select_frames(poses, args.k, seed, **_select_kw(args)))
        bags.append(bag)
    print(f"{pooled_similarity(bags[0], bags[1], args.pooling):.6f}")
    return 0


def _open(args):
    dataset = data_io.DatasetIndex.open(args.dataset)
    pairs = data_io.read_pairs(args.pairs or args.dataset / "pairs.csv")
    return dataset, pairs


def cmd_verify(args) -> int:
    dataset, pairs = _open(args)
    records = score_pairs(dataset, pairs, args.k, args.pooling, _resolve_seed(args.seed),
                          workers=args.workers, **_select_kw(args))
    roc = evaluate(records, pairs)
    threshold, acc = accuracy_at_best_threshold(records, [p.same for p in pairs])
    if args.scores:
        data_io.write_scores(args.scores, records)
    if args.roc:
        data_io.write_roc(args.roc, roc, len(pairs), args.pooling, str(args.k))
    mean_corr = sum(r.correlations_computed for r in records) / len(records)
    print(f"pairs: {len(pairs)}")
    print(f"mean correlations per pair: {mean_corr:g}")
    print(f"accuracy: {acc:.4f} at threshold {threshold:.6g}")
    print(f"AUC: {roc.auc:.4f}")
    return 0


def cmd_sweep_k(args) -> int:
    dataset, pairs = _open(args)
    rows = sweep_k(dataset, pairs, args.k_range, args.pooling, _resolve_seed(args.seed),
                   workers=args.workers, restarts=args.restarts)
    data_io.write_sweep(args.out, rows)
    for r in rows:
        print(f"k={r.k} auc={r.auc:.4f} mean_correlations={r.mean_correlations:g}")
    return 0


def cmd_synth(args) -> int:
    config = data_io.SynthConfig(
        num_identities=args.identities,
        videos_per_identity=args.videos_per_identity,
        frames_per_video=args.frames,
        dim=args.dim,
        pose_weight=args.pose_weight,
        noise_sigma=args.noise_sigma,
        pose_clusters_per_video=args.pose_clusters,
        seed=_resolve_seed(args.seed),
    )
    manifest = data_io.generate_synthetic(config, args.out)
    print(f"wrote {len(manifest['files'])} files to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (PosepoolError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
