"""Command line entry point: ``sttd {detect,synth,eval,roc,rank}``."""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .imageio import ImageFormatError, list_frames, read_frames, read_image, write_pgm
from .metrics import WindowGeometry, evaluate, roc, roc_csv
from .pipeline import FrameSequence, SequenceTooShort, default_threads, detect
from .synth import (
    Infeasible, format_scene_spec, generate, parse_scene_spec, read_truth_csv, truth_csv,
)
from .tensor import unfold

EXIT_IO = 2
EXIT_PRECONDITION = 3

# flag name -> config key
OVERRIDES = {
    "L": "L", "H": "H", "lambda_tv": "lambda_tv", "lambda3": "lambda3", "delta": "delta",
    "eps": "eps", "k": "k", "vmin": "vmin", "max_iter": "max_iter", "zeta": "zeta",
    "surrogate": "surrogate", "tv_mode": "tv_mode", "svt_mode": "svt_mode",
    "match_radius": "match_radius", "d": "d", "a": "a", "b": "b", "n_points": "n_points",
    "threads": "threads", "seed": "seed",
}


class CliError(Exception):
    def __init__(self, msg, code=EXIT_IO):
        super().__init__(msg)
        self.code = code


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--threads", type=int, help="worker threads (default: $STTD_THREADS or all cores)")
    p.add_argument("--seed", type=int)


def _add_solver(p):
    p.add_argument("--L", type=int, dest="L", help="frames per group")
    p.add_argument("--H", type=float, dest="H", help="sparsity tuning constant")
    p.add_argument("--lambda-tv", type=float)
    p.add_argument("--lambda3", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--zeta", type=float)
    p.add_argument("--surrogate", choices=["laplace", "plain_tnn"])
    p.add_argument("--tv-mode", choices=["asttv", "sttv", "none"])
    p.add_argument("--svt-mode", choices=["exact", "one_step"])
    p.add_argument("--k", type=float, help="segmentation sigma multiplier")
    p.add_argument("--vmin", type=float, help="segmentation floor")


def _add_metrics(p):
    p.add_argument("--match-radius", type=float)
    p.add_argument("--d", type=int, help="neighborhood border width")
    p.add_argument("--a", type=int, help="target window rows")
    p.add_argument("--b", type=int, help="target window cols")


def build_parser():
    parser = argparse.ArgumentParser(prog="sttd", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="decompose a frame directory and segment targets")
    p.add_argument("input_dir")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    _add_solver(p)

    p = sub.add_parser("synth", help="generate a synthetic sequence from a scene file")
    p.add_argument("spec_file")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)

    p = sub.add_parser("eval", help="local-contrast metrics and Pd/Fa of a detect run")
    p.add_argument("results_dir")
    p.add_argument("truth_file")
    p.add_argument("--input", help="original frames (default: input_dir recorded in run.json)")
    p.add_argument("-o", "--output", help="output directory (default: results_dir)")
    _add_common(p)
    _add_metrics(p)

    p = sub.add_parser("roc", help="threshold-swept ROC of a detect run")
    p.add_argument("results_dir")
    p.add_argument("truth_file")
    p.add_argument("--n-points", type=int)
    p.add_argument("-o", "--output", help="CSV path (default: results_dir/roc.csv)")
    _add_common(p)
    _add_metrics(p)

    p = sub.add_parser("rank", help="singular values of the mode-1/2/3 unfoldings of L stacked frames")
    p.add_argument("input_dir")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--L", type=int, dest="L")
    p.add_argument("--start", type=int, default=0, help="first frame index")
    _add_common(p)
    return parser


def _config(args):
    overrides = {key: getattr(args, flag) for flag, key in OVERRIDES.items()
                 if hasattr(args, flag)}
    try:
        return load_config(args.config, overrides)
    except ConfigError as exc:
        raise CliError(f"config: {exc}", EXIT_PRECONDITION) from exc


def _threads(cfg):
    return cfg.threads if cfg.threads and cfg.threads > 0 else default_threads()


def _write_text(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _json(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _frame_name(i):
    return f"{i:05d}.pgm"


def _load_sequence(directory):
    if not os.path.isdir(directory):
        raise CliError(f"{directory}: not a directory")
    try:
        frames, paths, bits = read_frames(directory)
    except (OSError, ImageFormatError) as exc:
        raise CliError(f"read error: {exc}") from exc
    if not frames:
        raise CliError(f"{directory}: no .pgm or .png frames")
    try:
        return FrameSequence(frames, paths, bits)
    except ValueError as exc:
        raise CliError(f"{directory}: {exc}") from exc


def cmd_detect(args):
    cfg = _config(args)
    seq = _load_sequence(args.input_dir)
    try:
        res = detect(seq, cfg.solver, cfg.k, cfg.vmin, threads=_threads(cfg))
    except SequenceTooShort as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from exc

    out = args.output
    for sub in ("target", "background", "mask"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    lines = ["frame,row,col,pixels,peak"]
    for i in range(len(seq)):
        write_pgm(os.path.join(out, "target", _frame_name(i)), res.target[i])
        write_pgm(os.path.join(out, "background", _frame_name(i)), res.background[i])
        write_pgm(os.path.join(out, "mask", _frame_name(i)), res.segmentations[i].mask, bits=8)
        for c in res.segmentations[i].components:
            lines.append(f"{i},{c.row:.6f},{c.col:.6f},{c.pixels},{c.peak:.6f}")
    _write_text(os.path.join(out, "components.csv"), "\n".join(lines) + "\n")

    run = {
        "input_dir": os.path.abspath(args.input_dir),
        "frames": [os.path.basename(p) for p in seq.paths],
        "bit_depth": seq.bit_depth,
        "config": cfg.to_dict(),
        "groups": [
            {"start": g.start, "iterations": g.iterations,
             "final_residual": float(f"{g.final_residual:.6e}"), "converged": g.converged}
            for g in res.groups
        ],
    }
    _write_text(os.path.join(out, "run.json"), _json(run))
    # kept apart from run.json so the latter stays byte-identical across reruns
    _write_text(os.path.join(out, "timing.json"),
                _json({"wall_time_s": round(res.wall_time, 3), "threads": _threads(cfg)}))
    print(f"{len(seq)} frames, {len(res.groups)} groups -> {out}")


def cmd_synth(args):
    cfg = _config(args)
    try:
        with open(args.spec_file) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"{args.spec_file}: {exc}") from exc
    try:
        spec = parse_scene_spec(text)
    except (ValueError, ConfigError) as exc:
        raise CliError(f"{args.spec_file}: {exc}", EXIT_PRECONDITION) from exc
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=cfg.seed)
    try:
        frames, truth = generate(spec)
    except Infeasible as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from exc
    fdir = os.path.join(args.output, "frames")
    os.makedirs(fdir, exist_ok=True)
    for i, f in enumerate(frames):
        write_pgm(os.path.join(fdir, _frame_name(i)), f)
    _write_text(os.path.join(args.output, "truth.csv"), truth_csv(truth))
    _write_text(os.path.join(args.output, "scene.txt"), format_scene_spec(spec))
    print(f"{len(frames)} frames, {len(truth)} target records -> {args.output}")


def _load_results(results_dir, sub):
    d = os.path.join(results_dir, sub)
    if not os.path.isdir(d):
        raise CliError(f"{d}: missing")
    try:
        return [read_image(p)[0] for p in list_frames(d)]
    except (OSError, ImageFormatError) as exc:
        raise CliError(f"read error: {exc}") from exc


def _load_truth(path):
    try:
        return read_truth_csv(path)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def cmd_eval(args):
    cfg = _config(args)
    truth = _load_truth(args.truth_file)
    outputs = _load_results(args.results_dir, "target")
    input_dir = args.input
    if input_dir is None:
        try:
            with open(os.path.join(args.results_dir, "run.json")) as fh:
                input_dir = json.load(fh)["input_dir"]
        except (OSError, KeyError, ValueError) as exc:
            raise CliError(f"no --input given and run.json unusable: {exc}") from exc
    inputs = _load_sequence(input_dir).frames
    masks = None
    if os.path.isdir(os.path.join(args.results_dir, "mask")):
        masks = [m > 0.5 for m in _load_results(args.results_dir, "mask")]
    if len(inputs) != len(outputs):
        raise CliError("input and result frame counts differ")
    geom = WindowGeometry(cfg.d, cfg.a, cfg.b)
    try:
        rep = evaluate(inputs, outputs, truth, geom, masks, cfg.match_radius)
    except (ValueError, IndexError) as exc:
        raise CliError(f"evaluation failed: {exc}", EXIT_PRECONDITION) from exc
    out = args.output or args.results_dir
    os.makedirs(out, exist_ok=True)
    _write_text(os.path.join(out, "metrics.json"), rep.to_json())
    _write_text(os.path.join(out, "metrics.csv"), rep.rows_csv())
    print(f"mean CG {rep.mean_cg:.6f}; Pd {rep.pd:.6f}; Fa {rep.fa:.6f}")


def cmd_roc(args):
    cfg = _config(args)
    truth = _load_truth(args.truth_file)
    outputs = _load_results(args.results_dir, "target")
    n = args.n_points if args.n_points is not None else cfg.n_points
    if n < 2:
        raise CliError("--n-points must be >= 2", EXIT_PRECONDITION)
    pts = roc(outputs, truth, n, cfg.match_radius)
    path = args.output or os.path.join(args.results_dir, "roc.csv")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    _write_text(path, roc_csv(pts))
    print(f"{len(pts)} ROC points -> {path}")


def cmd_rank(args):
    cfg = _config(args)
    seq = _load_sequence(args.input_dir)
    L = cfg.solver.L
    if args.start < 0 or args.start + L > len(seq):
        raise CliError(f"need frames {args.start}..{args.start + L - 1}, have {len(seq)}",
                       EXIT_PRECONDITION)
    x = np.stack(seq.frames[args.start:args.start + L], axis=2)
    os.makedirs(args.output, exist_ok=True)
    for mode in (1, 2, 3):
        s = np.linalg.svd(unfold(x, mode), compute_uv=False)
        top = s[0] if s.size and s[0] > 0 else 1.0
        lines = ["index,singular_value,normalized"]
        lines += [f"{i},{v:.6f},{v / top:.6f}" for i, v in enumerate(s)]
        _write_text(os.path.join(args.output, f"mode{mode}.csv"), "\n".join(lines) + "\n")
    print(f"unfolding spectra of frames {args.start}..{args.start + L - 1} -> {args.output}")


COMMANDS = {"detect": cmd_detect, "synth": cmd_synth, "eval": cmd_eval, "roc": cmd_roc,
            "rank": cmd_rank}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"sttd {args.command}: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
