"""Command-line front end.

Subcommands: ``decompose``, ``lowrank``, ``lingodec``, ``synth``, ``phase``
and ``video-demo``. Options can also come from a ``key = value`` config file
passed with ``--config``; flags given on the command line win. Exit status is
0 on success, 1 when a solver did not converge (outputs are still written)
and 2 on input or configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .brp import BrpConfig, brp_details
from .godec import GodecConfig, godec
from .grebsmo import GrebConfig, grebsmo
from .io import FormatError, load_frames, load_matrix, save_matrix, write_pgm
from .lingodec import LinGodecConfig, lingodec
from .matcore import rel_error
from .synthlab import (
    DEFAULT_AXIS,
    default_grid,
    foreground_jaccard,
    gen_godec_instance,
    gen_lingodec_instance,
    gen_moving_square_video,
    gen_phase_instance,
    run_phase_diagram,
    write_phase_csv,
)

logger = logging.getLogger("godeckit")

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_INPUT = 0, 1, 2


@dataclass
class MetricsReport:
    rel_error_x: float | None = None
    rel_error_l: float | None = None
    rel_error_s: float | None = None
    iterations: int = 0
    wall_seconds: float = 0.0
    effective_rank: int = 0
    converged: bool = False


def _write_json(path: Path, obj) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _ext(fmt: str) -> str:
    return ".csv" if fmt == "csv" else ".f64"


def _save(out: Path, name: str, a, fmt: str) -> None:
    save_matrix(out / f"{name}{_ext(fmt)}", a, fmt)


def _maybe_truth(path, fmt):
    return None if path is None else load_matrix(path, fmt)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def cmd_decompose(args) -> int:
    x = load_matrix(args.input, args.format)
    truth_l = _maybe_truth(args.truth_l, args.format)
    truth_s = _maybe_truth(args.truth_s, args.format)
    start = time.monotonic()
    if args.engine == "grebsmo":
        cfg = GrebConfig(rank_step=args.rank_step, inner_iters=args.inner_iters,
                         tol=args.eps, lam=args.lam, max_rank=args.rank,
                         seed=args.seed, direction_mode=args.direction_mode)
        res = grebsmo(x, cfg)
        low, sparse = res.low_rank, res.sparse
        iterations, rank, converged = len(res.objective_trace), res.rank_schedule[-1], res.converged
    else:
        if args.card is None:
            raise ValueError("--card is required for the godec engines")
        engine = "naive" if args.engine == "godec-naive" else "brp"
        cfg = GodecConfig(rank=args.rank, card=args.card, tol=args.eps, power=args.q,
                          max_iters=args.max_iters, seed=args.seed, engine=engine)
        res = godec(x, cfg)
        low, sparse = res.low_rank, res.sparse
        iterations, rank, converged = res.iterations, res.effective_rank, res.converged
    wall = time.monotonic() - start
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save(out, "L", low, args.out_format)
    _save(out, "S", sparse, args.out_format)
    report = MetricsReport(
        rel_error_x=rel_error(x, low + sparse),
        rel_error_l=None if truth_l is None else rel_error(truth_l, low),
        rel_error_s=None if truth_s is None or not truth_s.any() else rel_error(truth_s, sparse),
        iterations=iterations, wall_seconds=wall, effective_rank=rank, converged=converged)
    _write_json(out / "metrics.json", asdict(report))
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def cmd_lowrank(args) -> int:
    x = load_matrix(args.input, args.format)
    start = time.monotonic()
    res = brp_details(x, BrpConfig(rank=args.rank, power=args.q, oversampling=args.p,
                                   seed=args.seed, refine=not args.no_refine))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save(out, "L", res.low_rank, args.out_format)
    report = MetricsReport(rel_error_x=rel_error(x, res.low_rank), iterations=1,
                           wall_seconds=time.monotonic() - start, effective_rank=res.rank,
                           converged=True)
    _write_json(out / "metrics.json", asdict(report))
    return EXIT_OK


def cmd_lingodec(args) -> int:
    x = load_matrix(args.input, args.format)
    z = load_matrix(args.features, args.format)
    truth_w = _maybe_truth(args.truth_w, args.format)
    start = time.monotonic()
    res = lingodec(x, z, LinGodecConfig(rank=args.rank, lam=args.lam, tol=args.eps,
                                        max_iters=args.max_iters, seed=args.seed))
    wall = time.monotonic() - start
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save(out, "W", res.w, args.out_format)
    _save(out, "S", res.sparse, args.out_format)
    metrics = asdict(MetricsReport(
        rel_error_x=rel_error(x, res.w @ z.T + res.sparse), iterations=res.iterations,
        wall_seconds=wall, effective_rank=args.rank, converged=res.converged))
    metrics["rel_error_w"] = None if truth_w is None else rel_error(truth_w, res.w)
    _write_json(out / "metrics.json", metrics)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_synth(args) -> int:
    if args.generator == "godec":
        if args.card is None:
            raise ValueError("--card is required for the godec generator")
        inst = gen_godec_instance(args.n, args.rank, args.card, args.noise, args.seed)
    elif args.generator == "phase":
        inst = gen_phase_instance(args.n, args.rank_ratio, args.rho, args.seed)
    else:
        d = args.features or max(1, round(0.6 * args.n))
        inst = gen_lingodec_instance(args.n, args.n, d, args.rank_ratio, args.rho,
                                     args.seed, args.noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    parts = {"x": inst.x, "l_true": inst.l_true, "s_true": inst.s_true, "g_true": inst.g_true}
    if inst.w_true is not None:
        parts.update(w_true=inst.w_true, z=inst.z)
    for name, a in parts.items():
        _save(out, name, a, args.out_format)
    _write_json(out / "meta.json", inst.meta)
    return EXIT_OK


def _parse_axis(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_phase(args) -> int:
    if args.grid == "default":
        grid = default_grid()
    else:
        try:
            rhos, ratios = args.grid.split(";")
        except ValueError:
            raise ValueError("--grid must be 'default' or 'rho,...;ratio,...'") from None
        grid = [(a, b) for a in _parse_axis(rhos) for b in _parse_axis(ratios)]
    cells = run_phase_diagram(args.solver, grid, args.n, args.trials, args.seed,
                              workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_phase_csv(cells, out / "phase.csv")
    return EXIT_OK


def cmd_video_demo(args) -> int:
    video, masks = gen_moving_square_video(args.frames, args.height, args.width,
                                           args.square, args.seed)
    out = Path(args.out)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(video):
        write_pgm(frames_dir / f"frame_{t:04d}.pgm", frame)
    x, shape = load_frames(frames_dir, transpose=args.transpose)
    card = int(masks.sum())
    start = time.monotonic()
    res = godec(x, GodecConfig(rank=args.rank, card=card, tol=args.eps, power=args.q,
                               max_iters=args.max_iters, seed=args.seed, engine="brp"))
    wall = time.monotonic() - start
    sparse = res.sparse.T if args.transpose else res.sparse
    jac = foreground_jaccard(sparse, masks)
    _save(out, "L", res.low_rank, args.out_format)
    _save(out, "S", res.sparse, args.out_format)
    metrics = asdict(MetricsReport(
        rel_error_x=rel_error(x, res.low_rank + res.sparse), iterations=res.iterations,
        wall_seconds=wall, effective_rank=res.effective_rank, converged=res.converged))
    metrics.update(jaccard_min=float(jac.min()), jaccard_mean=float(jac.mean()),
                   frame_shape=list(shape))
    _write_json(out / "metrics.json", metrics)
    return EXIT_OK


def _add_common(p, need_input=True):
    p.add_argument("--config", help="key = value file with option defaults")
    if need_input:
        p.add_argument("--in", dest="input", required=False, help="input matrix")
        p.add_argument("--format", choices=("csv", "f64le"), default=None,
                       help="input format (default: from suffix)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--out-format", choices=("csv", "f64le"), default="csv")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="godeckit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="low-rank + sparse decomposition")
    _add_common(p)
    p.add_argument("--engine", choices=("godec-brp", "godec-naive", "grebsmo"),
                   default="godec-brp")
    p.add_argument("--rank", type=int, help="rank (max rank for grebsmo)")
    p.add_argument("--card", type=int, help="sparse cardinality (godec engines)")
    p.add_argument("--q", type=int, default=2, help="power-scheme exponent")
    p.add_argument("--eps", type=float, default=1e-7, help="stopping tolerance")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--lam", type=float, default=None, help="grebsmo soft threshold")
    p.add_argument("--rank-step", type=int, default=1)
    p.add_argument("--inner-iters", type=int, default=3)
    p.add_argument("--direction-mode", choices=("exact_svd", "random_projection"),
                   default="exact_svd")
    p.add_argument("--truth-l", default=None)
    p.add_argument("--truth-s", default=None)
    p.set_defaults(func=cmd_decompose, needs=("input", "rank"))

    p = sub.add_parser("lowrank", help="BRP low-rank approximation")
    _add_common(p)
    p.add_argument("--rank", type=int)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--p", type=int, default=5, help="oversampling")
    p.add_argument("--no-refine", action="store_true")
    p.set_defaults(func=cmd_lowrank, needs=("input", "rank"))

    p = sub.add_parser("lingodec", help="LinGoDec with item features")
    _add_common(p)
    p.add_argument("--features", help="item feature matrix Z (items x features)")
    p.add_argument("--rank", type=int)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--truth-w", default=None)
    p.set_defaults(func=cmd_lingodec, needs=("input", "features", "rank"))

    p = sub.add_parser("synth", help="generate a synthetic instance")
    _add_common(p, need_input=False)
    p.add_argument("--generator", choices=("godec", "phase", "lingodec"), default="godec")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--rank", type=int, default=5)
    p.add_argument("--card", type=int, default=None)
    p.add_argument("--noise", type=float, default=1e-3)
    p.add_argument("--rho", type=float, default=0.05)
    p.add_argument("--rank-ratio", type=float, default=0.05)
    p.add_argument("--features", type=int, default=None)
    p.set_defaults(func=cmd_synth, needs=())

    p = sub.add_parser("phase", help="recovery phase diagram")
    _add_common(p, need_input=False)
    p.add_argument("--solver", choices=("grebsmo", "godec", "lingodec"), default="grebsmo")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--grid", default="default",
                   help="'default' (%s on both axes) or 'rho,...;ratio,...'"
                   % ",".join(f"{v:g}" for v in DEFAULT_AXIS))
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_phase, needs=())

    p = sub.add_parser("video-demo", help="background modeling on a synthetic video")
    _add_common(p, need_input=False)
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--square", type=int, default=4)
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--eps", type=float, default=1e-7)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--transpose", action="store_true",
                   help="frames as columns instead of rows")
    p.set_defaults(func=cmd_video_demo, needs=())
    return parser


def _read_config(path) -> dict:
    text = Path(path).read_text()
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string("[run]\n" + text)
    values = {k.replace("-", "_"): v for k, v in cp["run"].items()}
    if "in" in values:
        values["input"] = values.pop("in")
    return values


def _apply_config(parser, argv):
    # Values from --config become subparser defaults so explicit flags win.
    args, _ = parser.parse_known_args(argv)
    if not getattr(args, "config", None):
        return parser.parse_args(argv)
    values = _read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in values.items():
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            value = _bool(value)
        sub.set_defaults(**{key: value})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    except (OSError, ValueError, configparser.Error) as exc:
        print(f"godeckit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    missing = [n for n in args.needs if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + ("in" if n == "input" else n.replace("_", "-")) for n in missing)
        print(f"godeckit {args.command}: error: missing required option(s): {flags}",
              file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (OSError, ValueError, FormatError, np.linalg.LinAlgError) as exc:
        print(f"godeckit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
