"""Synthetic ground-truth instances and recovery phase diagrams.

Three generators mirror the published synthetic protocols:

* :func:`gen_godec_instance` -- ``L = A B`` with standard Gaussian factors,
  ``k`` Gaussian outliers on a uniformly random support and additive
  Gaussian noise of standard deviation ``noise_sigma``.
* :func:`gen_phase_instance` -- ``L = U V`` with N(0, 1/n) factors and
  Bernoulli(rho) sparse entries equal to +1 or -1.
* :func:`gen_lingodec_instance` -- ratings ``W Z^T + S + G`` with a low-rank
  weight matrix and Gaussian item features.

:func:`run_phase_diagram` sweeps a (rho, rank ratio) grid, counting a trial
as a success when the squared relative error of the recovered component
is at most ``1e-2``.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .godec import GodecConfig, godec_brp
from .grebsmo import GrebConfig, grebsmo
from .lingodec import LinGodecConfig, lingodec
from .matcore import RngSeed, as_seed, rel_error

__all__ = [
    "DEFAULT_AXIS",
    "PhaseCell",
    "SUCCESS_THRESHOLD",
    "SynthInstance",
    "default_grid",
    "foreground_jaccard",
    "gen_godec_instance",
    "gen_lingodec_instance",
    "gen_moving_square_video",
    "gen_phase_instance",
    "read_phase_csv",
    "run_phase_diagram",
    "run_trial",
    "write_phase_csv",
]

logger = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 1e-2
DEFAULT_AXIS = tuple(float(v) for v in np.linspace(0.02, 0.3, 6))
SOLVERS = ("grebsmo", "godec", "lingodec")


@dataclass
class SynthInstance:
    x: np.ndarray
    l_true: np.ndarray
    s_true: np.ndarray
    g_true: np.ndarray
    w_true: np.ndarray | None = None
    z: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return int(self.meta.get("rank", 0))


def _sparse_signs(rng: np.random.Generator, shape, rho: float) -> np.ndarray:
    u = rng.random(shape)
    return np.where(u < rho / 2, 1.0, np.where(u < rho, -1.0, 0.0))


def _rank_from_ratio(n: int, rank_ratio: float) -> int:
    return max(1, int(round(rank_ratio * n)))


def gen_godec_instance(n: int, r: int, k: int, noise_sigma: float = 1e-3,
                       seed=None) -> SynthInstance:
    """Square ``n x n`` instance with rank ``r`` and ``k`` Gaussian outliers."""
    if n < 1 or not 1 <= r <= n:
        raise ParameterError(f"need 1 <= r <= n, got n={n}, r={r}")
    if not 0 <= k <= n * n:
        raise ParameterError(f"need 0 <= k <= n^2, got k={k}")
    if noise_sigma < 0:
        raise ParameterError("noise_sigma must be >= 0")
    seed = as_seed(seed)
    a = seed.child("A").generator().standard_normal((n, r))
    b = seed.child("B").generator().standard_normal((r, n))
    low = a @ b
    sparse = np.zeros(n * n)
    if k:
        support = seed.child("omega").generator().choice(n * n, size=k, replace=False)
        sparse[support] = seed.child("D").generator().standard_normal(k)
    sparse = sparse.reshape(n, n)
    noise = noise_sigma * seed.child("F").generator().standard_normal((n, n))
    meta = {"generator": "godec", "n": n, "rank": r, "card": k,
            "noise_sigma": noise_sigma, "seed": seed.seed, "label": seed.label}
    return SynthInstance(low + sparse + noise, low, sparse, noise, meta=meta)


def gen_phase_instance(n: int, rank_ratio: float, rho: float, seed=None) -> SynthInstance:
    """Noise-free ``n x n`` instance at one phase-diagram cell."""
    if not 0 < rank_ratio < 1:
        raise ParameterError(f"rank_ratio must lie in (0, 1), got {rank_ratio}")
    if not 0 <= rho <= 1:
        raise ParameterError(f"rho must lie in [0, 1], got {rho}")
    seed = as_seed(seed)
    r = _rank_from_ratio(n, rank_ratio)
    scale = 1.0 / np.sqrt(n)
    u = scale * seed.child("U").generator().standard_normal((n, r))
    v = scale * seed.child("V").generator().standard_normal((r, n))
    low = u @ v
    sparse = _sparse_signs(seed.child("S").generator(), (n, n), rho)
    meta = {"generator": "phase", "n": n, "rank": r, "rank_ratio": rank_ratio,
            "rho": rho, "seed": seed.seed, "label": seed.label}
    return SynthInstance(low + sparse, low, sparse, np.zeros((n, n)), meta=meta)


def gen_lingodec_instance(m: int, n: int, d: int, rank_ratio: float, rho: float,
                          seed=None, noise_sigma: float = 1e-3) -> SynthInstance:
    """Ratings ``X = W Z^T + S + G`` for ``m`` users and ``n`` items.

    ``W`` (m x d) is the product of N(0, 1/m) factors of rank
    ``round(rank_ratio * n)``, ``Z`` (n x d) has N(0, 1/m) entries and ``G``
    has standard deviation ``noise_sigma``.
    """
    if not 1 <= d <= n:
        raise ParameterError(f"need 1 <= d <= n, got d={d}, n={n}")
    if not 0 < rank_ratio < 1 or not 0 <= rho <= 1:
        raise ParameterError("rank_ratio must lie in (0, 1) and rho in [0, 1]")
    if noise_sigma < 0:
        raise ParameterError("noise_sigma must be >= 0")
    seed = as_seed(seed)
    r = _rank_from_ratio(n, rank_ratio)
    if r > min(m, d):
        raise ParameterError(f"planted rank {r} exceeds min(m, d) = {min(m, d)}")
    scale = 1.0 / np.sqrt(m)
    w = (scale * seed.child("U").generator().standard_normal((m, r))) @ (
        scale * seed.child("V").generator().standard_normal((r, d)))
    z = scale * seed.child("Z").generator().standard_normal((n, d))
    low = w @ z.T
    sparse = _sparse_signs(seed.child("S").generator(), (m, n), rho)
    noise = noise_sigma * seed.child("G").generator().standard_normal((m, n))
    meta = {"generator": "lingodec", "m": m, "n": n, "d": d, "rank": r,
            "rank_ratio": rank_ratio, "rho": rho, "noise_sigma": noise_sigma,
            "seed": seed.seed, "label": seed.label}
    return SynthInstance(low + sparse + noise, low, sparse, noise, w, z, meta)


@dataclass
class PhaseCell:
    rho: float
    rank_ratio: float
    trials: int = 0
    successes: int = 0

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def default_grid(axis=DEFAULT_AXIS) -> list[tuple[float, float]]:
    """All ``(rho, rank_ratio)`` pairs of ``axis x axis``."""
    return [(float(rho), float(rr)) for rho in axis for rr in axis]


def _trial_seed(seed: RngSeed, solver: str, rho: float, rank_ratio: float,
                trial: int) -> RngSeed:
    return seed.child(f"phase/{solver}/{rho:.12g}/{rank_ratio:.12g}/{trial}")


def run_trial(solver: str, n: int, rho: float, rank_ratio: float, seed,
              options: dict | None = None) -> float:
    """Squared relative recovery error of one trial (``inf`` on failure)."""
    options = dict(options or {})
    seed = as_seed(seed)
    try:
        if solver == "grebsmo":
            inst = gen_phase_instance(n, rank_ratio, rho, seed.child("instance"))
            cfg = GrebConfig(max_rank=inst.rank, seed=seed.child("solver"), **options)
            res = grebsmo(inst.x, cfg)
            return rel_error(inst.l_true, res.low_rank)
        if solver == "godec":
            inst = gen_phase_instance(n, rank_ratio, rho, seed.child("instance"))
            card = int(np.count_nonzero(inst.s_true))
            options.setdefault("max_iters", 100)
            cfg = GodecConfig(rank=inst.rank, card=card, seed=seed.child("solver"),
                              engine="brp", **options)
            res = godec_brp(inst.x, cfg)
            return rel_error(inst.l_true, res.low_rank)
        if solver == "lingodec":
            d = int(options.pop("features", max(1, round(0.6 * n))))
            inst = gen_lingodec_instance(n, n, d, rank_ratio, rho, seed.child("instance"))
            cfg = LinGodecConfig(rank=inst.rank, seed=seed.child("solver"), **options)
            res = lingodec(inst.x, inst.z, cfg)
            return rel_error(inst.w_true, res.w)
    except (ValueError, np.linalg.LinAlgError) as exc:
        logger.warning("trial failed (%s, rho=%g, r/n=%g): %s", solver, rho, rank_ratio, exc)
        return float("inf")
    raise ParameterError(f"unknown solver {solver!r}")


def _run_job(job):
    solver, n, rho, rank_ratio, seed, options = job
    return run_trial(solver, n, rho, rank_ratio, seed, options)


def run_phase_diagram(solver: str, grid, n: int, trials: int, seed=None,
                      options: dict | None = None, workers: int = 1) -> list[PhaseCell]:
    """Success counts for every ``(rho, rank_ratio)`` cell of ``grid``.

    Each trial's seed is derived from the cell coordinates and trial index,
    so the result does not depend on ``workers`` or scheduling order.
    """
    if solver not in SOLVERS:
        raise ParameterError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    seed = as_seed(seed)
    grid = [(float(rho), float(rr)) for rho, rr in grid]
    jobs = [(solver, n, rho, rr, _trial_seed(seed, solver, rho, rr, t), options)
            for rho, rr in grid for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        errors = [_run_job(job) for job in jobs]
    cells = []
    for i, (rho, rr) in enumerate(grid):
        errs = errors[i * trials:(i + 1) * trials]
        cells.append(PhaseCell(rho, rr, trials, sum(e <= SUCCESS_THRESHOLD for e in errs)))
    return cells


PHASE_FIELDS = ("rho", "rank_ratio", "trials", "successes", "rate")


def write_phase_csv(cells, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PHASE_FIELDS)
        for c in cells:
            writer.writerow([repr(c.rho), repr(c.rank_ratio), c.trials, c.successes,
                             repr(c.rate)])
    os.replace(tmp, path)


def read_phase_csv(path) -> list[PhaseCell]:
    with open(path, newline="") as fh:
        return [PhaseCell(float(row["rho"]), float(row["rank_ratio"]),
                          int(row["trials"]), int(row["successes"]))
                for row in csv.DictReader(fh)]


def gen_moving_square_video(frames: int = 20, height: int = 32, width: int = 32,
                            square: int = 4, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """8-bit frames of a static gradient with a bright square moving over it.

    Returns ``(video, masks)``: ``video`` is ``uint8`` of shape
    ``(frames, height, width)`` and ``masks`` marks the square's pixels.
    """
    if square >= min(height, width):
        raise ParameterError("square must be smaller than the frame")
    rng = as_seed(seed).child("video").generator()
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    background = 0.2 + 0.4 * (rows + cols) / (height + width - 2)
    span_r, span_c = height - square, width - square
    r0, c0 = rng.integers(0, span_r + 1), rng.integers(0, span_c + 1)
    dr, dc = rng.choice([-2, -1, 1, 2]), rng.choice([-3, -2, 2, 3])
    video = np.empty((frames, height, width), dtype=np.uint8)
    masks = np.zeros((frames, height, width), dtype=bool)
    r, c = int(r0), int(c0)
    for t in range(frames):
        masks[t, r:r + square, c:c + square] = True
        frame = np.where(masks[t], 1.0, background)
        video[t] = np.round(frame * 255).astype(np.uint8)
        # bounce off the frame edges
        if not 0 <= r + dr <= span_r:
            dr = -dr
        if not 0 <= c + dc <= span_c:
            dc = -dc
        r, c = r + dr, c + dc
    return video, masks


def foreground_jaccard(sparse: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Per-frame Jaccard index between the support of ``sparse`` and ``masks``.

    ``sparse`` has one flattened frame per row.
    """
    pred = np.asarray(sparse).reshape(masks.shape) != 0
    inter = np.logical_and(pred, masks).sum(axis=(1, 2))
    union = np.logical_or(pred, masks).sum(axis=(1, 2))
    return np.where(union > 0, inter / np.maximum(union, 1), 1.0)
