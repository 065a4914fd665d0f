"""Greedy bilateral smoothing (GreBsmo).

Factorized low-rank plus sparse decomposition

    min_{U,V,S} ||X - U V - S||_F^2 + 2 lam ||vec(S)||_1

where the rank of ``U V`` grows greedily by ``rank_step`` per outer phase.
Inside a phase, ``U`` is the Q factor of ``(X - S) V^T``, ``V = U^T (X - S)``
and ``S`` is the soft-thresholded residual. New rows of ``V`` are the top
right singular directions of the residual ``X - U V - S`` (or a random
projection of it).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .matcore import (
    RngSeed,
    as_matrix,
    as_seed,
    gaussian_matrix,
    qr_thin,
    soft_threshold,
    svd_full,
)

__all__ = [
    "FactoredResult",
    "GrebConfig",
    "auto_lambda",
    "greb_objective",
    "greb_step",
    "grebsmo",
    "greedy_directions",
]

logger = logging.getLogger(__name__)

MODES = ("exact_svd", "random_projection")
_DEP_RTOL = 1e-12


def auto_lambda(x) -> float:
    """Default soft threshold: a quarter of the median absolute entry."""
    return 0.25 * float(np.median(np.abs(x)))


@dataclass(frozen=True)
class GrebConfig:
    """Settings for :func:`grebsmo`.

    ``lam=None`` selects :func:`auto_lambda`. ``max_rank=None`` means
    ``min(m, n)``; ``init_rank=None`` means ``rank_step``. Phases run
    ``inner_iters`` updates, except the last phase (at ``max_rank``), which
    runs up to ``final_iters``.
    """

    rank_step: int = 1
    inner_iters: int = 3
    tol: float = 1e-6
    lam: float | None = None
    max_rank: int | None = None
    init_rank: int | None = None
    direction_mode: str = "exact_svd"
    seed: RngSeed | int | None = None
    final_iters: int = 100

    def resolved(self, shape) -> "GrebConfig":
        m, n = shape
        max_rank = min(m, n) if self.max_rank is None else self.max_rank
        init_rank = self.rank_step if self.init_rank is None else self.init_rank
        cfg = GrebConfig(self.rank_step, self.inner_iters, self.tol, self.lam, max_rank,
                         min(init_rank, max_rank), self.direction_mode, self.seed,
                         self.final_iters)
        cfg._check(shape)
        return cfg

    def _check(self, shape):
        if self.rank_step < 1:
            raise ParameterError(f"rank_step must be >= 1, got {self.rank_step}")
        if self.inner_iters < 1 or self.final_iters < 1:
            raise ParameterError("inner_iters and final_iters must be >= 1")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.lam is not None and self.lam < 0:
            raise ParameterError(f"lam must be >= 0, got {self.lam}")
        if self.init_rank < 1:
            raise ParameterError(f"init_rank must be >= 1, got {self.init_rank}")
        if not 1 <= self.max_rank <= min(shape):
            raise ParameterError(f"max_rank {self.max_rank} out of range for {shape}")
        if self.direction_mode not in MODES:
            raise ParameterError(f"direction_mode must be one of {MODES}")


@dataclass
class FactoredResult:
    u: np.ndarray
    v: np.ndarray
    sparse: np.ndarray
    objective_trace: list = field(default_factory=list)
    rank_schedule: list = field(default_factory=list)
    converged: bool = False
    rank_reduced: bool = False
    lam: float = 0.0
    residual: float = np.inf

    @property
    def low_rank(self) -> np.ndarray:
        return self.u @ self.v


def greb_objective(x, u, v, s, lam) -> float:
    d = x - u @ v - s
    return float(np.sum(d * d) + 2.0 * lam * np.sum(np.abs(s)))


def _orth_cols(m: np.ndarray) -> np.ndarray:
    # Q factor of m, or an SVD basis of its range if m is rank deficient.
    q, r = qr_thin(m)
    d = np.abs(np.diag(r))
    if d.size and d.min() > _DEP_RTOL * d.max():
        return q
    u, s, _ = svd_full(m)
    if s[0] == 0:
        return u[:, :0]
    return u[:, : int(np.sum(s > _DEP_RTOL * s[0]))]


def greb_step(x, v, s, lam):
    """One QR-based update of ``(U, V, S)``; returns the new triple."""
    xs = x - s
    u = _orth_cols(xs @ v.T)
    v = u.T @ xs
    s = soft_threshold(x - u @ v, lam)
    return u, v, s


def greedy_directions(residual, step: int, mode: str = "exact_svd", seed=None) -> np.ndarray:
    """``step`` orthonormal rows spanning the dominant row space of ``residual``."""
    residual = as_matrix(residual, "residual")
    if not 1 <= step <= min(residual.shape):
        raise ParameterError(f"step {step} out of range for shape {residual.shape}")
    if mode == "exact_svd":
        _, _, v = svd_full(residual)
        return v[:, :step].T.copy()
    if mode == "random_projection":
        g = gaussian_matrix(step, residual.shape[0], 1.0, as_seed(seed))
        q, _ = qr_thin((g @ residual).T)
        return q.T
    raise ParameterError(f"unknown direction mode {mode!r}")


def _append_rows(v: np.ndarray, new: np.ndarray) -> np.ndarray:
    # Orthogonalize new rows against row space of v, drop near-null ones.
    basis = _orth_cols(v.T)
    new = new - (new @ basis) @ basis.T
    norms = np.linalg.norm(new, axis=1)
    keep = norms > 1e-10
    if not keep.any():
        return v
    q = _orth_cols(new[keep].T)
    return np.vstack([v, q.T])


def grebsmo(x, cfg: GrebConfig | None = None) -> FactoredResult:
    """Greedy bilateral smoothing of ``x`` into ``U V + S``."""
    x = as_matrix(x, "x")
    cfg = (cfg or GrebConfig()).resolved(x.shape)
    seed = as_seed(cfg.seed)
    lam = auto_lambda(x) if cfg.lam is None else float(cfg.lam)
    m, n = x.shape
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0:
        raise ParameterError("input matrix is identically zero")

    v = gaussian_matrix(cfg.init_rank, n, 1.0 / np.sqrt(n), seed.child("greb/v0"))
    # S-step at U V = 0; with lam = 0 this would absorb all of X.
    s = soft_threshold(x, lam) if lam > 0 else np.zeros_like(x)
    trace = []
    schedule = []
    reduced = False
    phase = 0
    while True:
        rank = v.shape[0]
        schedule.append(rank)
        last = rank >= cfg.max_rank
        iters = max(cfg.inner_iters, cfg.final_iters) if last else cfg.inner_iters
        prev = None
        for _ in range(iters):
            u, v, s = greb_step(x, v, s, lam)
            if u.shape[1] < rank:
                reduced = True
                logger.info("dependent columns dropped: rank %d -> %d", rank, u.shape[1])
                rank = u.shape[1]
            obj = greb_objective(x, u, v, s, lam)
            trace.append(obj)
            if prev is not None and abs(prev - obj) < cfg.tol / 10 * prev:
                break
            prev = obj
        resid = x - u @ v - s
        rel = float(np.linalg.norm(resid)) / xnorm
        if rel <= cfg.tol:
            return FactoredResult(u, v, s, trace, schedule, True, reduced, lam, rel)
        if last:
            return FactoredResult(u, v, s, trace, schedule, False, reduced, lam, rel)
        step = min(cfg.rank_step, cfg.max_rank - rank)
        phase += 1
        new = greedy_directions(resid, step, cfg.direction_mode,
                                seed.child(f"greb/dir/{phase}"))
        grown = _append_rows(v, new)
        if grown.shape[0] == v.shape[0]:
            return FactoredResult(u, v, s, trace, schedule, False, reduced, lam, rel)
        v = grown
