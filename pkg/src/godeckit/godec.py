"""GoDec: alternating projections for ``X = L + S + G``.

Solves

    min ||X - L - S||_F^2   s.t.  rank(L) <= r,  card(S) <= k

by alternating a rank-``r`` projection of ``X - S`` with a top-``k``
entrywise projection of ``X - L``. The ``naive`` engine uses a truncated
SVD for the rank projection; the ``brp`` engine uses bilateral random
projections with the power scheme.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .brp import BrpConfig, brp_details
from .exceptions import ParameterError, RankReductionWarning
from .matcore import RngSeed, as_matrix, as_seed, hard_threshold_entries, svd_truncate

__all__ = ["DecompResult", "GodecConfig", "godec", "godec_brp", "godec_naive"]

logger = logging.getLogger(__name__)

ENGINES = ("naive", "brp")


@dataclass(frozen=True)
class GodecConfig:
    """Solver settings.

    ``tol`` is the threshold on ``||X - L - S||_F^2 / ||X||_F^2``.
    ``power`` is only used by the ``brp`` engine.
    """

    rank: int
    card: int
    tol: float = 1e-7
    power: int = 2
    max_iters: int = 100
    seed: RngSeed | int | None = None
    engine: str = "brp"

    def validate(self, shape) -> None:
        m, n = shape
        if not 1 <= self.rank <= min(m, n):
            raise ParameterError(f"rank {self.rank} out of range for shape {shape}")
        if not 0 <= self.card <= m * n:
            raise ParameterError(f"card {self.card} out of range for shape {shape}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.power < 0:
            raise ParameterError(f"power must be >= 0, got {self.power}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.engine not in ENGINES:
            raise ParameterError(f"engine must be one of {ENGINES}, got {self.engine!r}")


@dataclass
class DecompResult:
    low_rank: np.ndarray
    sparse: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    effective_rank: int = 0
    restarts: int = 0
    message: str = ""

    def residual(self, x) -> np.ndarray:
        """The noise part ``G = X - L - S``."""
        return np.asarray(x, dtype=np.float64) - self.low_rank - self.sparse


def _objective(x, low, sparse):
    d = x - low - sparse
    return float(np.sum(d * d))


def godec_naive(x, cfg: GodecConfig) -> DecompResult:
    """GoDec with exact truncated-SVD low-rank updates."""
    x = as_matrix(x, "x")
    cfg.validate(x.shape)
    norm2 = float(np.sum(x * x))
    low = x.copy()
    sparse = np.zeros_like(x)
    trace = []
    converged = False
    t = 0
    while t < cfg.max_iters:
        t += 1
        low = svd_truncate(x - sparse, cfg.rank)
        sparse = hard_threshold_entries(x - low, cfg.card)
        obj = _objective(x, low, sparse)
        trace.append(obj)
        if norm2 == 0 or obj / norm2 <= cfg.tol:
            converged = True
            break
    return DecompResult(low, sparse, trace, t, converged, cfg.rank)


def godec_brp(x, cfg: GodecConfig) -> DecompResult:
    """GoDec with BRP low-rank updates.

    Each iteration draws a fresh ``A1`` from the seed substream
    ``iter/<restart>/<t>``. If the projection core is rank deficient the
    working rank shrinks to the detected rank and the solve restarts from
    ``L = X, S = 0``. ``max_iters`` caps the total across restarts.
    """
    x = as_matrix(x, "x")
    cfg.validate(x.shape)
    seed = as_seed(cfg.seed)
    norm2 = float(np.sum(x * x))
    rank = cfg.rank
    restarts = 0
    total = 0
    while True:
        low = x.copy()
        sparse = np.zeros_like(x)
        trace = []
        t = 0
        restart = False
        while total < cfg.max_iters:
            t += 1
            total += 1
            bcfg = BrpConfig(rank=rank, power=cfg.power, oversampling=0,
                             seed=seed.child(f"iter/{restarts}/{t}"), refine=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RankReductionWarning)
                res = brp_details(x - sparse, bcfg)
            if res.rank < rank:
                if res.rank < 1:
                    return DecompResult(low, sparse, trace, total, False, 0, restarts,
                                        "projection core has rank 0; cannot continue")
                logger.info("BRP core rank %d < %d; restarting", res.rank, rank)
                rank = res.rank
                restarts += 1
                restart = True
                break
            low = res.low_rank
            sparse = hard_threshold_entries(x - low, cfg.card)
            obj = _objective(x, low, sparse)
            trace.append(obj)
            if norm2 == 0 or obj / norm2 <= cfg.tol:
                return DecompResult(low, sparse, trace, total, True, rank, restarts)
        if not restart:
            return DecompResult(low, sparse, trace, total, False, rank, restarts,
                                f"not converged within {cfg.max_iters} iterations")


def godec(x, cfg: GodecConfig) -> DecompResult:
    """Run the engine named by ``cfg.engine``."""
    if cfg.engine == "naive":
        return godec_naive(x, cfg)
    if cfg.engine == "brp":
        return godec_brp(x, cfg)
    raise ParameterError(f"unknown engine {cfg.engine!r}")
