"""Linear functional GoDec (LinGoDec).

Decomposes a users x items rating matrix as ``X = W Z^T + S + G`` where
``Z`` (items x features) is known side information, ``W`` (users x
features) is rank constrained and ``S`` is an l1-penalized anomaly term.
Each user's row of ``W`` is a linear scoring function over item features,
so new items are scored without refitting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .brp import BrpConfig, brp
from .exceptions import DimensionError, ParameterError, RankReductionWarning
from .grebsmo import auto_lambda
from .matcore import RngSeed, as_matrix, as_seed, qr_thin, soft_threshold, svd_full, svd_truncate

__all__ = [
    "LinGodecConfig",
    "LinGodecResult",
    "lingodec",
    "lingodec_objective",
    "predict_scores",
    "w_step",
]

_COND_RTOL = 1e-12


@dataclass(frozen=True)
class LinGodecConfig:
    """Settings for :func:`lingodec`.

    ``lam=None`` selects the same data-scaled default as GreBsmo. ``engine``
    picks the rank-``r`` solver inside the W-step: ``"svd"`` (exact) or
    ``"brp"`` (power-scheme BRP with ``power``).
    """

    rank: int
    lam: float | None = None
    tol: float = 1e-9
    max_iters: int = 200
    seed: RngSeed | int | None = None
    engine: str = "svd"
    power: int = 2


@dataclass
class LinGodecResult:
    w: np.ndarray
    sparse: np.ndarray
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    lam: float = 0.0
    pinv_used: bool = False


def lingodec_objective(x, w, z, s, lam) -> float:
    d = x - w @ z.T - s
    return float(np.sum(d * d) + 2.0 * lam * np.sum(np.abs(s)))


class _FeatureBasis:
    """Orthonormal reduction of the feature matrix ``Z``.

    ``Z = Q R`` when ``Z`` is tall with well-conditioned ``R``; otherwise a
    truncated SVD basis is used and the map back to ``W`` is the
    pseudo-inverse.
    """

    def __init__(self, z: np.ndarray):
        n, d = z.shape
        self.pinv = True
        if n >= d:
            q, r = qr_thin(z)
            diag = np.abs(np.diag(r))
            if diag.min() > _COND_RTOL * diag.max():
                self.q, self.r, self.pinv = q, r, False
                return
        u, s, v = svd_full(z)
        keep = s > _COND_RTOL * s[0]
        self.q = u[:, keep]
        # W = B Sigma^{-1} V^T solves W Z^T = B Q^T with minimal norm
        self.back = (v[:, keep] / s[keep]).T

    def to_w(self, b: np.ndarray) -> np.ndarray:
        if self.pinv:
            return b @ self.back
        # W R^T = B
        return np.linalg.solve(self.r, b.T).T


def w_step(m, z, rank: int, engine: str = "svd", seed=None, power: int = 2,
           basis: _FeatureBasis | None = None) -> np.ndarray:
    """Closed-form ``argmin_W ||M - W Z^T||_F`` subject to ``rank(W) <= rank``.

    With ``Z = Q R`` the objective splits as ``||M Q - W R^T||^2`` plus a
    term free of ``W``, so ``W R^T`` is the rank-``rank`` truncation of
    ``M Q``.
    """
    m = as_matrix(m, "m")
    z = as_matrix(z, "z")
    basis = basis or _FeatureBasis(z)
    mq = m @ basis.q
    r = min(rank, *mq.shape)
    if engine == "svd":
        b = svd_truncate(mq, r)
    elif engine == "brp":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankReductionWarning)
            b = brp(mq, BrpConfig(rank=r, power=power, oversampling=0, seed=seed))
    else:
        raise ParameterError(f"unknown engine {engine!r}")
    return basis.to_w(b)


def lingodec(x, z, cfg: LinGodecConfig) -> LinGodecResult:
    """Alternate the rank-constrained W-step with soft thresholding of S.

    Stops when the relative objective decrease falls below ``cfg.tol``.
    """
    x = as_matrix(x, "x")
    z = as_matrix(z, "z")
    if x.shape[1] != z.shape[0]:
        raise DimensionError(f"x has {x.shape[1]} items but z has {z.shape[0]} rows")
    if not 1 <= cfg.rank <= min(x.shape[0], z.shape[1]):
        raise ParameterError(f"rank {cfg.rank} out of range")
    if cfg.lam is not None and cfg.lam < 0:
        raise ParameterError(f"lam must be >= 0, got {cfg.lam}")
    if cfg.max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    lam = auto_lambda(x) if cfg.lam is None else float(cfg.lam)
    seed = as_seed(cfg.seed)
    basis = _FeatureBasis(z)
    if basis.pinv:
        warnings.warn("feature matrix is rank deficient; using the pseudo-inverse",
                      RankReductionWarning, stacklevel=2)
    s = soft_threshold(x, lam) if lam > 0 else np.zeros_like(x)
    trace = []
    converged = False
    it = 0
    w = np.zeros((x.shape[0], z.shape[1]))
    while it < cfg.max_iters:
        it += 1
        w = w_step(x - s, z, cfg.rank, cfg.engine, seed.child(f"wstep/{it}"),
                   cfg.power, basis)
        s = soft_threshold(x - w @ z.T, lam)
        obj = lingodec_objective(x, w, z, s, lam)
        if trace and trace[-1] - obj <= cfg.tol * trace[-1]:
            trace.append(obj)
            converged = True
            break
        trace.append(obj)
        if obj == 0:
            converged = True
            break
    return LinGodecResult(w, s, trace, converged, it, lam, basis.pinv)


def predict_scores(w, z_new) -> np.ndarray:
    """Scores ``W Z_new^T`` of new items (users x new items)."""
    w = as_matrix(w, "w")
    z_new = as_matrix(z_new, "z_new")
    if w.shape[1] != z_new.shape[1]:
        raise ParameterError(
            f"feature count mismatch: w has {w.shape[1]}, z_new has {z_new.shape[1]}")
    return w @ z_new.T
