"""Bilateral random projection (BRP) low-rank approximation.

Given Gaussian test matrices ``A1`` (n x l) and ``A2`` (m x l) with
``l = rank + oversampling``, the closed form

    L = Y1 (A2^T Y1)^{-1} Y2^T,    Y1 = X A1,  Y2 = X^T A2

is a rank-``l`` approximation of ``X``. With refinement, ``A2`` is rebuilt
from ``Y1`` and ``A1`` from ``Y2`` before the final projections. The power
scheme applies the same construction to ``(X X^T)^q X`` and recovers an
approximation of ``X`` through the ``(2q+1)``-th root of a small core.

The module also evaluates the right-hand sides of the deterministic,
average and deviation error bounds for BRP.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ParameterError, RankReductionWarning
from .matcore import RngSeed, as_matrix, as_seed, gaussian_matrix, qr_thin, svd_full

__all__ = [
    "BoundReport",
    "BrpConfig",
    "BrpResult",
    "average_bound_rhs",
    "bound_report",
    "brp",
    "brp_approx",
    "brp_details",
    "brp_power",
    "deterministic_bound",
    "deterministic_bound_rhs",
    "deviation_bound_rhs",
    "draw_projections",
    "spectral_norm",
]

RANK_RTOL = 1e-12
PINV_RTOL = 1e-12


@dataclass(frozen=True)
class BrpConfig:
    """Parameters of one BRP approximation.

    Parameters
    ----------
    rank : int
        Target rank ``r``.
    power : int
        Power-scheme exponent ``q``; 0 selects the closed form.
    oversampling : int
        Extra projection columns ``p``.
    seed : int or RngSeed
        Source of the Gaussian test matrices.
    refine : bool
        Rebuild ``A2`` from ``Y1`` and ``A1`` from ``Y2`` before projecting.
    """

    rank: int
    power: int = 0
    oversampling: int = 5
    seed: RngSeed | int | None = None
    refine: bool = True

    @property
    def width(self) -> int:
        return self.rank + self.oversampling

    def validate(self, shape) -> None:
        m, n = shape
        if self.rank < 1:
            raise ParameterError(f"rank must be >= 1, got {self.rank}")
        if self.power < 0:
            raise ParameterError(f"power must be >= 0, got {self.power}")
        if self.oversampling < 0:
            raise ParameterError(f"oversampling must be >= 0, got {self.oversampling}")
        if self.width > min(m, n):
            raise ParameterError(
                f"rank + oversampling = {self.width} exceeds min{tuple(shape)}")


class BrpResult(NamedTuple):
    """Low-rank approximation plus bookkeeping."""

    low_rank: np.ndarray
    rank: int
    rank_reduced: bool
    a1: np.ndarray


def draw_projections(shape, cfg: BrpConfig) -> tuple[np.ndarray, np.ndarray]:
    """The raw Gaussian test matrices ``(A1, A2)`` used for ``cfg``."""
    m, n = shape
    seed = as_seed(cfg.seed)
    a1 = gaussian_matrix(n, cfg.width, 1.0, seed.child("brp/a1"))
    a2 = gaussian_matrix(m, cfg.width, 1.0, seed.child("brp/a2"))
    return a1, a2


def _orth(y: np.ndarray) -> np.ndarray:
    # Orthonormal basis of range(y) keeping singular values above RANK_RTOL.
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, : int(np.sum(s > RANK_RTOL * s[0]))]


def _power_apply(x: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    # (X X^T)^q X b, evaluated with thin products only
    y = x @ b
    for _ in range(q):
        y = x @ (x.T @ y)
    return y


def _power_apply_t(x: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    # ((X X^T)^q X)^T b = X^T (X X^T)^q b
    y = b
    for _ in range(q):
        y = x @ (x.T @ y)
    return x.T @ y


def _root_core(core: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    # (2q+1)-th root of a small core through its SVD; returns left/right factors
    u, s, v = svd_full(core)
    if q == 0:
        return u * s, v
    return u * s ** (1.0 / (2 * q + 1)), v


def _bilateral(x: np.ndarray, q: int, a1: np.ndarray, a2: np.ndarray | None,
               width: int) -> tuple[np.ndarray, int]:
    """Core BRP step. ``a2=None`` means refinement (A2 built from Y1)."""
    if a2 is None:
        # Refined: A2 = Y1 = Xt A1, A1' = Y2 = Xt^T A2, Y1' = Xt A1'. The core
        # A2^T Y1' only enters through ranges, so bases are orthonormalized
        # between products; the product Y1 (A2^T Y1)^{-1} Y2^T is unchanged.
        qa = _orth(_power_apply(x, a1, q))
        q2 = _orth(_power_apply_t(x, qa, q))
        rank = q2.shape[1]
        if rank == 0:
            return np.zeros_like(x), 0
        q1, r1 = qr_thin(_power_apply(x, q2, q))
        left, right = _root_core(r1, q)
        return (q1 @ left) @ (q2 @ right).T, rank
    q1 = _orth(_power_apply(x, a1, q))
    rank = q1.shape[1]
    while rank > 0:
        core = a2[:, :rank].T @ q1[:, :rank]
        s = np.linalg.svd(core, compute_uv=False)
        detected = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
        if detected == rank:
            break
        rank = detected
    if rank == 0:
        return np.zeros_like(x), 0
    q1 = q1[:, :rank]
    y2 = _power_apply_t(x, a2[:, :rank], q)
    if q == 0:
        return q1 @ np.linalg.solve(a2[:, :rank].T @ q1, y2.T), rank
    q2, r2 = qr_thin(y2)
    core = np.linalg.solve(a2[:, :rank].T @ q1, r2.T)
    left, right = _root_core(core, q)
    return (q1 @ left) @ (q2 @ right).T, rank


def brp_details(x, cfg: BrpConfig, a1=None, a2=None) -> BrpResult:
    """BRP approximation of ``x`` with rank bookkeeping.

    ``a1``/``a2`` override the seeded draws; refinement ignores ``a2``.
    A rank-deficient core shrinks the working rank and emits a
    :class:`RankReductionWarning`; no exception is raised for it.
    """
    x = as_matrix(x, "x")
    cfg.validate(x.shape)
    d1, d2 = draw_projections(x.shape, cfg)
    a1 = d1 if a1 is None else as_matrix(a1, "a1")
    a2 = d2 if a2 is None else as_matrix(a2, "a2")
    low, rank = _bilateral(x, cfg.power, a1, None if cfg.refine else a2, cfg.width)
    reduced = rank < a1.shape[1]
    if reduced:
        warnings.warn(
            f"projection core rank {rank} below requested {a1.shape[1]}; rank reduced",
            RankReductionWarning, stacklevel=2)
    return BrpResult(low, rank, reduced, a1)


def brp_approx(x, cfg: BrpConfig) -> np.ndarray:
    """Closed-form BRP approximation (``cfg.power`` must be 0)."""
    if cfg.power != 0:
        raise ParameterError("brp_approx is the q = 0 path; use brp_power for q >= 1")
    return brp_details(x, cfg).low_rank


def brp_power(x, cfg: BrpConfig) -> np.ndarray:
    """Power-scheme BRP approximation (``cfg.power >= 1``)."""
    if cfg.power < 1:
        raise ParameterError("brp_power needs power >= 1")
    return brp_details(x, cfg).low_rank


def brp(x, cfg: BrpConfig) -> np.ndarray:
    """Dispatch on ``cfg.power``."""
    return brp_details(x, cfg).low_rank


def spectral_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64), 2))


def _split_sigma(sigma, r):
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1 or sigma.size == 0:
        raise ParameterError("sigma must be a nonempty vector")
    if np.any(sigma < 0) or np.any(np.diff(sigma) > 1e-12 * max(sigma[0], 1.0)):
        raise ParameterError("sigma must be nonnegative and nonincreasing")
    if not 1 <= r <= sigma.size:
        raise ParameterError(f"rank {r} out of range for {sigma.size} singular values")
    return sigma[:r], sigma[r:]


def deterministic_bound_rhs(sigma, r: int, v1_a1, v2_a1, power: int = 0) -> float:
    """Upper bound on ``||X - L||`` (spectral) for one Gaussian draw.

    ``v1_a1 = V1^T A1`` (r x l) and ``v2_a1 = V2^T A1`` ((len(sigma)-r) x l)
    where ``V1``/``V2`` are the leading/trailing right singular vectors of
    ``X``. With ``power = q`` the power-scheme version is returned. The
    bound is ``inf`` when ``V1^T A1`` has rank below ``r``.
    """
    lam1, lam2 = _split_sigma(sigma, r)
    if lam2.size == 0 or lam2[0] == 0:
        return 0.0
    v1_a1 = np.asarray(v1_a1, dtype=np.float64)
    v2_a1 = np.asarray(v2_a1, dtype=np.float64)
    if v1_a1.shape[0] != r or v2_a1.shape[0] != lam2.size:
        raise ParameterError("projected test matrices do not match sigma split")
    s = np.linalg.svd(v1_a1, compute_uv=False)
    if s[0] == 0 or np.sum(s > PINV_RTOL * s[0]) < r or lam1[-1] == 0:
        return math.inf
    e = 2 * power + 1
    pinv = np.linalg.pinv(v1_a1, rcond=PINV_RTOL)
    first = (lam2[:, None] ** (2 * e) * v2_a1) @ pinv / lam1[None, :] ** e
    total = spectral_norm(first) ** 2 + lam2[0] ** (2 * e)
    return float(total ** (1.0 / (2 * e)))


def deterministic_bound(x, a1, r: int, power: int = 0) -> float:
    """:func:`deterministic_bound_rhs` with the projections computed from ``x``."""
    x = as_matrix(x, "x")
    _, sigma, v = svd_full(x)
    a1 = as_matrix(a1, "a1")
    return deterministic_bound_rhs(sigma, r, v[:, :r].T @ a1, v[:, r:].T @ a1, power)


def average_bound_rhs(sigma, r: int, p: int, power: int = 0,
                      consistent: bool = False) -> float:
    """Bound on the expected spectral error of BRP with oversampling ``p``.

    With ``consistent=False`` the tail term is
    ``e sqrt(r+p)/p * sqrt(sum_{i>r} lam_i^2 / lam_r^2)``. With
    ``consistent=True`` it uses ``||Lambda_2^2||_F / lam_r``, which has the
    units of a singular value; the two agree when the tail singular values
    equal one and the first is larger whenever they are below one.
    """
    if p < 2:
        raise ParameterError(f"average bound needs oversampling p >= 2, got {p}")
    e = 2 * power + 1
    lam1, lam2 = _split_sigma(sigma, r)
    lam1 = lam1 ** e
    lam2 = lam2 ** e
    nxt = lam2[0] if lam2.size else 0.0
    if nxt == 0:
        return 0.0
    if lam1[-1] == 0:
        return math.inf
    head = (math.sqrt(np.sum(nxt**2 / lam1**2) / (p - 1)) + 1.0) * abs(nxt)
    tail_sq = np.sum(lam2**4) if consistent else np.sum(lam2**2)
    tail = math.e * math.sqrt(r + p) / p * math.sqrt(tail_sq / lam1[-1] ** 2)
    return float((head + tail) ** (1.0 / e))


def deviation_bound_rhs(sigma, r: int, p: int, u: float, t: float) -> tuple[float, float]:
    """Deviation bound and the probability with which it may fail.

    Returns ``(rhs, failure_probability)``, the expression evaluated term by
    term as stated, valid for ``p >= 4`` and ``u, t >= 1``.
    """
    if p < 4:
        raise ParameterError(f"deviation bound needs p >= 4, got {p}")
    if u < 1 or t < 1:
        raise ParameterError(f"deviation bound needs u, t >= 1, got u={u}, t={t}")
    lam1, lam2 = _split_sigma(sigma, r)
    prob = math.exp(-u * u / 2) + 4 * t ** (-p) + t ** (-(p + 1))
    nxt = lam2[0] if lam2.size else 0.0
    if nxt == 0:
        return 0.0, prob
    if lam1[-1] == 0:
        return math.inf, prob
    c = math.e * math.sqrt(r + p) / (p + 1)
    factor = (1.0 + t * math.sqrt(12 * r / p) * math.sqrt(np.sum(1.0 / lam1))
              + c * t * u / lam1[-1])
    rhs = factor * nxt**2 + c * t / lam1[-1] * math.sqrt(np.sum(lam2**2))
    return float(rhs), prob


@dataclass(frozen=True)
class BoundReport:
    observed_error: float
    deterministic_rhs: float
    average_rhs: float
    deviation_rhs: float
    deterministic_holds: bool
    average_holds: bool
    deviation_holds: bool


def bound_report(x, cfg: BrpConfig, u: float = 2.0, t: float = 2.0) -> BoundReport:
    """Run BRP on ``x`` and compare its spectral error with every bound.

    Bounds whose hypotheses fail (``p < 2`` or ``p < 4``) are reported as
    ``inf``.
    """
    x = as_matrix(x, "x")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankReductionWarning)
        res = brp_details(x, cfg)
    observed = spectral_norm(x - res.low_rank)
    _, sigma, v = svd_full(x)
    r, p = cfg.rank, cfg.oversampling
    det = deterministic_bound_rhs(sigma, r, v[:, :r].T @ res.a1, v[:, r:].T @ res.a1,
                                  cfg.power)
    avg = average_bound_rhs(sigma, r, p, cfg.power) if p >= 2 else math.inf
    dev = deviation_bound_rhs(sigma, r, p, u, t)[0] if p >= 4 else math.inf
    return BoundReport(observed, det, avg, dev,
                       observed <= det, observed <= avg, observed <= dev)
