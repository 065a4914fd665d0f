"""Dense matrix primitives shared by every solver.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 with two
dimensions. :func:`as_matrix` is the single entry point that validates
shape and finiteness; all operations below call it on their inputs so a
NaN or Inf is rejected at the boundary instead of propagating.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionError, ParameterError

__all__ = [
    "RngSeed",
    "SvdFactors",
    "as_matrix",
    "as_seed",
    "gaussian_matrix",
    "hard_threshold_entries",
    "jacobi_svd",
    "numerical_rank",
    "qr_thin",
    "rel_error",
    "soft_threshold",
    "svd_full",
    "svd_truncate",
]


@dataclass(frozen=True)
class RngSeed:
    """Seed plus a stream label.

    Two seeds with the same ``seed`` but different labels give independent
    streams; the label is hashed into the ``spawn_key`` of a
    :class:`numpy.random.SeedSequence`.
    """

    seed: int
    label: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def child(self, label: str) -> "RngSeed":
        label = str(label)
        return RngSeed(self.seed, f"{self.label}/{label}" if self.label else label)

    def generator(self) -> np.random.Generator:
        digest = hashlib.blake2b(self.label.encode("utf-8"), digest_size=16).digest()
        key = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))


def as_seed(seed, label: str = "") -> RngSeed:
    """Coerce ``None``, an int or an :class:`RngSeed` into an :class:`RngSeed`."""
    if isinstance(seed, RngSeed):
        return seed.child(label) if label else seed
    if seed is None:
        seed = 0
    if isinstance(seed, (np.integer, int)) and not isinstance(seed, bool):
        return RngSeed(int(seed), label)
    raise ParameterError(f"cannot interpret {seed!r} as a seed")


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array.

    Raises
    ------
    DimensionError
        If ``a`` is not two-dimensional or has a zero-length axis.
    ParameterError
        If any entry is NaN or infinite.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains NaN or Inf entries")
    return arr


def gaussian_matrix(m: int, n: int, scale: float = 1.0, seed=None) -> np.ndarray:
    """Draw an ``m x n`` matrix with i.i.d. N(0, scale**2) entries."""
    if m < 1 or n < 1:
        raise DimensionError(f"dimensions must be positive, got {m}x{n}")
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    rng = as_seed(seed).generator()
    return scale * rng.standard_normal((int(m), int(n)))


def qr_thin(a) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization with a nonnegative diagonal on ``r``."""
    a = as_matrix(a, "a")
    m, n = a.shape
    if m < n:
        raise DimensionError(f"qr_thin needs rows >= cols, got {m}x{n}")
    q, r = np.linalg.qr(a, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, r * signs[:, None]


class SvdFactors(NamedTuple):
    """Thin SVD ``a = u @ diag(sigma) @ v.T`` with ``v`` stored column-wise."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def _complete_columns(q: np.ndarray, keep: np.ndarray) -> np.ndarray:
    # Replace columns of q outside `keep` by an orthonormal completion.
    if keep.all():
        return q
    base = q[:, keep]
    full, _ = np.linalg.qr(np.hstack([base, np.eye(q.shape[0])]), mode="reduced")
    out = q.copy()
    out[:, ~keep] = full[:, base.shape[1]:base.shape[1] + int((~keep).sum())]
    return out


def jacobi_svd(a, tol: float = 1e-12, max_sweeps: int = 60) -> SvdFactors:
    """One-sided (Hestenes) Jacobi SVD.

    Cyclic sweeps over column pairs; a pair is rotated when its normalized
    inner product exceeds ``tol``. Converged when a sweep applies no
    rotation.
    """
    a = as_matrix(a, "a")
    transposed = a.shape[0] < a.shape[1]
    work = (a.T if transposed else a).copy()
    m, n = work.shape
    v = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                x, y = work[:, p], work[:, q]
                alpha = x @ x
                beta = y @ y
                gamma = x @ y
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp = work[:, p].copy()
                work[:, p] = c * wp - s * work[:, q]
                work[:, q] = s * wp + c * work[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            break
    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]
    # Columns at roundoff level carry no direction; complete them instead.
    keep = sigma > sigma[0] * n * np.finfo(float).eps
    u = np.zeros_like(work)
    u[:, keep] = work[:, keep] / sigma[keep]
    u = _complete_columns(u, keep)
    if transposed:
        return SvdFactors(v, sigma, u)
    return SvdFactors(u, sigma, v)


def svd_full(a, method: str = "lapack") -> SvdFactors:
    """Thin SVD of ``a`` with nonincreasing singular values.

    ``method="lapack"`` uses ``numpy.linalg.svd``; ``method="jacobi"`` uses
    :func:`jacobi_svd`.
    """
    a = as_matrix(a, "a")
    if method == "jacobi":
        return jacobi_svd(a)
    if method != "lapack":
        raise ParameterError(f"unknown svd method {method!r}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdFactors(u, s, vt.T)


def svd_truncate(a, r: int, method: str = "lapack") -> np.ndarray:
    """Best rank-``r`` approximation of ``a`` in Frobenius norm."""
    a = as_matrix(a, "a")
    if not 1 <= r <= min(a.shape):
        raise ParameterError(f"rank {r} out of range for shape {a.shape}")
    u, s, v = svd_full(a, method=method)
    return (u[:, :r] * s[:r]) @ v[:, :r].T


def numerical_rank(a, rtol: float = 1e-10) -> int:
    """Number of singular values above ``rtol * sigma_max``."""
    s = np.linalg.svd(np.asarray(a, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def hard_threshold_entries(x, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries of ``x``; zero the rest.

    Ties at the cutoff magnitude go to the earliest row-major index.
    """
    x = as_matrix(x, "x")
    size = x.size
    if not 0 <= k <= size:
        raise ParameterError(f"cardinality {k} out of range for {size} entries")
    out = np.zeros_like(x)
    if k == 0:
        return out
    flat = x.ravel()
    mag = np.abs(flat)
    if k == size:
        return x.copy()
    cutoff = np.partition(mag, size - k)[size - k]
    above = np.flatnonzero(mag > cutoff)
    tied = np.flatnonzero(mag == cutoff)[: k - above.size]
    idx = np.concatenate([above, tied])
    out.ravel()[idx] = flat[idx]
    return out


def soft_threshold(x, lam: float) -> np.ndarray:
    """Entrywise ``sign(x) * max(|x| - lam, 0)``."""
    x = as_matrix(x, "x")
    if lam < 0:
        raise ParameterError(f"threshold must be nonnegative, got {lam}")
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def rel_error(x, xhat) -> float:
    """Squared relative Frobenius error ``||x - xhat||_F^2 / ||x||_F^2``."""
    x = as_matrix(x, "x")
    xhat = as_matrix(xhat, "xhat")
    if x.shape != xhat.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {xhat.shape}")
    ref = float(np.sum(x * x))
    if ref == 0:
        raise ParameterError("reference matrix has zero norm")
    diff = x - xhat
    return float(np.sum(diff * diff)) / ref
