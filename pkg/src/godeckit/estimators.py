"""scikit-learn style wrappers around the functional solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .brp import BrpConfig, brp_details
from .godec import GodecConfig, godec
from .grebsmo import GrebConfig, grebsmo
from .lingodec import LinGodecConfig, lingodec, predict_scores

__all__ = ["BRPLowRank", "GoDec", "GreBsmo", "LinGoDec"]


def _check(x):
    return check_array(x, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)


class GoDec(TransformerMixin, BaseEstimator):
    """Low-rank plus sparse decomposition ``X = L + S + G``.

    After ``fit``: ``low_rank_``, ``sparse_``, ``components_`` (orthonormal
    row basis of ``L``, shape ``(rank, n_features)``), ``objective_trace_``,
    ``n_iter_``, ``converged_`` and ``effective_rank_``. ``transform``
    projects rows onto ``components_``.
    """

    def __init__(self, rank=1, card=0, tol=1e-7, power=2, max_iters=100,
                 engine="brp", random_state=None):
        self.rank = rank
        self.card = card
        self.tol = tol
        self.power = power
        self.max_iters = max_iters
        self.engine = engine
        self.random_state = random_state

    def fit(self, X, y=None):
        x = _check(X)
        res = godec(x, GodecConfig(rank=self.rank, card=self.card, tol=self.tol,
                                   power=self.power, max_iters=self.max_iters,
                                   seed=self.random_state, engine=self.engine))
        self.low_rank_ = res.low_rank
        self.sparse_ = res.sparse
        self.objective_trace_ = list(res.objective_trace)
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.effective_rank_ = res.effective_rank
        r = max(res.effective_rank, 1)
        _, _, vt = np.linalg.svd(res.low_rank, full_matrices=False)
        self.components_ = vt[:r]
        self.n_features_in_ = x.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        x = _check(X)
        return x @ self.components_.T


class BRPLowRank(TransformerMixin, BaseEstimator):
    """Bilateral random projection low-rank approximation.

    ``fit`` stores the approximation as ``low_rank_`` together with
    ``components_``; ``transform`` projects rows onto the component rows.
    """

    def __init__(self, rank=1, power=0, oversampling=5, refine=True, random_state=None):
        self.rank = rank
        self.power = power
        self.oversampling = oversampling
        self.refine = refine
        self.random_state = random_state

    def fit(self, X, y=None):
        x = _check(X)
        res = brp_details(x, BrpConfig(rank=self.rank, power=self.power,
                                       oversampling=self.oversampling,
                                       seed=self.random_state, refine=self.refine))
        self.low_rank_ = res.low_rank
        self.effective_rank_ = res.rank
        _, _, vt = np.linalg.svd(res.low_rank, full_matrices=False)
        self.components_ = vt[:max(res.rank, 1)]
        self.n_features_in_ = x.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        return _check(X) @ self.components_.T


class GreBsmo(TransformerMixin, BaseEstimator):
    """Greedy rank-incremental factorization ``X = U V + S``.

    Fitted attributes: ``u_``, ``components_`` (``V``), ``low_rank_``,
    ``sparse_``, ``objective_trace_``, ``rank_schedule_``, ``converged_``
    and ``lam_``.
    """

    def __init__(self, max_rank=None, rank_step=1, inner_iters=3, tol=1e-6, lam=None,
                 direction_mode="exact_svd", random_state=None):
        self.max_rank = max_rank
        self.rank_step = rank_step
        self.inner_iters = inner_iters
        self.tol = tol
        self.lam = lam
        self.direction_mode = direction_mode
        self.random_state = random_state

    def fit(self, X, y=None):
        x = _check(X)
        res = grebsmo(x, GrebConfig(rank_step=self.rank_step, inner_iters=self.inner_iters,
                                    tol=self.tol, lam=self.lam, max_rank=self.max_rank,
                                    direction_mode=self.direction_mode,
                                    seed=self.random_state))
        self.u_ = res.u
        self.components_ = res.v
        self.low_rank_ = res.low_rank
        self.sparse_ = res.sparse
        self.objective_trace_ = list(res.objective_trace)
        self.rank_schedule_ = list(res.rank_schedule)
        self.converged_ = res.converged
        self.lam_ = res.lam
        self.n_features_in_ = x.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        # rows of V are not orthonormal; least-squares coordinates
        x = _check(X)
        return np.linalg.lstsq(self.components_.T, x.T, rcond=None)[0].T


class LinGoDec(BaseEstimator):
    """Feature-based scoring ``X = W Z^T + S``.

    ``fit(Z, ratings)`` takes item features ``Z`` (items x features) and
    ``ratings`` as items x users, so samples are items. ``predict(Z_new)``
    returns ``Z_new W^T`` (new items x users). ``coef_`` is ``W``.
    """

    def __init__(self, rank=1, lam=None, tol=1e-9, max_iters=200, engine="svd", power=2,
                 random_state=None):
        self.rank = rank
        self.lam = lam
        self.tol = tol
        self.max_iters = max_iters
        self.engine = engine
        self.power = power
        self.random_state = random_state

    def fit(self, Z, ratings):
        z = _check(Z)
        y = _check(ratings)
        if y.shape[0] != z.shape[0]:
            raise ValueError(f"Z has {z.shape[0]} items but ratings has {y.shape[0]}")
        res = lingodec(y.T, z, LinGodecConfig(rank=self.rank, lam=self.lam, tol=self.tol,
                                              max_iters=self.max_iters,
                                              seed=self.random_state, engine=self.engine,
                                              power=self.power))
        self.coef_ = res.w
        self.sparse_ = res.sparse
        self.objective_trace_ = list(res.objective_trace)
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.lam_ = res.lam
        self.n_features_in_ = z.shape[1]
        return self

    def predict(self, Z):
        check_is_fitted(self, "coef_")
        return predict_scores(self.coef_, _check(Z)).T
