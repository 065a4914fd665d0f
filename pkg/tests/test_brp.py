import math
import warnings

import numpy as np
import pytest
from scipy.linalg import hilbert

from godeckit.brp import (
    BrpConfig,
    average_bound_rhs,
    bound_report,
    brp,
    brp_approx,
    brp_details,
    brp_power,
    deterministic_bound,
    deterministic_bound_rhs,
    deviation_bound_rhs,
    draw_projections,
    spectral_norm,
)
from godeckit.exceptions import ParameterError, RankReductionWarning
from godeckit.matcore import numerical_rank, svd_full
from oracles import psd_root_low_rank


def _low_rank(m, n, r, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, r)) @ rng.standard_normal((r, n))


def test_config_validation():
    with pytest.raises(ParameterError):
        BrpConfig(rank=0).validate((5, 5))
    with pytest.raises(ParameterError):
        BrpConfig(rank=3, oversampling=3).validate((5, 5))
    with pytest.raises(ParameterError):
        BrpConfig(rank=1, power=-1).validate((5, 5))
    with pytest.raises(ParameterError):
        brp_approx(np.eye(5), BrpConfig(rank=1, power=1))
    with pytest.raises(ParameterError):
        brp_power(np.eye(5), BrpConfig(rank=1, power=0))


def test_projections_are_deterministic():
    a1, a2 = draw_projections((6, 5), BrpConfig(rank=2, oversampling=1, seed=4))
    b1, b2 = draw_projections((6, 5), BrpConfig(rank=2, oversampling=1, seed=4))
    assert a1.shape == (5, 3) and a2.shape == (6, 3)
    assert np.array_equal(a1, b1) and np.array_equal(a2, b2)


@pytest.mark.parametrize("refine", [True, False])
def test_exact_rank_two(refine):
    x = _low_rank(30, 20, 2, 0)
    low = brp_approx(x, BrpConfig(rank=2, oversampling=0, seed=1, refine=refine))
    assert np.linalg.norm(x - low) <= 1e-10 * np.linalg.norm(x)


@pytest.mark.filterwarnings("ignore::godeckit.exceptions.RankReductionWarning")
@pytest.mark.parametrize("q", [0, 1, 2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_exact_rank_recovery_all_q(q, seed):
    x = _low_rank(25, 18, 3, 100 + seed)
    low = brp(x, BrpConfig(rank=3, power=q, oversampling=2, seed=seed))
    assert np.sum((x - low) ** 2) <= 1e-9 * np.sum(x * x)
    assert numerical_rank(low) <= 5


def test_diag_embedded_error_between_oracle_and_bound():
    x = np.zeros((10, 10))
    x[0, 0], x[1, 1] = 1.0, 1e-3
    res = brp_details(x, BrpConfig(rank=1, oversampling=0, seed=2))
    err = spectral_norm(x - res.low_rank)
    assert err >= 1e-3 - 1e-12
    assert err <= deterministic_bound(x, res.a1, 1) + 1e-12


def test_hilbert_error_within_factor_of_sigma4():
    h = hilbert(8)
    s4 = svd_full(h).sigma[3]
    worst = max(spectral_norm(h - brp(h, BrpConfig(rank=3, oversampling=2, seed=s)))
                for s in range(100))
    assert worst <= 1.5 * s4


def test_power_helps_on_slow_decay():
    n = 40
    x = np.diag(0.9 ** np.arange(n))
    e0 = np.mean([spectral_norm(x - brp(x, BrpConfig(3, 0, 0, seed=s))) for s in range(50)])
    e2 = np.mean([spectral_norm(x - brp(x, BrpConfig(3, 2, 0, seed=s))) for s in range(50)])
    assert e2 <= e0


def test_power_q1_matches_eigendecomposition_root():
    rng = np.random.default_rng(7)
    for trial in range(5):
        g = rng.standard_normal((12, 12))
        vecs, _ = np.linalg.qr(g)
        w = np.r_[[5.0, 3.0, 2.0], 1e-3 * rng.random(9)]
        x = (vecs * w) @ vecs.T
        low = brp_power(x, BrpConfig(rank=3, power=1, oversampling=0, seed=trial))
        ref = psd_root_low_rank(x, 3, 1)
        assert np.max(np.abs(low - ref)) <= 1e-6


def test_rank_deficient_input_warns_and_reduces():
    x = _low_rank(20, 15, 2, 3)
    with pytest.warns(RankReductionWarning):
        res = brp_details(x, BrpConfig(rank=4, oversampling=0, seed=0))
    assert res.rank_reduced and res.rank == 2
    assert np.linalg.norm(x - res.low_rank) <= 1e-9 * np.linalg.norm(x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankReductionWarning)
        zero = brp_details(np.zeros((5, 5)), BrpConfig(rank=2, oversampling=0))
    assert zero.rank == 0 and not zero.low_rank.any()


def test_deterministic_bound_examples():
    sigma = np.array([3.0, 2.0, 0.0, 0.0])
    assert deterministic_bound_rhs(sigma, 2, np.ones((2, 2)), np.ones((2, 2))) == 0.0
    x = np.diag([2.0, 1.0, 0.1])
    res = brp_details(x, BrpConfig(rank=2, oversampling=0, seed=9))
    assert spectral_norm(x - res.low_rank) <= deterministic_bound(x, res.a1, 2)
    a1 = np.random.default_rng(0).standard_normal((6, 6))
    assert math.isfinite(deterministic_bound(np.diag(np.arange(6.0, 0, -1)), a1, 2))
    singular = np.zeros((2, 3))
    assert deterministic_bound_rhs([3.0, 2.0, 1.0], 2, singular, np.ones((1, 3))) == math.inf


def test_average_bound_examples():
    assert average_bound_rhs([2.0, 1.0, 0.0], 2, 2) == 0.0
    got = average_bound_rhs([1.0, 1e-6], 1, 2)
    want = (math.sqrt(1e-12) + 1) * 1e-6 + math.e * math.sqrt(3) / 2 * 1e-6
    assert math.isclose(got, want, rel_tol=1e-12)
    sigma = 0.8 ** np.arange(30)
    vals = [average_bound_rhs(sigma, 4, p) for p in range(2, 21)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    assert average_bound_rhs(sigma, 4, 5, consistent=True) <= average_bound_rhs(sigma, 4, 5)
    with pytest.raises(ParameterError):
        average_bound_rhs(sigma, 4, 1)


def test_deviation_bound_examples():
    rhs, prob = deviation_bound_rhs([2.0, 1.0, 0.0, 0.0], 2, 4, 1.0, 1.0)
    assert rhs == 0.0
    _, prob = deviation_bound_rhs([2.0, 1.0, 0.5], 1, 4, 2.0, 1e6)
    assert math.isclose(prob, math.exp(-2.0), rel_tol=1e-9)
    sigma = 0.7 ** np.arange(20)
    by_t = [deviation_bound_rhs(sigma, 3, 6, 2.0, t)[0] for t in (1, 2, 4, 8)]
    by_u = [deviation_bound_rhs(sigma, 3, 6, u, 2.0)[0] for u in (1, 2, 4, 8)]
    assert by_t == sorted(by_t) and by_u == sorted(by_u)
    with pytest.raises(ParameterError):
        deviation_bound_rhs(sigma, 3, 3, 1.0, 1.0)
    with pytest.raises(ParameterError):
        deviation_bound_rhs(sigma, 3, 4, 0.5, 1.0)


def test_sigma_validation():
    with pytest.raises(ParameterError):
        average_bound_rhs([1.0, 2.0], 1, 2)
    with pytest.raises(ParameterError):
        average_bound_rhs([1.0, -1.0], 1, 2)


def test_bound_report():
    x = np.diag(0.7 ** np.arange(20))
    rep = bound_report(x, BrpConfig(rank=3, oversampling=5, seed=1))
    assert rep.observed_error >= 0
    assert rep.deterministic_holds and rep.average_holds
    assert min(rep.deterministic_rhs, rep.average_rhs, rep.deviation_rhs) >= 0
    low_p = bound_report(x, BrpConfig(rank=3, oversampling=1, seed=1))
    assert low_p.average_rhs == math.inf and low_p.deviation_rhs == math.inf
