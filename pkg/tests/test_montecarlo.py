import math

import numpy as np
import pytest

from spde_ldp import ModelSpec, OperatorSpec
from spde_ldp.errors import ConfigError, DomainError
from spde_ldp.montecarlo import (
    MCEstimate,
    empirical_invariant_measure,
    fernique_moment_exact,
    fernique_moment_mc,
    grid_modulus,
    ldp_slope,
    tail_check,
    tube_probabilities,
    tube_probability,
    variance_with_se,
)
from spde_ldp.paths import Control
from spde_ldp.skeleton import solve_skeleton

FERNIQUE_N3 = 1.42025755538379353580  # n = 3, delta = 2, t = 2, kappa = min(l/q)/2 (mpmath)


@pytest.fixture
def one_mode():
    return ModelSpec(OperatorSpec(np.array([100.0])))


def test_binomial_estimate():
    est = MCEstimate.from_hits(25, 100, seed=3)
    assert est.p == 0.25
    assert est.se == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    assert est.to_dict()["hits"] == 25


def test_fernique_exact_frozen():
    op = OperatorSpec.from_decay(3)
    kappa = 0.5 * float(np.min(op.rates / op.q))
    assert fernique_moment_exact(kappa, 2.0, op) == pytest.approx(FERNIQUE_N3, rel=1e-12)
    with pytest.raises(DomainError):
        fernique_moment_exact(2 * kappa, 2.0, op)


def test_fernique_mc_within_error():
    op = OperatorSpec.from_decay(2)
    kappa = 0.3 * float(np.min(op.rates / op.q))
    exact = fernique_moment_exact(kappa, 1.0, op)
    est, se = fernique_moment_mc(kappa, 1.0, op, samples=50000, seed=2, bootstrap=50)
    assert abs(est - exact) < 4 * se


def test_tube_probability_monotone_in_radius(one_mode):
    psi = Control.constant([1.0], 0.1, 1e-3)
    z = solve_skeleton(np.zeros(1), psi, one_mode)
    ests = tube_probabilities(z, [0.2, 0.4, 0.8], 0.3, one_mode, 2000, seed=1)
    ps = [e.p for e in ests]
    assert ps[0] <= ps[1] <= ps[2]
    single = tube_probability(z, 0.4, 0.3, one_mode, 2000, seed=1)
    assert single.p == ps[1]


def test_grid_modulus_shrinks_radius(one_mode):
    z = solve_skeleton(np.zeros(1), Control.constant([1.0], 0.1, 1e-2), one_mode)
    m = grid_modulus(z, 0.1, one_mode.operator)
    assert m > float(np.max(np.abs(np.diff(z.nodes[:, 0]))))
    raw = tube_probability(z, 0.3, 0.3, one_mode, 1000, correct_grid=False)
    corrected = tube_probability(z, 0.3, 0.3, one_mode, 1000)
    assert corrected.p <= raw.p


def test_ldp_slope_ladder_validation(one_mode):
    z = solve_skeleton(np.zeros(1), Control.zeros(1, 0.1, 1e-2), one_mode)
    with pytest.raises(DomainError):
        ldp_slope(z, 0.3, [0.1, 0.2], one_mode, 10)
    with pytest.raises(DomainError):
        ldp_slope(z, 0.3, [], one_mode, 10)


def test_ldp_slope_free_flow_rate_is_zero(one_mode):
    z = solve_skeleton(np.zeros(1), Control.zeros(1, 0.1, 1e-2), one_mode)
    fit = ldp_slope(z, 5.0, [0.2, 0.1], one_mode, 200, extra_deltas=(6.0,))
    assert fit.rates == [0.0, 0.0]
    assert math.copysign(1.0, fit.rates[0]) == 1.0
    assert len(fit.to_dict()["by_delta"]) == 4


def test_invariant_measure_variance(ou4):
    samples = empirical_invariant_measure(1.0, ou4, 0.05, window=20.0, chains=64, seed=3)
    var, se = variance_with_se(samples)
    expected = ou4.operator.stationary_variance()
    assert abs(var[0] - expected[0]) < 4 * se[0]
    with pytest.raises(ConfigError):
        empirical_invariant_measure(1.0, ou4, 0.05, window=-1.0)


def test_tail_check_counts_and_alphas():
    samples = np.array([0.0, 1.0, 2.0, 3.0] * 25)
    rep = tail_check(samples, [0.5, 2.5, 10.0], eps=1.0, alphas=(1.0, 100.0))
    assert rep.exceed == [75, 25, 0]
    assert rep.mu[1] == 0.25
    assert rep.rates[2] == math.inf
    assert rep.alpha_check[0]["K"] == 2.5
    assert rep.alpha_check[1]["K"] is None
    assert rep.quadratic_constant == pytest.approx(min(-math.log(0.75) / 0.25,
                                                       -math.log(0.25) / 6.25))


def test_variance_se_independent_samples():
    x = np.random.default_rng(0).standard_normal((100000, 2))
    var, se = variance_with_se(x)
    np.testing.assert_allclose(var, 1.0, atol=4 * se.max())
    assert np.all(se < 0.02)
