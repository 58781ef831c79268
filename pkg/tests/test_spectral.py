import math
import warnings

import numpy as np
import pytest

from spde_ldp.errors import DomainError
from spde_ldp.spectral import (
    OperatorSpec,
    collocation_points,
    eigenvalue,
    eigenvalues,
    embed,
    evaluate_on_grid,
    phi1,
    phi2,
    project,
    semigroup_apply,
    sobolev_norm_sq,
    synthesize_from_grid,
    tail_norm_sq,
)


def test_eigenvalues_frozen():
    assert eigenvalue(1) == 9.869604401089358
    assert eigenvalue(2) == 39.47841760435743
    np.testing.assert_allclose(eigenvalues(3), [math.pi**2, 4 * math.pi**2, 9 * math.pi**2])


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_eigenvalue_rejects_bad_index(bad):
    with pytest.raises(DomainError):
        eigenvalue(bad)


def test_phi_functions_limits():
    assert phi1(0.0, 0.3) == pytest.approx(0.3)
    assert phi1(2.0, 0.5) == pytest.approx((1 - math.exp(-1.0)) / 2.0, rel=1e-15)
    assert phi2(1e-9, 0.4) == pytest.approx(0.2, rel=1e-8)
    r, t = 3.0, 0.7
    assert phi2(r, t) == pytest.approx((math.exp(-r * t) - 1 + r * t) / (r * r * t), rel=1e-14)
    # phi2 / phi1 -> 1 for stiff modes
    assert phi2(1e6, 1.0) / phi1(1e6, 1.0) == pytest.approx(1.0, abs=1e-5)


def test_sobolev_and_tail_norms():
    u = np.array([1.0, 0.5, 0.25])
    assert sobolev_norm_sq(u, 0.0) == pytest.approx(1.3125)
    lam = eigenvalues(3)
    assert sobolev_norm_sq(u, 1.0) == pytest.approx(np.sum(lam * u * u))
    assert tail_norm_sq(u, 1) == pytest.approx(0.3125)


def test_project_embed_roundtrip():
    u = np.arange(1.0, 6.0)
    np.testing.assert_array_equal(project(embed(u, 9), 5), u)
    with pytest.raises(DomainError):
        project(u, 6)
    with pytest.raises(DomainError):
        embed(u, 4)


def test_semigroup_pure_decay():
    u = np.array([1.0, 1.0])
    out = semigroup_apply(u, 0.1)
    np.testing.assert_allclose(out, np.exp(-eigenvalues(2) * 0.1))
    with pytest.raises(DomainError):
        semigroup_apply(u, -1.0)


def test_grid_evaluation_matches_sine_series():
    M = 15
    x = collocation_points(M)
    u = np.array([0.3, -0.2, 0.05])
    direct = sum(c * math.sqrt(2) * np.sin((i + 1) * np.pi * x) for i, c in enumerate(u))
    np.testing.assert_allclose(evaluate_on_grid(u, M), direct, atol=1e-14)


def test_synthesis_inverts_evaluation(rng):
    u = rng.standard_normal(12)
    np.testing.assert_allclose(synthesize_from_grid(evaluate_on_grid(u, 12)), u, atol=1e-13)
    np.testing.assert_allclose(synthesize_from_grid(evaluate_on_grid(u, 48), 12), u, atol=1e-13)
    with pytest.raises(DomainError):
        evaluate_on_grid(u, 5)


def test_operator_from_decay():
    op = OperatorSpec.from_decay(4, 2.0)
    np.testing.assert_allclose(op.q, eigenvalues(4) ** -2.0)
    assert op.decay_admissible
    assert op.lambda1 == pytest.approx(math.pi**2)
    np.testing.assert_allclose(op.q_inv_sqrt_apply(op.q_sqrt_apply([1.0, 2, 3, 4])), [1, 2, 3, 4])


def test_operator_variances():
    op = OperatorSpec.from_decay(3, 2.0)
    t = 0.4
    expected = op.q * (1 - np.exp(-2 * op.rates * t)) / (2 * op.rates)
    np.testing.assert_allclose(op.convolution_variance(t), expected, rtol=1e-14)
    np.testing.assert_allclose(op.convolution_variance(1e3), op.stationary_variance(), rtol=1e-14)


def test_decay_outside_range_warns():
    with pytest.warns(UserWarning, match="outside"):
        op = OperatorSpec.from_decay(3, 1.0)
    assert not op.decay_admissible
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        OperatorSpec.from_decay(3, 1.75)


@pytest.mark.parametrize("q", [[1.0, 0.0], [1.0, -2.0], [np.inf], []])
def test_operator_rejects_bad_spectrum(q):
    with pytest.raises(DomainError):
        OperatorSpec(np.array(q, dtype=float))


def test_shift_and_truncate():
    op = OperatorSpec.from_decay(4, 2.0).with_shift(np.array([1.0, 0, 0, 0]))
    assert op.lambda1 == pytest.approx(math.pi**2 - 1)
    small = op.truncate(2)
    assert small.n == 2
    np.testing.assert_array_equal(small.shift, [1.0, 0.0])
    with pytest.raises(DomainError):
        op.truncate(5)
    with pytest.raises(DomainError):
        OperatorSpec.from_decay(2, 2.0).with_shift(np.zeros(3))


def test_q_is_read_only():
    op = OperatorSpec.from_decay(2)
    with pytest.raises(ValueError):
        op.q[0] = 1.0
