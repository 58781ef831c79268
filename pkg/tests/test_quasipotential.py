import math

import numpy as np
import pytest

from spde_ldp import ModelSpec, OperatorSpec
from spde_ldp.errors import ConfigError, DomainError, NotApplicableError
from spde_ldp.nonlinearity import LinearDiagonal, named_nemytskij
from spde_ldp.paths import SpectralPath
from spde_ldp.quasipotential import (
    MinimizerOptions,
    minimize_action,
    minimize_quasipotential,
    minimize_quasipotential_full,
    minimize_tube_action,
    quasipotential_linear,
    quasipotential_linear_discrete,
    quasipotential_linear_finite_T,
)

PI6 = math.pi**6


def test_closed_form_single_mode():
    model = ModelSpec(OperatorSpec.from_decay(1))
    assert quasipotential_linear([0.1], model) == pytest.approx(0.01 * PI6, rel=1e-14)
    finite = quasipotential_linear_finite_T([0.1], 1.0, model)
    assert finite == pytest.approx(0.01 * PI6 / (1 - math.exp(-2 * math.pi**2)), rel=1e-14)


def test_cubic_target_gives_pi6_per_mode():
    model = ModelSpec(OperatorSpec.from_decay(64))
    u = np.arange(1, 65, dtype=float) ** -3
    assert quasipotential_linear(u, model) == pytest.approx(64 * PI6, rel=1e-13)
    for n in (4, 16, 32):
        head = quasipotential_linear(u[:n], model.truncate(n))
        assert 64 * PI6 - head == pytest.approx((64 - n) * PI6, rel=1e-12)


def test_finite_horizon_decreases_to_limit():
    model = ModelSpec(OperatorSpec.from_decay(2))
    u = [0.05, 0.01]
    vals = [quasipotential_linear_finite_T(u, T, model) for T in (0.1, 0.5, 2.0, 20.0)]
    assert vals[0] > vals[1] > vals[2] >= vals[3]
    assert vals[-1] == pytest.approx(quasipotential_linear(u, model), rel=1e-12)


def test_discrete_form_tends_to_continuum():
    model = ModelSpec(OperatorSpec.from_decay(2))
    u = [0.05, 0.01]
    cont = quasipotential_linear_finite_T(u, 1.0, model)
    errs = [abs(quasipotential_linear_discrete(u, 1.0, h, model) - cont)
            for h in (0.01, 0.005, 0.0025)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(orders, 2.0, atol=0.1)


def test_linear_shift_changes_rates():
    model = ModelSpec(OperatorSpec.from_decay(1), LinearDiagonal([1.0]))
    assert quasipotential_linear([1.0], model) == pytest.approx((math.pi**2 - 1) * math.pi**4)
    unstable = ModelSpec(OperatorSpec.from_decay(1), LinearDiagonal([20.0]))
    with pytest.raises(DomainError):
        quasipotential_linear([1.0], unstable)
    with pytest.raises(NotApplicableError):
        quasipotential_linear([1.0], ModelSpec(OperatorSpec.from_decay(1), named_nemytskij("sin")))


def test_minimizer_hits_discrete_optimum():
    model = ModelSpec(OperatorSpec.from_decay(3))
    u = np.array([0.02, -0.005, 0.001])
    run = minimize_action(u, 0.5, model, h=0.005)
    exact = quasipotential_linear_discrete(u, 0.5, 0.005, model)
    assert run.converged
    assert run.value == pytest.approx(exact, rel=1e-8)
    np.testing.assert_array_equal(run.path.end, u)


def test_ladder_with_fixed_step_is_monotone():
    model = ModelSpec(OperatorSpec.from_decay(2))
    res = minimize_quasipotential([0.02, 0.004], model, horizons=(0.25, 0.5, 1.0), h=0.005)
    vals = [v for _, v in res.per_horizon]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(vals, vals[1:]))
    assert res.value == min(vals)
    assert res.to_dict()["ladder_gap"] == pytest.approx(abs(vals[-1] - vals[-2]))


def test_ladder_validation():
    model = ModelSpec(OperatorSpec.from_decay(1))
    with pytest.raises(ConfigError):
        minimize_quasipotential([0.1], model, horizons=(1.0, 0.5))
    with pytest.raises(ConfigError):
        minimize_quasipotential([0.1], model, horizons=())


def test_nonlinear_result_is_flagged_local():
    model = ModelSpec(OperatorSpec.from_decay(2), named_nemytskij("sin"))
    opts = MinimizerOptions(restarts=1)
    res = minimize_quasipotential([0.05, 0.0], model, horizons=(0.5, 1.0), points=50, opts=opts)
    assert any("local minimum" in f for f in res.flags)
    assert res.value > 0


def test_full_quasipotential_zero_drift_matches_semi():
    model = ModelSpec(OperatorSpec.from_decay(2))
    u = [0.02, 0.004]
    a = minimize_quasipotential(u, model, horizons=(0.5,), h=0.01)
    b = minimize_quasipotential_full(u, model, 0.05, horizons=(0.5,), h=0.01)
    assert b.value == pytest.approx(a.value, rel=1e-9)
    assert b.frozen_tau == 0.05


def test_tube_action_is_below_path_action():
    model = ModelSpec(OperatorSpec.from_decay(1))
    nodes = np.linspace(0, 0.2, 11)[:, None]
    z = SpectralPath(0.01, nodes)
    full, _ = minimize_tube_action(z, 0.0, model)
    tube, w = minimize_tube_action(z, 0.05, model)
    assert 0 <= tube < full
    assert np.max(np.abs(w.nodes - nodes)) <= 0.05 + 1e-9
