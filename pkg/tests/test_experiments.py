import math

import numpy as np
import pytest

from spde_ldp import ModelSpec, OperatorSpec
from spde_ldp.errors import NotApplicableError
from spde_ldp.experiments import (
    LadderReport,
    algebraic_control,
    fit_order,
    parabola_coefficients,
    quasipotential_preservation_study,
    spatial_preservation_study,
    temporal_gap_study,
)
from spde_ldp.nonlinearity import named_nemytskij
from spde_ldp.paths import Control
from spde_ldp.skeleton import solve_skeleton

PI6 = math.pi**6


def test_fit_order_recovers_power_law():
    x = [2.0, 4.0, 8.0, 16.0]
    assert fit_order(x, [v**-2.0 for v in x]) == pytest.approx(-2.0)
    assert fit_order(x[:2], [1.0, 0.5]) is None
    assert fit_order(x, [1.0, 0.0, 0.0, 0.5]) is None


def test_parabola_coefficients_reconstruct_parabola():
    from spde_ldp.spectral import collocation_points, evaluate_on_grid
    c = parabola_coefficients(255)
    x = collocation_points(255)
    np.testing.assert_allclose(evaluate_on_grid(c, 255), x * (1 - x), atol=1e-6)
    assert c[1] == 0.0


def test_algebraic_control_shape():
    psi = algebraic_control(8, 4, 0.5, 0.1)
    assert psi.steps == 5
    np.testing.assert_allclose(psi.values[0], [1, 1 / 8, 1 / 27, 1 / 64, 0, 0, 0, 0])


def test_spatial_study_linear_matches_exact_tail():
    model = ModelSpec(OperatorSpec.from_decay(32))
    x = parabola_coefficients(32)
    phi = algebraic_control(32, 32, 0.25, 0.0025)
    rep = spatial_preservation_study(x, phi, [4, 8, 16], model)
    assert rep.passed
    tails = [0.5 * 0.25 * float(np.sum(np.arange(n + 1, 33, dtype=float) ** -6)) for n in (4, 8, 16)]
    np.testing.assert_allclose(rep.rate_errors, tails, rtol=1e-12)
    assert rep.order is not None and rep.order > 0
    assert "rate_error_quadrature" in rep.to_dict()["rows"][0]
    assert "order" in rep.table()


def test_spatial_study_warns_on_rough_state():
    model = ModelSpec(OperatorSpec.from_decay(8))
    x = np.ones(8)
    with pytest.warns(UserWarning, match="H\\^2"):
        rep = spatial_preservation_study(x, Control.zeros(8, 0.1, 0.01), [2, 4], model)
    assert rep.notes


def test_temporal_gap_zero_drift(ou4):
    z = solve_skeleton(np.zeros(4), Control.constant(np.ones(4), 0.1, 0.0025), ou4)
    rep = temporal_gap_study(z, np.zeros(4), [0.05, 0.025], ou4)
    assert rep.rate_errors == [0.0, 0.0] and rep.passed


def test_temporal_gap_nonlinear_shrinks():
    model = ModelSpec(OperatorSpec.from_decay(2), named_nemytskij("sin", 0.5))
    psi = Control.constant([1.0, 0.5], 0.2, 0.00125)
    z = solve_skeleton(np.array([0.3, 0.1]), psi, model)
    rep = temporal_gap_study(z, z.start, [0.05, 0.025, 0.0125], model)
    assert rep.passed
    assert rep.rate_errors[-1] < rep.rate_errors[0]


def test_quasipotential_study_closed_form_example():
    model = ModelSpec(OperatorSpec.from_decay(64))
    u = np.arange(1, 65, dtype=float) ** -3
    spatial, temporal = quasipotential_preservation_study(
        u, [4, 8, 16], [0.1], model, minimize=False, horizons=(0.5,), points=50, n_temporal=2)
    np.testing.assert_allclose(spatial.rate_errors, [(64 - n) * PI6 for n in (4, 8, 16)],
                               rtol=1e-12)
    assert spatial.passed and temporal.passed


def test_quasipotential_study_rejects_nonlinear():
    model = ModelSpec(OperatorSpec.from_decay(2), named_nemytskij("sin"))
    with pytest.raises(NotApplicableError):
        quasipotential_preservation_study([0.1, 0.0], [1, 2], [0.1], model)


def test_ladder_report_rows():
    rep = LadderReport("n", [1, 2], [0.5, 0.25], [1.0, 0.5], None, True, {"extra": [7, 8]})
    rows = list(rep.rows())
    assert rows[1] == {"n": 2, "path_error": 0.25, "rate_error": 0.5, "extra": 8}
    assert "-" in rep.table()
