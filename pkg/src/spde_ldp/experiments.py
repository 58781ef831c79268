"""Convergence studies for the spatial and temporal discretizations.

Each study walks a ladder (Galerkin dimension n or time step tau), records
the path and rate discrepancies against a reference, and fits an empirical
order on the log-log ladder.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotApplicableError
from .nonlinearity import Zero
from .paths import Control
from .quasipotential import (
    MinimizerOptions,
    minimize_quasipotential,
    minimize_quasipotential_full,
    quasipotential_linear,
    quasipotential_linear_discrete,
)
from .rate import rate_full, rate_reference, rate_semi
from .skeleton import DEFAULT_SUBSTEPS, build_zn, solve_skeleton
from .spectral import project, sobolev_norm_sq

__all__ = [
    "LadderReport",
    "algebraic_control",
    "fit_order",
    "parabola_coefficients",
    "quasipotential_preservation_study",
    "spatial_preservation_study",
    "temporal_gap_study",
]

NOISE_BAND = 0.05


@dataclass
class LadderReport:
    """Errors along a ladder; ``order`` p means error ~ n^-p or ~ tau^p."""

    variable: str
    values: list
    path_errors: list | None
    rate_errors: list
    order: float | None
    passed: bool
    columns: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def rows(self):
        for j, v in enumerate(self.values):
            row = {self.variable: v}
            if self.path_errors is not None:
                row["path_error"] = self.path_errors[j]
            row["rate_error"] = self.rate_errors[j]
            for name, col in self.columns.items():
                row[name] = col[j]
            yield row

    def to_dict(self):
        return {"variable": self.variable, "rows": list(self.rows()), "order": self.order,
                "passed": self.passed, "notes": list(self.notes)}

    def table(self):
        rows = list(self.rows())
        keys = list(rows[0])
        lines = ["  ".join(f"{k:>16}" for k in keys)]
        for r in rows:
            lines.append("  ".join(f"{_fmt(r[k]):>16}" for k in keys))
        lines.append(f"order = {_fmt(self.order)}   passed = {self.passed}")
        return "\n".join(lines)


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6e}"
    return str(v)


def fit_order(ladder, errors):
    """Least-squares slope of log(error) against log(ladder); None below 3 usable points."""
    pts = [(math.log(x), math.log(e)) for x, e in zip(ladder, errors) if e > 0 and x > 0]
    if len(pts) < 3:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def _non_increasing(errors, band=NOISE_BAND):
    return all(b <= a * (1 + band) + 1e-300 for a, b in zip(errors, errors[1:]))


def _strictly_decreasing(errors):
    return all(b < a for a, b in zip(errors, errors[1:]))


def parabola_coefficients(N):
    """Sine coefficients of x(1 - x): 4 sqrt(2) / (i pi)^3 for odd i, 0 for even i."""
    i = np.arange(1, N + 1)
    return np.where(i % 2 == 1, 4.0 * math.sqrt(2.0) / (i * math.pi) ** 3, 0.0)


def algebraic_control(N, modes, T, h, power=3.0):
    """Time-constant control with coefficients i^(-power) on the first ``modes`` modes."""
    coeffs = np.zeros(N)
    i = np.arange(1, modes + 1)
    coeffs[:modes] = i ** (-power)
    return Control.constant(coeffs, T, h)


def spatial_preservation_study(x, phi, n_ladder, model, substeps=DEFAULT_SUBSTEPS):
    """Galerkin dimension ladder against a reference at dimension ``model.n``.

    Reports the path error sup_t |z - z_n|, the closed-form rate error
    1/2 |(I - P_n) phi|^2 (exact for zero or diagonal linear drift) and the
    quadrature cross-check |rate_ref(z) - rate_n(z_n)|.
    """
    N = model.n
    x = np.asarray(x, dtype=float)
    if x.size != N:
        raise ValueError(f"initial state has {x.size} modes, reference model has {N}")
    phi = phi.embed(N) if phi.n < N else phi
    notes = []
    h2 = sobolev_norm_sq(x, 2.0)
    tail_h2 = sobolev_norm_sq(np.where(np.arange(N) >= 3 * N // 4, x, 0.0), 2.0)
    if not math.isfinite(h2) or tail_h2 > 0.1 * h2:
        msg = "initial state may not lie in H^2: the top quarter of modes carries >10% of its H^2 norm"
        warnings.warn(msg, UserWarning, stacklevel=2)
        notes.append(msg)
    z = solve_skeleton(x, phi, model, substeps)
    ref_rate = rate_reference(z, x, model).value
    paths, exact, quad = [], [], []
    for n in n_ladder:
        zn = build_zn(x, phi, n, model, substeps)
        paths.append(z.sup_distance(zn))
        tail = phi.values[:, n:]
        exact.append(0.5 * phi.h * float(np.sum(tail * tail)))
        quad.append(abs(ref_rate - rate_semi(zn, project(x, n), model.truncate(n)).value))
    passed = _strictly_decreasing(paths) and _strictly_decreasing([e for e in exact if e > 0])
    order = fit_order(n_ladder, paths)
    order = None if order is None else -order
    return LadderReport("n", list(n_ladder), paths, exact, order, passed,
                        columns={"rate_error_quadrature": quad}, notes=notes)


def temporal_gap_study(z, y, tau_ladder, model):
    """|rate_semi - rate_full(tau)| along a ladder of time steps."""
    if isinstance(model.nonlinearity, Zero):
        gaps = [0.0 for _ in tau_ladder]
        for tau in tau_ladder:  # still validates grid compatibility
            rate_full(z, y, model, tau)
        return LadderReport("tau", list(tau_ladder), None, gaps, None, True,
                            notes=["F = 0: semi and fully discrete functionals coincide"])
    semi = rate_semi(z, y, model).value
    gaps = [abs(semi - rate_full(z, y, model, tau).value) for tau in tau_ladder]
    order = fit_order(tau_ladder, gaps)
    return LadderReport("tau", list(tau_ladder), None, gaps, order, _non_increasing(gaps))


def quasipotential_preservation_study(u, n_ladder, tau_ladder, model, minimize=True,
                                      horizons=(0.5, 1.0, 2.0), points=400,
                                      opts=MinimizerOptions(), n_temporal=None):
    """Spatial and temporal quasipotential discrepancies for linear drift.

    Spatial: V(u) at the reference dimension against V^n(P_n u), in closed
    form and, when ``minimize``, from the ladder minimizer (whose own
    reference is the exact discrete optimum on the same grid).  Temporal:
    |V^n - V^{n,tau}| at dimension ``n_temporal`` (default: largest n).
    """
    if not model.is_linear:
        raise NotApplicableError(
            "quasipotential preservation is only established for zero or linear drift")
    u = np.asarray(u, dtype=float)
    V = quasipotential_linear(u, model)
    spatial_err, closed, mins, disc = [], [], [], []
    for n in n_ladder:
        mn = model.truncate(n)
        un = project(u, n)
        vn = quasipotential_linear(un, mn)
        closed.append(vn)
        spatial_err.append(abs(V - vn))
        if minimize:
            res = minimize_quasipotential(un, mn, horizons, points, opts)
            mins.append(res.value)
            disc.append(quasipotential_linear_discrete(un, res.T_star, res.h, mn))
    cols = {"V_closed": closed}
    if minimize:
        cols["V_minimized"] = mins
        cols["V_discrete_exact"] = disc
    order = fit_order(n_ladder, spatial_err)
    spatial = LadderReport("n", list(n_ladder), None, spatial_err, None if order is None else -order,
                           _strictly_decreasing([e for e in spatial_err if e > 0]), cols)

    nt = max(n_ladder) if n_temporal is None else n_temporal
    mt = model.truncate(nt)
    ut = project(u, nt)
    base = minimize_quasipotential(ut, mt, horizons, points, opts)
    gaps, vals = [], []
    for tau in tau_ladder:
        res = minimize_quasipotential_full(ut, mt, tau, horizons, points, opts)
        vals.append(res.value)
        gaps.append(abs(res.value - base.value))
    tol = 2.0 * opts.ftol * max(1.0, base.value)
    temporal = LadderReport("tau", list(tau_ladder), None, gaps, None,
                            all(g <= tol for g in gaps), {"V_tau": vals},
                            notes=[f"n = {nt}, V^n = {base.value!r}, tolerance = {tol!r}"])
    return spatial, temporal
