"""Controlled deterministic dynamics dz/dt = A_n z + F_n(z) + Q_n^{1/2} psi(t).

Controls are piecewise constant on their own grid, and every solver emits
nodes on that grid.  For zero or diagonal-linear drift the affine ODE on each
control interval is integrated exactly.  For a nonlinear drift each interval
is split into ``substeps`` pieces and advanced with the second-order
exponential Runge-Kutta (ETD2RK) scheme.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DivergenceError, DomainError
from .paths import Control, SpectralPath, steps_for
from .spectral import phi1, phi2, project

__all__ = [
    "Control",
    "SpectralPath",
    "build_zn",
    "solve_skeleton",
    "solve_skeleton_frozen",
    "uncontrolled_flow",
]

DEFAULT_SUBSTEPS = 16


def _check(y, psi, model):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != model.n or psi.n != model.n:
        raise DomainError(
            f"dimension mismatch: model n={model.n}, initial state {y.size}, control {psi.n}"
        )
    return y


def _finite(z, k):
    if not np.all(np.isfinite(z)):
        raise DivergenceError(f"non-finite skeleton state on control interval {k}", step=k)


def solve_skeleton(y, psi, model, substeps=DEFAULT_SUBSTEPS):
    """Skeleton path from y driven by the piecewise-constant control psi."""
    y = _check(y, psi, model)
    if substeps < 1:
        raise ConfigError("substeps must be >= 1")
    op = model.operator
    forcing = op.q_sqrt_apply(psi.values)
    nodes = np.empty((psi.steps + 1, model.n))
    nodes[0] = z = y
    if model.is_linear:
        mu = model.linear_rates()
        decay, gain = np.exp(-mu * psi.h), phi1(mu, psi.h)
        for k in range(psi.steps):
            z = decay * z + gain * forcing[k]
            _finite(z, k)
            nodes[k + 1] = z
        return SpectralPath(psi.h, nodes)

    F = model.nonlinearity
    r = op.rates
    hs = psi.h / substeps
    decay, g1, g2 = np.exp(-r * hs), phi1(r, hs), phi2(r, hs)
    for k in range(psi.steps):
        for _ in range(substeps):
            Fz = F.apply(z)
            pred = decay * z + g1 * (Fz + forcing[k])
            z = pred + g2 * (F.apply(pred) - Fz)
        _finite(z, k)
        nodes[k + 1] = z
    return SpectralPath(psi.h, nodes)


def solve_skeleton_frozen(y, psi, model, tau):
    """Skeleton of the time-discrete scheme: F_n is evaluated at z(tau floor(t / tau)).

    With the drift frozen, every control interval is an exact affine step.
    """
    y = _check(y, psi, model)
    ratio = steps_for(tau, psi.h, "time step tau")
    op = model.operator
    F = model.nonlinearity
    r = op.rates
    decay, gain = np.exp(-r * psi.h), phi1(r, psi.h)
    forcing = op.q_sqrt_apply(psi.values)
    nodes = np.empty((psi.steps + 1, model.n))
    nodes[0] = z = y
    frozen = None
    for k in range(psi.steps):
        if k % ratio == 0:
            frozen = F.apply(z)
        z = decay * z + gain * (frozen + forcing[k])
        _finite(z, k)
        nodes[k + 1] = z
    return SpectralPath(psi.h, nodes)


def uncontrolled_flow(y, model, T, h, substeps=DEFAULT_SUBSTEPS):
    return solve_skeleton(y, Control.zeros(model.n, T, h), model, substeps)


def build_zn(x, phi, n, model, substeps=DEFAULT_SUBSTEPS):
    """Galerkin skeleton started at P_n x and driven by P_n phi.

    ``model`` is the reference (dimension N) model; it is truncated to n modes.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if n > x.size or n > phi.n:
        raise DomainError(f"n={n} exceeds the reference dimension")
    return solve_skeleton(project(x, n), phi.project(n), model.truncate(n), substeps)
