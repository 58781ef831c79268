"""Quasipotentials: minimal action to steer 0 to u, over paths and horizons.

For a horizon T the interior nodes of a uniform path with z(0) = 0 and
z(T) = u held fixed are optimized with L-BFGS on the discrete action of
:mod:`spde_ldp.rate`.  The infimum over horizons is taken along a finite
increasing ladder with warm starts.  Closed forms for linear drift serve as
oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ConfigError, DomainError, NotApplicableError
from .paths import SpectralPath, steps_for
from .rate import DiscreteAction
from .spectral import phi1

__all__ = [
    "ActionMinimum",
    "MinimizerOptions",
    "QuasipotentialResult",
    "minimize_action",
    "minimize_quasipotential",
    "minimize_quasipotential_full",
    "minimize_tube_action",
    "quasipotential_linear",
    "quasipotential_linear_discrete",
    "quasipotential_linear_finite_T",
]

DEFAULT_LADDER = (0.25, 0.5, 1.0, 2.0, 4.0)
DEFAULT_POINTS = 400


@dataclass(frozen=True)
class MinimizerOptions:
    """``gtol`` bounds the infinity norm of the (diagonally scaled) gradient at exit;
    ``ftol`` is the relative value tolerance of the optimizer."""

    tol: float = 1e-8
    ftol: float = 1e-13
    max_iter: int = 20000
    memory: int = 20
    restarts: int = 3
    seed: int = 0
    domain_cap: float = 1e10


@dataclass
class ActionMinimum:
    value: float
    path: SpectralPath
    iterations: int
    grad_norm: float
    converged: bool
    message: str
    T: float

    @property
    def h(self):
        return self.path.h


@dataclass
class QuasipotentialResult:
    value: float
    T_star: float
    path: SpectralPath
    iterations: int
    grad_norm: float
    per_horizon: list
    h: float
    converged: bool
    frozen_tau: float | None = None
    flags: list = field(default_factory=list)

    @property
    def ladder_gap(self):
        vals = [v for _, v in self.per_horizon]
        return abs(vals[-1] - vals[-2]) if len(vals) > 1 else 0.0

    def to_dict(self):
        out = {
            "value": self.value,
            "T_star": self.T_star,
            "per_horizon": [{"T": T, "value": v} for T, v in self.per_horizon],
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "h": self.h,
            "converged": self.converged,
            "ladder_gap": self.ladder_gap,
            "flags": list(self.flags),
        }
        if self.frozen_tau is not None:
            out["frozen_tau"] = self.frozen_tau
        return out


def _require_linear(model):
    if not model.is_linear:
        raise NotApplicableError("closed-form quasipotential needs zero or diagonal linear drift")
    mu = model.linear_rates()
    if np.any(mu <= 0):
        raise DomainError("linear part is not dissipative; quasipotential is infinite")
    return mu


def quasipotential_linear(u, model):
    """``sum_i mu_i u_i**2 / q_i`` with mu the (shifted) decay rates."""
    mu = _require_linear(model)
    u = np.asarray(u, dtype=float)
    return float(np.sum(mu * u * u / model.operator.q))


def quasipotential_linear_finite_T(u, T, model):
    """Minimal action to reach u from 0 in exactly time T (linear drift)."""
    if not T > 0:
        raise DomainError("horizon must be positive")
    mu = _require_linear(model)
    u = np.asarray(u, dtype=float)
    # mu / (1 - exp(-2 mu T)) == 1 / (2 phi1(2 mu, T))
    return float(np.sum(u * u / (2.0 * model.operator.q * phi1(2.0 * mu, T))))


def quasipotential_linear_discrete(u, T, h, model):
    """Exact minimum of the discrete action over piecewise-constant controls.

    Linear drift only.  Reaching u in K = T/h steps of the exact affine map
    costs ``u_i^2 h (1 - d_i^2) / (2 q_i g_i^2 (1 - d_i^(2K)))`` per mode, with
    ``d_i = exp(-mu_i h)`` and ``g_i = phi1(mu_i, h)``.
    """
    mu = _require_linear(model)
    K = steps_for(T, h, "horizon")
    u = np.asarray(u, dtype=float)
    g = phi1(mu, h)
    one_minus_d2 = -np.expm1(-2.0 * mu * h)
    one_minus_d2K = -np.expm1(-2.0 * mu * h * K)
    return float(np.sum(u * u * h * one_minus_d2 / (2.0 * model.operator.q * g * g * one_minus_d2K)))


def _straight_line(u, K):
    s = np.linspace(0.0, 1.0, K + 1)[:, None]
    return s * np.asarray(u, dtype=float)[None, :]


def _resample(nodes, K):
    """Time-dilate a path onto K intervals of the new horizon (fractional time)."""
    nodes = np.asarray(nodes)
    if nodes.shape[0] == K + 1:
        return nodes.copy()
    old = np.linspace(0.0, 1.0, nodes.shape[0])
    new = np.linspace(0.0, 1.0, K + 1)
    return np.stack([np.interp(new, old, nodes[:, i]) for i in range(nodes.shape[1])], axis=1)


class _Problem:
    """Objective over interior nodes with a per-mode diagonal rescaling."""

    def __init__(self, action, start, end):
        self.action = action
        self.start = start
        self.end = end
        # diagonal of the Hessian of the quadratic part, per mode
        diag = action.h * action.w2 * (action.a**2 + action.b**2)
        self.scale = 1.0 / np.sqrt(diag)
        self.n = start.size

    def nodes(self, w):
        inner = w.reshape(-1, self.n) * self.scale
        return np.vstack([self.start, inner, self.end])

    def to_w(self, nodes):
        return (nodes[1:-1] / self.scale).ravel()

    def __call__(self, w):
        val, grad = self.action.value_and_grad(self.nodes(w))
        return val, (grad[1:-1] * self.scale).ravel()


def minimize_action(u, T, model, h=None, init=None, opts=MinimizerOptions(), frozen_tau=None):
    """Minimize the discrete action over paths with z(0) = 0 and z(T) = u."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != model.n:
        raise DomainError(f"target has {u.size} modes, model has {model.n}")
    h = T / DEFAULT_POINTS if h is None else h
    K = steps_for(T, h, "horizon")
    if frozen_tau is not None:
        steps_for(T, frozen_tau, "horizon")
    if K < 2:
        path = SpectralPath(h, np.vstack([np.zeros_like(u), u]))
        val = DiscreteAction(model, h, K, frozen_tau).value(path.nodes)
        return ActionMinimum(val, path, 0, 0.0, True, "no interior nodes", T)
    action = DiscreteAction(model, h, K, frozen_tau)
    problem = _Problem(action, np.zeros_like(u), u)
    if init is None:
        start_nodes = _straight_line(u, K)
    else:
        start_nodes = _resample(init.nodes if isinstance(init, SpectralPath) else init, K)
        start_nodes[0], start_nodes[-1] = 0.0, u

    starts = [start_nodes]
    if not model.is_linear and opts.restarts > 0:
        gen = np.random.default_rng(opts.seed)
        amp = max(float(np.linalg.norm(u)), 1e-3)
        for _ in range(opts.restarts):
            pert = start_nodes.copy()
            bump = np.sin(np.pi * np.linspace(0.0, 1.0, K + 1))[:, None]
            pert += 0.25 * amp * bump * gen.standard_normal(model.n)
            starts.append(pert)

    best = None
    for x0 in starts:
        res = optimize.minimize(
            problem, problem.to_w(x0), jac=True, method="L-BFGS-B",
            options={"maxiter": opts.max_iter, "gtol": opts.tol, "ftol": opts.ftol,
                     "maxcor": opts.memory, "maxls": 50},
        )
        if best is None or res.fun < best.fun:
            best = res
    _, g = problem(best.x)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    converged = gnorm <= opts.tol or bool(best.success)
    message = str(best.message)
    if len(starts) > 1:
        message += f"; best of {len(starts)} starts (local optimum only)"
    return ActionMinimum(float(best.fun), SpectralPath(h, problem.nodes(best.x)),
                         int(best.nit), gnorm, converged, message, T)


def minimize_quasipotential(u, model, horizons=DEFAULT_LADDER, points=DEFAULT_POINTS,
                            opts=MinimizerOptions(), frozen_tau=None, h=None):
    """Ladder minimum over horizons with warm starts.

    Grid policy: ``h=None`` uses ``points`` intervals per horizon; a fixed
    ``h`` uses the same step for every horizon, which makes the per-horizon
    values non-increasing in T for a dissipative drift with F(0) = 0.
    """
    horizons = [float(T) for T in horizons]
    if not horizons:
        raise ConfigError("horizon ladder is empty")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigError("horizon ladder must be strictly increasing")
    per, runs = [], []
    prev = None
    for T in horizons:
        step = T / points if h is None else h
        if frozen_tau is not None:
            steps_for(frozen_tau, step, "time step tau")
        run = minimize_action(u, T, model, h=step, init=prev, opts=opts, frozen_tau=frozen_tau)
        per.append((T, run.value))
        runs.append(run)
        prev = run.path
    j = int(np.argmin([v for _, v in per]))
    best = runs[j]
    flags = []
    if not all(r.converged for r in runs):
        flags.append("not converged at T=" + ",".join(f"{r.T:g}" for r in runs if not r.converged))
    if not model.is_linear:
        flags.append(f"local minimum only (multi-start, {opts.restarts} perturbations)")
    if min(v for _, v in per) > opts.domain_cap:
        flags.append("possibly outside effective domain")
    return QuasipotentialResult(
        value=best.value, T_star=best.T, path=best.path, iterations=sum(r.iterations for r in runs),
        grad_norm=best.grad_norm, per_horizon=per, h=best.h,
        converged=all(r.converged for r in runs), frozen_tau=frozen_tau, flags=flags,
    )


def minimize_quasipotential_full(u, model, tau, horizons=DEFAULT_LADDER, points=DEFAULT_POINTS,
                                 opts=MinimizerOptions(), h=None):
    """Quasipotential of the time-discrete scheme with step tau."""
    for T in horizons:
        steps_for(T, tau, "horizon")
    return minimize_quasipotential(u, model, horizons, points, opts, frozen_tau=float(tau), h=h)


def minimize_tube_action(z, delta, model, y=None, opts=MinimizerOptions()):
    """Minimal action over paths w from y staying within delta of z at every node.

    One mode: box constraints (L-BFGS-B).  Several modes: ball constraints
    (SLSQP).  Returns ``(value, path)``.
    """
    y = z.start if y is None else np.asarray(y, dtype=float).reshape(-1)
    action = DiscreteAction(model, z.h, z.steps)
    n, K = z.n, z.steps
    free = z.nodes[1:]

    def assemble(x):
        return np.vstack([y, x.reshape(K, n)])

    def fun(x):
        val, grad = action.value_and_grad(assemble(x))
        return val, grad[1:].ravel()

    x0 = free.ravel().copy()
    if n == 1:
        bounds = list(zip((free[:, 0] - delta), (free[:, 0] + delta)))
        res = optimize.minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": opts.max_iter, "gtol": opts.tol,
                                         "ftol": opts.ftol, "maxcor": opts.memory})
    else:
        cons = {
            "type": "ineq",
            "fun": lambda x: delta**2 - np.sum((x.reshape(K, n) - free) ** 2, axis=1),
            "jac": lambda x: _ball_jac(x.reshape(K, n) - free),
        }
        res = optimize.minimize(fun, x0, jac=True, method="SLSQP", constraints=[cons],
                                options={"maxiter": opts.max_iter, "ftol": 1e-14})
    return float(res.fun), SpectralPath(z.h, assemble(res.x))


def _ball_jac(d):
    K, n = d.shape
    J = np.zeros((K, K * n))
    for k in range(K):
        J[k, k * n:(k + 1) * n] = -2.0 * d[k]
    return J
