"""Drift nonlinearities F and their Galerkin projections F_n = P_n F.

Three kinds are supported: the zero map, a diagonal linear map
``u_i -> b_i u_i`` and Nemytskij operators ``F(u)(x) = f(u(x))``.  The
Nemytskij case is evaluated pseudospectrally: the field is sampled on the
DST-I collocation grid, f is applied pointwise, and the grid values are
transformed back and truncated to n modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import spectral
from .errors import ConfigError, DomainError, EvaluationError

__all__ = [
    "LinearDiagonal",
    "Nemytskij",
    "Zero",
    "audit_lipschitz",
    "dissipativity_constant",
    "named_nemytskij",
]


@dataclass(frozen=True)
class Zero:
    kind = "zero"
    lipschitz = 0.0
    is_linear = True

    def apply(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def derivative(self, u, v):
        return np.zeros_like(np.asarray(v, dtype=float))

    def diagonal(self, n):
        return np.zeros(n)

    def truncate(self, n):
        return self

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class LinearDiagonal:
    """F(u)_i = b_i u_i."""

    b: np.ndarray
    kind = "linear"
    is_linear = True

    def __post_init__(self):
        b = np.array(self.b, dtype=float).reshape(-1)
        if not np.all(np.isfinite(b)):
            raise DomainError("linear coefficients must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def lipschitz(self):
        return float(np.max(np.abs(self.b)))

    def _check(self, u):
        if u.shape[-1] != self.b.size:
            raise DomainError(f"field has {u.shape[-1]} modes, linear map has {self.b.size}")

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        self._check(u)
        return self.b * u

    def derivative(self, u, v):
        v = np.asarray(v, dtype=float)
        self._check(v)
        return self.b * v

    def diagonal(self, n):
        return np.array(self.b[:n])

    def truncate(self, n):
        return LinearDiagonal(self.b[:n])

    def describe(self):
        return {"kind": self.kind, "b": self.b.tolist()}


@dataclass(frozen=True)
class Nemytskij:
    """Pointwise map ``F(u)(x) = f(u(x))``.

    ``lipschitz`` is the declared bound on sup|f'|; it is trusted, not
    inferred (see :func:`audit_lipschitz`).  ``collocation`` fixes the grid
    size M; ``None`` means M = 4n for an n-mode field.
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    collocation: int | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)
    kind = "nemytskij"
    is_linear = False

    def __post_init__(self):
        if not (self.lipschitz >= 0 and math.isfinite(self.lipschitz)):
            raise DomainError("declared Lipschitz constant must be finite and nonnegative")

    def grid_size(self, n):
        M = 4 * n if self.collocation is None else self.collocation
        if M < n:
            raise DomainError(f"collocation size M={M} smaller than n={n}")
        return M

    def _pointwise(self, func, u):
        n = u.shape[-1]
        M = self.grid_size(n)
        grid = spectral.evaluate_on_grid(u, M)
        with np.errstate(all="ignore"):
            vals = np.asarray(func(grid), dtype=float)
        bad = ~np.isfinite(vals)
        if bad.any():
            k = int(np.argwhere(bad)[0][-1])
            x = float(spectral.collocation_points(M)[k])
            raise EvaluationError(f"{self.name}: non-finite value at grid point x={x:.6g}", point=x)
        return grid, vals, n

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        _, vals, n = self._pointwise(self.f, u)
        return spectral.synthesize_from_grid(vals, n)

    def derivative(self, u, v):
        """F'(u) v. The operator is symmetric, so this also applies F'(u)^T."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        _, slope, n = self._pointwise(self.df, u)
        vgrid = spectral.evaluate_on_grid(v, self.grid_size(n))
        return spectral.synthesize_from_grid(slope * vgrid, n)

    def diagonal(self, n):
        raise TypeError("Nemytskij operators have no diagonal representation")

    def truncate(self, n):
        return self

    def zero_preserving(self):
        return float(self.f(np.zeros(1))[0]) == 0.0

    def describe(self):
        out = {"kind": self.kind, "function": self.name, "lipschitz": self.lipschitz,
               "collocation": self.collocation}
        out.update(self.params)
        return out


def _gauss_bump(s):
    return s * np.exp(-s * s)


def _gauss_bump_prime(s):
    return (1.0 - 2.0 * s * s) * np.exp(-s * s)


# name -> (f, f', sup|f'|) for unit scale
_LIBRARY = {
    "sin": (np.sin, np.cos, 1.0),
    "tanh": (np.tanh, lambda s: 1.0 / np.cosh(s) ** 2, 1.0),
    "gauss_bump": (_gauss_bump, _gauss_bump_prime, 1.0),
}


def named_nemytskij(name, scale=1.0, collocation=None):
    """Nemytskij operator for ``scale * f`` with f from a small library."""
    try:
        f, df, lip = _LIBRARY[name]
    except KeyError:
        raise ConfigError(f"unknown Nemytskij function {name!r}; known: {sorted(_LIBRARY)}") from None
    a = float(scale)
    return Nemytskij(
        f=lambda s: a * f(s),
        df=lambda s: a * df(s),
        lipschitz=abs(a) * lip,
        collocation=collocation,
        name=name,
        params={"scale": a},
    )


def dissipativity_constant(nonlinearity, op):
    """``c = lambda_1 - L_F``; a negative value means the drift is not dissipative."""
    return op.lambda1 - nonlinearity.lipschitz


def audit_lipschitz(nonlinearity, n, samples=1000, radius=5.0, rng=None):
    """Largest observed ``|F(u) - F(v)| / |u - v|`` over random pairs in a ball.

    Returns ``(ratio, passed)`` with ``passed`` meaning ``ratio <= L_F + 1e-8``.
    """
    rng = np.random.default_rng(0) if rng is None else rng

    def ball(k):
        x = rng.standard_normal((k, n))
        r = radius * rng.random(k) ** (1.0 / n)
        return x / np.linalg.norm(x, axis=1, keepdims=True) * r[:, None]

    u, v = ball(samples), ball(samples)
    diff = np.linalg.norm(nonlinearity.apply(u) - nonlinearity.apply(v), axis=1)
    ratio = float(np.max(diff / np.linalg.norm(u - v, axis=1)))
    return ratio, ratio <= nonlinearity.lipschitz + 1e-8
