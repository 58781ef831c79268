"""Sine eigenbasis of the Dirichlet Laplacian on (0, 1).

A state of the Galerkin space H_n is stored as its coefficient vector
``u[i-1] = <u, e_i>`` against ``e_i(x) = sqrt(2) sin(i pi x)``.  In this basis
the operators A, Q, the projection P_n and the semigroup exp(tA) are all
diagonal, so everything here is an elementwise operation on the last axis of
a numpy array.  Leading axes are batch axes (trajectories, time nodes).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .errors import DomainError

__all__ = [
    "OperatorSpec",
    "as_field",
    "collocation_points",
    "eigenvalue",
    "eigenvalues",
    "evaluate_on_grid",
    "phi1",
    "phi2",
    "project",
    "semigroup_apply",
    "sobolev_norm_sq",
    "synthesize_from_grid",
    "tail_norm_sq",
]

PI2 = math.pi**2


def eigenvalue(i):
    """Return ``pi**2 * i**2``, the i-th eigenvalue of -A."""
    if int(i) != i or i < 1:
        raise DomainError(f"mode index must be a positive integer, got {i!r}")
    return PI2 * int(i) ** 2


def eigenvalues(n):
    if n < 1:
        raise DomainError(f"dimension must be positive, got {n}")
    i = np.arange(1, n + 1, dtype=float)
    return PI2 * i * i


def as_field(u, n=None):
    """Validate a coefficient array: float dtype, finite, last axis of length n."""
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if n is not None and arr.shape[-1] != n:
        raise DomainError(f"expected {n} coefficients, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("field has non-finite coefficients")
    return arr


def sobolev_norm_sq(u, gamma=0.0):
    """Squared (fractional) Sobolev norm ``sum_i lambda_i**gamma * u_i**2``."""
    u = np.asarray(u, dtype=float)
    weights = eigenvalues(u.shape[-1]) ** gamma
    return np.sum(weights * u * u, axis=-1)


def project(u, n):
    """Galerkin projection P_n: keep the first n coefficients."""
    u = np.asarray(u, dtype=float)
    if n < 1 or n > u.shape[-1]:
        raise DomainError(f"cannot project a {u.shape[-1]}-mode field onto {n} modes")
    return u[..., :n].copy()


def embed(u, N):
    """Zero-pad coefficients to N modes (inverse of ``project`` on its range)."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    if N < n:
        raise DomainError(f"cannot embed {n} modes into {N}")
    out = np.zeros(u.shape[:-1] + (N,))
    out[..., :n] = u
    return out


def tail_norm_sq(u, n):
    """``|(I - P_n) u|**2``, computed from the discarded coefficients."""
    u = np.asarray(u, dtype=float)
    tail = u[..., n:]
    return np.sum(tail * tail, axis=-1)


def phi1(rate, t):
    """``(1 - exp(-rate t)) / rate`` with the removable singularity at rate = 0."""
    rate = np.asarray(rate, dtype=float)
    out = np.empty(np.broadcast(rate, t).shape)
    small = np.abs(rate * t) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -np.expm1(-rate * t) / rate
    out[...] = np.where(small, t, val)
    return out


def phi2(rate, t):
    """``(exp(-rate t) - 1 + rate t) / (rate**2 t)``; tends to t/2 as rate t -> 0."""
    rate = np.asarray(rate, dtype=float)
    x = rate * t
    small = np.abs(x) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (np.expm1(-x) + x) / (x * x) * t
    series = t * (0.5 - x / 6.0 + x * x / 24.0)
    return np.where(small, series, exact)


def semigroup_apply(u, t, rates=None):
    """Apply E(t) = exp(tA): multiply mode i by exp(-lambda_i t)."""
    if t < 0:
        raise DomainError(f"semigroup time must be nonnegative, got {t}")
    u = np.asarray(u, dtype=float)
    if rates is None:
        rates = eigenvalues(u.shape[-1])
    return np.exp(-np.asarray(rates) * t) * u


def collocation_points(M):
    """Interior equispaced points ``k / (M + 1)``, k = 1..M (DST-I nodes)."""
    return np.arange(1, M + 1) / (M + 1)


def evaluate_on_grid(u, M):
    """Point values ``u(x_k)`` on the M interior collocation points."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    if M < n:
        raise DomainError(f"collocation size M={M} smaller than n={n}")
    padded = embed(u, M)
    # DST-I: y_k = 2 sum_j c_j sin(pi (j+1)(k+1)/(M+1)), so u(x_k) = y_k / sqrt(2)
    return fft.dst(padded, type=1, axis=-1) / math.sqrt(2.0)


def synthesize_from_grid(values, n=None):
    """Sine coefficients of the grid function interpolated by M modes.

    Exact inverse of :func:`evaluate_on_grid` for fields band-limited to M
    modes; ``n`` truncates the result.
    """
    values = np.asarray(values, dtype=float)
    M = values.shape[-1]
    coeffs = fft.dst(values, type=1, axis=-1) * (math.sqrt(2.0) / (2 * (M + 1)))
    if n is None:
        return coeffs
    if n > M:
        raise DomainError(f"cannot recover {n} modes from {M} grid values")
    return coeffs[..., :n]


@dataclass(frozen=True)
class OperatorSpec:
    """Spectral data of A and Q truncated to n modes.

    ``q`` holds the noise eigenvalues q_i > 0.  ``shift`` optionally moves the
    linear rates to ``lambda_i - shift_i``; it is how a diagonal linear drift
    is absorbed into A.  The Laplacian eigenvalues themselves are always
    recomputed as pi^2 i^2.
    """

    q: np.ndarray
    decay_exponent: float | None = None
    shift: np.ndarray | None = None
    decay_admissible: bool = field(init=False)

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        if q.size < 1:
            raise DomainError("noise spectrum must have at least one mode")
        if not np.all(np.isfinite(q)) or np.any(q <= 0):
            raise DomainError("noise spectrum q_i must be finite and strictly positive")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        if self.shift is not None:
            shift = np.array(self.shift, dtype=float).reshape(-1)
            if shift.shape != q.shape:
                raise DomainError("shift must have one entry per mode")
            shift.setflags(write=False)
            object.__setattr__(self, "shift", shift)
        delta = self.decay_exponent
        ok = delta is None or 1.5 < delta <= 2.0
        object.__setattr__(self, "decay_admissible", bool(ok))
        if not ok:
            warnings.warn(
                f"decay exponent {delta} outside (3/2, 2]; trace-class assumptions on Q "
                "are not guaranteed",
                UserWarning,
                stacklevel=3,
            )

    @classmethod
    def from_decay(cls, n, delta=2.0):
        """Noise spectrum ``q_i = lambda_i**(-delta)``."""
        if int(n) != n or n < 1:
            raise DomainError(f"dimension must be a positive integer, got {n!r}")
        return cls(q=eigenvalues(int(n)) ** (-float(delta)), decay_exponent=float(delta))

    @property
    def n(self):
        return self.q.size

    @property
    def laplacian_eigenvalues(self):
        return eigenvalues(self.n)

    @property
    def rates(self):
        """Decay rates of the linear part, ``lambda_i - shift_i``."""
        lam = eigenvalues(self.n)
        return lam if self.shift is None else lam - self.shift

    @property
    def lambda1(self):
        return float(self.rates[0])

    def with_shift(self, shift):
        return OperatorSpec(q=self.q, decay_exponent=self.decay_exponent, shift=shift)

    def truncate(self, n):
        if n < 1 or n > self.n:
            raise DomainError(f"cannot truncate {self.n} modes to {n}")
        shift = None if self.shift is None else self.shift[:n]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return OperatorSpec(q=self.q[:n], decay_exponent=self.decay_exponent, shift=shift)

    def semigroup(self, u, t):
        return semigroup_apply(u, t, self.rates)

    def q_sqrt_apply(self, u):
        return np.sqrt(self.q) * np.asarray(u, dtype=float)

    def q_inv_sqrt_apply(self, u):
        return np.asarray(u, dtype=float) / np.sqrt(self.q)

    def stationary_variance(self):
        """Per-mode variance ``q_i / (2 rate_i)`` of the unit-noise OU law."""
        return self.q / (2.0 * self.rates)

    def convolution_variance(self, t):
        """Per-mode variance of the stochastic convolution at time t."""
        return self.q * phi1(2.0 * self.rates, t)

    def describe(self):
        return {
            "n": self.n,
            "decay_exponent": self.decay_exponent,
            "decay_admissible": self.decay_admissible,
            "q": self.q.tolist() if self.decay_exponent is None else None,
            "shift": None if self.shift is None else self.shift.tolist(),
        }
