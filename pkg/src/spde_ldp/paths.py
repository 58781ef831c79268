"""Uniform-grid paths z in C([0,T]; H_n) and piecewise-constant controls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


def steps_for(T, h, what="horizon"):
    """Integer number of h-steps in T; rejects non-integer ratios."""
    if h <= 0 or T <= 0:
        raise ConfigError(f"{what} and step must be positive (got T={T}, h={h})")
    ratio = T / h
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"{what} {T} is not an integer multiple of step {h}")
    return k


@dataclass(frozen=True)
class SpectralPath:
    """Nodes ``z(k h)``, k = 0..K, stored as an array of shape (K+1, n)."""

    h: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[0] < 2:
            raise DomainError("a path needs at least two nodes of equal dimension")
        if not self.h > 0:
            raise DomainError(f"grid step must be positive, got {self.h}")
        if not np.all(np.isfinite(nodes)):
            raise DomainError("path has non-finite nodes")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self):
        return self.nodes.shape[1]

    @property
    def steps(self):
        return self.nodes.shape[0] - 1

    @property
    def T(self):
        return self.steps * self.h

    @property
    def times(self):
        return np.arange(self.steps + 1) * self.h

    @property
    def start(self):
        return self.nodes[0]

    @property
    def end(self):
        return self.nodes[-1]

    def sup_distance(self, other):
        """Grid approximation of the C([0,T]; H) distance; pads the smaller dimension."""
        a, b = self.nodes, np.asarray(other.nodes if isinstance(other, SpectralPath) else other)
        if a.shape[0] != b.shape[0]:
            raise DomainError("paths live on different time grids")
        width = max(a.shape[1], b.shape[1])
        pa = np.zeros((a.shape[0], width))
        pb = np.zeros((a.shape[0], width))
        pa[:, : a.shape[1]] = a
        pb[:, : b.shape[1]] = b
        return float(np.max(np.linalg.norm(pa - pb, axis=1)))

    def project(self, n):
        return SpectralPath(self.h, self.nodes[:, :n])

    def subsample(self, stride):
        if stride < 1 or self.steps % stride:
            raise ConfigError(f"stride {stride} does not divide {self.steps} steps")
        return SpectralPath(self.h * stride, self.nodes[::stride])


@dataclass(frozen=True)
class Control:
    """Piecewise-constant control: ``values[k]`` acts on [k h, (k+1) h)."""

    h: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise DomainError("control values must have shape (intervals, n)")
        if not self.h > 0:
            raise DomainError(f"grid step must be positive, got {self.h}")
        if not np.all(np.isfinite(values)):
            raise DomainError("control has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def constant(cls, value, T, h):
        k = steps_for(T, h)
        value = np.asarray(value, dtype=float).reshape(1, -1)
        return cls(h, np.repeat(value, k, axis=0))

    @classmethod
    def zeros(cls, n, T, h):
        return cls(h, np.zeros((steps_for(T, h), n)))

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def steps(self):
        return self.values.shape[0]

    @property
    def T(self):
        return self.steps * self.h

    def l2_norm_sq(self):
        """``|psi|^2_{L^2(0,T;H)}``, exact for the piecewise-constant model."""
        return float(self.h * np.sum(self.values * self.values))

    def action(self):
        return 0.5 * self.l2_norm_sq()

    def project(self, n):
        return Control(self.h, self.values[:, :n])

    def embed(self, N):
        out = np.zeros((self.steps, N))
        out[:, : self.n] = self.values
        return Control(self.h, out)

    def refine(self, factor):
        """Same function on a grid ``factor`` times finer."""
        factor = int(factor)
        if factor < 1:
            raise ConfigError("refinement factor must be a positive integer")
        return Control(self.h / factor, np.repeat(self.values, factor, axis=0))
