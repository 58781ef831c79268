"""Problem instance: operator data plus drift nonlinearity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotApplicableError
from .nonlinearity import LinearDiagonal, Zero
from .spectral import OperatorSpec


@dataclass(frozen=True)
class ModelSpec:
    operator: OperatorSpec
    nonlinearity: object = Zero()

    @property
    def n(self):
        return self.operator.n

    @property
    def is_linear(self):
        return self.nonlinearity.is_linear

    @property
    def lipschitz(self):
        return self.nonlinearity.lipschitz

    def truncate(self, n):
        return ModelSpec(self.operator.truncate(n), self.nonlinearity.truncate(n))

    def linear_rates(self):
        """Decay rates with any diagonal linear drift folded into A."""
        rates = self.operator.rates
        if isinstance(self.nonlinearity, LinearDiagonal):
            return rates - self.nonlinearity.b
        return rates

    def absorbed(self):
        """Equivalent model with F = 0 and the linear drift moved into A."""
        if isinstance(self.nonlinearity, Zero):
            return self
        if not isinstance(self.nonlinearity, LinearDiagonal):
            raise NotApplicableError("only a diagonal linear drift can be absorbed into A")
        shift = self.nonlinearity.b
        if self.operator.shift is not None:
            shift = shift + self.operator.shift
        return ModelSpec(self.operator.with_shift(shift), Zero())

    def drift(self, u):
        """A_n u + F_n(u)."""
        return -self.operator.rates * np.asarray(u, dtype=float) + self.nonlinearity.apply(u)

    def describe(self):
        return {"operator": self.operator.describe(), "nonlinearity": self.nonlinearity.describe()}
