"""Spectral Galerkin and exponential Euler tools for small-noise large deviations
of the stochastic heat equation with additive trace-class noise on (0, 1)."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DivergenceError,
    DomainError,
    EvaluationError,
    NotApplicableError,
    SpdeLdpError,
)
from .integrator import (  # noqa: E402
    IntegratorConfig,
    max_stable_stepsize,
    simulate_ensemble,
    simulate_path,
    stochastic_convolution_sample,
)
from .model import ModelSpec  # noqa: E402
from .nonlinearity import LinearDiagonal, Nemytskij, Zero, named_nemytskij  # noqa: E402
from .paths import Control, SpectralPath  # noqa: E402
from .quasipotential import (  # noqa: E402
    minimize_action,
    minimize_quasipotential,
    minimize_quasipotential_full,
    quasipotential_linear,
)
from .rate import rate_full, rate_reference, rate_semi  # noqa: E402
from .skeleton import build_zn, solve_skeleton, solve_skeleton_frozen  # noqa: E402
from .spectral import OperatorSpec  # noqa: E402

__all__ = [
    "ConfigError", "Control", "DivergenceError", "DomainError", "EvaluationError",
    "IntegratorConfig", "LinearDiagonal", "ModelSpec", "Nemytskij", "NotApplicableError",
    "OperatorSpec", "SpdeLdpError", "SpectralPath", "Zero", "__version__", "build_zn",
    "max_stable_stepsize", "minimize_action", "minimize_quasipotential",
    "minimize_quasipotential_full", "named_nemytskij", "quasipotential_linear", "rate_full",
    "rate_reference", "rate_semi", "simulate_ensemble", "simulate_path", "solve_skeleton",
    "solve_skeleton_frozen", "stochastic_convolution_sample",
]
