"""Monte Carlo checks of the small-noise asymptotics.

Tube probabilities around a reference path and their -eps^2 log scaling,
the Gaussian exponential moment of the stochastic convolution, sampling of
the invariant measure by time averaging, and empirical tail estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rngmod
from .errors import ConfigError, DomainError
from .integrator import IntegratorConfig, simulate_ensemble, stochastic_convolution_sample
from .paths import steps_for

__all__ = [
    "MCEstimate",
    "SlopeFit",
    "TailReport",
    "empirical_invariant_measure",
    "fernique_moment_exact",
    "fernique_moment_mc",
    "grid_modulus",
    "ldp_slope",
    "tail_check",
    "tube_probabilities",
    "tube_probability",
    "variance_with_se",
]

MIN_HITS = 10


def _scaled_log(eps, p):
    """``-eps^2 log p`` with p = 1 mapped to +0.0 rather than -0.0."""
    return eps * eps * -math.log(p) + 0.0


@dataclass(frozen=True)
class MCEstimate:
    p: float
    samples: int
    se: float
    seed: int
    hits: int

    @classmethod
    def from_hits(cls, hits, samples, seed):
        p = hits / samples
        return cls(p, samples, math.sqrt(p * (1.0 - p) / samples), seed, int(hits))

    def to_dict(self):
        return {"p": self.p, "samples": self.samples, "se": self.se, "seed": self.seed,
                "hits": self.hits}


def grid_modulus(z, eps, op):
    """Estimated gap between the grid maximum and the true sup of |X - z|.

    Largest node increment of z plus the typical within-interval excursion
    ``eps * sqrt(sum_i var_i(h))`` of the noise.
    """
    jump = float(np.max(np.linalg.norm(np.diff(z.nodes, axis=0), axis=1)))
    return jump + eps * math.sqrt(float(np.sum(op.convolution_variance(z.h))))


def _tube_distances(z, eps, model, samples, seed, tau, threads):
    tau = z.h if tau is None else tau
    stride = steps_for(z.h, tau, "path step")
    cfg = IntegratorConfig(tau=tau, eps=eps, seed=seed, stride=stride)
    ref = z.nodes

    def sup_dist(paths):
        return np.max(np.linalg.norm(paths - ref[None], axis=2), axis=1)

    return simulate_ensemble(z.start, z.T, model, cfg, samples, threads=threads, transform=sup_dist)


def tube_probabilities(z, deltas, eps, model, samples, seed=0, tau=None, threads=1,
                       correct_grid=True):
    """Tube estimates for several radii from one set of trajectories.

    ``correct_grid`` shrinks every radius by :func:`grid_modulus`.
    """
    if samples < 1:
        raise DomainError("need at least one sample")
    dist = _tube_distances(z, eps, model, samples, seed, tau, threads)
    shrink = grid_modulus(z, eps, model.operator) if correct_grid else 0.0
    out = []
    for d in deltas:
        eff = max(float(d) - shrink, 0.0)
        out.append(MCEstimate.from_hits(int(np.count_nonzero(dist < eff)), samples, seed))
    return out


def tube_probability(z, delta, eps, model, samples, seed=0, tau=None, threads=1,
                     correct_grid=True):
    """Fraction of trajectories from z(0) whose grid sup-distance to z stays below delta."""
    return tube_probabilities(z, [delta], eps, model, samples, seed, tau, threads, correct_grid)[0]


@dataclass
class SlopeFit:
    eps: list
    estimates: list
    rates: list
    resolved: list
    aggregate: float | None
    inconclusive: bool
    trend: float | None = None
    extra: dict = field(default_factory=dict)

    def rows(self):
        for e, est, r, ok in zip(self.eps, self.estimates, self.rates, self.resolved):
            yield {"eps": e, **est.to_dict(), "rate": r, "resolved": ok}

    def to_dict(self):
        return {"per_eps": list(self.rows()), "aggregate": self.aggregate,
                "inconclusive": self.inconclusive, "trend": self.trend, **self.extra}


def ldp_slope(z, delta, eps_ladder, model, samples, seed=0, tau=None, threads=1,
              correct_grid=True, extra_deltas=()):
    """``-eps^2 log p(eps)`` along a decreasing noise ladder.

    Each noise level uses its own seed offset so the levels are independent.
    Levels with fewer than 10 in-tube trajectories are flagged unresolved and
    left out of the inverse-variance weighted aggregate.  ``extra_deltas``
    are evaluated on the same trajectories and reported in
    ``extra["by_delta"]`` (one row per noise level and radius).
    """
    eps_ladder = [float(e) for e in eps_ladder]
    if not eps_ladder or any(e <= 0 for e in eps_ladder):
        raise DomainError("noise ladder must be nonempty and positive")
    if any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise DomainError("noise ladder must be strictly decreasing")
    radii = [float(delta)] + [float(d) for d in extra_deltas]
    ests, rates, ok, by_delta = [], [], [], []
    for j, eps in enumerate(eps_ladder):
        all_est = tube_probabilities(z, radii, eps, model, samples, seed + j, tau, threads,
                                     correct_grid)
        est = all_est[0]
        for d, e in zip(radii, all_est):
            r = _scaled_log(eps, e.p) if e.hits else math.inf
            by_delta.append({"eps": eps, "delta": d, **e.to_dict(), "rate": r,
                             "resolved": e.hits >= MIN_HITS})
        ests.append(est)
        rates.append(_scaled_log(eps, est.p) if est.hits else math.inf)
        ok.append(est.hits >= MIN_HITS)
    num = den = 0.0
    for eps, est, r, good in zip(eps_ladder, ests, rates, ok):
        if not good:
            continue
        se = max(est.se, 1.0 / est.samples)
        var = (eps * eps * se / est.p) ** 2
        num += r / var
        den += 1.0 / var
    aggregate = num / den if den else None
    usable = [(e, r) for e, r, g in zip(eps_ladder, rates, ok) if g]
    trend = None
    if len(usable) >= 2:
        x = np.array([e * e for e, _ in usable])
        yv = np.array([r for _, r in usable])
        trend = float(np.polyfit(x, yv, 1)[0])
    extra = {"by_delta": by_delta} if extra_deltas else {}
    return SlopeFit(eps_ladder, ests, rates, ok, aggregate, den == 0, trend, extra)


def fernique_moment_exact(kappa, t, op):
    """``E exp(kappa |Gamma(t)|^2) = prod_i (1 - kappa q_i/l_i (1 - exp(-2 l_i t)))^(-1/2)``."""
    limit = float(np.min(op.rates / op.q))
    if kappa >= limit:
        raise DomainError(f"kappa = {kappa} >= min lambda_i/q_i = {limit}: moment diverges")
    if t < 0:
        raise DomainError("time must be nonnegative")
    factors = 1.0 - 2.0 * kappa * op.convolution_variance(t)
    return float(np.prod(factors) ** -0.5)


def fernique_moment_mc(kappa, t, op, samples, seed=0, bootstrap=200):
    """Plain Monte Carlo estimate with a bootstrap standard error."""
    draws = stochastic_convolution_sample(t, op, seed, size=samples)
    vals = np.exp(kappa * np.sum(draws * draws, axis=1))
    est = float(np.mean(vals))
    g = rngmod.stream(seed, 1)
    boots = np.empty(bootstrap)
    for b in range(bootstrap):
        boots[b] = np.mean(vals[g.integers(0, samples, samples)])
    return est, float(np.std(boots, ddof=1))


def empirical_invariant_measure(eps, model, tau, burn_in=None, window=100.0, thin=None,
                                seed=0, chains=1, threads=1):
    """Thinned states of long trajectories from 0 after a burn-in.

    Defaults: burn-in 10/c with c = lambda_1 - L_F, thinning every 10 steps.
    Returns an array (samples, n), chains concatenated in index order.
    """
    c = model.operator.lambda1 - model.lipschitz
    if c <= 0:
        raise DomainError("drift is not dissipative; no invariant measure to sample")
    burn_in = 10.0 / c if burn_in is None else burn_in
    thin = 10 * tau if thin is None else thin
    if burn_in < 0 or window <= 0:
        raise ConfigError("burn-in must be >= 0 and the averaging window > 0")
    stride = steps_for(thin, tau, "thinning interval")
    burn_steps = math.ceil(burn_in / thin - 1e-9) * stride
    window_steps = steps_for(window, thin, "averaging window") * stride
    T = (burn_steps + window_steps) * tau
    cfg = IntegratorConfig(tau=tau, eps=eps, seed=seed, stride=stride)
    skip = burn_steps // stride

    def keep(paths):
        return paths[:, skip + 1:].reshape(-1, paths.shape[2])

    zero = np.zeros(model.n)
    return simulate_ensemble(zero, T, model, cfg, chains, threads=threads, transform=keep, chunk=64)


@dataclass
class TailReport:
    K: list
    mu: list
    exceed: list
    samples: int
    rates: list
    quadratic_constant: float | None
    alpha_check: list

    def rows(self):
        for K, mu, k, r in zip(self.K, self.mu, self.exceed, self.rates):
            yield {"K": K, "mu": mu, "exceed": k, "samples": self.samples,
                   "bound": "< 1/samples" if k == 0 else "", "rate": r}

    def to_dict(self):
        return {"per_K": list(self.rows()), "quadratic_constant": self.quadratic_constant,
                "alpha_check": self.alpha_check}


def tail_check(samples, K_ladder, eps, alphas=()):
    """Empirical ``mu(|u| > K)`` and its exponential scaling.

    ``quadratic_constant`` is the largest c with ``-eps^2 log mu(|u|>K) >= c K^2``
    over resolved K > 0 (at least 10 exceedances).  For each alpha the
    smallest K of the ladder with ``mu <= exp(-alpha / eps^2)`` is reported,
    or None when no tested K qualifies or the level is below 1/samples.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    N = samples.shape[0]
    if N == 0:
        raise DomainError("no samples")
    norms = np.linalg.norm(samples, axis=1)
    Ks, mus, counts, rates = [], [], [], []
    for K in K_ladder:
        k = int(np.count_nonzero(norms > K))
        Ks.append(float(K))
        counts.append(k)
        mus.append(k / N)
        rates.append(_scaled_log(eps, k / N) if k else math.inf)
    ratios = [r / (K * K) for K, r, k in zip(Ks, rates, counts) if K > 0 and k >= MIN_HITS]
    quad = min(ratios) if ratios else None
    checks = []
    for a in alphas:
        level = math.exp(-a / (eps * eps))
        found = None
        if level >= 1.0 / N:
            found = next((K for K, mu in zip(Ks, mus) if mu <= level), None)
        checks.append({"alpha": a, "level": level, "K": found})
    return TailReport(Ks, mus, counts, N, rates, quad, checks)


def variance_with_se(samples, batches=50):
    """Per-mode sample variance with a batch-means SE.

    Samples are split into contiguous batches in index order so residual
    autocorrelation inflates the reported error instead of hiding in it.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    N = x.shape[0]
    batches = max(2, min(batches, N // 2))
    var = np.var(x, axis=0, ddof=1)
    size = N // batches
    parts = x[: size * batches].reshape(batches, size, -1)
    bvar = np.var(parts, axis=1, ddof=1)
    se = np.std(bvar, axis=0, ddof=1) / math.sqrt(batches)
    return var, se


def normal_two_sided_tail(x):
    return float(2.0 * stats.norm.sf(x))
