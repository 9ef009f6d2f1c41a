"""Divergence between pseudo-labelled and truly labelled class laws.

Conditioned on the current parameter direction having correlation
``alpha`` with the true mean, the law of a pseudo-labelled sample given
its pseudo-label differs from the law of a sample given its true label.
The KL divergence between the two drives every post-round bound term.

In suitable coordinates (u along the parameter direction, w along the
in-plane perpendicular) the d-dimensional KL collapses exactly to a
two-dimensional integral: with b = 2*sqrt(1-alpha^2)/sigma,

    p(u, w) = phi(u - 2*alpha/sigma) * phi(w - b) + phi(u) * phi(w)
    q(u, w) = phi(u) * phi(w)
    KL = integral over u <= alpha/sigma of p * log(p / q)

``g_sigma`` evaluates that by adaptive quadrature; ``g_sigma_mc``
samples the same two-dimensional mixture, and ``g_sigma_mc_fulldim``
re-derives the value from the raw d-dimensional generative process, so
the collapse itself is testable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quadrature import IntegrationResult, integrate_2d
from .specfn import std_normal_cdf, std_normal_quantile

# p below this is treated as exactly 0 in p*log(p/q): the limit value
_P_FLOOR = 1e-300


@dataclass(frozen=True)
class GsigmaQuery:
    """One divergence evaluation point, with the derived offset b."""

    alpha: float
    sigma: float
    tol: float = 1e-8
    b: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and abs(self.alpha) <= 1.0 + 1e-12):
            raise ValueError(f"alpha must lie in [-1, 1], got {self.alpha}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        a = min(1.0, max(-1.0, self.alpha))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "b", 2.0 * np.sqrt(1.0 - a * a) / self.sigma)


def _log_ratio(u, w, alpha, sigma, b):
    # log(p/q) = log1p(exp(s)) with s the log density ratio of the two
    # mixture components; evaluated in log space so nothing overflows.
    du = u - 2.0 * alpha / sigma
    dw = w - b
    s = 0.5 * (u * u + w * w - du * du - dw * dw)
    return np.logaddexp(0.0, s)


def g_sigma_result(alpha: float, sigma: float, tol: float = 1e-8,
                   max_evals: int = 1_000_000) -> IntegrationResult:
    """Quadrature evaluation of the divergence, with error estimate."""
    query = GsigmaQuery(alpha=alpha, sigma=sigma, tol=tol)
    a, b = query.alpha, query.b
    shift = 2.0 * a / sigma
    edge = a / sigma  # truncation edge u = alpha/sigma is the domain boundary

    inv_2pi = 1.0 / (2.0 * np.pi)

    def integrand(u, w):
        du = u - shift
        dw = w - b
        comp_shift = inv_2pi * np.exp(-0.5 * (du * du + dw * dw))
        comp_base = inv_2pi * np.exp(-0.5 * (u * u + w * w))
        p = comp_shift + comp_base
        out = p * _log_ratio(u, w, a, sigma, b)
        return np.where(p < _P_FLOOR, 0.0, out)

    return integrate_2d(integrand,
                        (min(0.0, shift) - 10.0, edge),
                        (-10.0, b + 10.0),
                        tol=tol, max_evals=max_evals)


def g_sigma(alpha: float, sigma: float, tol: float = 1e-8) -> float:
    """KL divergence between pseudo-labelled and truly labelled laws.

    Nonnegative for all alpha in [-1, 1]; decreasing in alpha on (0, 1]
    (better-aligned parameters mislabel less) and finite even at
    alpha = -1, where every label is flipped but the conditional laws
    still overlap.
    """
    return g_sigma_result(alpha, sigma, tol=tol).value


def _truncated_normal_below(rng, cut, size):
    # inverse-cdf sampler on (-inf, cut]; uniforms drawn in (0, 1] so the
    # quantile argument never hits 0
    u = 1.0 - rng.random(size)
    return std_normal_quantile(u * std_normal_cdf(cut))


def g_sigma_mc(alpha: float, sigma: float, samples: int, seed: int):
    """Monte-Carlo estimate of ``g_sigma`` from the collapsed mixture.

    Samples the two-component truncated mixture directly and averages
    the log density ratio.  Returns ``(estimate, stderr)``.  Bit-exact
    reproducible for a given (alpha, sigma, samples, seed).
    """
    if samples < 10_000:
        raise ValueError(f"samples must be >= 10000 for a usable stderr, got {samples}")
    query = GsigmaQuery(alpha=alpha, sigma=sigma)
    a, b = query.alpha, query.b
    shift = 2.0 * a / sigma

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    # weight of the flipped component is the mislabelling probability
    p_flip = float(std_normal_cdf(-a / sigma))
    flipped = rng.random(samples) < p_flip
    u01 = 1.0 - rng.random(samples)
    cut_mass = np.where(flipped, p_flip, 1.0 - p_flip)
    g = std_normal_quantile(u01 * cut_mass)
    u = np.where(flipped, shift + g, g)
    w = rng.standard_normal(samples) + np.where(flipped, b, 0.0)

    vals = _log_ratio(u, w, a, sigma, b)
    est = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(samples))
    return est, stderr


def g_sigma_mc_fulldim(alpha: float, sigma: float, d: int, samples: int, seed: int):
    """Divergence estimated from the raw d-dimensional process.

    Draws labelled mixture samples, pseudo-labels them with a parameter
    direction at correlation ``alpha`` to the mean, keeps the
    pseudo-label -1 class and averages the exact log density ratio of
    (law given pseudo-label) to (law given true label).  Never touches
    the two-dimensional collapse, so it is an independent check of it.
    Returns ``(estimate, stderr)``.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if samples < 10_000:
        raise ValueError(f"samples must be >= 10000 for a usable stderr, got {samples}")
    a = min(1.0, max(-1.0, float(alpha)))
    beta = np.sqrt(1.0 - a * a)

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    theta_dir = np.zeros(d)
    theta_dir[0] = a
    theta_dir[1] = beta

    vals = np.empty(samples)
    got = 0
    while got < samples:
        block = min(1_000_000, max(4096, int(2.2 * (samples - got))))
        y = np.where(rng.random(block) < 0.5, -1.0, 1.0)
        x = sigma * rng.standard_normal((block, d))
        x[:, 0] += y
        keep = x @ theta_dir < 0.0
        picked = x[keep, 0]
        take = min(picked.size, samples - got)
        # log ratio depends on x only through the mean coordinate
        vals[got:got + take] = np.logaddexp(0.0, 2.0 * picked[:take] / sigma ** 2)
        got += take

    est = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(samples))
    return est, stderr
