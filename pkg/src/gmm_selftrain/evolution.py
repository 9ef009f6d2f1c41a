"""Correlation dynamics of self-training on the two-component mixture.

In the large-batch limit the whole pseudo-labelling recursion collapses
to one scalar: the cosine similarity between the running parameter
vector and the true mean direction.  ``f_sigma`` maps that correlation
through one refit on freshly pseudo-labelled data; ``f_tilde`` is the
variant for the data-reuse update, where the labelled initializer keeps
a weight ``w`` in every round and therefore re-enters through its own
decomposition ``(xi0, mu_perp_norm)``.  Both accept scalars or arrays.

The initial ERM estimate decomposes as

    theta_0 = (1 + sigma * xi0 / sqrt(n)) * mu + (sigma / sqrt(n)) * mu_perp

with ``xi0`` standard normal and ``mu_perp`` a centred Gaussian in the
hyperplane orthogonal to ``mu``; conditioning on ``(xi0, ||mu_perp||)``
pins the initial correlation, which is what the bound expectations
integrate over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .specfn import q_function

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class MixtureParams:
    """Problem size for both the bounds and the simulator.

    sigma is the within-class noise level, d the ambient dimension, n
    the labelled-sample count, m the pseudo-labelled batch size per
    round, tau the number of self-training rounds, and w the weight of
    the labelled empirical risk.  ``w=None`` means "mode default": 0
    for fresh-batch training past round zero, n/(n+m) for data reuse.
    """

    sigma: float
    d: int
    n: int
    m: int
    tau: int = 10
    w: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m}")
        if int(self.tau) != self.tau or self.tau < 0:
            raise ValueError(f"tau must be an integer >= 0, got {self.tau}")
        if self.w is not None and not (0.0 <= self.w <= 1.0):
            raise ValueError(f"w must lie in [0, 1], got {self.w}")

    def reuse_weight(self) -> float:
        """Labelled weight actually used in reuse mode."""
        return self.w if self.w is not None else self.n / (self.n + self.m)


def _check_unit_interval(x, what: str):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12) or np.any(~np.isfinite(x)):
        raise ValueError(f"{what} must lie in [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def alpha_of(xi0, mu_perp_norm, sigma: float, n: int):
    """Correlation of the initial ERM estimate with the mean direction.

    alpha = (1 + sigma*xi0/sqrt(n))
            / sqrt((1 + sigma*xi0/sqrt(n))^2 + (sigma^2/n) * ||mu_perp||^2)
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    xi0 = np.asarray(xi0, dtype=float)
    s = np.asarray(mu_perp_norm, dtype=float)
    if np.any(s < 0):
        raise ValueError("mu_perp_norm must be nonnegative")
    scale = sigma / np.sqrt(n)
    num = 1.0 + scale * xi0
    perp = scale * s
    if np.any((num == 0.0) & (perp == 0.0)):
        raise ValueError("degenerate initializer: theta_0 = 0 has no direction")
    return (num / np.hypot(num, perp))[()]


# Mean and dispersion of one refit, as functions of the current
# correlation x.  The refit parameter is mean_term * mu plus a
# perpendicular fluctuation whose scale is perp_term; f_sigma is the
# resulting correlation.  f_tilde mixes the initializer back in with
# weight w, and both routes share these helpers so that w = 0
# reproduces f_sigma bit for bit.

def _mean_term(x, sigma):
    return (1.0 - 2.0 * q_function(x / sigma)
            + (2.0 * sigma / _SQRT_2PI) * x * np.exp(-x * x / (2.0 * sigma * sigma)))


def _perp_term(x, sigma):
    # equals sqrt of the perpendicular variance term: its square is
    # (2 sigma^2 / pi) (1 - x^2) exp(-x^2 / sigma^2)
    return ((2.0 * sigma / _SQRT_2PI) * np.sqrt(1.0 - x * x)
            * np.exp(-x * x / (2.0 * sigma * sigma)))


def f_sigma(x, sigma: float):
    """One round of the large-batch correlation recursion.

    Signed form: odd in x, with fixed points at -1, 0, +1.  Expansive
    on (0, 1): pseudo-labelling improves any positively correlated
    estimate in the infinite-batch limit.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = _check_unit_interval(x, "correlation x")
    num = _mean_term(x, sigma)
    return (num / np.hypot(num, _perp_term(x, sigma)))[()]


def f_sigma_iter(x, sigma: float, t: int):
    """t-fold composition of f_sigma; t = 0 is the identity."""
    if int(t) != t or t < 0:
        raise ValueError(f"t must be an integer >= 0, got {t}")
    x = _check_unit_interval(x, "correlation x")[()]
    for _ in range(int(t)):
        x = f_sigma(x, sigma)
    return x


def f_tilde(x, sigma: float, xi0, mu_perp_norm, n: int, w: float):
    """One reuse-mode round: refit on pseudo-labels plus the retained
    labelled initializer with weight w.

    The initializer enters through its decomposition: w weights the
    coefficients (1 + sigma*xi0/sqrt(n)) along mu and
    sigma*||mu_perp||/sqrt(n) across it, while (1 - w) weights the
    fresh-refit terms of f_sigma.  w = 0 reduces to f_sigma exactly.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    x = _check_unit_interval(x, "correlation x")
    xi0 = np.asarray(xi0, dtype=float)
    s = np.asarray(mu_perp_norm, dtype=float)
    if np.any(s < 0):
        raise ValueError("mu_perp_norm must be nonnegative")
    scale = sigma / np.sqrt(n)
    num = w * (1.0 + scale * xi0) + (1.0 - w) * _mean_term(x, sigma)
    perp = w * (scale * s) + (1.0 - w) * _perp_term(x, sigma)
    if np.any((num == 0.0) & (perp == 0.0)):
        raise ValueError("degenerate refit: zero parameter has no direction")
    return (num / np.hypot(num, perp))[()]


def f_tilde_iter(x, sigma: float, xi0, mu_perp_norm, n: int, w: float, t: int):
    """t-fold composition of f_tilde at fixed (xi0, mu_perp_norm, w)."""
    if int(t) != t or t < 0:
        raise ValueError(f"t must be an integer >= 0, got {t}")
    x = _check_unit_interval(x, "correlation x")[()]
    for _ in range(int(t)):
        x = f_tilde(x, sigma, xi0, mu_perp_norm, n, w)
    return x


@dataclass(frozen=True)
class InitDecomposition:
    """Sampled decomposition of the initial ERM estimate.

    Records the two scalars the bounds condition on, plus the derived
    correlation alpha and its complement beta = sqrt(1 - alpha^2).
    """

    xi0: float
    mu_perp_norm: float
    alpha: float
    beta: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", float(np.sqrt(max(0.0, 1.0 - self.alpha ** 2))))
        if abs(self.alpha) > 1.0 or self.beta < 0.0:
            raise ValueError("alpha must lie in [-1, 1] with beta >= 0")
        if abs(self.alpha ** 2 + self.beta ** 2 - 1.0) > 1e-12:
            raise ValueError("alpha^2 + beta^2 must equal 1")

    @classmethod
    def from_draw(cls, xi0: float, mu_perp_norm: float, sigma: float, n: int):
        a = float(alpha_of(xi0, mu_perp_norm, sigma, n))
        return cls(xi0=float(xi0), mu_perp_norm=float(mu_perp_norm), alpha=a)
