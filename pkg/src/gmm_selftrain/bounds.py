"""Information-theoretic generalization-error bounds for self-training.

The chain being bounded: fit an initial estimate on n labelled mixture
samples, then repeatedly pseudo-label a fresh batch of m unlabelled
samples and refit.  Conditioning on the initial estimate's
decomposition turns the round-t mutual information term into the
pseudo-label divergence ``g_sigma`` evaluated at the evolved
correlation, so every bound here is an expectation over the initial
decomposition of a square-rooted divergence, scaled by the
sub-Gaussian diameter of the loss.

Two bound families are exposed: ``gen_t_bound`` for fresh-batch
training (the labelled set is only used at round zero) and
``gen_t_bound_reuse`` for the update that keeps the labelled empirical
risk with weight w every round.  ``gen0_bound`` covers the supervised
round, ``gen1_bound_taylor`` is the closed-form large-n approximation
of the first self-training round, and ``gen01_crossover`` locates the
labelled-sample count where the first-round bound overtakes the
supervised one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .divergence import g_sigma
from .evolution import MixtureParams, alpha_of, f_tilde_iter
from .quadrature import integrate_1d, integrate_2d
from .specfn import std_normal_cdf, std_normal_pdf, std_normal_quantile

_SQRT_2PI = np.sqrt(2.0 * np.pi)
# integration half-width for the (xi0, ||mu_perp||) expectation; the
# discarded Gaussian mass is ~1e-23, far below every tolerance used
_INIT_TAIL = 10.0


def delta_rd(r: float, d: int, sigma: float) -> float:
    """P(max coordinate deviation of the refit mean exceeds r).

    Equals 1 - (1 - 2*Phi(-r/sigma))^d, evaluated without cancellation.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if d < 1:
        raise ValueError("d must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    tail2 = 2.0 * std_normal_cdf(-r / sigma)
    if tail2 >= 1.0:
        return 1.0
    return float(-np.expm1(d * np.log1p(-tail2)))


def solve_r(delta: float, d: int, sigma: float) -> float:
    """Radius r with delta_rd(r, d, sigma) = delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if d < 1:
        raise ValueError("d must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    # per-coordinate two-sided tail mass implied by the union target
    per_coord = -np.expm1(np.log1p(-delta) / d)
    return float(-sigma * std_normal_quantile(0.5 * per_coord))


def c_tilde1(sigma: float) -> float:
    """Upper bound on the norm of the first refit mean, any correlation."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    along = 2.0 * std_normal_cdf(1.0 / sigma) + 2.0 * sigma / _SQRT_2PI
    across = sigma * np.sqrt(2.0 / np.pi)
    return float(np.hypot(along, across))


def sub_gaussian_constants(sigma: float, d: int, r: float, c: float):
    """Loss range [c1, c2] on the clipped parameter set.

    c1 is the additive constant of the negative log-likelihood loss;
    c2 adds the largest quadratic term reachable with the parameter
    within c + r of the mean in every coordinate.  (c2 - c1)/2 is the
    sub-Gaussian radius every bound scales with.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    if r <= 0 or c <= 0:
        raise ValueError("r and c must be positive")
    c1 = np.log(2.0) + 0.5 * d * np.log(2.0 * np.pi) + d * np.log(sigma)
    c2 = c1 + d * (c + r) ** 2 / (2.0 * sigma * sigma)
    return float(c1), float(c2)


def mi_theta0_sample(n: int, d: int) -> float:
    """Mutual information between the initial estimate and one sample."""
    if n < 2:
        raise ValueError("n must be >= 2: one labelled sample admits no leave-one-out")
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(0.5 * d * np.log1p(1.0 / (n - 1)))


@dataclass(frozen=True)
class BoundConfig:
    """Everything a bound evaluation needs besides the round index.

    r, c, c1, c2 default to None, meaning: r solves
    delta_rd(r, d, sigma) = delta/3, c = max(1.01 * c_tilde1(sigma),
    solve_r(delta/3, d, sigma)/sqrt(n)), and (c1, c2) follow from
    ``sub_gaussian_constants``.  Override c1 and c2 together to pin the
    loss range directly.

    expectation picks how the initial-decomposition average is done:
    "quad2d" (nested adaptive quadrature, d = 2 only) or "mc"
    (counter-seeded Monte Carlo, any d >= 2).
    """

    params: MixtureParams
    delta: float = 0.05
    epsilon: float = 0.0
    r: float | None = None
    c: float | None = None
    c1: float | None = None
    c2: float | None = None
    tol: float = 1e-8
    expectation: str = "quad2d"
    mc_samples: int = 200_000
    mc_seed: int = 0
    use_gsigma_cache: bool = True

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.expectation not in ("quad2d", "mc"):
            raise ValueError(f"unknown expectation method {self.expectation!r}")
        if self.mc_samples < 1000:
            raise ValueError("mc_samples must be >= 1000")
        if (self.c1 is None) != (self.c2 is None):
            raise ValueError("override c1 and c2 together or not at all")
        if self.c1 is not None and not self.c2 > self.c1:
            raise ValueError("need c2 > c1")

    def resolved_r(self) -> float:
        if self.r is not None:
            return self.r
        return solve_r(self.delta / 3.0, self.params.d, self.params.sigma)

    def resolved_c(self) -> float:
        if self.c is not None:
            return self.c
        p = self.params
        # large enough for the refit means, and for the initial estimate
        # to stay inside with probability 1 - delta/3
        return max(1.01 * c_tilde1(p.sigma),
                   solve_r(self.delta / 3.0, p.d, p.sigma) / np.sqrt(p.n))

    def constants(self):
        if self.c1 is not None:
            return self.c1, self.c2
        p = self.params
        return sub_gaussian_constants(p.sigma, p.d, self.resolved_r(), self.resolved_c())


@dataclass(frozen=True)
class ExpectationResult:
    """Average over the initial decomposition, with its own diagnostics."""

    value: float
    stderr: float | None
    abs_error_estimate: float | None
    evaluations: int


def _expect_full(g3, config: BoundConfig) -> ExpectationResult:
    """E[g3(alpha, xi0, ||mu_perp||)] over the initial decomposition."""
    p = config.params
    if config.expectation == "quad2d":
        if p.d != 2:
            raise ValueError("quad2d expectation is exact only for d = 2 "
                             "(||mu_perp|| half-normal); use expectation='mc'")

        def integrand(xi, s):
            a = alpha_of(xi, s, p.sigma, p.n)
            dens = std_normal_pdf(xi) * (2.0 * std_normal_pdf(s))
            return dens * g3(a, xi, s)

        res = integrate_2d(integrand, (-_INIT_TAIL, _INIT_TAIL), (0.0, _INIT_TAIL),
                           tol=config.tol)
        return ExpectationResult(res.value, None, res.abs_error_estimate, res.evaluations)

    rng = np.random.Generator(np.random.Philox(key=int(config.mc_seed)))
    xi = rng.standard_normal(config.mc_samples)
    s = np.sqrt(rng.chisquare(p.d - 1, config.mc_samples))
    a = alpha_of(xi, s, p.sigma, p.n)
    vals = np.asarray(g3(a, xi, s), dtype=float)
    value = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(config.mc_samples))
    return ExpectationResult(value, stderr, None, config.mc_samples)


def expect_over_init(g, config: BoundConfig) -> ExpectationResult:
    """Average a vectorized function of the initial correlation.

    ``g`` receives an ndarray of correlations and must return values of
    the same shape.
    """
    return _expect_full(lambda a, xi, s: g(a), config)


# ---------------------------------------------------------------------------
# divergence evaluation for the bound integrands

_GSIGMA_CACHE: dict = {}
_CHEB_DEGREES = (32, 64, 128, 256)
_CHEB_TAIL_TOL = 1e-11


def _gsigma_direct(sigma: float, tol: float):
    def evaluate(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([g_sigma(v, sigma, tol) for v in x.ravel()]).reshape(x.shape)
    return evaluate


def _gsigma_evaluator(sigma: float, tol: float, use_cache: bool):
    """Vectorized alpha -> g_sigma(alpha, sigma, tol).

    The direct quadrature is too slow to sit inside a nested adaptive
    expectation, so the cached route interpolates it with an
    adaptive-degree Chebyshev series over [-1, 1].  The divergence is
    smooth there (even in the perpendicular offset, so no corner at
    alpha = +-1) and the series converges geometrically; the tail
    cut keeps interpolation error well under the quadrature tolerance.
    """
    if not use_cache:
        return _gsigma_direct(sigma, tol)
    key = (float(sigma), float(tol))
    fn = _GSIGMA_CACHE.get(key)
    if fn is None:
        direct = _gsigma_direct(sigma, tol)
        coef = None
        for deg in _CHEB_DEGREES:
            coef = np.polynomial.chebyshev.chebinterpolate(direct, deg)
            scale = max(1.0, float(np.max(np.abs(coef))))
            if float(np.max(np.abs(coef[-4:]))) <= _CHEB_TAIL_TOL * scale:
                break

        def fn(x, _coef=coef):
            x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
            return np.polynomial.chebyshev.chebval(x, _coef)

        _GSIGMA_CACHE[key] = fn
    return fn


def _resolve_gsigma(config: BoundConfig, gsigma_fn):
    if gsigma_fn is None:
        return _gsigma_evaluator(config.params.sigma, config.tol, config.use_gsigma_cache)

    def evaluate(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        flat = np.array([gsigma_fn(v, config.params.sigma, config.tol) for v in x.ravel()])
        return flat.reshape(x.shape)
    return evaluate


# ---------------------------------------------------------------------------
# the bounds

def gen0_bound(config: BoundConfig) -> float:
    """Supervised-round bound: sub-Gaussian diameter times the square
    root of half the per-sample mutual information."""
    c1, c2 = config.constants()
    mi = mi_theta0_sample(config.params.n, config.params.d)
    return float(np.sqrt((c2 - c1) ** 2 * mi / 2.0))


def _gen_bound_core(t: int, config: BoundConfig, w: float, gsigma_fn) -> float:
    if int(t) != t or t < 1:
        raise ValueError(f"round index t must be an integer >= 1, got {t}")
    p = config.params
    c1, c2 = config.constants()
    ghat = _resolve_gsigma(config, gsigma_fn)
    eps = config.epsilon

    def g3(a, xi, s):
        evolved = f_tilde_iter(a, p.sigma, xi, s, p.n, w, int(t) - 1)
        return np.sqrt(np.maximum(ghat(evolved), 0.0) + eps)

    exp_res = _expect_full(g3, config)
    fresh_term = np.sqrt((c2 - c1) ** 2 / 2.0) * exp_res.value
    if w == 0.0:
        return float(fresh_term)
    return float(w * gen0_bound(config) + (1.0 - w) * fresh_term)


def gen_t_bound(t: int, config: BoundConfig, gsigma_fn=None) -> float:
    """Round-t bound for fresh-batch self-training (t >= 1).

    Averages sqrt(g_sigma(evolved correlation) + epsilon) over the
    initial decomposition, where the correlation is evolved t - 1
    rounds, and scales by the sub-Gaussian diameter.  ``gsigma_fn``
    overrides the divergence evaluation (signature
    ``(alpha, sigma, tol) -> float``), mainly for tests.
    """
    return _gen_bound_core(t, config, 0.0, gsigma_fn)


def gen_t_bound_reuse(t: int, config: BoundConfig, gsigma_fn=None) -> float:
    """Round-t bound when every refit keeps the labelled risk at weight w.

    w comes from ``config.params`` (default n/(n+m)).  The labelled
    part contributes w times the supervised bound; the pseudo-labelled
    part evolves the correlation with the reuse map, which re-reads the
    same (xi0, ||mu_perp||) the expectation integrates over.  At w = 0
    this is ``gen_t_bound`` exactly, shared code path and all.
    """
    return _gen_bound_core(t, config, config.params.reuse_weight(), gsigma_fn)


def gen1_bound_taylor(config: BoundConfig, gsigma_fn=None) -> float:
    """Closed-form large-n approximation of the first-round bound (d = 2).

    Expands the initial correlation around 1 (alpha = 1 - y^2 with y
    asymptotically N(0, sigma^2/(2n))) and integrates the divergence
    against that limit density.
    """
    p = config.params
    if p.d != 2:
        raise ValueError("the first-round Taylor bound is derived for d = 2 only")
    c1, c2 = config.constants()
    ghat = _resolve_gsigma(config, gsigma_fn)
    scale = np.sqrt(p.n) / (np.sqrt(np.pi) * p.sigma)

    def integrand(y):
        g = np.maximum(ghat(1.0 - y * y), 0.0)
        return scale * np.exp(-p.n * y * y / (p.sigma * p.sigma)) * np.sqrt(g)

    res = integrate_1d(integrand, -np.sqrt(2.0), np.sqrt(2.0), tol=config.tol)
    return float(np.sqrt((c2 - c1) ** 2 / 2.0) * res.value)


@dataclass(frozen=True)
class CrossoverResult:
    """Supervised vs first-round bounds across labelled-sample counts."""

    n_values: np.ndarray
    gen0: np.ndarray
    gen1: np.ndarray
    crossover_n: int | None

    @property
    def ratio(self) -> np.ndarray:
        return self.gen1 / self.gen0


def gen01_crossover(config: BoundConfig, n_values) -> CrossoverResult:
    """Find where the first-round bound overtakes the supervised one.

    Evaluates both bounds on the given n grid (constants re-resolved
    per n unless pinned in the config) and reports the smallest n with
    gen1 > gen0.  The comparison divides out the shared sub-Gaussian
    diameter, so the crossover location is free of the loss constants.
    """
    n_values = np.asarray(sorted(int(n) for n in n_values), dtype=int)
    if n_values.size == 0 or n_values[0] < 2:
        raise ValueError("need n >= 2 everywhere on the grid")
    g0 = np.empty(n_values.size)
    g1 = np.empty(n_values.size)
    for i, n in enumerate(n_values):
        cfg = replace(config, params=replace(config.params, n=int(n)))
        g0[i] = gen0_bound(cfg)
        g1[i] = gen_t_bound(1, cfg)
    above = np.nonzero(g1 > g0)[0]
    crossover = int(n_values[above[0]]) if above.size else None
    return CrossoverResult(n_values=n_values, gen0=g0, gen1=g1, crossover_n=crossover)


@dataclass(frozen=True)
class BoundCurve:
    """A bound evaluated on rounds 0..t_max."""

    t_values: np.ndarray
    bounds: np.ndarray
    method: str
    config: BoundConfig


BOUND_METHODS = ("fresh", "reuse", "taylor", "init")


def bound_curve(config: BoundConfig, t_max: int, method: str = "fresh",
                gsigma_fn=None) -> BoundCurve:
    """Evaluate a bound family on t = 0..t_max.

    method "fresh" uses ``gen_t_bound`` and "reuse" ``gen_t_bound_reuse``,
    both reporting ``gen0_bound`` at t = 0.  "init" is the single-point
    supervised baseline (t = 0 only) and "taylor" the closed-form
    first-round approximation (t = 1 only); both ignore t_max.
    """
    if method not in BOUND_METHODS:
        raise ValueError(f"unknown bound method {method!r}")
    if int(t_max) != t_max or t_max < 0:
        raise ValueError("t_max must be an integer >= 0")
    if method == "init":
        ts = np.array([0])
        vals = np.array([gen0_bound(config)])
    elif method == "taylor":
        ts = np.array([1])
        vals = np.array([gen1_bound_taylor(config, gsigma_fn=gsigma_fn)])
    else:
        ts = np.arange(int(t_max) + 1)
        vals = np.empty(ts.size)
        for i, t in enumerate(ts):
            if t == 0:
                vals[i] = gen0_bound(config)
            elif method == "fresh":
                vals[i] = gen_t_bound(int(t), config, gsigma_fn=gsigma_fn)
            else:
                vals[i] = gen_t_bound_reuse(int(t), config, gsigma_fn=gsigma_fn)
    return BoundCurve(t_values=ts, bounds=vals, method=method, config=config)
