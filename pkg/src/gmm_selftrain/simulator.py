"""Monte-Carlo harness for iterative pseudo-label self-training.

Runs the exact procedure the bounds describe: fit the class-mean
estimate on n labelled mixture samples, then for tau rounds pseudo-label
a fresh batch of m unlabelled samples with the current estimate and
refit, either from the batch alone ("fresh") or keeping the labelled
data at weight n/(n+m) ("reuse").  Each trial records the generalization
gap (population risk minus the weighted training risk the round
optimized), the correlation with the true mean, the pseudo-label error
rate and both risks.

Reproducibility contract: trial k of a run with master seed S draws
from a counter-based generator keyed by (S, k) in a fixed documented
order, so results are independent of execution order and of the
GMM_SSL_THREADS worker count; aggregation always reduces a
trial-indexed buffer sequentially.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .evolution import MixtureParams
from .specfn import q_function

_MU_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TrialConfig:
    """One simulation campaign: problem sizes plus execution knobs.

    mu defaults to the first basis vector; it must be unit length.
    population_risk "analytic" uses the closed form, "mc" re-estimates
    it from pop_mc_size held-out samples per trial and round.
    """

    params: MixtureParams
    mode: str = "fresh"
    trials: int = 100
    seed: int = 0
    mu: np.ndarray | None = None
    population_risk: str = "analytic"
    pop_mc_size: int = 100_000

    def __post_init__(self):
        if self.mode not in ("fresh", "reuse"):
            raise ValueError(f"mode must be 'fresh' or 'reuse', got {self.mode!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be an integer >= 1")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.population_risk not in ("analytic", "mc"):
            raise ValueError("population_risk must be 'analytic' or 'mc'")
        if self.pop_mc_size < 100:
            raise ValueError("pop_mc_size must be >= 100")
        if self.mu is not None:
            mu = np.asarray(self.mu, dtype=float)
            if mu.shape != (self.params.d,):
                raise ValueError(f"mu must have shape ({self.params.d},)")
            if abs(np.linalg.norm(mu) - 1.0) > _MU_TOL:
                raise ValueError("mu must be a unit vector")
            object.__setattr__(self, "mu", mu)

    def mean_vector(self) -> np.ndarray:
        if self.mu is not None:
            return self.mu
        mu = np.zeros(self.params.d)
        mu[0] = 1.0
        return mu


def _loss_offset(d: int, sigma: float) -> float:
    return float(np.log(2.0) + 0.5 * d * np.log(2.0 * np.pi) + d * np.log(sigma))


def _rademacher(rng, size: int) -> np.ndarray:
    return np.where(rng.random(size) < 0.5, -1.0, 1.0)


def sample_labelled(n: int, d: int, mu: np.ndarray, sigma: float, rng) -> tuple:
    """Draw n labelled mixture samples; returns (X, y) with X (n, d).

    Draw order is part of the reproducibility contract: labels first,
    then the Gaussian block.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    y = _rademacher(rng, n)
    x = sigma * rng.standard_normal((n, d))
    x += y[:, None] * np.asarray(mu, dtype=float)
    return x, y


def erm_initial(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Closed-form ERM for the class mean: average of y_i * x_i."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty (n, d) sample matrix")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must be a vector matching the sample count")
    return (y[:, None] * x).mean(axis=0)


def pseudo_label(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Label by the sign of the projection on theta; ties go to +1."""
    theta = np.asarray(theta, dtype=float)
    if not np.any(theta != 0.0):
        raise ValueError("cannot pseudo-label with the zero parameter")
    scores = np.asarray(x, dtype=float) @ theta
    return np.where(scores >= 0.0, 1.0, -1.0)


def erm_refine(x: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """Refit from the pseudo-labelled batch alone."""
    return erm_initial(x, y_hat)


def erm_refine_reuse(theta_prev: np.ndarray, x: np.ndarray, y_hat: np.ndarray,
                     n: int) -> np.ndarray:
    """Refit keeping the previous estimate at labelled weight.

    theta_t = (n * theta_prev + sum of y_hat * x) / (n + m), the joint
    minimizer when the labelled data only enters through theta_prev.
    """
    x = np.asarray(x, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty (m, d) batch")
    if n < 0:
        raise ValueError("n must be >= 0")
    m = x.shape[0]
    return (n * np.asarray(theta_prev, dtype=float) + (y_hat[:, None] * x).sum(axis=0)) / (n + m)


def loss(theta: np.ndarray, x: np.ndarray, y, sigma: float):
    """Negative log-likelihood of (x, y) under the class-mean model.

    Accepts a single sample (x of shape (d,), scalar y) or a batch
    (x of shape (k, d), y of shape (k,)), returning matching shape.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = theta.shape[-1]
    if x.shape[-1] != d:
        raise ValueError("x and theta disagree on dimension")
    resid = x - y[..., None] * theta
    sq = np.sum(resid * resid, axis=-1)
    return (_loss_offset(d, sigma) + sq / (2.0 * sigma * sigma))[()]


def population_risk(theta: np.ndarray, mu: np.ndarray, sigma: float) -> float:
    """Exact expected loss: offset + (||theta - mu||^2 + sigma^2 d) / (2 sigma^2)."""
    theta = np.asarray(theta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d = theta.shape[-1]
    gap = theta - mu
    return float(_loss_offset(d, sigma)
                 + (gap @ gap + sigma * sigma * d) / (2.0 * sigma * sigma))


def population_risk_mc(theta: np.ndarray, mu: np.ndarray, sigma: float,
                       test_size: int, rng_or_seed) -> tuple:
    """Held-out estimate of the population risk; returns (estimate, stderr)."""
    if test_size < 2:
        raise ValueError("test_size must be >= 2")
    if isinstance(rng_or_seed, np.random.Generator):
        rng = rng_or_seed
    else:
        rng = np.random.Generator(np.random.Philox(key=int(rng_or_seed)))
    x, y = sample_labelled(test_size, len(np.asarray(theta)), mu, sigma, rng)
    vals = loss(theta, x, y, sigma)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(test_size))


def empirical_risk(theta: np.ndarray, labelled, pseudo, w: float, sigma: float) -> float:
    """Weighted training risk: w on the labelled set, 1 - w on the batch.

    Either set may be None; the weight collapses to the remaining one
    (and both None is an error).
    """
    if labelled is None and pseudo is None:
        raise ValueError("empirical risk needs at least one sample set")
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    if labelled is None:
        w = 0.0
    if pseudo is None:
        w = 1.0
    risk = 0.0
    if w > 0.0:
        x, y = labelled
        risk += w * float(np.mean(loss(theta, x, y, sigma)))
    if w < 1.0:
        x, y = pseudo
        risk += (1.0 - w) * float(np.mean(loss(theta, x, y, sigma)))
    return risk


def bayes_error(sigma: float) -> float:
    """Classification error of the optimal rule, Q(1/sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(q_function(1.0 / sigma))


def _correlation(theta: np.ndarray, mu: np.ndarray) -> float:
    norm = np.linalg.norm(theta)
    if norm == 0.0:
        raise ValueError("zero parameter has no correlation with the mean")
    return float((theta @ mu) / norm)


def _trial_rng(seed: int, trial_index: int):
    # 128-bit Philox key: master seed in the high word, trial in the low
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(trial_index)))


def _run_single_trial(config: TrialConfig, trial_index: int):
    p = config.params
    mu = config.mean_vector()
    rng = _trial_rng(config.seed, trial_index)
    reuse = config.mode == "reuse"
    w_train = p.reuse_weight() if reuse else 0.0

    out = np.empty((5, p.tau + 1))  # rows: gen, rho, pseudo_err, train, pop
    x_l, y_l = sample_labelled(p.n, p.d, mu, p.sigma, rng)
    theta = erm_initial(x_l, y_l)

    def risks(theta, labelled, batch, w):
        train = empirical_risk(theta, labelled, batch, w, p.sigma)
        if config.population_risk == "analytic":
            pop = population_risk(theta, mu, p.sigma)
        else:
            pop, _ = population_risk_mc(theta, mu, p.sigma, config.pop_mc_size, rng)
        return train, pop

    train, pop = risks(theta, (x_l, y_l), None, 1.0)
    out[:, 0] = (pop - train, _correlation(theta, mu), np.nan, train, pop)

    for t in range(1, p.tau + 1):
        y_true = _rademacher(rng, p.m)
        x_b = p.sigma * rng.standard_normal((p.m, p.d))
        x_b += y_true[:, None] * mu
        y_hat = pseudo_label(theta, x_b)
        perr = float(np.mean(y_hat != y_true))
        if reuse:
            theta = erm_refine_reuse(theta, x_b, y_hat, p.n)
            train, pop = risks(theta, (x_l, y_l), (x_b, y_hat), w_train)
        else:
            theta = erm_refine(x_b, y_hat)
            train, pop = risks(theta, None, (x_b, y_hat), 0.0)
        out[:, t] = (pop - train, _correlation(theta, mu), perr, train, pop)

    return out


@dataclass(frozen=True, eq=False)
class TrialResults:
    """Per-trial traces plus cross-trial aggregates, one column per round."""

    config: TrialConfig
    gen: np.ndarray         # (trials, tau + 1)
    rho: np.ndarray
    pseudo_err: np.ndarray  # NaN at t = 0 (no pseudo-labelling yet)
    train_risk: np.ndarray
    pop_risk: np.ndarray

    @property
    def t_values(self) -> np.ndarray:
        return np.arange(self.config.params.tau + 1)

    @staticmethod
    def _mean(a):
        return a.mean(axis=0)

    @staticmethod
    def _stderr(a):
        if a.shape[0] < 2:
            return np.full(a.shape[1], np.nan)
        return a.std(axis=0, ddof=1) / np.sqrt(a.shape[0])

    @property
    def gen_mean(self):
        return self._mean(self.gen)

    @property
    def gen_stderr(self):
        return self._stderr(self.gen)

    @property
    def rho_mean(self):
        return self._mean(self.rho)

    @property
    def rho_stderr(self):
        return self._stderr(self.rho)

    @property
    def pseudo_err_mean(self):
        return self._mean(self.pseudo_err)

    @property
    def pseudo_err_stderr(self):
        return self._stderr(self.pseudo_err)

    @property
    def train_risk_mean(self):
        return self._mean(self.train_risk)

    @property
    def pop_risk_mean(self):
        return self._mean(self.pop_risk)

    def to_rows(self) -> list:
        """One dict per round, matching the simulate CSV schema.

        Undefined aggregates (pseudo-label error at t=0, standard errors
        of a single trial) become None so they serialize as empty CSV
        cells / JSON null instead of NaN.
        """
        def cell(v):
            v = float(v)
            return None if np.isnan(v) else v

        rows = []
        for t in self.t_values:
            rows.append({
                "t": int(t),
                "gen_mean": cell(self.gen_mean[t]),
                "gen_stderr": cell(self.gen_stderr[t]),
                "rho_mean": cell(self.rho_mean[t]),
                "rho_stderr": cell(self.rho_stderr[t]),
                "pseudo_err_mean": cell(self.pseudo_err_mean[t]),
                "pseudo_err_stderr": cell(self.pseudo_err_stderr[t]),
                "train_risk_mean": cell(self.train_risk_mean[t]),
                "pop_risk_mean": cell(self.pop_risk_mean[t]),
                "trials": int(self.config.trials),
                "seed": int(self.config.seed),
            })
        return rows


def _worker_count() -> int:
    raw = os.environ.get("GMM_SSL_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"GMM_SSL_THREADS must be an integer, got {raw!r}") from None


def run_trials(config: TrialConfig) -> TrialResults:
    """Run the full campaign and aggregate.

    Each trial is seeded independently by (config.seed, trial index),
    results land in a trial-indexed buffer, and the reduction is a
    fixed sequential pass, so the outcome does not depend on
    GMM_SSL_THREADS (which only adds worker processes).
    """
    p = config.params
    buf = np.empty((config.trials, 5, p.tau + 1))
    workers = min(_worker_count(), config.trials)
    if workers > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork") if hasattr(os, "fork") else mp.get_context("spawn")
        with ctx.Pool(workers, initializer=_init_worker, initargs=(config,)) as pool:
            chunk = max(1, config.trials // (4 * workers))
            for idx, out in pool.imap_unordered(_worker_run, range(config.trials), chunk):
                buf[idx] = out
    else:
        for idx in range(config.trials):
            buf[idx] = _run_single_trial(config, idx)

    return TrialResults(
        config=config,
        gen=buf[:, 0, :].copy(),
        rho=buf[:, 1, :].copy(),
        pseudo_err=buf[:, 2, :].copy(),
        train_risk=buf[:, 3, :].copy(),
        pop_risk=buf[:, 4, :].copy(),
    )


_WORKER_CONFIG = None


def _init_worker(config):
    global _WORKER_CONFIG
    _WORKER_CONFIG = config


def _worker_run(trial_index: int):
    return trial_index, _run_single_trial(_WORKER_CONFIG, trial_index)
