"""Bayesian estimation under independent gamma priors.

Posterior means by the Tierney-Kadane (Laplace ratio) approximation and by
random-walk Metropolis-Hastings; HPD intervals by the shortest-window scan
over sorted draws.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError
from .fuzzy import FuzzySample
from .kuma import KumaParams
from .likelihood import LikelihoodForm, LogLikelihood, score_and_hessian
from .mle import FitOptions, IntervalEstimate, fit_newton_raphson
from .quad import DEFAULT_SPEC, QuadratureSpec

__all__ = [
    "GammaPrior",
    "PriorPair",
    "McmcOptions",
    "PosteriorDraws",
    "log_prior",
    "log_posterior",
    "tierney_kadane",
    "tierney_kadane_both",
    "mh_sample",
    "posterior_mean",
    "hpd_interval",
    "split_rhat",
]

_TARGET_ACCEPT = 0.3
_ADAPT_EVERY = 50
_LOW_ACCEPT = 0.01


@dataclass(frozen=True)
class GammaPrior:
    """Gamma(shape, rate): density proportional to ``x^(shape-1) exp(-rate x)``."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError(f"gamma prior needs shape > 0 and rate > 0, got {self}")

    def logpdf_kernel(self, x):
        return (self.shape - 1.0) * np.log(x) - self.rate * x


@dataclass(frozen=True)
class PriorPair:
    prior_a: GammaPrior = GammaPrior(2.1, 1.7)
    prior_b: GammaPrior = GammaPrior(1.3, 0.89)


@dataclass(frozen=True)
class McmcOptions:
    chains: int = 20
    draws_per_chain: int = 3000
    burn_in: int = 1000
    step_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if not self.draws_per_chain > self.burn_in:
            raise ValueError("draws_per_chain must exceed burn_in")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")


@dataclass
class PosteriorDraws:
    """Post-burn-in draws, one row per chain."""

    a_draws: np.ndarray
    b_draws: np.ndarray
    acceptance_rate: float
    burn_in: int = 0
    chain_acceptance: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_scales: np.ndarray = field(default_factory=lambda: np.zeros(0))
    low_acceptance: bool = False

    @property
    def chains(self) -> int:
        return self.a_draws.shape[0]

    def pooled(self, name: str) -> np.ndarray:
        return getattr(self, f"{name}_draws").ravel()

    def diagnostics(self) -> dict:
        return {
            "chain_means_a": self.a_draws.mean(axis=1).tolist(),
            "chain_means_b": self.b_draws.mean(axis=1).tolist(),
            "split_rhat_a": split_rhat(self.a_draws),
            "split_rhat_b": split_rhat(self.b_draws),
        }


def log_prior(a, b, priors: PriorPair = PriorPair()):
    return priors.prior_a.logpdf_kernel(a) + priors.prior_b.logpdf_kernel(b)


def log_posterior(p: KumaParams, sample: FuzzySample, priors: PriorPair = PriorPair(),
                  form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Unnormalised log joint density of data and parameters."""
    ll = LogLikelihood(sample, form, spec)(p.a, p.b)
    return float(log_prior(p.a, p.b, priors) + ll)


# --------------------------------------------------------------------------
# Tierney-Kadane


class _Objective:
    """Log posterior plus ``extra * log(theta[target])`` with analytic derivatives."""

    def __init__(self, sample, priors, form, spec, fixed_a):
        self.sample, self.priors, self.form, self.spec = sample, priors, form, spec
        self.fixed_a = fixed_a
        self.ll = LogLikelihood(sample, form, spec)

    def value(self, theta, target=None):
        a, b = theta
        v = self.ll(a, b, strict=False) + log_prior(a, b, self.priors)
        if target is not None:
            v += math.log(theta[target])
        return float(v)

    def derivs(self, theta, target=None):
        a, b = theta
        g, h = score_and_hessian(self.sample, KumaParams(a, b), self.form, self.spec)
        pa, pb = self.priors.prior_a, self.priors.prior_b
        grad = g.as_array() + np.array([(pa.shape - 1.0) / a - pa.rate, (pb.shape - 1.0) / b - pb.rate])
        hess = h.as_array() - np.diag([(pa.shape - 1.0) / a**2, (pb.shape - 1.0) / b**2])
        if target is not None:
            grad[target] += 1.0 / theta[target]
            hess[target, target] -= 1.0 / theta[target] ** 2
        return grad, hess

    def free(self):
        return np.array([1]) if self.fixed_a is not None else np.array([0, 1])


def _maximize(obj: _Objective, x0, target=None, tol=1e-10, max_iter=200):
    """Damped Newton on the free coordinates; returns (theta, value, neg-Hessian)."""
    free = obj.free()
    theta = np.array(x0, dtype=float)
    if obj.fixed_a is not None:
        theta[0] = obj.fixed_a
    val = obj.value(theta, target)
    if not np.isfinite(val):
        raise FitError(f"log posterior not finite at {theta}")
    for _ in range(max_iter):
        grad, hess = obj.derivs(theta, target)
        g, H = grad[free], hess[np.ix_(free, free)]
        evals = np.linalg.eigvalsh(H)
        if evals.max() >= 0:
            H = H - (evals.max() + 1e-3 * max(1.0, abs(evals.min()))) * np.eye(len(free))
        step = -np.linalg.solve(H, g)
        t = 1.0
        for _ in range(31):
            cand = theta.copy()
            cand[free] += t * step
            if np.all(cand > 0):
                v = obj.value(cand, target)
                if v >= val - 1e-12 * max(1.0, abs(val)):
                    break
            t *= 0.5
        else:
            raise FitError("posterior maximisation stalled")
        moved = np.linalg.norm(cand - theta)
        theta, val = cand, v
        if moved <= tol * max(1.0, np.linalg.norm(theta)):
            break
    else:
        raise FitError("posterior maximisation did not converge")
    _, hess = obj.derivs(theta, target)
    neg_h = -hess[np.ix_(free, free)]
    try:
        np.linalg.cholesky(neg_h)
    except np.linalg.LinAlgError:
        raise FitError("negated Hessian at the posterior maximum is not positive definite") from None
    return theta, val, neg_h


def _tk_ratio(mode, obj, target):
    theta, val, neg_h = mode
    theta_s, val_s, neg_h_s = _maximize(obj, theta, target)
    # sqrt(det Sigma* / det Sigma) with Sigma = inverse negated Hessian
    log_det_ratio = np.linalg.slogdet(neg_h)[1] - np.linalg.slogdet(neg_h_s)[1]
    return float(math.exp(0.5 * log_det_ratio + val_s - val))


def _start(sample, init):
    if init is not None:
        return np.array([init.a, init.b], dtype=float)
    return np.array([1.0, 1.0])


def tierney_kadane(sample: FuzzySample, priors: PriorPair = PriorPair(), target: str = "a",
                   form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC,
                   init: KumaParams | None = None, fixed_a: float | None = None) -> float:
    """Posterior mean of ``a`` or ``b`` by the Tierney-Kadane approximation.

    ``sqrt(det Sigma* / det Sigma) * exp(L*(theta*) - L(theta_hat))`` where ``L``
    is the log posterior, ``L* = L + log(target)``, both maximised jointly over
    the free parameters. ``fixed_a`` pins ``a`` and approximates the
    conditional posterior of ``b``.
    """
    idx = {"a": 0, "b": 1}[str(target).lower()]
    if fixed_a is not None and idx == 0:
        return float(fixed_a)
    obj = _Objective(sample, priors, LikelihoodForm.parse(form), spec, fixed_a)
    mode = _maximize(obj, _start(sample, init))
    return _tk_ratio(mode, obj, idx)


def tierney_kadane_both(sample: FuzzySample, priors: PriorPair = PriorPair(), form=LikelihoodForm.EXACT,
                        spec: QuadratureSpec = DEFAULT_SPEC, init: KumaParams | None = None) -> KumaParams:
    """TK posterior means of both parameters, sharing the posterior-mode search."""
    obj = _Objective(sample, priors, LikelihoodForm.parse(form), spec, None)
    mode = _maximize(obj, _start(sample, init))
    return KumaParams(_tk_ratio(mode, obj, 0), _tk_ratio(mode, obj, 1))


# --------------------------------------------------------------------------
# Metropolis-Hastings


def mh_log_ratio(log_target_new, log_target_old):
    """Log acceptance ratio for a symmetric jump (the jumping densities cancel)."""
    return log_target_new - log_target_old


def mh_sample(sample: FuzzySample, priors: PriorPair = PriorPair(), opts: McmcOptions = McmcOptions(),
              form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC,
              init: KumaParams | None = None, fixed_a: float | None = None) -> PosteriorDraws:
    """Random-walk Metropolis-Hastings on ``(log a, log b)``.

    The walk is symmetric in log coordinates, so the target there is the
    posterior times the Jacobian ``a * b``. Chains start at ``init`` (default:
    the Newton-Raphson MLE) jittered by ``step_scale``. During burn-in each
    chain's step scale is tuned toward 30% acceptance, and halfway through the
    proposal shape is set from the pooled burn-in covariance. Chains are
    advanced together but each draws from its own generator seeded by
    ``(seed, chain)``.
    """
    form = LikelihoodForm.parse(form)
    ll = LogLikelihood(sample, form, spec)
    if init is None:
        init = fit_newton_raphson(sample, FitOptions(form=form, spec=spec)).params
    free = [1] if fixed_a is not None else [0, 1]
    d = len(free)
    C, M, burn = opts.chains, opts.draws_per_chain, opts.burn_in

    start = np.log(np.array([fixed_a if fixed_a is not None else init.a, init.b]))
    z = np.empty((C, M, d))
    u = np.empty((C, M))
    jitter = np.empty((C, d))
    for c in range(C):
        rng = np.random.default_rng([int(opts.seed), c])
        jitter[c] = rng.standard_normal(d)
        z[c] = rng.standard_normal((M, d))
        u[c] = rng.random(M)

    def log_target(phi):
        a, b = np.exp(phi[:, 0]), np.exp(phi[:, 1])
        val = ll(a, b, strict=False) + log_prior(a, b, priors)
        return val + phi[:, free].sum(axis=1)

    phi = np.tile(start, (C, 1))
    phi[:, free] += opts.step_scale * jitter
    cur = log_target(phi)
    bad = ~np.isfinite(cur)
    if bad.any():
        phi[bad] = start
        cur = log_target(phi)
        if not np.all(np.isfinite(cur)):
            raise FitError("log posterior is not finite at the chain start")

    scale = np.full(C, opts.step_scale)
    chol = np.eye(d)
    out = np.empty((C, M, 2))
    accepted = np.zeros((C, M), dtype=bool)
    window = np.zeros(C)
    for t in range(M):
        step = (z[:, t] @ chol.T) * scale[:, None]
        prop = phi.copy()
        prop[:, free] += step
        new = log_target(prop)
        log_r = mh_log_ratio(new, cur)
        acc = np.isfinite(new) & (np.log(u[:, t]) < log_r)
        phi[acc] = prop[acc]
        cur[acc] = new[acc]
        out[:, t] = phi
        accepted[:, t] = acc
        if t < burn:
            window += acc
            if (t + 1) % _ADAPT_EVERY == 0:
                rate = window / _ADAPT_EVERY
                scale *= np.exp(2.0 * (rate - _TARGET_ACCEPT))
                window[:] = 0
            if t + 1 == burn // 2 and burn // 2 >= 200:
                hist = out[:, burn // 4 : t + 1][:, :, free].reshape(-1, d)
                cov = np.atleast_2d(np.cov(hist, rowvar=False))
                try:
                    chol = np.linalg.cholesky(cov + 1e-12 * np.eye(d))
                    scale[:] = 2.38 / math.sqrt(d)
                except np.linalg.LinAlgError:
                    pass

    kept = np.exp(out[:, burn:])
    chain_acc = accepted[:, burn:].mean(axis=1)
    rate = float(chain_acc.mean())
    low = rate < _LOW_ACCEPT
    if low:
        warnings.warn(f"Metropolis-Hastings acceptance rate {rate:.3f} is very low", RuntimeWarning)
    return PosteriorDraws(kept[:, :, 0], kept[:, :, 1], rate, burn, chain_acc, scale.copy(), low)


def posterior_mean(draws: PosteriorDraws) -> KumaParams:
    """Pooled arithmetic mean of the post-burn-in draws."""
    a, b = draws.pooled("a"), draws.pooled("b")
    if a.size == 0:
        raise ValueError("no posterior draws to average")
    return KumaParams(float(a.mean()), float(b.mean()))


def hpd_interval(draws, level: float = 0.95) -> IntervalEstimate:
    """Shortest interval holding ``ceil(level * M)`` of the sorted draws.

    Ties go to the smallest left index.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    x = np.sort(np.asarray(draws, dtype=float).ravel())
    m = x.size
    if m < 2:
        raise ValueError("need at least two draws for an HPD interval")
    k = math.ceil(level * m - 1e-9)
    k = max(k, 1)
    if k > m:
        raise ValueError("window larger than the number of draws")
    widths = x[k - 1 :] - x[: m - k + 1]
    j = int(np.argmin(widths))
    return IntervalEstimate(float(x[j]), float(x[j + k - 1]), level)


def split_rhat(chains: np.ndarray) -> float:
    """Between/within variance ratio over half-chains (potential scale reduction)."""
    chains = np.atleast_2d(np.asarray(chains, dtype=float))
    n = chains.shape[1] // 2
    if n < 2:
        return float("nan")
    halves = np.concatenate([chains[:, :n], chains[:, n : 2 * n]], axis=0)
    w = halves.var(axis=1, ddof=1).mean()
    b = n * halves.mean(axis=1).var(ddof=1)
    if w == 0:
        return float("nan")
    var_hat = (n - 1) / n * w + b / n
    return float(math.sqrt(var_hat / w))
