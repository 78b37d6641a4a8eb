"""Maximum-likelihood fitting from fuzzy data: Newton-Raphson, EM, Wald intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import DegenerateObservationError, FitError
from .fuzzy import FuzzySample
from .kuma import KumaParams
from .likelihood import (
    PROB_FLOOR,
    HessianMatrix,
    LikelihoodForm,
    LogLikelihood,
    hessian,
    score_and_hessian,
)
from .quad import DEFAULT_SPEC, QuadratureSpec, weighted_rule

__all__ = [
    "FitOptions",
    "FitResult",
    "IntervalEstimate",
    "fit_newton_raphson",
    "fit_em",
    "asymptotic_ci",
    "DISTANT_START",
]

#: Start used by the simulation study, far from the true (2, 3).
DISTANT_START = KumaParams(0.5, 6.0)

_MAX_HALVINGS = 30
_SINGULAR_DET = 1e-14
_A_BRACKET = (1e-3, 1e2)


@dataclass(frozen=True)
class FitOptions:
    init: KumaParams = KumaParams(1.0, 1.0)
    eps: float = 1e-8
    max_iter: int = 500
    form: LikelihoodForm = LikelihoodForm.EXACT
    spec: QuadratureSpec = DEFAULT_SPEC

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        object.__setattr__(self, "form", LikelihoodForm.parse(self.form))


@dataclass
class FitResult:
    params: KumaParams
    loglik: float
    iterations: int
    converged: bool
    observed_info: HessianMatrix | None
    trace: list = field(default_factory=list)
    method: str = ""
    last_step: float = math.inf


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("interval lower bound exceeds upper bound")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _info_at(sample, params, form, spec):
    try:
        return -hessian(sample, params, form, spec)
    except DegenerateObservationError:
        return None


def fit_newton_raphson(sample: FuzzySample, opts: FitOptions = FitOptions()) -> FitResult:
    """Newton-Raphson ascent on the observed log-likelihood.

    A step that lowers the log-likelihood or leaves the positive quadrant is
    halved (at most 30 times). Where the Hessian is not negative definite the
    step is taken along a shifted Hessian, which keeps it an ascent direction.
    """
    form, spec = opts.form, opts.spec
    ll_fn = LogLikelihood(sample, form, spec)
    theta = opts.init.as_array()
    ll = ll_fn(*theta, strict=False)
    if not np.isfinite(ll):
        raise FitError(f"log-likelihood is not finite at the start {opts.init}")
    trace = [opts.init]
    converged = False
    step_norm = math.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        g, h = score_and_hessian(sample, KumaParams(*theta), form, spec)
        grad = g.as_array()
        H = h.as_array()
        if abs(np.linalg.det(H)) < _SINGULAR_DET:
            raise FitError(f"singular Hessian at {KumaParams(*theta)}", trace)
        evals = np.linalg.eigvalsh(H)
        if evals.max() >= 0:
            shift = evals.max() + 1e-3 * max(1.0, abs(evals.min()))
            H = H - shift * np.eye(2)
        step = -np.linalg.solve(H, grad)
        t = 1.0
        accepted = None
        for _ in range(_MAX_HALVINGS + 1):
            cand = theta + t * step
            if np.all(cand > 0):
                ll_c = ll_fn(*cand, strict=False)
                if ll_c >= ll - 1e-12 * max(1.0, abs(ll)):
                    accepted = cand
                    break
            t *= 0.5
        if accepted is None:
            break
        step_norm = float(np.linalg.norm(accepted - theta))
        theta, ll = accepted, ll_c
        trace.append(KumaParams(*theta))
        if step_norm <= opts.eps:
            converged = True
            break
    params = KumaParams(*theta)
    return FitResult(params, float(ll), it, converged, _info_at(sample, params, form, spec), trace, "NR", step_norm)


class _EStep:
    """Conditional laws of the latent crisp values given each fuzzy group.

    Holds node/weight rules adapted at the current parameters, so the M-step
    can evaluate ``E[log(1 - X^a)]`` at any trial ``a`` cheaply.
    """

    def __init__(self, sample: FuzzySample, p: KumaParams, spec: QuadratureSpec):
        ms, counts, _ = sample.groups
        a, b = p.a, p.b

        def integrands(x):
            lx = np.log(x)
            fx = np.exp(math.log(a * b) + (a - 1.0) * lx + (b - 1.0) * np.log(-np.expm1(a * lx)))
            return np.stack([fx, fx * lx, fx * np.log(-np.expm1(a * lx))])

        rule = weighted_rule(integrands, ms, spec)
        lx = np.log(rule.nodes)
        dens = np.exp(math.log(a * b) + (a - 1.0) * lx + (b - 1.0) * np.log(-np.expm1(a * lx)))
        prob = rule.integrate(dens)
        if np.any(~(prob > PROB_FLOOR)):
            raise DegenerateObservationError(f"fuzzy event has zero probability under {p}")
        self.rule = rule.normalized(dens)
        self.lx = lx
        self.counts = counts
        self.n = float(counts.sum())
        self.sum_log_x = float(counts @ self.rule.integrate(lx))

    def sum_log1m(self, a):
        """``sum_i E[log(1 - X_i^a)]`` and its derivative in ``a``."""
        alx = a * self.lx
        om = -np.expm1(alx)
        m = self.counts @ self.rule.integrate(np.log(om))
        dm = self.counts @ self.rule.integrate(-np.exp(alx) * self.lx / om)
        return float(m), float(dm)


def _m_step(e: _EStep):
    """Maximise the expected complete-data log-likelihood with ``b`` profiled out."""
    n, sl = e.n, e.sum_log_x

    def dq(a):
        m, dm = e.sum_log1m(a)
        if not m < 0:
            raise FitError(f"expected sum of log(1 - X^a) is {m:g} (must be negative)")
        return n / a - n * dm / m + sl - dm

    lo, hi = _A_BRACKET
    d_lo, d_hi = dq(lo), dq(hi)
    if d_lo > 0 > d_hi:
        a_new = optimize.brentq(dq, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    else:
        def neg_q(a):
            m, _ = e.sum_log1m(a)
            return -(n * math.log(a) + n * math.log(-n / m) + (a - 1.0) * sl - n - m)

        a_new = optimize.minimize_scalar(neg_q, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}).x
    m, _ = e.sum_log1m(a_new)
    if not m < 0:
        raise FitError(f"expected sum of log(1 - X^a) is {m:g} (must be negative)")
    return float(a_new), float(-n / m)


def fit_em(sample: FuzzySample, opts: FitOptions = FitOptions()) -> FitResult:
    """EM for fuzzy data.

    E-step: conditional law of each latent value given its fuzzy observation
    (membership times density, renormalised). M-step: one-dimensional search
    in ``a`` with ``b(a) = -n / sum E[log(1 - X^a)]`` in closed form.
    """
    if opts.form is not LikelihoodForm.EXACT:
        raise ValueError("EM maximises the exact fuzzy-event likelihood; use form=EXACT")
    spec = opts.spec
    ll_fn = LogLikelihood(sample, LikelihoodForm.EXACT, spec)
    theta = opts.init.as_array()
    trace = [opts.init]
    converged = False
    step_norm = math.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        e = _EStep(sample, KumaParams(*theta), spec)
        new = np.array(_m_step(e))
        step_norm = float(np.linalg.norm(new - theta))
        theta = new
        trace.append(KumaParams(*theta))
        if step_norm <= opts.eps:
            converged = True
            break
    params = KumaParams(*theta)
    ll = ll_fn(params.a, params.b, strict=False)
    return FitResult(params, float(ll), it, converged, _info_at(sample, params, LikelihoodForm.EXACT, spec), trace, "EM", step_norm)


def asymptotic_ci(result: FitResult, level: float = 0.95):
    """Wald intervals ``estimate +/- z sqrt(diag(I^-1))`` for ``a`` and ``b``.

    Lower bounds are floored at 0.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if not result.converged:
        raise FitError("confidence intervals need a converged fit", result.trace)
    if result.observed_info is None:
        raise FitError("observed information unavailable", result.trace)
    info = result.observed_info.as_array()
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        raise FitError("observed information is not positive definite", result.trace) from None
    cov = np.linalg.inv(info)
    z = stats.norm.ppf(0.5 * (1.0 + level))
    se = np.sqrt(np.diag(cov))
    est = result.params.as_array()
    return tuple(
        IntervalEstimate(max(0.0, float(e - z * s)), float(e + z * s), level) for e, s in zip(est, se)
    )
