"""Fuzzy-data likelihood for the Kumaraswamy model and its derivatives.

Two likelihoods are available:

``EXACT``
    Zadeh probability of each fuzzy event, ``sum_i log int mu_i(x) f(x) dx``.
``PAPER_EQ5``
    ``n(log a + log b) + (a-1) sum log int x mu_i + (b-1) sum log int (1-x^a) mu_i``,
    the per-term "log inside the integral" variant.

Both reduce to the classical complete-data log-likelihood when every
observation is a crisp point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DegenerateObservationError
from .fuzzy import CLIP_EPS, FuzzyObservation, FuzzySample, MembershipFunction
from .kuma import KumaParams
from .quad import DEFAULT_SPEC, QuadratureSpec, integrate_weighted_many

__all__ = [
    "LikelihoodForm",
    "ScoreVector",
    "HessianMatrix",
    "PROB_FLOOR",
    "fuzzy_event_prob",
    "event_probabilities",
    "conditional_expectation",
    "complete_data_loglik",
    "obs_loglik",
    "score",
    "hessian",
    "LogLikelihood",
]

#: Event probabilities below this raise :class:`DegenerateObservationError`.
PROB_FLOOR = 1e-300
# below these the closed form loses digits; quadrature takes over
_NARROW_SUPPORT = 1e-3
_SMALL_PROB = 1e-6


class LikelihoodForm(enum.Enum):
    EXACT = "exact"
    PAPER_EQ5 = "paper"

    @classmethod
    def parse(cls, value) -> "LikelihoodForm":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class ScoreVector:
    d_a: float
    d_b: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d_a, self.d_b])


@dataclass(frozen=True)
class HessianMatrix:
    d_aa: float
    d_ab: float
    d_bb: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.d_aa, self.d_ab], [self.d_ab, self.d_bb]])

    def __neg__(self) -> "HessianMatrix":
        return HessianMatrix(-self.d_aa, -self.d_ab, -self.d_bb)


# --------------------------------------------------------------------------
# integrands


def _kuma_terms(x, a, b):
    lx = np.log(x)
    xa = np.exp(a * lx)
    om = -np.expm1(a * lx)  # 1 - x^a
    logf = math.log(a) + math.log(b) + (a - 1.0) * lx + (b - 1.0) * np.log(om)
    return lx, xa, om, logf


def _density(p: KumaParams):
    def f(x):
        return np.exp(_kuma_terms(x, p.a, p.b)[3])

    return f


def _exact_integrands(p: KumaParams):
    """f, f*s_a, f*s_b and f times the three second-derivative kernels."""
    a, b = p.a, p.b

    def f(x):
        lx, xa, om, logf = _kuma_terms(x, a, b)
        fx = np.exp(logf)
        ratio = xa / om
        s_a = 1.0 / a + lx - (b - 1.0) * ratio * lx
        s_b = 1.0 / b + np.log(om)
        ds_aa = -1.0 / a**2 - (b - 1.0) * ratio * lx**2 / om
        ds_ab = -ratio * lx
        ds_bb = -1.0 / b**2
        return np.stack([
            fx,
            fx * s_a,
            fx * s_b,
            fx * (s_a * s_a + ds_aa),
            fx * (s_a * s_b + ds_ab),
            fx * (s_b * s_b + ds_bb),
        ])

    return f


def _paper_integrands(a: float):
    def f(x):
        lx = np.log(x)
        xa = np.exp(a * lx)
        return np.stack([x, -np.expm1(a * lx), xa * lx, xa * lx * lx])

    return f


# --------------------------------------------------------------------------
# single-observation operations


def _membership(obs) -> MembershipFunction:
    if isinstance(obs, FuzzyObservation):
        return obs.membership
    if isinstance(obs, MembershipFunction):
        return obs
    return MembershipFunction(*obs)


def fuzzy_event_prob(obs, p: KumaParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int mu(x) f(x; a, b) dx`` by adaptive quadrature.

    For a crisp point this is the density at the point.
    """
    val = float(integrate_weighted_many(_density(p), [_membership(obs)], spec)[0])
    if not val > PROB_FLOOR:
        raise DegenerateObservationError(f"fuzzy event has probability {val:g} under {p}")
    return val


def conditional_expectation(g: Callable, obs, p: KumaParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Mean of ``g(X)`` under the density ``mu f / int mu f``."""
    dens = _density(p)

    def both(x):
        fx = dens(x)
        return np.stack([fx, fx * np.broadcast_to(g(x), x.shape)])

    den, num = integrate_weighted_many(both, [_membership(obs)], spec)[:, 0]
    if not den > PROB_FLOOR:
        raise DegenerateObservationError(f"fuzzy event has probability {den:g} under {p}")
    return float(num / den)


# --------------------------------------------------------------------------
# closed-form event probabilities


def _pieces(memberships):
    """Linear pieces ``mu = alpha + beta x`` of each clipped membership.

    Returns arrays (lo, hi, mu_lo, mu_hi, slope, owner). Points are skipped.
    """
    lo, hi, mlo, mhi, slope, owner = [], [], [], [], [], []
    c_lo, c_hi = CLIP_EPS, 1.0 - CLIP_EPS
    for j, m in enumerate(memberships):
        if m.is_point:
            continue
        xi, om, de, th = m.breakpoints
        for l, r, kind in ((xi, om, "rise"), (om, de, "flat"), (de, th, "fall")):
            if r <= l:
                continue
            cl, cr = max(l, c_lo), min(r, c_hi)
            if cr <= cl:
                continue
            if kind == "rise":
                beta = 1.0 / (r - l)
                mu_l, mu_r = (cl - l) * beta, (cr - l) * beta
            elif kind == "fall":
                beta = -1.0 / (r - l)
                mu_l, mu_r = (r - cl) / (r - l), (r - cr) / (r - l)
            else:
                beta, mu_l, mu_r = 0.0, 1.0, 1.0
            lo.append(cl)
            hi.append(cr)
            mlo.append(mu_l)
            mhi.append(mu_r)
            slope.append(beta)
            owner.append(j)
    return tuple(np.array(v, dtype=float) for v in (lo, hi, mlo, mhi, slope)) + (np.array(owner, dtype=int),)


class _ClosedForm:
    """Vectorised ``int mu f`` for piecewise-linear memberships.

    With ``S = 1 - F = (1-x^a)^b`` and ``G(t) = int_0^t S = B(1/a, b+1) I_{t^a}(1/a, b+1) / a``,
    a piece ``[l, r]`` with slope ``beta`` contributes
    ``mu(l) S(l) - mu(r) S(r) + beta (G(r) - G(l))``
    (or the algebraically equal expression in ``F`` where ``S`` is close to 1).
    """

    def __init__(self, memberships):
        self.n_owners = len(memberships)
        lo, hi, mlo, mhi, slope, owner = _pieces(memberships)
        self.owner = owner
        self.mlo, self.mhi, self.slope = mlo, mhi, slope
        ends = np.concatenate([lo, hi])
        self.t, inv = np.unique(ends, return_inverse=True)
        self.i_lo = inv[: lo.size]
        self.i_hi = inv[lo.size :]
        self.width = hi - lo
        self.log_t = np.log(self.t) if self.t.size else self.t
        ind = np.zeros((lo.size, self.n_owners))
        ind[np.arange(lo.size), owner] = 1.0
        self.indicator = ind

    def __call__(self, a, b) -> np.ndarray:
        """Probabilities with shape ``a.shape + (n_owners,)`` (points give 0)."""
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        if self.t.size == 0:
            return np.zeros(a.shape[:-1] + (self.n_owners,))
        alt = a * self.log_t
        u = np.exp(alt)  # t^a
        v = -np.expm1(alt)  # 1 - t^a
        log_s = b * np.log(v)  # log S(t)
        S = np.exp(log_s)
        F = -np.expm1(log_s)
        p1, q1 = 1.0 / a, b + 1.0
        I = special.betainc(p1, q1, u)
        Ic = special.betainc(q1, p1, v)  # complement via I_x(p, q) = 1 - I_{1-x}(q, p)
        scale = np.exp(special.betaln(p1, q1)) / a
        il, ih = self.i_lo, self.i_hi
        dI = np.where(I[..., il] > 0.5, Ic[..., il] - Ic[..., ih], I[..., ih] - I[..., il])
        dG = scale * dI
        s_form = self.mlo * S[..., il] - self.mhi * S[..., ih] + self.slope * dG
        f_form = self.mhi * F[..., ih] - self.mlo * F[..., il] - self.slope * (self.width - dG)
        piece = np.where(F[..., ih] < 0.5, f_form, s_form)
        return piece @ self.indicator


def event_probabilities(memberships, p: KumaParams) -> np.ndarray:
    """Closed-form ``int mu_j f`` for each membership (density value for points)."""
    ms = [_membership(m) for m in memberships]
    out = _ClosedForm(ms)(p.a, p.b)
    for j, m in enumerate(ms):
        if m.is_point:
            out[j] = math.exp(_kuma_terms(np.array(m.xi), p.a, p.b)[3])
    return out


# --------------------------------------------------------------------------
# sample-level quantities


def complete_data_loglik(x, p: KumaParams) -> float:
    """Classical log-likelihood of crisp data."""
    x = np.asarray(x, dtype=float)
    lx = np.log(x)
    return float(
        x.size * (math.log(p.a) + math.log(p.b))
        + (p.a - 1.0) * lx.sum()
        + (p.b - 1.0) * np.log(-np.expm1(p.a * lx)).sum()
    )


def _check_probs(probs, sample: FuzzySample, what="fuzzy event probability"):
    bad = ~(probs > PROB_FLOOR)
    if np.any(bad):
        _, _, inverse = sample.groups
        g = int(np.flatnonzero(bad)[0])
        idx = int(np.flatnonzero(inverse == g)[0])
        raise DegenerateObservationError(
            f"observation {idx} ({sample[idx].membership.breakpoints}) has {what} {probs[g]:g}", index=idx
        )


def _paper_moments(sample: FuzzySample, p: KumaParams, spec: QuadratureSpec):
    ms, counts, _ = sample.groups
    I1, J, Ial, Ial2 = integrate_weighted_many(_paper_integrands(p.a), ms, spec)
    _check_probs(np.minimum(I1, J), sample, "paper-likelihood integral")
    return counts, I1, J, Ial, Ial2


def _exact_moments(sample: FuzzySample, p: KumaParams, spec: QuadratureSpec):
    ms, counts, _ = sample.groups
    raw = integrate_weighted_many(_exact_integrands(p), ms, spec)
    P = raw[0]
    _check_probs(P, sample)
    return counts, P, raw[1:] / P


def obs_loglik(sample: FuzzySample, p: KumaParams, form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    form = LikelihoodForm.parse(form)
    if form is LikelihoodForm.PAPER_EQ5:
        counts, I1, J, _, _ = _paper_moments(sample, p, spec)
        n = counts.sum()
        return float(
            n * (math.log(p.a) + math.log(p.b))
            + (p.a - 1.0) * counts @ np.log(I1)
            + (p.b - 1.0) * counts @ np.log(J)
        )
    return float(LogLikelihood(sample, form, spec)(p.a, p.b))


def score(sample: FuzzySample, p: KumaParams, form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC) -> ScoreVector:
    form = LikelihoodForm.parse(form)
    if form is LikelihoodForm.PAPER_EQ5:
        counts, I1, J, Ial, _ = _paper_moments(sample, p, spec)
        n = counts.sum()
        d_a = n / p.a + counts @ np.log(I1) - (p.b - 1.0) * counts @ (Ial / J)
        d_b = n / p.b + counts @ np.log(J)
        return ScoreVector(float(d_a), float(d_b))
    counts, _, m = _exact_moments(sample, p, spec)
    return ScoreVector(float(counts @ m[0]), float(counts @ m[1]))


def _exact_derivatives(sample, p, spec):
    counts, _, m = _exact_moments(sample, p, spec)
    e_a, e_b, e_aa, e_ab, e_bb = m
    g = ScoreVector(float(counts @ e_a), float(counts @ e_b))
    h = HessianMatrix(
        float(counts @ (e_aa - e_a * e_a)),
        float(counts @ (e_ab - e_a * e_b)),
        float(counts @ (e_bb - e_b * e_b)),
    )
    return g, h


def hessian(sample: FuzzySample, p: KumaParams, form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC) -> HessianMatrix:
    """Second derivatives of :func:`obs_loglik`.

    For ``PAPER_EQ5`` the a-a entry includes the quotient-rule term
    ``-(b-1) sum (int x^a log x mu / int (1-x^a) mu)^2`` so that it is the true
    derivative of the printed score.
    """
    form = LikelihoodForm.parse(form)
    if form is LikelihoodForm.PAPER_EQ5:
        counts, _, J, Ial, Ial2 = _paper_moments(sample, p, spec)
        n = counts.sum()
        q = Ial / J
        d_aa = -n / p.a**2 - (p.b - 1.0) * counts @ (Ial2 / J + q * q)
        d_ab = -(counts @ q)
        d_bb = -n / p.b**2
        return HessianMatrix(float(d_aa), float(d_ab), float(d_bb))
    return _exact_derivatives(sample, p, spec)[1]


def score_and_hessian(sample, p, form=LikelihoodForm.EXACT, spec=DEFAULT_SPEC):
    form = LikelihoodForm.parse(form)
    if form is LikelihoodForm.EXACT:
        return _exact_derivatives(sample, p, spec)
    return score(sample, p, form, spec), hessian(sample, p, form, spec)


class LogLikelihood:
    """Observed log-likelihood of a fixed sample, vectorised over parameters.

    ``ll(a, b)`` accepts scalars or equally-shaped arrays. With
    ``strict=False`` degenerate parameter points give ``-inf`` instead of
    raising, which is what a sampler wants.
    """

    def __init__(self, sample: FuzzySample, form=LikelihoodForm.EXACT, spec: QuadratureSpec = DEFAULT_SPEC):
        self.sample = sample
        self.form = LikelihoodForm.parse(form)
        self.spec = spec
        ms, counts, _ = sample.groups
        self.memberships = ms
        self.counts = counts
        self.n = float(counts.sum())
        is_point = np.array([m.is_point for m in ms])
        self.point_x = np.array([m.xi for m in ms])[is_point]
        self.point_counts = counts[is_point]
        width = np.array([min(m.theta, 1 - CLIP_EPS) - max(m.xi, CLIP_EPS) for m in ms])
        self.narrow = (~is_point) & (width < _NARROW_SUPPORT)
        self.fuzzy_idx = np.flatnonzero(~is_point)
        self._closed = _ClosedForm([ms[j] for j in self.fuzzy_idx])
        self._fuzzy_counts = counts[self.fuzzy_idx]
        self._fuzzy_narrow = self.narrow[self.fuzzy_idx]

    def _quad_probs(self, a, b, members):
        return integrate_weighted_many(_density(KumaParams(a, b)), members, self.spec)

    def _exact(self, a, b, strict):
        shape = a.shape
        total = np.zeros(shape)
        if self.point_x.size:
            lx = np.log(self.point_x)
            terms = (
                np.log(a)[..., None] + np.log(b)[..., None]
                + (a[..., None] - 1.0) * lx
                + (b[..., None] - 1.0) * np.log(-np.expm1(a[..., None] * lx))
            )
            total = total + terms @ self.point_counts
        if self.fuzzy_idx.size:
            probs = self._closed(a, b)
            redo = (probs < _SMALL_PROB) | self._fuzzy_narrow
            if np.any(redo):
                flat_p = probs.reshape(-1, probs.shape[-1])
                flat_a, flat_b = a.ravel(), b.ravel()
                flat_redo = redo.reshape(flat_p.shape)
                members = [self.memberships[j] for j in self.fuzzy_idx]
                for r in np.flatnonzero(flat_redo.any(axis=1)):
                    cols = np.flatnonzero(flat_redo[r])
                    flat_p[r, cols] = self._quad_probs(flat_a[r], flat_b[r], [members[c] for c in cols])
                probs = flat_p.reshape(probs.shape)
            bad = ~(probs > PROB_FLOOR)
            if np.any(bad):
                if strict:
                    full = np.ones(len(self.memberships))
                    full[self.fuzzy_idx] = probs.reshape(-1, probs.shape[-1])[np.flatnonzero(bad.reshape(-1, bad.shape[-1]).any(axis=1))[0]]
                    _check_probs(full, self.sample)
                probs = np.where(bad, 1.0, probs)
                total = total + np.log(probs) @ self._fuzzy_counts
                return np.where(bad.any(axis=-1), -np.inf, total)
            total = total + np.log(probs) @ self._fuzzy_counts
        return total

    def __call__(self, a, b, strict: bool = True):
        a_arr = np.asarray(a, dtype=float)
        b_arr = np.asarray(b, dtype=float)
        a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
        if self.form is LikelihoodForm.EXACT:
            out = self._exact(a_arr, b_arr, strict)
        else:
            out = np.empty(a_arr.shape)
            for idx in np.ndindex(a_arr.shape):
                try:
                    out[idx] = obs_loglik(self.sample, KumaParams(a_arr[idx], b_arr[idx]), self.form, self.spec)
                except DegenerateObservationError:
                    if strict:
                        raise
                    out[idx] = -np.inf
        return out if out.ndim else float(out)
