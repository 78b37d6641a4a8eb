"""Adaptive Gauss-Kronrod integration against trapezoidal memberships.

Every fuzzy-likelihood quantity is an integral ``int f(x) mu(x) dx`` over the
support of a membership. The support is split at the trapezoid's kinks so each
panel has a smooth integrand; panels are then bisected (all memberships in
one vectorised pass) until the 7-point Gauss / 15-point Kronrod pair agree.
Crisp points act as point masses: the "integral" is ``f(x0)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError
from .fuzzy import CLIP_EPS, FuzzyObservation, MembershipFunction

__all__ = [
    "QuadratureSpec",
    "DEFAULT_SPEC",
    "WeightedRule",
    "integrate_weighted",
    "integrate_weighted_many",
    "weighted_rule",
]

# Kronrod abscissae on [-1, 1]; odd positions (1, 3, ..., 13) are the Gauss-7 nodes
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


def _as_membership(m) -> MembershipFunction:
    if isinstance(m, FuzzyObservation):
        return m.membership
    if isinstance(m, MembershipFunction):
        return m
    return MembershipFunction(*m)


def _segments(m: MembershipFunction):
    """Smooth pieces of the clipped support as ``(lo, hi)`` pairs."""
    lo_clip, hi_clip = CLIP_EPS, 1.0 - CLIP_EPS
    cuts = [m.xi, m.omega, m.delta, m.theta]
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        lo, hi = max(lo, lo_clip), min(hi, hi_clip)
        if hi > lo:
            out.append((lo, hi))
    return out


def _mu(x, xi, om, de, th):
    """Trapezoid grades with per-row breakpoints (broadcast over columns)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = np.where(om > xi, (x - xi) / (om - xi), 1.0)
        fall = np.where(th > de, (th - x) / (th - de), 1.0)
    out = np.where(x < om, rise, np.where(x > de, fall, 1.0))
    return np.clip(out, 0.0, 1.0)


@dataclass
class WeightedRule:
    """Flattened nodes/weights such that ``sum(w * g(x))`` per owner approximates
    ``int g(x) mu_owner(x) dx``.  Point masses appear as a single node of weight 1."""

    nodes: np.ndarray
    weights: np.ndarray
    owner: np.ndarray
    n_owners: int

    def integrate(self, values) -> np.ndarray:
        """Sum ``weights * values`` per owner; ``values`` may carry leading axes."""
        values = np.asarray(values, dtype=float)
        prod = values * self.weights
        if prod.ndim == 1:
            return np.bincount(self.owner, weights=prod, minlength=self.n_owners)
        flat = prod.reshape(-1, prod.shape[-1])
        out = np.stack([np.bincount(self.owner, weights=row, minlength=self.n_owners) for row in flat])
        return out.reshape(prod.shape[:-1] + (self.n_owners,))

    def normalized(self, density_values) -> "WeightedRule":
        """Rule for the conditional law ``mu * density / int mu * density``."""
        w = self.weights * density_values
        tot = np.bincount(self.owner, weights=w, minlength=self.n_owners)
        return WeightedRule(self.nodes, w / tot[self.owner], self.owner, self.n_owners)


def _eval(f, x):
    v = np.asarray(f(x), dtype=float)
    if v.shape == x.shape:
        return v[None]
    return v.reshape((-1,) + x.shape)


def _adaptive(f, memberships: Sequence[MembershipFunction], spec: QuadratureSpec, keep_rule: bool):
    n_own = len(memberships)
    seg_lo, seg_hi, seg_own = [], [], []
    point_own, point_x = [], []
    for j, m in enumerate(memberships):
        if m.is_point:
            point_own.append(j)
            point_x.append(m.xi)
            continue
        segs = _segments(m)
        if not segs:
            raise QuadratureError(f"membership {m.breakpoints} has empty clipped support")
        for lo, hi in segs:
            seg_lo.append(lo)
            seg_hi.append(hi)
            seg_own.append(j)

    bp = np.array([m.breakpoints for m in memberships], dtype=float).reshape(n_own, 4)
    k_dim = None
    result = None
    done_lo, done_hi, done_own = [], [], []
    sub_count = np.zeros(n_own, dtype=int)

    if point_own:
        pv = _eval(f, np.array(point_x))
        k_dim = pv.shape[0]
        result = np.zeros((k_dim, n_own))
        result[:, point_own] = pv

    lo = np.array(seg_lo)
    hi = np.array(seg_hi)
    own = np.array(seg_own, dtype=int)
    # accepted panel contributions
    acc_val = None
    acc_err = None
    while lo.size:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = mid[:, None] + half[:, None] * _XK[None, :]
        mu = _mu(x, *(bp[own][:, i : i + 1] for i in range(4)))
        fv = _eval(f, x) * mu[None]
        if not np.all(np.isfinite(fv)):
            raise QuadratureError("integrand is not finite on the clipped support")
        ik = (fv @ _WK) * half
        ig = (fv @ _WG) * half
        err = np.abs(ik - ig)
        if k_dim is None:
            k_dim = fv.shape[0]
            result = np.zeros((k_dim, n_own))
        if acc_val is None:
            acc_val = np.zeros((k_dim, n_own))
            acc_err = np.zeros((k_dim, n_own))
        # per-owner totals of the pending panels plus everything accepted so far
        tot = acc_val.copy()
        tot_err = acc_err.copy()
        for k in range(k_dim):
            tot[k] += np.bincount(own, weights=ik[k], minlength=n_own)
            tot_err[k] += np.bincount(own, weights=err[k], minlength=n_own)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tot))
        owner_ok = np.all(tot_err <= tol, axis=0)
        # panels whose error share is already negligible are accepted individually
        width = hi - lo
        share = width / np.maximum(np.bincount(own, weights=width, minlength=n_own)[own], 1e-300)
        panel_ok = np.all(err <= 0.25 * tol[:, own] * share[None], axis=0) | owner_ok[own]
        for k in range(k_dim):
            acc_val[k] += np.bincount(own[panel_ok], weights=ik[k][panel_ok], minlength=n_own)
            acc_err[k] += np.bincount(own[panel_ok], weights=err[k][panel_ok], minlength=n_own)
        if keep_rule and panel_ok.any():
            done_lo.append(lo[panel_ok])
            done_hi.append(hi[panel_ok])
            done_own.append(own[panel_ok])
        split = ~panel_ok
        if not split.any():
            break
        sub_count += np.bincount(own[split], minlength=n_own)
        if np.any(sub_count > spec.max_subdivisions):
            j = int(np.argmax(sub_count > spec.max_subdivisions))
            est = tot[:, j]
            raise QuadratureError(
                f"no convergence after {spec.max_subdivisions} subdivisions "
                f"(membership {memberships[j].breakpoints})",
                estimate=est if k_dim > 1 else float(est[0]),
                error=tot_err[:, j] if k_dim > 1 else float(tot_err[0, j]),
            )
        l, h, o = lo[split], hi[split], own[split]
        m_ = 0.5 * (l + h)
        lo = np.concatenate([l, m_])
        hi = np.concatenate([m_, h])
        own = np.concatenate([o, o])

    if acc_val is not None:
        seg_owners = np.unique(np.array(seg_own, dtype=int))
        result[:, seg_owners] = acc_val[:, seg_owners]

    rule = None
    if keep_rule:
        parts_x, parts_w, parts_o = [], [], []
        if point_own:
            parts_x.append(np.array(point_x))
            parts_w.append(np.ones(len(point_x)))
            parts_o.append(np.array(point_own, dtype=int))
        if done_lo:
            l = np.concatenate(done_lo)
            h = np.concatenate(done_hi)
            o = np.concatenate(done_own)
            half = 0.5 * (h - l)
            x = 0.5 * (h + l)[:, None] + half[:, None] * _XK[None, :]
            mu = _mu(x, *(bp[o][:, i : i + 1] for i in range(4)))
            parts_x.append(x.ravel())
            parts_w.append((mu * _WK[None, :] * half[:, None]).ravel())
            parts_o.append(np.repeat(o, 15))
        rule = WeightedRule(np.concatenate(parts_x), np.concatenate(parts_w), np.concatenate(parts_o), n_own)
    return result, rule


def integrate_weighted_many(f: Callable, memberships, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``int f(x) mu_j(x) dx`` for every membership ``j`` in one adaptive pass.

    ``f`` maps an array of abscissae to an array of the same shape, or to
    ``(k,) + shape`` for ``k`` integrands sharing the subdivision. Returns
    shape ``(n,)`` or ``(k, n)``.
    """
    ms = [_as_membership(m) for m in memberships]
    res, _ = _adaptive(f, ms, spec, keep_rule=False)
    return res[0] if res.shape[0] == 1 else res


def integrate_weighted(f: Callable, m, spec: QuadratureSpec = DEFAULT_SPEC):
    """``int f(x) mu(x) dx`` over the clipped support of one membership."""
    res = integrate_weighted_many(f, [m], spec)
    return float(res[0]) if res.ndim == 1 else res[:, 0]


def weighted_rule(f: Callable, memberships, spec: QuadratureSpec = DEFAULT_SPEC) -> WeightedRule:
    """Adapt panels to the integrand(s) ``f`` and return the resulting node set.

    The rule can then be reused for nearby integrands (e.g. an EM M-step
    search) without re-running the adaptive loop.
    """
    ms = [_as_membership(m) for m in memberships]
    _, rule = _adaptive(f, ms, spec, keep_rule=True)
    return rule
