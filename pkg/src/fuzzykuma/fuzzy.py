"""Trapezoidal fuzzy numbers, fuzzy information systems and fuzzification."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CLIP_EPS",
    "MembershipFunction",
    "trapezoid",
    "triangular",
    "crisp_interval",
    "crisp_point",
    "FuzzyObservation",
    "FuzzySample",
    "FuzzyInformationSystem",
    "eval_membership",
    "default_fis",
    "fuzzify",
]

#: Membership supports are clipped to ``[CLIP_EPS, 1 - CLIP_EPS]`` before integration.
CLIP_EPS = 1e-9


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid ``(xi, omega, delta, theta)``.

    Rises linearly on ``[xi, omega]``, equals 1 on ``[omega, delta]`` and falls
    linearly on ``[delta, theta]``. ``omega == delta`` gives a triangle,
    ``xi == omega`` and ``delta == theta`` a crisp interval, and four equal
    values a crisp point.
    """

    xi: float
    omega: float
    delta: float
    theta: float

    def __post_init__(self):
        vals = [float(v) for v in (self.xi, self.omega, self.delta, self.theta)]
        if not all(np.isfinite(vals)):
            raise ValueError(f"membership breakpoints must be finite: {vals}")
        if not (vals[0] <= vals[1] <= vals[2] <= vals[3]):
            raise ValueError(f"need xi <= omega <= delta <= theta, got {tuple(vals)}")
        for name, v in zip(("xi", "omega", "delta", "theta"), vals):
            object.__setattr__(self, name, v)

    @property
    def is_point(self) -> bool:
        return self.xi == self.theta

    @property
    def breakpoints(self) -> tuple[float, float, float, float]:
        return (self.xi, self.omega, self.delta, self.theta)

    @property
    def max_slope(self) -> float:
        slopes = [0.0]
        if self.omega > self.xi:
            slopes.append(1.0 / (self.omega - self.xi))
        if self.theta > self.delta:
            slopes.append(1.0 / (self.theta - self.delta))
        return max(slopes)

    def __call__(self, x):
        return eval_membership(self, x)


def trapezoid(xi, omega, delta, theta) -> MembershipFunction:
    return MembershipFunction(xi, omega, delta, theta)


def triangular(xi, omega, theta) -> MembershipFunction:
    return MembershipFunction(xi, omega, omega, theta)


def crisp_interval(lo, hi) -> MembershipFunction:
    return MembershipFunction(lo, lo, hi, hi)


def crisp_point(x0) -> MembershipFunction:
    return MembershipFunction(x0, x0, x0, x0)


def eval_membership(m: MembershipFunction, x):
    """Grade of membership of ``x``; vectorised over ``x``."""
    x = np.asarray(x, dtype=float)
    xi, om, de, th = m.breakpoints
    out = np.zeros_like(x)
    out = np.where((x >= om) & (x <= de), 1.0, out)
    if om > xi:
        rise = (x > xi) & (x < om)
        out = np.where(rise, (x - xi) / (om - xi), out)
    if th > de:
        fall = (x > de) & (x < th)
        out = np.where(fall, (th - x) / (th - de), out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FuzzyObservation:
    """One fuzzy datum on (0, 1).

    Its support must overlap (0, 1) with positive length, or be a crisp point
    strictly inside (0, 1). Integration only sees the part of the support inside
    ``[CLIP_EPS, 1 - CLIP_EPS]``.
    """

    membership: MembershipFunction

    def __post_init__(self):
        m = self.membership
        if not isinstance(m, MembershipFunction):
            object.__setattr__(self, "membership", MembershipFunction(*m))
            m = self.membership
        if m.is_point:
            if not (0.0 < m.xi < 1.0):
                raise ValueError(f"crisp observation {m.xi} is outside (0, 1)")
        elif not (m.xi < 1.0 and m.theta > 0.0):
            raise ValueError(f"membership support [{m.xi}, {m.theta}] does not meet (0, 1)")

    @property
    def lo(self) -> float:
        return max(self.membership.xi, CLIP_EPS)

    @property
    def hi(self) -> float:
        return min(self.membership.theta, 1.0 - CLIP_EPS)

    @property
    def is_point(self) -> bool:
        return self.membership.is_point


@dataclass(frozen=True)
class FuzzySample:
    """Ordered fuzzy observations; the object every estimator consumes."""

    observations: tuple

    def __post_init__(self):
        obs = tuple(o if isinstance(o, FuzzyObservation) else FuzzyObservation(o) for o in self.observations)
        if not obs:
            raise ValueError("a fuzzy sample needs at least one observation")
        object.__setattr__(self, "observations", obs)

    def __len__(self):
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    def __getitem__(self, i):
        return self.observations[i]

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "FuzzySample":
        return cls(tuple(FuzzyObservation(MembershipFunction(*r)) for r in rows))

    @classmethod
    def crisp(cls, values: Iterable[float]) -> "FuzzySample":
        return cls(tuple(FuzzyObservation(crisp_point(v)) for v in values))

    def to_array(self) -> np.ndarray:
        return np.array([o.membership.breakpoints for o in self.observations], dtype=float)

    @cached_property
    def groups(self):
        """Distinct memberships with multiplicities.

        Returns ``(memberships, counts, inverse)`` where ``inverse[i]`` is the
        group of observation ``i``. Estimators work per group, which is what
        keeps f.i.s.-coded samples cheap (at most one group per event).
        """
        arr = self.to_array()
        uniq, inverse, counts = np.unique(arr, axis=0, return_inverse=True, return_counts=True)
        ms = tuple(MembershipFunction(*row) for row in uniq)
        return ms, counts.astype(float), inverse.ravel()


@dataclass(frozen=True)
class FuzzyInformationSystem:
    """Finite fuzzy partition of (0, 1): memberships summing to one everywhere."""

    events: tuple

    def __post_init__(self):
        evs = tuple(e if isinstance(e, MembershipFunction) else MembershipFunction(*e) for e in self.events)
        if not evs:
            raise ValueError("a fuzzy information system needs at least one event")
        object.__setattr__(self, "events", evs)

    def __len__(self):
        return len(self.events)

    def memberships(self, x) -> np.ndarray:
        """Matrix of grades, shape ``(len(x), n_events)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([eval_membership(e, x) for e in self.events], axis=-1)

    def orthogonality_defect(self, x) -> float:
        """Largest ``|sum_e mu_e(x) - 1|`` over the points ``x``."""
        return float(np.max(np.abs(self.memberships(x).sum(axis=-1) - 1.0)))


_DEFAULT_BREAKS = (0.0, 0.1, 0.25, 0.4, 0.55, 0.7, 0.8, 0.9, 1.0)
_DEFAULT_BAND = 0.04


def default_fis() -> FuzzyInformationSystem:
    """Eight trapezoidal events partitioning (0, 1).

    Plateaus sit between the breakpoints 0, .1, .25, .4, .55, .7, .8, .9, 1;
    neighbours cross over linearly on a band of width 0.04 centred on each
    interior breakpoint.
    """
    half = _DEFAULT_BAND / 2
    b = _DEFAULT_BREAKS
    events = []
    for k in range(len(b) - 1):
        left, right = b[k], b[k + 1]
        xi, omega = (left, left) if k == 0 else (left - half, left + half)
        delta, theta = (right, right) if k == len(b) - 2 else (right - half, right + half)
        events.append(MembershipFunction(xi, omega, delta, theta))
    return FuzzyInformationSystem(tuple(events))


def fuzzify(crisp, fis: FuzzyInformationSystem | None, seed=None) -> FuzzySample:
    """Encode crisp values as f.i.s. events.

    Each value ``x`` is reported as event ``e`` with probability ``mu_e(x)``
    (orthogonality makes the grades a probability vector). ``fis=None`` keeps
    the data crisp, i.e. every observation becomes a point membership.
    """
    x = np.asarray(crisp, dtype=float).ravel()
    bad = np.flatnonzero(~((x > 0.0) & (x < 1.0)))
    if bad.size:
        raise ValueError(f"values outside (0, 1) at positions {bad.tolist()}")
    if fis is None:
        return FuzzySample.crisp(x)
    grades = fis.memberships(x)
    total = grades.sum(axis=1, keepdims=True)
    if np.any(total <= 0):
        raise ValueError("fuzzy information system does not cover every value")
    cum = np.cumsum(grades / total, axis=1)
    u = np.random.default_rng(seed).random(len(x))
    choice = (u[:, None] >= cum).sum(axis=1)
    choice = np.minimum(choice, len(fis) - 1)
    return FuzzySample(tuple(FuzzyObservation(fis.events[k]) for k in choice))
