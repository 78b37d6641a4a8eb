"""Kumaraswamy distribution on (0, 1).

    pdf(x) = a b x^(a-1) (1 - x^a)^(b-1),   cdf(x) = 1 - (1 - x^a)^b
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["KumaParams", "logpdf", "pdf", "cdf", "quantile", "sample"]


@dataclass(frozen=True)
class KumaParams:
    """Shape parameters ``(a, b)``; both must be strictly positive."""

    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise ValueError(f"Kumaraswamy parameter {name} must be finite and > 0, got {v!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b])


def _check_open_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(~((x > 0.0) & (x < 1.0))):
        raise ValueError("pdf is defined on the open interval (0, 1)")
    return x


def logpdf(x, p: KumaParams):
    """Log density. ``1 - x^a`` is formed with ``expm1`` so it stays accurate as ``x^a -> 1``."""
    x = _check_open_unit(x)
    lx = np.log(x)
    one_minus = -np.expm1(p.a * lx)
    out = math.log(p.a) + math.log(p.b) + (p.a - 1.0) * lx + (p.b - 1.0) * np.log(one_minus)
    return out if out.ndim else float(out)


def pdf(x, p: KumaParams):
    out = np.exp(logpdf(x, p))
    return out if np.ndim(out) else float(out)


def cdf(x, p: KumaParams):
    """Distribution function, clamped to 0 below the support and 1 above it."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        # 1 - (1 - x^a)^b = -expm1(b * log1p(-x^a))
        out = -np.expm1(p.b * np.log1p(-(xc ** p.a)))
    out = np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, out))
    return out if out.ndim else float(out)


def quantile(u, p: KumaParams):
    """Inverse of :func:`cdf`: ``(1 - (1-u)^(1/b))^(1/a)``."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0)):
        raise ValueError("quantile requires 0 <= u <= 1")
    with np.errstate(divide="ignore"):
        inner = -np.expm1(np.log1p(-u) / p.b)
    out = inner ** (1.0 / p.a)
    return out if out.ndim else float(out)


def sample(n: int, p: KumaParams, seed=None) -> np.ndarray:
    """Draw ``n`` variates by inverse-cdf transform of uniforms.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts, so the
    simulation harness can pass structured seeds.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    # random() is on [0, 1); a zero draw would map onto the support boundary
    u = rng.random(n)
    x = quantile(u, p)
    tiny = np.nextafter(0.0, 1.0)
    return np.clip(x, tiny, np.nextafter(1.0, 0.0))
