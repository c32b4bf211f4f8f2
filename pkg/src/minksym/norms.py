"""The inf-convolution norm of l2 and k*l_inf, its tail-l2 surrogate, and
moment-ratio estimates of Orlicz psi_alpha norms.

The inf-convolution norm

    ||x||'_k = inf { |x'|_2 + k |x''|_inf : x = x' + x'' }

reduces to a one-dimensional convex problem: the best ``x''`` clips every
coordinate at a common threshold ``tau``, leaving

    g(tau) = sqrt(sum_i (|x_i| - tau)_+^2) + k * tau,   tau in [0, max|x_i|].

It is the dual of ``max(|y|_2, |y|_1 / k)``, so the maximizer of
``<x, y>`` over ``{|y|_2 <= 1, |y|_1 <= k}`` is also available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import rearrange_desc_abs

__all__ = [
    "PsiAlphaEstimate",
    "inf_conv_norm",
    "inf_conv_point",
    "inf_conv_norm_ternary",
    "tail_l2_surrogate",
    "psi_alpha_estimate",
    "MOMENT_ORDERS",
]

MOMENT_ORDERS = (1, 2, 4, 8, 16)


def _check_k(k: float) -> float:
    k = float(k)
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return k


def _threshold(a_sorted: np.ndarray, k: float) -> np.ndarray:
    """Optimal clipping threshold for rows of non-increasing ``a_sorted``."""
    n = a_sorted.shape[-1]
    p1 = np.cumsum(a_sorted, axis=-1)
    p2 = np.cumsum(a_sorted**2, axis=-1)
    m = np.arange(1, n + 1, dtype=float)
    nxt = np.concatenate([a_sorted[..., 1:], np.zeros(a_sorted.shape[:-1] + (1,))], axis=-1)

    tau = np.zeros(a_sorted.shape[:-1])
    # tau = 0 is optimal iff g'(0) >= 0, i.e. |a|_1 <= k |a|_2.
    interior = p1[..., -1] > k * np.sqrt(p2[..., -1])
    if not np.any(interior):
        return tau

    s, p1, p2, nxt = a_sorted[interior], p1[interior], p2[interior], nxt[interior]
    # |(a - tau)_+|_1 / |(a - tau)_+|_2 at the left end of each segment
    # [a_{m+1}, a_m]; non-decreasing in m, and exceeds k at m = n.
    num = p1 - m * nxt
    den2 = np.maximum(p2 - 2.0 * nxt * p1 + m * nxt**2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den2 > 0, num / np.sqrt(den2), 0.0)
    seg = np.argmax(ratio >= k, axis=-1)
    rows = np.arange(s.shape[0])
    mm = seg + 1.0
    lo = nxt[rows, seg]
    hi = s[rows, seg]
    top = np.arange(n)[None, :] <= seg[:, None]
    mean = p1[rows, seg] / mm
    var = np.sum(np.where(top, (s - mean[:, None]) ** 2, 0.0), axis=-1)
    slack = 1.0 - k * k / mm
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.where(slack > 0, k * np.sqrt(var / slack), 0.0)
    t = np.where(slack > 0, (p1[rows, seg] - spread) / mm, lo)
    tau[interior] = np.clip(t, lo, hi)
    return tau


def _prepare(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("x must have a non-empty last axis")
    return x


def inf_conv_norm(x, k: float) -> np.ndarray | float:
    """Exact ``||x||'_k`` along the last axis of ``x``.

    Finds the segment between sorted breakpoints that contains the optimal
    threshold and solves the stationarity condition there in closed form.
    """
    k = _check_k(k)
    x = _prepare(x)
    a = np.abs(x)
    a_sorted = -np.sort(-a, axis=-1)
    tau = _threshold(a_sorted, k)
    val = np.sqrt(np.sum(np.maximum(a - tau[..., None], 0.0) ** 2, axis=-1)) + k * tau
    return float(val) if val.ndim == 0 else val


def inf_conv_point(x, k: float) -> np.ndarray:
    """A maximizer of ``<x, y>`` over ``{|y|_2 <= 1, |y|_1 <= k}``.

    This is a supergradient of ``inf_conv_norm(., k)`` at ``x``.
    """
    k = _check_k(k)
    x = _prepare(x)
    a = np.abs(x)
    tau = _threshold(-np.sort(-a, axis=-1), k)
    r = np.maximum(a - tau[..., None], 0.0)
    nr = np.linalg.norm(r, axis=-1, keepdims=True)
    # When tau reaches max|x_i| the residual vanishes; the limiting
    # direction is the indicator of the tied maxima, scaled to |y|_1 = k.
    peak = a == a.max(axis=-1, keepdims=True)
    count = peak.sum(axis=-1, keepdims=True)
    flat = np.where(peak, k / count, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(nr > 0, r / nr, flat)
    return np.sign(x) * y


def inf_conv_norm_ternary(x, k: float, tol: float = 1e-12) -> float:
    """Reference evaluation of ``||x||'_k`` by ternary search on ``g``."""
    k = _check_k(k)
    a = np.abs(np.asarray(x, dtype=float).ravel())

    def g(tau: float) -> float:
        return math.sqrt(float(np.sum(np.maximum(a - tau, 0.0) ** 2))) + k * tau

    lo, hi = 0.0, float(a.max(initial=0.0))
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if g(m1) <= g(m2):
            hi = m2
        else:
            lo = m1
    return g(0.5 * (lo + hi))


def tail_l2_surrogate(x, k: float) -> np.ndarray | float:
    """l2 norm of the ``ceil(k^2)`` largest coordinates (clamped to n)."""
    k = _check_k(k)
    x = _prepare(x)
    n = x.shape[-1]
    top = min(n, math.ceil(k * k - 1e-12))
    top = max(top, 1)
    a = rearrange_desc_abs(x)[..., :top]
    val = np.sqrt(np.sum(a**2, axis=-1))
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class PsiAlphaEstimate:
    alpha: float
    value: float
    method: str = "max_p (E|f|^p)^(1/p) / p^(1/alpha), p in 1,2,4,8,16"
    argmax_p: int = 1


def psi_alpha_estimate(samples, alpha: float) -> PsiAlphaEstimate:
    """Moment-ratio proxy for the psi_alpha Orlicz norm of a sample.

    Homogeneous of degree one in the samples; constants are only meaningful
    when compared across configurations.
    """
    f = np.abs(np.asarray(samples, dtype=float).ravel())
    if f.size < 100:
        raise ValueError(f"need at least 100 samples, got {f.size}")
    if not 0.5 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [1/2, 2], got {alpha}")
    scale = f.max(initial=0.0)
    if scale == 0.0:
        return PsiAlphaEstimate(alpha=float(alpha), value=0.0)
    # Moments of f/scale avoid overflow at p = 16.
    g = f / scale
    ratios = [scale * np.mean(g**p) ** (1.0 / p) / p ** (1.0 / alpha) for p in MOMENT_ORDERS]
    best = int(np.argmax(ratios))
    return PsiAlphaEstimate(alpha=float(alpha), value=float(ratios[best]), argmax_p=MOMENT_ORDERS[best])
