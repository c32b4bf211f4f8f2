"""Fast Monte Carlo checks of the probabilistic estimates behind the decay bounds.

Every probe is a pure function of its parameters and seed. Trials are drawn
in fixed-size chunks, each from its own sub-stream, so results never depend
on how the work is split.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .linalg import Seed, make_rng, max_overlap, sample_haar_basis
from .norms import psi_alpha_estimate

__all__ = [
    "ProbeReport",
    "summarize",
    "probe_basis_overlap",
    "probe_product_sum",
    "chaos_l2_proxy",
    "chaos_proxy_statistic",
    "chaos_samples",
    "probe_chaos_psi1",
    "unbiased_majorant",
    "probe_unbiased_directions",
    "top_k_rms",
    "sample_distribution",
    "probe_rearranged_moment",
    "DISTRIBUTIONS",
    "PROBES",
]

_CHUNK = 4096
QUANTILES = (0.5, 0.9, 0.99)
DISTRIBUTIONS = ("exponential", "gaussian_squared_half", "gaussian", "constant")


@dataclass
class ProbeReport:
    name: str
    n: int
    trials: int
    statistic: str
    summary: dict
    threshold: float | None
    success_rate: float | None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.success_rate is not None and not 0.0 <= self.success_rate <= 1.0:
            raise ValueError(f"success rate {self.success_rate} outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(values) -> dict:
    v = np.asarray(values, dtype=float).ravel()
    out = {"mean": float(v.mean()), "min": float(v.min()), "max": float(v.max())}
    for q in QUANTILES:
        out[f"q{round(q * 100)}"] = float(np.quantile(v, q))
    return out


def _rate(ok) -> float:
    return float(np.mean(np.asarray(ok, dtype=bool)))


def _check(n: int, trials: int, n_min: int = 2):
    if int(n) != n or n < n_min:
        raise ValueError(f"n must be an integer >= {n_min}, got {n!r}")
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials!r}")


def _chunks(trials: int):
    for c, start in enumerate(range(0, trials, _CHUNK)):
        yield c, min(_CHUNK, trials - start)


def _unit_rows(rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    g = rng.standard_normal((rows, n))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def probe_basis_overlap(n: int, trials: int = 200, c1: float = 5.0, seed: Seed = 0) -> ProbeReport:
    """Largest entry of a Haar orthogonal matrix against ``c1 sqrt(log n / n)``.

    The threshold is clamped at 1, where it holds trivially; the normalized
    maximum ``max sqrt(n / log n)`` is the statistic to compare across ``n``.
    """
    _check(n, trials)
    threshold = min(1.0, c1 * math.sqrt(math.log(n) / n))
    eye = np.eye(n)
    maxima = np.array([max_overlap(sample_haar_basis(n, seed, "basis-overlap", t), eye) for t in range(trials)])
    return ProbeReport(
        name="basis-overlap",
        n=n,
        trials=trials,
        statistic="max|<u_i,e_j>| * sqrt(n/log n)",
        summary=summarize(maxima * math.sqrt(n / math.log(n))),
        threshold=threshold,
        success_rate=_rate(maxima <= threshold),
        extra={"c1": c1, "clamped": threshold == 1.0, "raw": summarize(maxima)},
    )


def probe_product_sum(n: int, trials: int = 100_000, seed: Seed = 0, threshold: float = 10.0) -> ProbeReport:
    """``n sum_i x_i^2 y_i^2`` for independent uniform unit vectors ``x, y``."""
    _check(n, trials, n_min=1)
    stats = np.empty(trials)
    pos = 0
    for c, size in _chunks(trials):
        rng = make_rng(seed, "product-sum", c)
        x = _unit_rows(rng, size, n)
        y = _unit_rows(rng, size, n)
        stats[pos : pos + size] = n * np.sum(x**2 * y**2, axis=1)
        pos += size
    raw_mean = float(stats.mean()) / n
    return ProbeReport(
        name="product-sum",
        n=n,
        trials=trials,
        statistic="n * sum x_i^2 y_i^2",
        summary=summarize(stats),
        threshold=threshold,
        success_rate=_rate(stats < threshold),
        extra={"raw_mean": raw_mean, "relative_error_vs_1_over_n": abs(raw_mean * n - 1.0)},
    )


def chaos_l2_proxy(x, u_basis, v_basis) -> np.ndarray:
    """``sqrt(sum_j <x,v_j>^2 sum_k <v_j,u_k>^2 <u_k,e_i>^2)`` for every coordinate ``i``.

    This is the L2 norm of the degree-two chaos ``phi^i`` over uniform signs.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u_basis, dtype=float)
    v = np.asarray(v_basis, dtype=float)
    a2 = (x @ v) ** 2
    g2 = (v.T @ u) ** 2  # [j, k]
    return np.sqrt(a2 @ g2 @ (u.T**2))


def chaos_proxy_statistic(u_basis, v_basis) -> float:
    """``n max_{i,j} sum_k <v_j,u_k>^2 <u_k,e_i>^2``."""
    u = np.asarray(u_basis, dtype=float)
    v = np.asarray(v_basis, dtype=float)
    return float(u.shape[0] * np.max(((v.T @ u) ** 2) @ (u.T**2)))


def _all_signs(m: int) -> np.ndarray:
    codes = np.arange(1 << m, dtype=np.int64)
    return 1.0 - 2.0 * ((codes[:, None] >> np.arange(m)) & 1).astype(float)


def chaos_samples(x, u_basis, v_basis, samples: int = 10_000, seed: Seed = 0, exact_max_n: int = 8) -> np.ndarray:
    """Realizations of ``phi_i = sum_{j,k} eps_j eps'_k <x,v_j><v_j,u_k><u_k,e_i>``.

    Returns an ``(S, n)`` array. For ``n <= exact_max_n`` all ``4^n`` sign
    pairs are enumerated, so the rows are the exact law of ``phi``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u_basis, dtype=float)
    v = np.asarray(v_basis, dtype=float)
    n = x.shape[0]
    w = (x @ v)[:, None] * (v.T @ u)  # w[j, k] = <x,v_j><v_j,u_k>
    if n <= exact_max_n:
        e = _all_signs(n)
        jj, kk = np.meshgrid(np.arange(e.shape[0]), np.arange(e.shape[0]), indexing="ij")
        eps, eps2 = e[jj.ravel()], e[kk.ravel()]
    else:
        rng = make_rng(seed, "chaos-signs")
        eps = rng.integers(0, 2, size=(samples, n)) * 2.0 - 1.0
        eps2 = rng.integers(0, 2, size=(samples, n)) * 2.0 - 1.0
    return ((eps @ w) * eps2) @ u.T


def _psi1_columns(phi: np.ndarray) -> np.ndarray:
    if phi.shape[0] < 100:
        # An exact enumeration repeated has the same law and the same moments.
        phi = np.tile(phi, (math.ceil(100 / phi.shape[0]), 1))
    return np.array([psi_alpha_estimate(phi[:, i], 1.0).value for i in range(phi.shape[1])])


def probe_chaos_psi1(
    n: int, trials: int = 100, seed: Seed = 0, samples: int = 10_000, threshold: float = 10.0
) -> ProbeReport:
    """psi_1 size of the chaos ``phi^i_x`` for Haar bases and a random unit ``x``.

    ``summary`` describes ``sqrt(n) max_i psi_1(phi^i)``; ``extra.proxy``
    describes the L2 proxy statistic ``n max_{i,j} sum_k ...``.
    """
    _check(n, trials)
    psi = np.empty(trials)
    proxy = np.empty(trials)
    for t in range(trials):
        u = sample_haar_basis(n, seed, "chaos-u", t)
        v = sample_haar_basis(n, seed, "chaos-v", t)
        x = _unit_rows(make_rng(seed, "chaos-x", t), 1, n)[0]
        phi = chaos_samples(x, u, v, samples, seed=int(make_rng(seed, "chaos-eps", t).integers(2**63)))
        psi[t] = math.sqrt(n) * float(np.max(_psi1_columns(phi)))
        proxy[t] = chaos_proxy_statistic(u, v)
    return ProbeReport(
        name="chaos-psi1",
        n=n,
        trials=trials,
        statistic="sqrt(n) * max_i psi1(phi^i_x)",
        summary=summarize(psi),
        threshold=threshold,
        success_rate=_rate(psi <= threshold),
        extra={"proxy": summarize(proxy), "samples": samples, "exact": n <= 8},
    )


def unbiased_majorant(x, y, u_basis, v_basis) -> float:
    """``sqrt(sum_{i,j} <x,v_i>^2 <v_i,u_j>^2 <u_j,y>^2)``."""
    u = np.asarray(u_basis, dtype=float)
    v = np.asarray(v_basis, dtype=float)
    a2 = (np.asarray(x, dtype=float) @ v) ** 2
    b2 = (np.asarray(y, dtype=float) @ u) ** 2
    return float(math.sqrt(max(a2 @ ((v.T @ u) ** 2) @ b2, 0.0)))


def probe_unbiased_directions(
    n: int, trials: int = 1000, seed: Seed = 0, c1: float = 5.0, slack: float = 1e-12
) -> ProbeReport:
    """Majorant against ``max|<v_i,u_j>|``, which must dominate it on every draw.

    The weights ``<x,v_i>^2`` and ``<u_j,y>^2`` each sum to one, so the
    majorant squared is a weighted average of squared overlaps. Success
    means ``majorant sqrt(n / log n) <= 2 c1``.
    """
    _check(n, trials)
    stats = np.empty(trials)
    violations = 0
    worst = -math.inf
    for t in range(trials):
        u = sample_haar_basis(n, seed, "unbiased-u", t)
        v = sample_haar_basis(n, seed, "unbiased-v", t)
        xy = _unit_rows(make_rng(seed, "unbiased-xy", t), 2, n)
        m = unbiased_majorant(xy[0], xy[1], u, v)
        gap = m - max_overlap(v, u)
        worst = max(worst, gap)
        violations += gap > slack
        stats[t] = m * math.sqrt(n / math.log(n))
    return ProbeReport(
        name="unbiased-directions",
        n=n,
        trials=trials,
        statistic="majorant * sqrt(n/log n)",
        summary=summarize(stats),
        threshold=2.0 * c1,
        success_rate=_rate(stats <= 2.0 * c1),
        extra={"violations": int(violations), "max_excess_over_overlap": worst, "slack": slack, "c1": c1},
    )


def top_k_rms(samples, k: int) -> np.ndarray:
    """``sqrt((1/k) sum_{i<=k} (X_i*)^2)`` along the last axis."""
    a = np.abs(np.asarray(samples, dtype=float))
    n = a.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    top = -np.partition(-a, k - 1, axis=-1)[..., :k] if k < n else a
    return np.sqrt(np.mean(top**2, axis=-1))


def sample_distribution(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    if dist == "exponential":
        return rng.exponential(size=shape)
    if dist == "gaussian_squared_half":
        return 0.5 * rng.standard_normal(shape) ** 2
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "constant":
        return np.ones(shape)
    raise ValueError(f"unknown distribution {dist!r}; choose from {DISTRIBUTIONS}")


def probe_rearranged_moment(
    n: int, k: int, trials: int = 10_000, dist: str = "exponential", seed: Seed = 0, threshold: float = 2.0
) -> ProbeReport:
    """Top-``k`` RMS of ``n`` i.i.d. draws against ``log(2n/k)``.

    For the Gaussian the normalizer is ``sqrt(log(2n/k))``. Success compares
    each trial's normalized statistic with ``threshold``.
    """
    _check(n, trials, n_min=1)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, n={n}], got {k}")
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {dist!r}; choose from {DISTRIBUTIONS}")
    stats = np.empty(trials)
    pos = 0
    for c, size in _chunks(trials):
        x = sample_distribution(make_rng(seed, "rearranged", dist, c), dist, (size, n))
        stats[pos : pos + size] = top_k_rms(x, k)
        pos += size
    log_term = math.log(2.0 * n / k)
    norm = math.sqrt(log_term) if dist == "gaussian" else log_term
    ratio = stats / norm
    return ProbeReport(
        name="rearranged-moment",
        n=n,
        trials=trials,
        statistic="sqrt(mean of top-k squares)",
        summary=summarize(stats),
        threshold=threshold,
        success_rate=_rate(ratio <= threshold),
        extra={"k": k, "dist": dist, "normalizer": norm, "mean_ratio": float(stats.mean()) / norm},
    )


PROBES = {
    "basis-overlap": probe_basis_overlap,
    "product-sum": probe_product_sum,
    "chaos-psi1": probe_chaos_psi1,
    "unbiased-directions": probe_unbiased_directions,
    "rearranged-moment": probe_rearranged_moment,
}
