"""Geometric functionals of support-function bodies.

Extremes of ``h`` over the sphere are searched for, never certified: the
maximum found is a lower bound on the circumradius and the minimum an upper
bound on the inradius. Searches run on ``body.surrogate(...)``, which for a
Monte Carlo body is a fixed sign sample (common random numbers, so every
direction sees the same smooth surface); the best candidates are then
re-evaluated with the body's own evaluator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bodies import SupportBody
from .linalg import Seed, derive_seed, reflect, sample_sphere, unit_vector
from .stats import EstimateWithCI, mean_with_ci

__all__ = [
    "DegenerateBodyError",
    "EstimatorConfig",
    "SandwichReport",
    "DefectReport",
    "mean_width",
    "maximize_support",
    "minimize_support",
    "circumradius",
    "diameter",
    "sandwich",
    "unconditionality_report",
    "unconditionality_defect",
    "symmetry_defect",
    "l1_envelope_defect",
]

_TINY = 1e-300

_DEGENERATE_RATIO = 1e-8


class DegenerateBodyError(ValueError):
    """The support function vanished where a body with interior cannot."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Sample counts and search knobs shared by the estimators and pipeline."""

    n_dirs: int = 64
    mc_samples: int = 20_000
    exact_cap: int = 20
    starts: int = 16
    steps: int = 40
    search_samples: int = 2_000
    n_tests: int = 32
    step0: float = 0.1
    decay: float = 0.9
    paired_dirs: int = 16
    timing: bool = False

    def __post_init__(self):
        if self.n_dirs < 2 or self.starts < 1 or self.steps < 0 or self.mc_samples < 2:
            raise ValueError(f"invalid estimator configuration: {self}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SandwichReport:
    h_min: float
    h_max: float
    ratio: float
    directions: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DefectReport:
    defect: float  # max relative |h(x) - h(Fx)|
    ci_ratio: float  # max |h(x) - h(Fx)| / combined 95% half-width (0 when exact)
    tests: int


def mean_width(
    body: SupportBody,
    n_dirs: int = 64,
    seed: Seed = 0,
    paired: bool = False,
    pairing_direction=None,
) -> EstimateWithCI:
    """Monte Carlo half mean width: the average of ``h`` over the sphere.

    With ``paired=True`` the directions come in pairs ``{x, pi_u x}``. Since
    symmetrizing in ``u`` replaces ``h`` by ``(h + h o pi_u) / 2``, the pair
    sums, and hence the estimate, are unchanged by that symmetrization.
    """
    if n_dirs < 2:
        raise ValueError("n_dirs must be at least 2")
    n = body.n
    if not paired:
        x = sample_sphere(n, seed, "mean-width", size=n_dirs)
        return mean_with_ci(body.support(x))
    if pairing_direction is None:
        raise ValueError("paired estimation needs a pairing direction")
    u = unit_vector(pairing_direction)
    x = sample_sphere(n, seed, "mean-width", size=n_dirs // 2)
    both = np.concatenate([x, reflect(x, u)])
    h = body.support(both)
    half = x.shape[0]
    return mean_with_ci(0.5 * (h[:half] + h[half:]))


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _initial(body, n_starts, seed, init, label, largest: bool):
    pool = sample_sphere(body.n, seed, label, size=4 * n_starts)
    if init is not None:
        pool = np.concatenate([np.atleast_2d(np.asarray(init, dtype=float)), pool])
        pool = _normalize(pool)
    vals = np.atleast_1d(body.support(pool))
    order = np.argsort(-vals if largest else vals, kind="stable")[:n_starts]
    return pool[order], vals[order]


def _fd_gradient(body, x, delta=1e-6):
    """Central-difference gradient of ``h`` at each row of ``x``."""
    p, n = x.shape
    eye = np.eye(n) * delta
    plus = body.support((x[:, None, :] + eye[None]).reshape(-1, n)).reshape(p, n)
    minus = body.support((x[:, None, :] - eye[None]).reshape(-1, n)).reshape(p, n)
    return (plus - minus) / (2 * delta)


def _ascend(body, x, vals, steps):
    """Support-point iteration ``x <- y(x) / |y(x)|``.

    For a support function ``h(y/|y|) >= <y/|y|, y> = |y| >= <x, y> = h(x)``,
    so each step is an ascent step.
    """
    best_x, best_v = x.copy(), vals.copy()
    for _ in range(steps):
        y = body.support_point(x)
        v = np.einsum("ij,ij->i", x, y)
        better = v > best_v
        best_x[better], best_v[better] = x[better], v[better]
        ny = np.linalg.norm(y, axis=1)
        if np.all(ny <= best_v * (1 + 1e-13)):
            break
        x = _normalize(np.where(ny[:, None] > 0, y, x))
    v = np.atleast_1d(body.support(x))
    better = v > best_v
    best_x[better], best_v[better] = x[better], v[better]
    return best_x, best_v


def _gradient_search(body, x, vals, steps, step0, decay, sign):
    """Projected (sub)gradient search on the sphere with step decay.

    ``sign=+1`` ascends, ``-1`` descends. A step is kept only if it improves
    the row's value; otherwise that row's step is halved.
    """
    step = np.full(x.shape[0], step0)
    for _ in range(steps):
        if body.has_support_point:
            g = body.support_point(x)
        else:
            g = _fd_gradient(body, x)
        g = g - np.einsum("ij,ij->i", g, x)[:, None] * x
        ng = np.linalg.norm(g, axis=1, keepdims=True)
        direction = np.where(ng > 0, g / np.where(ng > 0, ng, 1.0), 0.0)
        cand = _normalize(x + sign * step[:, None] * direction)
        cv = np.atleast_1d(body.support(cand))
        ok = sign * (cv - vals) > 0
        x = np.where(ok[:, None], cand, x)
        vals = np.where(ok, cv, vals)
        step = np.where(ok, step * decay, step * 0.5)
        if np.all(step < 1e-12):
            break
    return x, vals


def _finish(body, search, x, vals, largest: bool, keep: int = 3):
    if search is body:
        i = int(np.argmax(vals) if largest else np.argmin(vals))
        return float(vals[i]), x[i]
    order = np.argsort(-vals if largest else vals, kind="stable")[:keep]
    final = np.atleast_1d(body.support(x[order]))
    i = int(np.argmax(final) if largest else np.argmin(final))
    return float(final[i]), x[order][i]


def maximize_support(
    body: SupportBody,
    n_starts: int = 16,
    steps: int = 40,
    seed: Seed = 0,
    search_samples: int = 2_000,
    init=None,
    step0: float = 0.1,
    decay: float = 0.9,
):
    """Multi-start search for ``max h`` on the sphere; returns ``(value, direction)``."""
    search = body.surrogate(search_samples, derive_seed(seed, "search"))
    x, vals = _initial(search, n_starts, seed, init, "ascent-starts", largest=True)
    if search.has_support_point:
        x, vals = _ascend(search, x, vals, steps)
    else:
        x, vals = _gradient_search(search, x, vals, steps, step0, decay, +1)
    return _finish(body, search, x, vals, largest=True)


def minimize_support(
    body: SupportBody,
    n_starts: int = 16,
    steps: int = 40,
    seed: Seed = 0,
    search_samples: int = 2_000,
    init=None,
    step0: float = 0.1,
    decay: float = 0.9,
):
    """Multi-start search for ``min h`` on the sphere; returns ``(value, direction)``."""
    search = body.surrogate(search_samples, derive_seed(seed, "search"))
    x, vals = _initial(search, n_starts, seed, init, "descent-starts", largest=False)
    x, vals = _gradient_search(search, x, vals, steps, step0, decay, -1)
    return _finish(body, search, x, vals, largest=False)


def circumradius(
    body: SupportBody,
    n_starts: int = 16,
    ascent_steps: int = 40,
    seed: Seed = 0,
    search_samples: int = 2_000,
) -> float:
    """Lower bound on ``sup_{|x|=1} h(x)`` from multi-start ascent."""
    return maximize_support(body, n_starts, ascent_steps, seed, search_samples)[0]


class _DifferenceBody(SupportBody):
    """``K - K``: support ``h(x) + h(-x)``, circumradius = diameter of ``K``."""

    kind = "difference"
    symmetric = True

    def __init__(self, body: SupportBody):
        self.body = body
        self.n = body.n

    def _h(self, x):
        return self.body._h(x) + self.body._h(-x)

    def _point(self, x):
        return self.body._point(x) - self.body._point(-x)

    @property
    def has_support_point(self):
        return self.body.has_support_point

    def surrogate(self, samples, seed):
        s = self.body.surrogate(samples, seed)
        return self if s is self.body else _DifferenceBody(s)


def diameter(
    body: SupportBody,
    n_starts: int = 16,
    ascent_steps: int = 40,
    seed: Seed = 0,
    search_samples: int = 2_000,
) -> float:
    """Largest width ``h(u) + h(-u)``; twice the circumradius for symmetric bodies."""
    if body.symmetric:
        return 2.0 * circumradius(body, n_starts, ascent_steps, seed, search_samples)
    return circumradius(_DifferenceBody(body), n_starts, ascent_steps, seed, search_samples)


def sandwich(
    body: SupportBody,
    n_dirs: int = 64,
    seed: Seed = 0,
    n_starts: int = 16,
    steps: int = 40,
    search_samples: int = 2_000,
    step0: float = 0.1,
    decay: float = 0.9,
) -> SandwichReport:
    """Extremes of ``h`` over sampled unit directions, refined by ascent/descent."""
    if n_dirs < 10:
        raise ValueError("n_dirs must be at least 10")
    x = sample_sphere(body.n, seed, "sandwich", size=n_dirs)
    vals = np.atleast_1d(body.support(x))
    order = np.argsort(vals, kind="stable")
    k = min(n_starts, n_dirs)
    hi, _ = maximize_support(body, k, steps, seed, search_samples, init=x[order[::-1][:k]], step0=step0, decay=decay)
    lo, _ = minimize_support(body, k, steps, seed, search_samples, init=x[order[:k]], step0=step0, decay=decay)
    h_max = max(hi, float(vals.max()))
    h_min = min(lo, float(vals.min()))
    # A numerical search only approaches a zero of h, so flatness is judged relative to h_max.
    if not h_min > _DEGENERATE_RATIO * h_max:
        raise DegenerateBodyError(f"support function reached {h_min:g} (max {h_max:g}); the body has empty interior")
    return SandwichReport(h_min=h_min, h_max=h_max, ratio=h_max / h_min, directions=n_dirs)


def unconditionality_report(body: SupportBody, frame, n_tests: int = 32, seed: Seed = 0) -> DefectReport:
    """Compare ``h`` at random directions and at random sign flips of their frame coordinates."""
    frame = np.asarray(frame, dtype=float)
    x = sample_sphere(body.n, seed, "uncond-dirs", size=n_tests)
    signs = np.random.default_rng(derive_seed(seed, "uncond-signs")).choice([-1.0, 1.0], size=x.shape)
    flipped = ((x @ frame) * signs) @ frame.T
    h, hw = body.support_with_ci(np.concatenate([x, flipped]))
    h, hw = np.atleast_1d(h), np.atleast_1d(hw)
    diff = np.abs(h[:n_tests] - h[n_tests:])
    scale = np.maximum(h[:n_tests], _TINY)
    rss = np.hypot(hw[:n_tests], hw[n_tests:])
    with np.errstate(divide="ignore", invalid="ignore"):
        ci_ratio = np.where(rss > 0, diff / rss, 0.0)
    return DefectReport(float(np.max(diff / scale)), float(np.max(ci_ratio)), n_tests)


def unconditionality_defect(body: SupportBody, frame, n_tests: int = 32, seed: Seed = 0) -> float:
    """Largest relative change of ``h`` under sign flips in ``frame``; 0 if unconditional."""
    return unconditionality_report(body, frame, n_tests, seed).defect


def symmetry_defect(body: SupportBody, n_tests: int = 32, seed: Seed = 0) -> DefectReport:
    """Same comparison for ``x`` versus ``-x`` (central symmetry)."""
    x = sample_sphere(body.n, seed, "symmetry-dirs", size=n_tests)
    h, hw = body.support_with_ci(np.concatenate([x, -x]))
    h, hw = np.atleast_1d(h), np.atleast_1d(hw)
    diff = np.abs(h[:n_tests] - h[n_tests:])
    rss = np.hypot(hw[:n_tests], hw[n_tests:])
    with np.errstate(divide="ignore", invalid="ignore"):
        ci_ratio = np.where(rss > 0, diff / rss, 0.0)
    return DefectReport(float(np.max(diff / np.maximum(h[:n_tests], _TINY))), float(np.max(ci_ratio)), n_tests)


def l1_envelope_defect(body: SupportBody, frame, rho: float, n_dirs: int = 256, seed: Seed = 0) -> float:
    """Largest sampled excess of ``h`` over the support of ``rho sqrt(n) B(l1)`` in ``frame``.

    Zero means no sampled direction contradicts the containment; it is a
    necessary-condition probe, not a proof.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    frame = np.asarray(frame, dtype=float)
    x = sample_sphere(body.n, seed, "envelope", size=n_dirs)
    envelope = rho * math.sqrt(body.n) * np.max(np.abs(x @ frame), axis=1)
    return float(max(0.0, np.max(np.atleast_1d(body.support(x)) - envelope)))
