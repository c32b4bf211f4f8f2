"""Convex bodies known only through their support functions.

``h_K(x) = sup_{y in K} <x, y>``. Every body evaluates ``h`` on arrays of
shape ``(..., n)``; most also return a maximizing point ``y`` (a
supergradient of ``h``), which the estimators use for ascent.

A :class:`SymmetrizedBody` never builds the Minkowski average explicitly.
After reflections ``u_1, ..., u_m``

    h(x) = 2^-m  sum_{D subset {1..m}}  h_base((prod_{i in D} pi_{u_i}) x),

with later reflections applied to ``x`` first. The reflections are kept in
blocks of mutually orthogonal directions (one block per orthogonal basis);
inside a block they commute, so a choice of signs ``eps`` acts as
``y -> y + B ((eps - 1) * (B^T y))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import Seed, check_orthonormal, make_rng, unit_vector
from .norms import inf_conv_norm, inf_conv_point
from .stats import Z95, EstimateWithCI

__all__ = [
    "EvaluationModeError",
    "SupportBody",
    "EuclideanBall",
    "PolytopeHull",
    "ScaledCrossPolytope",
    "IntersectionBody",
    "CallableBody",
    "Exact",
    "MonteCarlo",
    "SymmetrizedBody",
    "symmetrize",
    "symmetrize_basis",
    "cross_dual_norm",
    "kt_dual_norm",
    "body_to_dict",
    "body_from_dict",
    "DEFAULT_EXACT_CAP",
]

DEFAULT_EXACT_CAP = 20
# Upper bound on float64 entries held by one evaluation chunk.
_CHUNK_ELEMS = 1 << 21


class EvaluationModeError(ValueError):
    """Exact enumeration requested beyond the configured reflection cap."""


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != n:
        raise ValueError(f"dimension mismatch: expected last axis {n}, got shape {x.shape}")
    return x


def _frame_or_none(frame, n: int):
    if frame is None:
        return None
    f = check_orthonormal(frame)
    if f.shape[0] != n:
        raise ValueError(f"frame has dimension {f.shape[0]}, body has {n}")
    if np.array_equal(f, np.eye(n)):
        return None
    return f


class SupportBody:
    """Base class. Subclasses set ``n`` and implement ``_h`` (and ``_point``)."""

    n: int
    symmetric: bool = False
    kind: str = "abstract"

    def support(self, x):
        x = _as_points(x, self.n)
        val = self._h(x)
        return float(val) if np.ndim(val) == 0 else val

    def support_with_ci(self, x):
        """Support values with 95% half-widths (zero for exact evaluators)."""
        val = self.support(x)
        return val, np.zeros_like(val) if np.ndim(val) else 0.0

    def support_point(self, x) -> np.ndarray:
        x = _as_points(x, self.n)
        return self._point(x)

    @property
    def has_support_point(self) -> bool:
        return type(self)._point is not SupportBody._point

    def surrogate(self, samples: int, seed: Seed) -> "SupportBody":
        """A cheap, deterministic stand-in for searches (self when already cheap)."""
        return self

    def _h(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _point(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no support-point oracle")

    def params(self) -> dict:
        raise NotImplementedError


class EuclideanBall(SupportBody):
    kind = "ball"
    symmetric = True

    def __init__(self, n: int, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.n = int(n)
        self.radius = float(radius)

    def _h(self, x):
        return self.radius * np.linalg.norm(x, axis=-1)

    def _point(self, x):
        nx = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(nx > 0, self.radius * x / nx, 0.0)

    def params(self):
        return {"radius": self.radius}


class PolytopeHull(SupportBody):
    """Convex hull of a finite point set; ``h(x) = max_v <x, v>``."""

    kind = "hull"

    def __init__(self, vertices):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if v.size == 0 or v.ndim != 2:
            raise ValueError("need a non-empty (count, n) vertex array")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        self.vertices = v
        self.n = v.shape[1]
        vs = {tuple(row) for row in v.tolist()}
        self.symmetric = all(tuple((-row).tolist()) in vs for row in v)

    def _h(self, x):
        return np.max(x @ self.vertices.T, axis=-1)

    def _point(self, x):
        return self.vertices[np.argmax(x @ self.vertices.T, axis=-1)]

    def params(self):
        return {"vertices": self.vertices.tolist()}


class ScaledCrossPolytope(SupportBody):
    """``scale * conv{+-e_i}`` for the columns ``e_i`` of ``frame``."""

    kind = "cross"
    symmetric = True

    def __init__(self, n: int, scale: float | None = None, frame=None):
        self.n = int(n)
        if self.n < 1:
            raise ValueError("n must be positive")
        self.scale = math.sqrt(self.n) if scale is None else float(scale)
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        self._frame = _frame_or_none(frame, self.n)

    @property
    def frame(self) -> np.ndarray:
        return np.eye(self.n) if self._frame is None else self._frame

    def _coords(self, x):
        return x if self._frame is None else x @ self._frame

    def _h(self, x):
        return self.scale * np.max(np.abs(self._coords(x)), axis=-1)

    def _point(self, x):
        c = self._coords(x)
        idx = np.argmax(np.abs(c), axis=-1)
        sgn = np.sign(np.take_along_axis(c, idx[..., None], axis=-1))
        sgn[sgn == 0] = 1.0
        if self._frame is None:
            y = np.zeros(x.shape)
            np.put_along_axis(y, idx[..., None], self.scale * sgn, axis=-1)
            return y
        return self.scale * sgn * self._frame.T[idx]

    def params(self):
        return {"scale": self.scale, "frame": None if self._frame is None else self._frame.tolist()}


class IntersectionBody(SupportBody):
    """``sqrt(n) B(l1) cap t B(l2)``, with ``h(x) = t * ||x||'_{sqrt(n)/t}``."""

    kind = "kt"
    symmetric = True

    def __init__(self, n: int, t: float):
        self.n = int(n)
        self.t = float(t)
        if not 0 < self.t <= math.sqrt(self.n) * (1 + 1e-12):
            raise ValueError(f"t must lie in (0, sqrt(n)], got {t}")
        self.k = math.sqrt(self.n) / self.t

    def _h(self, x):
        return self.t * inf_conv_norm(x, self.k)

    def _point(self, x):
        return self.t * inf_conv_point(x, self.k)

    def params(self):
        return {"t": self.t}


class CallableBody(SupportBody):
    """Wraps a plain support function; no support-point oracle."""

    kind = "callable"

    def __init__(self, n: int, fn, symmetric: bool = False):
        self.n = int(n)
        self.fn = fn
        self.symmetric = symmetric

    def _h(self, x):
        return np.asarray(self.fn(x), dtype=float)

    def params(self):
        raise TypeError("callable bodies are not serializable")


@dataclass(frozen=True)
class Exact:
    """Enumerate all 2^m sign patterns."""


@dataclass(frozen=True)
class MonteCarlo:
    """Average over ``samples`` random sign patterns drawn from ``seed``."""

    samples: int = 20_000
    seed: Seed = 0

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("need at least two Monte Carlo samples")


def _all_sign_patterns(r: int) -> np.ndarray:
    codes = np.arange(1 << r, dtype=np.int64)
    return 1.0 - 2.0 * ((codes[:, None] >> np.arange(r)) & 1).astype(float)


def _axis_indices(block: np.ndarray):
    """Coordinate indices if every column is +-e_i, else None."""
    nz = np.abs(block) > 0
    if not np.all(nz.sum(axis=0) == 1):
        return None
    idx = np.argmax(nz, axis=0)
    if not np.allclose(np.abs(block[idx, np.arange(block.shape[1])]), 1.0, rtol=0, atol=0):
        return None
    return idx


class SymmetrizedBody(SupportBody):
    """A base body followed by a stack of Minkowski symmetrizations."""

    kind = "symmetrized"

    def __init__(
        self,
        base: SupportBody,
        blocks: Sequence = (),
        mode: Exact | MonteCarlo = Exact(),
        exact_cap: int = DEFAULT_EXACT_CAP,
        _eps=None,
    ):
        if isinstance(base, SymmetrizedBody):
            raise TypeError("nest by extending the stack, not by wrapping")
        self.base = base
        self.n = base.n
        self.mode = mode
        self.exact_cap = int(exact_cap)
        blks = []
        for b in blocks:
            b = np.asarray(b, dtype=float)
            if b.ndim == 1:
                b = b[:, None]
            if b.shape[0] != self.n or b.shape[1] == 0:
                raise ValueError(f"block shape {b.shape} does not fit dimension {self.n}")
            if np.max(np.abs(b.T @ b - np.eye(b.shape[1]))) > 1e-10:
                raise ValueError("block directions must be orthonormal")
            b.setflags(write=False)
            blks.append(b)
        self.blocks = tuple(blks)
        self._axes = tuple(_axis_indices(b) for b in self.blocks)
        self.m = sum(b.shape[1] for b in self.blocks)
        self.symmetric = base.symmetric or any(b.shape[1] == self.n for b in self.blocks)
        if isinstance(mode, Exact) and self.m > self.exact_cap:
            raise EvaluationModeError(
                f"{self.m} reflections exceed the exact cap {self.exact_cap}; use MonteCarlo mode"
            )
        if isinstance(mode, MonteCarlo):
            self._eps = _eps if _eps is not None else self._draw_signs(0, self.m)
        else:
            self._eps = None

    # construction -------------------------------------------------------

    @property
    def directions(self) -> np.ndarray:
        """All reflection directions as columns, in stack order."""
        if not self.blocks:
            return np.zeros((self.n, 0))
        return np.hstack(self.blocks)

    def _draw_signs(self, start: int, stop: int) -> np.ndarray:
        # One independent stream per reflection index, so extending the
        # stack never changes the signs of earlier reflections.
        s = self.mode.samples
        cols = [
            make_rng(self.mode.seed, "eps", i).integers(0, 2, size=s).astype(float) * 2.0 - 1.0
            for i in range(start, stop)
        ]
        return np.column_stack(cols) if cols else np.zeros((s, 0))

    def _replace(self, blocks, mode=None) -> "SymmetrizedBody":
        mode = self.mode if mode is None else mode
        eps = None
        if isinstance(mode, MonteCarlo) and mode == self.mode and self._eps is not None:
            m_new = sum(np.asarray(b).reshape(self.n, -1).shape[1] for b in blocks)
            eps = np.hstack([self._eps, self._draw_signs(self.m, m_new)]) if m_new > self.m else None
        return SymmetrizedBody(self.base, blocks, mode, self.exact_cap, _eps=eps)

    def with_mode(self, mode: Exact | MonteCarlo) -> "SymmetrizedBody":
        return SymmetrizedBody(self.base, self.blocks, mode, self.exact_cap)

    def add_reflection(self, u) -> "SymmetrizedBody":
        """Append one reflection; merged into the last block when orthogonal to it."""
        u = unit_vector(u)
        if u.shape != (self.n,):
            raise ValueError(f"dimension mismatch: {u.shape} vs ({self.n},)")
        blocks = list(self.blocks)
        if blocks and blocks[-1].shape[1] < self.n and np.max(np.abs(blocks[-1].T @ u)) < 1e-12:
            blocks[-1] = np.column_stack([blocks[-1], u])
        else:
            blocks.append(u[:, None])
        return self._replace(blocks)

    def add_basis(self, basis, skip_last: bool) -> "SymmetrizedBody":
        b = check_orthonormal(basis)
        if b.shape[0] != self.n:
            raise ValueError(f"basis dimension {b.shape[0]} does not match body dimension {self.n}")
        if skip_last:
            b = b[:, :-1]
        if b.shape[1] == 0:
            return self
        return self._replace(list(self.blocks) + [b])

    # evaluation ---------------------------------------------------------

    def _sign_blocks(self, eps: np.ndarray):
        out, start = [], 0
        for b in self.blocks:
            r = b.shape[1]
            out.append(eps[:, start : start + r])
            start += r
        return out

    def _apply(self, y: np.ndarray, signs, transpose: bool) -> np.ndarray:
        """Apply the sign pattern to ``y`` of shape (P, S, n), in place."""
        order = range(len(self.blocks))
        if not transpose:
            order = reversed(order)
        for i in order:
            e = signs[i]
            idx = self._axes[i]
            if idx is not None:
                y[:, :, idx] *= e[None]
            else:
                b = self.blocks[i]
                c = y @ b
                c *= e[None] - 1.0
                y += c @ b.T
        return y

    def _pattern_chunks(self):
        """Chunks of the Monte Carlo sign sample."""
        eps = self._eps
        step = max(1, _CHUNK_ELEMS // (self.n * 8))
        for s in range(0, eps.shape[0], step):
            yield eps[s : s + step]

    @property
    def pattern_count(self) -> int:
        return self._eps.shape[0] if isinstance(self.mode, MonteCarlo) else 1 << self.m

    def _moments(self, x: np.ndarray):
        flat = x.reshape(-1, self.n)
        p_total = flat.shape[0]
        s1 = np.zeros(p_total)
        s2 = np.zeros(p_total)
        if isinstance(self.mode, Exact):
            p_step = max(1, _CHUNK_ELEMS // self.n)
            for p in range(0, p_total, p_step):
                for leaves in self._exact_leaves(flat[p : p + p_step, None, :], len(self.blocks) - 1):
                    h = self.base._h(leaves)
                    s1[p : p + p_step] += h.sum(axis=1)
                    s2[p : p + p_step] += (h * h).sum(axis=1)
            return s1.reshape(x.shape[:-1]), s2.reshape(x.shape[:-1])
        for eps in self._pattern_chunks():
            signs = self._sign_blocks(eps)
            p_step = max(1, _CHUNK_ELEMS // (eps.shape[0] * self.n))
            for p in range(0, p_total, p_step):
                xs = flat[p : p + p_step]
                y = np.repeat(xs[:, None, :], eps.shape[0], axis=1)
                h = self.base._h(self._apply(y, signs, transpose=False))
                s1[p : p + p_step] += h.sum(axis=1)
                s2[p : p + p_step] += (h * h).sum(axis=1)
        return s1.reshape(x.shape[:-1]), s2.reshape(x.shape[:-1])

    # Exact enumeration is a product over blocks, so each block is applied
    # only to the distinct partial images produced by the blocks after it.

    def _block_patterns(self, level: int, rows: int):
        r = self.blocks[level].shape[1]
        pats = _all_sign_patterns(r)
        step = max(1, _CHUNK_ELEMS // max(1, rows * self.n))
        for q in range(0, pats.shape[0], step):
            yield pats[q : q + step]

    def _block_apply(self, level: int, y: np.ndarray, pats: np.ndarray) -> np.ndarray:
        """``y`` of shape (P, S, Q or 1, n) with pattern ``q`` acting on slot ``q``."""
        idx = self._axes[level]
        if idx is not None:
            flips = np.ones((pats.shape[0], self.n))
            flips[:, idx] = pats
            return y * flips
        b = self.blocks[level]
        c = (y @ b) * (pats - 1.0)
        return y + c @ b.T

    def _exact_leaves(self, y: np.ndarray, level: int):
        """Yield chunks (P, S, n) of all images of ``y`` (P, S0, n) under blocks ``level..0``."""
        if level < 0:
            yield y
            return
        p, s, n = y.shape
        for pats in self._block_patterns(level, p * s):
            z = self._block_apply(level, y[:, :, None, :], pats).reshape(p, -1, n)
            yield from self._exact_leaves(z, level - 1)

    def _exact_point_sum(self, y: np.ndarray, level: int) -> np.ndarray:
        """Sum over patterns of blocks ``level..0`` of the pushed-back support points."""
        if level < 0:
            return self.base._point(y)
        p, s, n = y.shape
        acc = np.zeros_like(y)
        for pats in self._block_patterns(level, p * s):
            q = pats.shape[0]
            z = self._block_apply(level, y[:, :, None, :], pats).reshape(p, -1, n)
            w = self._exact_point_sum(z, level - 1).reshape(p, s, q, n)
            acc += self._block_apply(level, w, pats).sum(axis=2)
        return acc

    def _h(self, x):
        s1, _ = self._moments(x)
        return s1 / self.pattern_count

    def support_with_ci(self, x):
        x = _as_points(x, self.n)
        s1, s2 = self._moments(x)
        cnt = self.pattern_count
        mean = s1 / cnt
        if isinstance(self.mode, Exact):
            hw = np.zeros_like(mean)
        else:
            var = np.maximum(s2 / cnt - mean**2, 0.0) * cnt / (cnt - 1)
            hw = Z95 * np.sqrt(var / cnt)
        if np.ndim(mean) == 0:
            return float(mean), float(hw)
        return mean, hw

    def _point(self, x):
        flat = x.reshape(-1, self.n)
        p_total = flat.shape[0]
        acc = np.zeros_like(flat)
        if isinstance(self.mode, Exact):
            p_step = max(1, _CHUNK_ELEMS // self.n)
            for p in range(0, p_total, p_step):
                acc[p : p + p_step] = self._exact_point_sum(flat[p : p + p_step, None, :], len(self.blocks) - 1)[:, 0]
            return (acc / self.pattern_count).reshape(x.shape)
        for eps in self._pattern_chunks():
            signs = self._sign_blocks(eps)
            p_step = max(1, _CHUNK_ELEMS // (eps.shape[0] * self.n))
            for p in range(0, p_total, p_step):
                xs = flat[p : p + p_step]
                y = np.repeat(xs[:, None, :], eps.shape[0], axis=1)
                y = self._apply(y, signs, transpose=False)
                z = self._apply(self.base._point(y), signs, transpose=True)
                acc[p : p + p_step] += z.sum(axis=1)
        return (acc / self.pattern_count).reshape(x.shape)

    @property
    def has_support_point(self) -> bool:
        return self.base.has_support_point

    def surrogate(self, samples: int, seed: Seed) -> "SymmetrizedBody":
        if self.pattern_count <= samples:
            return self
        return self.with_mode(MonteCarlo(samples, seed))

    def params(self):
        mode = (
            {"type": "exact"}
            if isinstance(self.mode, Exact)
            else {"type": "monte_carlo", "samples": self.mode.samples, "seed": self.mode.seed}
        )
        return {
            "base": body_to_dict(self.base),
            "blocks": [b.tolist() for b in self.blocks],
            "mode": mode,
            "exact_cap": self.exact_cap,
        }


def _lift(body: SupportBody, mode=None, exact_cap: int | None = None) -> SymmetrizedBody:
    if isinstance(body, SymmetrizedBody):
        if mode is not None and mode != body.mode:
            body = body.with_mode(mode)
        return body
    return SymmetrizedBody(
        body, (), Exact() if mode is None else mode, DEFAULT_EXACT_CAP if exact_cap is None else exact_cap
    )


def symmetrize(body: SupportBody, u, mode=None) -> SymmetrizedBody:
    """Minkowski symmetrization ``(K + pi_u K) / 2``."""
    return _lift(body, mode).add_reflection(u)


def symmetrize_basis(body: SupportBody, basis, skip_last: bool, mode=None) -> SymmetrizedBody:
    """Symmetrize successively in the basis columns (all but the last if ``skip_last``)."""
    return _lift(body, mode).add_basis(basis, skip_last)


# closed-form evaluators --------------------------------------------------


def _resolve_mode(mode: str, count_exponent: int, exact_limit: int) -> str:
    if mode not in ("exact", "mc", "auto"):
        raise ValueError(f"mode must be 'exact', 'mc' or 'auto', got {mode!r}")
    if mode == "auto":
        return "exact" if count_exponent <= exact_limit else "mc"
    if mode == "exact" and count_exponent > exact_limit:
        raise EvaluationModeError(
            f"exact enumeration of 2^{count_exponent} patterns exceeds the cap 2^{exact_limit}; use mode='mc'"
        )
    return mode


def _all_signs(m: int) -> np.ndarray:
    codes = np.arange(1 << m, dtype=np.int64)
    return 1.0 - 2.0 * ((codes[:, None] >> np.arange(m)) & 1).astype(float)


def _signs(n: int, mode: str, samples: int, seed: Seed, label: str) -> np.ndarray:
    """Sign patterns for n-1 reflections, last coordinate fixed to +1."""
    if mode == "exact":
        e = _all_signs(n - 1)
    else:
        e = make_rng(seed, label).integers(0, 2, size=(samples, n - 1)).astype(float) * 2.0 - 1.0
    return np.column_stack([e, np.ones(e.shape[0])])


def _estimate(vals: np.ndarray, exact: bool) -> EstimateWithCI:
    if exact:
        return EstimateWithCI(float(vals.mean()), 0.0, int(vals.size))
    hw = Z95 * float(vals.std(ddof=1)) / math.sqrt(vals.size)
    return EstimateWithCI(float(vals.mean()), hw, int(vals.size))


def cross_dual_norm(
    x, u_basis, e_basis=None, mode: str = "auto", samples: int = 20_000, seed: Seed = 0, exact_limit: int = 20
) -> EstimateWithCI:
    """Support function of ``sqrt(n) conv{+-e_j}`` symmetrized by ``u_1..u_{n-1}``.

    Averages ``max_j sqrt(n) |sum_i eps_i <x,u_i><u_i,e_j>|`` over signs.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    u = check_orthonormal(u_basis)
    e = np.eye(n) if e_basis is None else check_orthonormal(e_basis)
    if u.shape[0] != n or e.shape[0] != n:
        raise ValueError("dimension mismatch")
    if n == 1:
        return EstimateWithCI(float(abs(x[0])), 0.0, 1)
    mode = _resolve_mode(mode, n - 1, exact_limit)
    coef = (x @ u)[:, None] * (u.T @ e)  # coef[i, j] = <x,u_i><u_i,e_j>
    eps = _signs(n, mode, samples, seed, "cross-dual")
    vals = np.empty(eps.shape[0])
    step = max(1, _CHUNK_ELEMS // n)
    for s in range(0, eps.shape[0], step):
        vals[s : s + step] = math.sqrt(n) * np.max(np.abs(eps[s : s + step] @ coef), axis=1)
    return _estimate(vals, mode == "exact")


def kt_dual_norm(
    x, t: float, u_basis, v_basis, mode: str = "auto", samples: int = 20_000, seed: Seed = 0, exact_limit: int = 18
) -> EstimateWithCI:
    """Support function of ``K_t`` symmetrized by ``u_1..u_{n-1}`` then ``v_1..v_{n-1}``.

    Averages ``t ||phi(eps, eps')||'_{sqrt(n)/t}`` where
    ``phi_i = sum_{j,k} eps_j eps'_k <x,v_j><v_j,u_k><u_k,e_i>``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    u = check_orthonormal(u_basis)
    v = check_orthonormal(v_basis)
    body = IntersectionBody(n, t)
    if n == 1:
        return EstimateWithCI(float(body.support(x)), 0.0, 1)
    mode = _resolve_mode(mode, 2 * (n - 1), exact_limit)
    w = (x @ v)[:, None] * (v.T @ u)  # w[j, k] = <x,v_j><v_j,u_k>
    if mode == "exact":
        e1 = _signs(n, "exact", 0, 0, "")
        pairs = np.arange(e1.shape[0])
        jj, kk = np.meshgrid(pairs, pairs, indexing="ij")
        eps, eps2 = e1[jj.ravel()], e1[kk.ravel()]
    else:
        eps = _signs(n, "mc", samples, seed, "kt-dual-v")
        eps2 = _signs(n, "mc", samples, seed, "kt-dual-u")
    vals = np.empty(eps.shape[0])
    step = max(1, _CHUNK_ELEMS // n)
    for s in range(0, eps.shape[0], step):
        coeff_u = (eps[s : s + step] @ w) * eps2[s : s + step]
        vals[s : s + step] = body._h(coeff_u @ u.T)
    return _estimate(vals, mode == "exact")


# serialization -----------------------------------------------------------


def body_to_dict(body: SupportBody) -> dict:
    """JSON-ready descriptor; Python float repr round-trips bit-exactly."""
    return {"kind": body.kind, "n": body.n, "parameters": body.params()}


def body_from_dict(d: dict) -> SupportBody:
    try:
        kind, n, p = d["kind"], int(d["n"]), d.get("parameters", {})
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed body descriptor: {exc}") from exc
    if kind == "ball":
        return EuclideanBall(n, p.get("radius", 1.0))
    if kind == "hull":
        body = PolytopeHull(p["vertices"])
        if body.n != n:
            raise ValueError("vertex dimension does not match n")
        return body
    if kind == "cross":
        return ScaledCrossPolytope(n, p.get("scale"), p.get("frame"))
    if kind == "kt":
        return IntersectionBody(n, p["t"])
    if kind == "symmetrized":
        m = p["mode"]
        mode = Exact() if m["type"] == "exact" else MonteCarlo(int(m["samples"]), int(m["seed"]))
        blocks = [np.asarray(b, dtype=float) for b in p["blocks"]]
        return SymmetrizedBody(body_from_dict(p["base"]), blocks, mode, int(p.get("exact_cap", DEFAULT_EXACT_CAP)))
    raise ValueError(f"unknown body kind {kind!r}")

