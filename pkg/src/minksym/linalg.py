"""Directions, orthogonal frames and seeded randomness.

Everything here is a plain function of numpy arrays. Bases are stored as
``(n, n)`` arrays whose *columns* are the basis vectors.
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np
from scipy.linalg import hadamard

__all__ = [
    "Seed",
    "make_rng",
    "derive_seed",
    "unit_vector",
    "check_orthonormal",
    "reflect",
    "sample_haar_basis",
    "sample_sphere",
    "walsh_flat_basis",
    "relative_flat_basis",
    "rearrange_desc_abs",
    "max_overlap",
    "is_power_of_two",
]

Seed = int
Label = Union[str, int]

_UNIT_TOL = 1e-12
_ORTHO_TOL = 1e-10


def _label_int(label: Label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("integer stream labels must be non-negative")
        return int(label)
    digest = hashlib.blake2b(str(label).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: Seed, *labels: Label) -> np.random.Generator:
    """Return a generator for the sub-stream ``(seed, *labels)``.

    String labels are hashed with blake2b, so streams are stable across
    interpreter runs (``hash()`` is salted and would not be).
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    entropy = [seed] + [_label_int(lab) for lab in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def unit_vector(coords) -> np.ndarray:
    """Validate that ``coords`` is a unit vector and return it as an array."""
    u = np.asarray(coords, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("a unit vector must be a non-empty 1-d array")
    if abs(np.linalg.norm(u) - 1.0) > _UNIT_TOL:
        raise ValueError(f"vector has norm {np.linalg.norm(u)!r}, expected 1")
    return u


def check_orthonormal(basis, tol: float = _ORTHO_TOL) -> np.ndarray:
    """Return ``basis`` as an array, raising if its columns are not orthonormal."""
    b = np.asarray(basis, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
        raise ValueError(f"basis must be a non-empty square matrix, got shape {b.shape}")
    defect = np.max(np.abs(b.T @ b - np.eye(b.shape[0])))
    if defect > tol:
        raise ValueError(f"basis is not orthonormal (defect {defect:.3g})")
    return b


def reflect(x, u) -> np.ndarray:
    """Reflect ``x`` in the hyperplane orthogonal to the unit vector ``u``.

    ``x`` may carry leading batch axes; the last axis must match ``u``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape[-1:] != u.shape:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1:]}, u has {u.shape}")
    return x - 2.0 * (x @ u)[..., None] * u


def _check_dim(n: int) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def sample_haar_basis(n: int, seed: Seed, *labels: Label) -> np.ndarray:
    """Draw an orthogonal matrix from the Haar measure on O(n).

    QR of a Gaussian matrix, with each column of Q multiplied by the sign of
    the matching diagonal entry of R; without that correction the result is
    not Haar distributed.
    """
    n = _check_dim(n)
    g = make_rng(seed, "haar", *labels).standard_normal((n, n))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_sphere(n: int, seed: Seed, *labels: Label, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit sphere in R^n (normalized Gaussians).

    With ``size`` given, returns a ``(size, n)`` array of independent points.
    """
    n = _check_dim(n)
    rng = make_rng(seed, "sphere", *labels)
    shape = (1 if size is None else int(size), n)
    g = rng.standard_normal(shape)
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # measure zero, but keep the contract
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
    pts = g / norms[:, None]
    return pts[0] if size is None else pts


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def walsh_flat_basis(n: int) -> np.ndarray:
    """Orthonormal basis with every entry at most 2/sqrt(n) in absolute value.

    Normalized Sylvester-Hadamard matrix when n is a power of two, otherwise
    the real characters of Z/nZ: a constant column, cosine/sine pairs for
    frequencies 1 <= k < n/2, and the alternating column when n is even.
    The trigonometric entries are bounded by sqrt(2/n).
    """
    n = _check_dim(n)
    if is_power_of_two(n):
        return hadamard(n).astype(float) / np.sqrt(n)
    j = np.arange(n)
    cols = [np.full(n, 1.0 / np.sqrt(n))]
    scale = np.sqrt(2.0 / n)
    for k in range(1, (n + 1) // 2):
        angle = 2.0 * np.pi * k * j / n
        cols.append(scale * np.cos(angle))
        cols.append(scale * np.sin(angle))
    if n % 2 == 0:
        cols.append((-1.0) ** j / np.sqrt(n))
    return np.column_stack(cols)


def relative_flat_basis(base) -> np.ndarray:
    """Walsh-flat basis with respect to ``base``: ``base @ walsh_flat_basis(n)``."""
    b = check_orthonormal(base)
    return b @ walsh_flat_basis(b.shape[0])


def rearrange_desc_abs(x) -> np.ndarray:
    """Absolute values of ``x`` sorted non-increasingly (stable on ties)."""
    a = np.abs(np.asarray(x, dtype=float))
    order = np.argsort(-a, axis=-1, kind="stable")
    return np.take_along_axis(a, order, axis=-1)


def max_overlap(a, b) -> float:
    """Largest ``|<a_i, b_j>|`` over the columns of two bases."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a.T @ b)))


def derive_seed(seed: Seed, *labels: Label) -> int:
    """A 64-bit seed for the sub-stream ``(seed, *labels)``."""
    seed = int(seed)
    entropy = [seed] + [_label_int(lab) for lab in labels]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
