import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minksym.bodies import (
    CallableBody,
    EuclideanBall,
    EvaluationModeError,
    Exact,
    IntersectionBody,
    MonteCarlo,
    PolytopeHull,
    ScaledCrossPolytope,
    SymmetrizedBody,
    body_from_dict,
    body_to_dict,
    cross_dual_norm,
    kt_dual_norm,
    symmetrize,
    symmetrize_basis,
)
from minksym.linalg import make_rng, reflect, sample_haar_basis, sample_sphere


def brute_force(base, directions, x):
    """Average of h_base over every subset of reflections, later ones applied first."""
    m = directions.shape[1]
    total = 0.0
    for subset in itertools.product((0, 1), repeat=m):
        y = np.array(x, dtype=float)
        for i in reversed(range(m)):
            if subset[i]:
                y = reflect(y, directions[:, i])
        total = total + base.support(y)
    return total / 2**m


def test_ball_support():
    b = EuclideanBall(3, 2.0)
    assert b.support([3.0, 4.0, 0.0]) == pytest.approx(10.0)
    assert np.allclose(b.support_point([[0.0, 0.0, 2.0]]), [[0.0, 0.0, 2.0]])


def test_cross_polytope_support_and_frame():
    q = ScaledCrossPolytope(4)
    assert q.support([0.1, -0.7, 0.2, 0.0]) == pytest.approx(2 * 0.7)
    f = sample_haar_basis(4, 3)
    qf = ScaledCrossPolytope(4, frame=f)
    x = sample_sphere(4, 1)
    assert qf.support(x) == pytest.approx(2 * np.max(np.abs(x @ f)))
    y = qf.support_point(x[None])[0]
    assert float(x @ y) == pytest.approx(qf.support(x))


def test_hull_symmetry_detection():
    assert PolytopeHull([[1.0, 0.0], [-1.0, 0.0]]).symmetric
    assert not PolytopeHull([[1.0, 0.0], [0.0, 1.0]]).symmetric
    with pytest.raises(ValueError):
        PolytopeHull([[np.nan, 0.0]])


def test_intersection_body_limits():
    n = 9
    x = sample_sphere(n, 2)
    full = IntersectionBody(n, math.sqrt(n))
    # t = sqrt(n): sqrt(n) B1 is inside sqrt(n) B2, so K_t is the cross-polytope.
    assert full.support(x) == pytest.approx(ScaledCrossPolytope(n).support(x), rel=1e-12)
    # small t: K_t is the ball of radius t.
    assert IntersectionBody(n, 0.5).support(x) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        IntersectionBody(n, 3.5)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        EuclideanBall(3).support([1.0, 2.0])


def test_symmetrize_single_reflection():
    # segment [0, e1] reflected in e1: average of [0, e1] and [-e1, 0] is [-e1/2, e1/2].
    seg = PolytopeHull([[0.0, 0.0], [1.0, 0.0]])
    s = symmetrize(seg, [1.0, 0.0])
    assert s.support([1.0, 0.0]) == pytest.approx(0.5)
    assert s.support([-1.0, 0.0]) == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 4))
def test_symmetrized_matches_brute_force(seed, n):
    rng = make_rng(seed, "verts")
    base = PolytopeHull(rng.standard_normal((5, n)))
    blocks = [sample_haar_basis(n, seed, 1)[:, : n - 1], np.eye(n), sample_haar_basis(n, seed, 2)[:, :2]]
    body = SymmetrizedBody(base, blocks, Exact())
    x = sample_sphere(n, seed, "x", size=3)
    expected = [brute_force(base, np.hstack(blocks), row) for row in x]
    assert np.allclose(body.support(x), expected, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_support_point_attains_support(seed):
    n = 4
    base = PolytopeHull(make_rng(seed).standard_normal((6, n)))
    body = symmetrize_basis(base, sample_haar_basis(n, seed), skip_last=False)
    body = body.add_basis(sample_haar_basis(n, seed, 1), skip_last=True)
    x = sample_sphere(n, seed, size=5)
    y = body.support_point(x)
    assert np.allclose(np.einsum("ij,ij->i", x, y), body.support(x), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_symmetrization_preserves_pair_sums(seed):
    # (h + h o pi_u)/2 has the same value at x and pi_u x, and their sum is unchanged.
    n = 5
    base = PolytopeHull(make_rng(seed).standard_normal((7, n)))
    u = sample_sphere(n, seed, "u")
    s = symmetrize(base, u)
    x = sample_sphere(n, seed, "x", size=10)
    rx = reflect(x, u)
    assert np.allclose(s.support(x) + s.support(rx), base.support(x) + base.support(rx), atol=1e-12)
    assert np.allclose(s.support(x), s.support(rx), atol=1e-12)


def test_ball_is_fixed_point():
    n = 6
    body = symmetrize_basis(EuclideanBall(n), sample_haar_basis(n, 0), False)
    x = sample_sphere(n, 1, size=8)
    assert np.allclose(body.support(x), 1.0, atol=1e-12)


def test_add_reflection_merges_orthogonal_directions():
    body = SymmetrizedBody(EuclideanBall(3))
    body = body.add_reflection([1.0, 0.0, 0.0]).add_reflection([0.0, 1.0, 0.0])
    assert len(body.blocks) == 1 and body.m == 2
    u = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    body = body.add_reflection(u)
    assert len(body.blocks) == 2 and body.m == 3


def test_exact_cap():
    body = SymmetrizedBody(EuclideanBall(4), exact_cap=6)
    body = body.add_basis(np.eye(4), False)
    with pytest.raises(EvaluationModeError):
        body.add_basis(sample_haar_basis(4, 0), False)


def test_monte_carlo_signs_are_prefix_stable():
    n = 4
    mode = MonteCarlo(64, 9)
    a = SymmetrizedBody(ScaledCrossPolytope(n), (), mode).add_basis(sample_haar_basis(n, 1), True)
    b = a.add_basis(sample_haar_basis(n, 2), True)
    assert np.array_equal(b._eps[:, : a.m], a._eps)


def test_monte_carlo_ci_covers_exact():
    n = 4
    exact = symmetrize_basis(ScaledCrossPolytope(n), sample_haar_basis(n, 3), False)
    exact = exact.add_basis(sample_haar_basis(n, 4), True)
    mc = exact.with_mode(MonteCarlo(20_000, 5))
    x = sample_sphere(n, 6, size=20)
    val, hw = mc.support_with_ci(x)
    z = np.abs(val - exact.support(x)) / hw
    assert np.mean(z <= 1.0) >= 0.8
    assert np.all(hw > 0)


def test_symmetric_flag():
    seg = PolytopeHull([[0.0, 0.0], [1.0, 0.0]])
    assert not symmetrize(seg, [1.0, 0.0]).symmetric
    assert symmetrize_basis(seg, np.eye(2), False).symmetric


def test_cross_dual_norm_matches_generic_exactly():
    n = 6
    u = sample_haar_basis(n, 1)
    body = symmetrize_basis(ScaledCrossPolytope(n), u, skip_last=True)
    x = sample_sphere(n, 2, size=5)
    for row in x:
        est = cross_dual_norm(row, u, mode="exact")
        assert est.half_width == 0.0
        assert est.value == pytest.approx(body.support(row), abs=1e-12)


def test_cross_dual_norm_with_frame():
    n = 5
    u, e = sample_haar_basis(n, 1), sample_haar_basis(n, 2)
    body = symmetrize_basis(ScaledCrossPolytope(n, frame=e), u, skip_last=True)
    x = sample_sphere(n, 3)
    assert cross_dual_norm(x, u, e, mode="exact").value == pytest.approx(body.support(x), abs=1e-12)


def test_kt_dual_norm_matches_generic_exactly():
    n, t = 5, 1.4
    u, v = sample_haar_basis(n, 1), sample_haar_basis(n, 2)
    body = symmetrize_basis(IntersectionBody(n, t), u, skip_last=True).add_basis(v, skip_last=True)
    x = sample_sphere(n, 3, size=3)
    for row in x:
        assert kt_dual_norm(row, t, u, v, mode="exact").value == pytest.approx(body.support(row), abs=1e-12)


def test_dual_norm_mode_errors():
    u = sample_haar_basis(4, 0)
    with pytest.raises(EvaluationModeError):
        cross_dual_norm(sample_sphere(4, 0), u, mode="exact", exact_limit=2)
    with pytest.raises(ValueError):
        cross_dual_norm(sample_sphere(4, 0), u, mode="sometimes")
    est = cross_dual_norm(sample_sphere(4, 0), u, mode="mc", samples=500)
    assert est.half_width > 0 and est.samples == 500


def test_callable_body_has_no_point():
    b = CallableBody(2, lambda x: np.linalg.norm(x, axis=-1), symmetric=True)
    assert b.support([3.0, 4.0]) == pytest.approx(5.0)
    assert not b.has_support_point
    with pytest.raises(NotImplementedError):
        b.support_point([1.0, 0.0])
    with pytest.raises(TypeError):
        body_to_dict(b)


@pytest.mark.parametrize(
    "body",
    [
        EuclideanBall(3, 1.5),
        PolytopeHull([[1.0, 0.1, 0.0], [0.0, 1.0, 0.3]]),
        ScaledCrossPolytope(3),
        ScaledCrossPolytope(3, frame=sample_haar_basis(3, 1)),
        IntersectionBody(3, 1.2),
        symmetrize_basis(ScaledCrossPolytope(3), sample_haar_basis(3, 2), True, mode=MonteCarlo(50, 1)),
    ],
)
def test_serialization_round_trip(body):
    restored = body_from_dict(json.loads(json.dumps(body_to_dict(body))))
    x = sample_sphere(3, 4, size=6)
    assert np.array_equal(restored.support(x), body.support(x))


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        body_from_dict({"kind": "torus", "n": 2})
    with pytest.raises(ValueError):
        body_from_dict({"n": 2})
