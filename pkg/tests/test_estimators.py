import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minksym.bodies import (
    CallableBody,
    EuclideanBall,
    IntersectionBody,
    MonteCarlo,
    PolytopeHull,
    ScaledCrossPolytope,
    symmetrize,
    symmetrize_basis,
)
from minksym.estimators import (
    DegenerateBodyError,
    EstimatorConfig,
    circumradius,
    diameter,
    l1_envelope_defect,
    maximize_support,
    mean_width,
    minimize_support,
    sandwich,
    symmetry_defect,
    unconditionality_defect,
    unconditionality_report,
)
from minksym.linalg import make_rng, sample_haar_basis, sample_sphere

SEGMENT = PolytopeHull([[-1.0, 0.0], [1.0, 0.0]])
BOX = PolytopeHull([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def test_mean_width_ball_is_one():
    est = mean_width(EuclideanBall(7), 50, seed=1)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert est.half_width == pytest.approx(0.0, abs=1e-12)


def test_mean_width_segment_matches_closed_form():
    est = mean_width(SEGMENT, 200_000, seed=3)
    assert abs(est.value - 2 / math.pi) <= est.half_width


def test_mean_width_validation():
    with pytest.raises(ValueError):
        mean_width(SEGMENT, 1)
    with pytest.raises(ValueError):
        mean_width(SEGMENT, 10, paired=True)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 6))
def test_paired_mean_width_invariant(seed, n):
    base = PolytopeHull(make_rng(seed).standard_normal((2 * n, n)))
    u = sample_sphere(n, seed, "u")
    before = mean_width(base, 40, seed, paired=True, pairing_direction=u)
    after = mean_width(symmetrize(base, u), 40, seed, paired=True, pairing_direction=u)
    assert after.value == pytest.approx(before.value, rel=1e-10)


def test_unpaired_mean_width_agrees_within_cis():
    n = 5
    base = ScaledCrossPolytope(n)
    body = symmetrize_basis(base, sample_haar_basis(n, 2), skip_last=False)
    hits = 0
    for seed in range(100):
        a = mean_width(base, 200, seed)
        b = mean_width(body, 200, seed + 1000)
        hits += abs(a.value - b.value) <= 3 * math.hypot(a.half_width, b.half_width)
    assert hits >= 99


@pytest.mark.parametrize("rho", [0.5, 1.0, 3.0])
def test_circumradius_ball(rho):
    assert circumradius(EuclideanBall(5, rho), 4, 5, seed=0) == pytest.approx(rho, abs=1e-9)


@pytest.mark.parametrize("n", [2, 4, 9])
def test_circumradius_cross(n):
    assert circumradius(ScaledCrossPolytope(n), seed=1) == pytest.approx(math.sqrt(n), abs=1e-6)


def test_circumradius_intersection_body():
    assert circumradius(IntersectionBody(4, 1.5), seed=2) == pytest.approx(1.5, abs=1e-4)


def test_circumradius_without_point_oracle():
    body = CallableBody(3, lambda x: np.max(np.abs(x), axis=-1) * 2.0, symmetric=True)
    assert circumradius(body, 8, 40, seed=0) == pytest.approx(2.0, abs=1e-3)


@pytest.mark.parametrize(
    "body, expected",
    [
        (EuclideanBall(3, 1.5), 3.0),
        (ScaledCrossPolytope(4), 4.0),
        (PolytopeHull([[0.0, 0.0], [2.0, 0.0]]), 2.0),
    ],
)
def test_diameter(body, expected):
    assert diameter(body, seed=0) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize(
    "body, expected",
    [
        (EuclideanBall(4), 1.0),
        (ScaledCrossPolytope(2), math.sqrt(2)),
        (BOX, math.sqrt(2)),
    ],
)
def test_sandwich_examples(body, expected):
    rep = sandwich(body, 64, seed=0)
    assert rep.ratio == pytest.approx(expected, abs=1e-6)
    assert rep.h_max >= rep.h_min > 0


def test_sandwich_ball_high_dimension():
    assert sandwich(EuclideanBall(256), 16, seed=0, n_starts=2, steps=2).ratio == pytest.approx(1.0, abs=1e-9)


def test_sandwich_degenerate():
    with pytest.raises(DegenerateBodyError):
        sandwich(SEGMENT, 32, seed=0)
    with pytest.raises(ValueError):
        sandwich(EuclideanBall(2), 5)


def test_minimize_support_box():
    val, x = minimize_support(BOX, seed=3)
    assert val == pytest.approx(1.0, abs=1e-6)
    assert np.max(np.abs(x)) == pytest.approx(1.0, abs=1e-3)


def test_maximize_on_monte_carlo_body_reports_body_value():
    n = 8
    body = symmetrize_basis(ScaledCrossPolytope(n), sample_haar_basis(n, 1), True, mode=MonteCarlo(4000, 2))
    val, x = maximize_support(body, 4, 10, seed=0, search_samples=500)
    assert val == pytest.approx(body.support(x))


@pytest.mark.parametrize("body", [EuclideanBall(4), ScaledCrossPolytope(4)])
def test_unconditionality_zero(body):
    assert unconditionality_defect(body, np.eye(4), 32, seed=1) <= 1e-12


def test_unconditionality_segment():
    seg = PolytopeHull([[0.0, 0.0], [2.0, 0.0]])
    assert unconditionality_defect(seg, np.eye(2), 64, seed=0) > 0.5


def test_unconditional_after_symmetrization():
    n = 5
    f = sample_haar_basis(n, 3)
    base = PolytopeHull(make_rng(3).standard_normal((9, n)))
    exact = symmetrize_basis(base, f, skip_last=False)
    assert unconditionality_defect(exact, f, 64, seed=2) <= 1e-9
    mc = exact.with_mode(MonteCarlo(3000, 4))
    rep = unconditionality_report(mc, f, 64, seed=2)
    assert rep.ci_ratio <= 3.0
    assert symmetry_defect(exact, 64, seed=5).defect <= 1e-9


def test_l1_envelope_examples():
    n = 6
    assert l1_envelope_defect(ScaledCrossPolytope(n), np.eye(n), 1.0, 200, seed=0) == 0.0
    assert l1_envelope_defect(EuclideanBall(n, math.sqrt(n)), np.eye(n), 1.0, 200, seed=0) > 0.0
    assert l1_envelope_defect(EuclideanBall(n), np.eye(n), 1.0, 200, seed=0) == 0.0
    with pytest.raises(ValueError):
        l1_envelope_defect(EuclideanBall(n), np.eye(n), 0.0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_sup_dominates_average(seed):
    n = 4
    base = PolytopeHull(make_rng(seed).standard_normal((6, n)) + 0.1)
    body = symmetrize_basis(base, np.eye(n), False)
    mw = mean_width(body, 200, seed)
    assert circumradius(body, 4, 10, seed) >= mw.value - 3 * mw.half_width


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(n_dirs=1)
    assert EstimatorConfig().to_dict()["exact_cap"] == 20
