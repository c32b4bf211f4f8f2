"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import statistics
import time

import numpy as np

from minksym.bodies import (
    Exact,
    IntersectionBody,
    MonteCarlo,
    PolytopeHull,
    ScaledCrossPolytope,
    SymmetrizedBody,
    cross_dual_norm,
    kt_dual_norm,
    symmetrize_basis,
)
from minksym.cli import main
from minksym.estimators import EstimatorConfig, mean_width, unconditionality_report
from minksym.linalg import make_rng, sample_haar_basis, sample_sphere, walsh_flat_basis
from minksym.norms import inf_conv_norm, tail_l2_surrogate
from minksym.pipeline import decay_cell, run_pipeline, schedule_random6
from minksym.probes import probe_product_sum, probe_unbiased_directions

SQRT2 = math.sqrt(2.0)
SEARCH = {"starts": 8, "steps": 20, "search_samples": 1000}


def verdict(capsys, number, title, ok, detail, started):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} ({time.perf_counter() - started:.1f}s)"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def random6_bases(n, seed):
    return [np.eye(n)] + [sample_haar_basis(n, seed, "stage", i) for i in range(2, 7)]


def test_criterion_01_mean_width_conservation(capsys):
    t0 = time.perf_counter()
    n, seed = 16, 1
    schedule = schedule_random6(n)
    columns = []
    for basis, spec in zip(random6_bases(n, seed), schedule.stages):
        columns.extend((basis[:, :-1] if spec.skip_last else basis).T)
    assert len(columns) == 6 * n - 5

    worst = 0.0
    exact = SymmetrizedBody(ScaledCrossPolytope(n), (), Exact(), exact_cap=n)
    mc = SymmetrizedBody(ScaledCrossPolytope(n), (), MonteCarlo(256, 5))
    for i, u in enumerate(columns):
        bodies = [mc] + ([exact] if i < n else [])
        updated = []
        for body in bodies:
            before = mean_width(body, 8, seed=i, paired=True, pairing_direction=u)
            body = body.add_reflection(u)
            after = mean_width(body, 8, seed=i, paired=True, pairing_direction=u)
            worst = max(worst, abs(after.value - before.value) / before.value)
            updated.append(body)
        mc = updated[0]
        if i < n:
            exact = updated[1]
    ok = worst <= 1e-10 and mc.m == 6 * n - 5
    verdict(capsys, 1, "mean width conserved", ok, f"{mc.m} reflections, worst relative change {worst:.2e}", t0)


def test_criterion_02_unconditional_after_stage_one(capsys):
    t0 = time.perf_counter()
    exact_defects = []
    for n in (4, 8, 10):
        frame = sample_haar_basis(n, 2, "frame", n)
        base = PolytopeHull(make_rng(2, "verts", n).standard_normal((2 * n, n)))
        body = symmetrize_basis(base, frame, skip_last=False)
        exact_defects.append(unconditionality_report(body, frame, 32, seed=n).defect)
    n = 64
    frame = sample_haar_basis(n, 3, "frame")
    body = symmetrize_basis(ScaledCrossPolytope(n), frame, skip_last=False, mode=MonteCarlo(4000, 4))
    mc = unconditionality_report(body, frame, 32, seed=5)
    ok = max(exact_defects) <= 1e-9 and mc.ci_ratio <= 3.0
    detail = f"exact max defect {max(exact_defects):.1e} (n<=10), mc defect/CI {mc.ci_ratio:.2f} (n=64)"
    verdict(capsys, 2, "unconditional after stage 1", ok, detail, t0)


def grid_oracle(x, k, step=1e-6):
    a = np.abs(x)
    taus = np.arange(0.0, a.max() + step, step)
    best = math.inf
    for chunk in np.array_split(taus, max(1, taus.size // 100_000)):
        g = np.sqrt(np.sum(np.maximum(a[None] - chunk[:, None], 0.0) ** 2, axis=1)) + k * chunk
        best = min(best, float(g.min()))
    return best


def test_criterion_03_norm_equivalence(capsys):
    t0 = time.perf_counter()
    lo, hi, violations, checked = math.inf, 0.0, 0, 0
    for n in (8, 32, 128):
        rng = make_rng(6, "sweep", n)
        draws = {
            "gaussian": rng.standard_normal((10_000, n)),
            "sparse": rng.standard_normal((10_000, n)) * (rng.random((10_000, n)) < 3.0 / n),
            "cauchy": rng.standard_cauchy((10_000, n)),
        }
        for x in draws.values():
            x = x[np.any(x != 0, axis=1)]
            for k in (1.0, 2.0, math.sqrt(n) / 4, math.sqrt(n)):
                r = inf_conv_norm(x, k) / tail_l2_surrogate(x, k)
                lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
                violations += int(np.sum((r < 1 / SQRT2 - 1e-9) | (r > SQRT2 + 1e-9)))
                checked += r.size
    oracle_gap = 0.0
    rng = make_rng(6, "oracle")
    for _ in range(30):
        n = int(rng.choice([8, 32, 128]))
        x = rng.standard_normal(n)
        k = float(rng.uniform(0.5, math.sqrt(n)))
        oracle_gap = max(oracle_gap, abs(inf_conv_norm(x, k) - grid_oracle(x, k)))
    ok = violations == 0 and oracle_gap <= 1e-5
    detail = f"{checked} ratios in [{lo:.4f}, {hi:.4f}], {violations} violations, grid oracle gap {oracle_gap:.1e}"
    verdict(capsys, 3, "inf-convolution norm equivalence", ok, detail, t0)


def test_criterion_04_stage_two_trend(capsys):
    t0 = time.perf_counter()
    config = EstimatorConfig(mc_samples=20_000, **SEARCH)
    medians = {}
    for n in (16, 32, 64, 128):
        ratios = [
            decay_cell(n, s, config=config, max_stages=2, kt_check=False, metrics="radius")[0]["stage2_ratio"]
            for s in range(10)
        ]
        medians[n] = statistics.median(ratios)
    spread = max(medians.values()) / min(medians.values())
    ok = spread < 2.0
    detail = ", ".join(f"n={n}: {m:.3f}" for n, m in medians.items()) + f"; spread {spread:.2f}"
    verdict(capsys, 4, "stage-2 radius / log n flat", ok, detail, t0)


def test_criterion_05_kt_radius_below_t(capsys):
    t0 = time.perf_counter()
    config = EstimatorConfig(mc_samples=20_000, **SEARCH)
    cells = [decay_cell(64, s, config=config, max_stages=2, metrics="radius")[0] for s in range(10)]
    rate = sum(c["kt_below_t"] for c in cells) / len(cells)
    worst = max(c["kt_radius"] / c["t"] for c in cells)
    verdict(capsys, 5, "K_t radius below t", rate >= 0.9, f"rate {rate:.2f}, worst radius/t {worst:.3f}", t0)


def test_criterion_06_full_pipeline_sandwich(capsys):
    t0 = time.perf_counter()
    n = 64
    config = EstimatorConfig(n_dirs=32, mc_samples=4000, **SEARCH)
    ratios, decreasing = [], 0
    for seed in range(20):
        rep = run_pipeline(ScaledCrossPolytope(n), schedule_random6(n), seed, config, metrics="final")
        ratios.append(rep.stages[-1].sandwich_ratio)
        radii = [s.circumradius_lb for s in rep.stages]
        decreasing += radii[0] > radii[1] > radii[2]
    rate = sum(r <= 2.0 for r in ratios) / len(ratios)
    ok = rate >= 0.9 and decreasing >= 18
    detail = f"ratio <= 2 in {rate:.0%} of seeds (max {max(ratios):.3f}), radius falls over stages 1-3 in {decreasing}/20"
    verdict(capsys, 6, "final sandwich ratio", ok, detail, t0)


def test_criterion_07_walsh_flatness(capsys):
    t0 = time.perf_counter()
    worst_flat, worst_ortho = 0.0, 0.0
    for n in range(2, 1025):
        w = walsh_flat_basis(n)
        worst_flat = max(worst_flat, float(np.max(np.abs(w))) * math.sqrt(n) / 2.0)
        worst_ortho = max(worst_ortho, float(np.max(np.abs(w.T @ w - np.eye(n)))))
    ok = worst_flat <= 1.0 + 1e-12 and worst_ortho < 1e-10
    detail = f"max entry * sqrt(n)/2 = {worst_flat:.4f}, orthonormality defect {worst_ortho:.1e}"
    verdict(capsys, 7, "Walsh flatness for 2 <= n <= 1024", ok, detail, t0)


def test_criterion_08_product_sum_anchor(capsys):
    t0 = time.perf_counter()
    errors = {n: probe_product_sum(n, 100_000, seed=8).extra["relative_error_vs_1_over_n"] for n in (4, 64, 256)}
    q99 = probe_product_sum(256, 100_000, seed=9).summary["q99"]
    ok = max(errors.values()) <= 0.05 and q99 < 10
    detail = ", ".join(f"n={n}: {e:.2%}" for n, e in errors.items()) + f"; q99 at n=256 {q99:.2f}"
    verdict(capsys, 8, "product-sum mean 1/n", ok, detail, t0)


def test_criterion_09_specialized_evaluators(capsys):
    t0 = time.perf_counter()
    exact_gap = 0.0
    for n in (2, 4, 6, 8):
        u, v = sample_haar_basis(n, 10, "u"), sample_haar_basis(n, 10, "v")
        t = 0.6 * math.sqrt(n)
        cross = symmetrize_basis(ScaledCrossPolytope(n), u, skip_last=True)
        kt = SymmetrizedBody(IntersectionBody(n, t), (), Exact(), exact_cap=2 * n)
        kt = kt.add_basis(u, skip_last=True).add_basis(v, skip_last=True)
        for x in sample_sphere(n, 10, "x", n, size=3):
            exact_gap = max(exact_gap, abs(cross_dual_norm(x, u, mode="exact").value - cross.support(x)))
            exact_gap = max(exact_gap, abs(kt_dual_norm(x, t, u, v, mode="exact").value - kt.support(x)))

    n, overlaps, total = 32, 0, 0
    u, v = sample_haar_basis(n, 11, "u"), sample_haar_basis(n, 11, "v")
    t = 0.6 * math.sqrt(n)
    cross = symmetrize_basis(ScaledCrossPolytope(n), u, skip_last=True, mode=MonteCarlo(20_000, 12))
    kt = SymmetrizedBody(IntersectionBody(n, t), (), MonteCarlo(20_000, 13))
    kt = kt.add_basis(u, skip_last=True).add_basis(v, skip_last=True)
    for x in sample_sphere(n, 11, "x", size=5):
        pairs = [
            (cross_dual_norm(x, u, mode="mc", seed=14), cross.support_with_ci(x)),
            (kt_dual_norm(x, t, u, v, mode="mc", seed=15), kt.support_with_ci(x)),
        ]
        for special, (value, half) in pairs:
            value, half = np.ravel(value)[0], np.ravel(half)[0]
            overlaps += abs(special.value - value) <= special.half_width + half
            total += 1
    ok = exact_gap <= 1e-12 and overlaps == total
    detail = f"exact gap {exact_gap:.1e} (n<=8), {overlaps}/{total} overlapping 95% CIs (n=32)"
    verdict(capsys, 9, "specialized evaluators match generic", ok, detail, t0)


def test_criterion_10_majorant_domination(capsys):
    t0 = time.perf_counter()
    reports = [probe_unbiased_directions(n, trials=1000, seed=16, slack=1e-12) for n in (16, 256)]
    violations = sum(r.extra["violations"] for r in reports)
    excess = max(r.extra["max_excess_over_overlap"] for r in reports)
    detail = f"{violations} violations in 2000 draws, max majorant - overlap {excess:.2e}"
    verdict(capsys, 10, "majorant dominated by max overlap", violations == 0, detail, t0)


CLI_COMMANDS = [
    ["decay", "--ns", "4,6", "--seeds", "1,2", "--max-stages", "2", "--mc-samples", "500", "--n-dirs", "8"],
    ["pipeline", "--body", "cross", "--n", "5", "--seed", "3", "--max-stages", "3", "--mc-samples", "500"],
    ["probe", "chaos-psi1", "--n", "12", "--trials", "4", "--samples", "2000", "--seed", "4"],
    ["probe", "rearranged-moment", "--n", "64", "--k", "4", "--trials", "2000", "--seed", "5"],
    ["norm-check", "--ns", "8,32", "--vectors", "500", "--seed", "6"],
]


def test_criterion_11_cli_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    identical = 0
    for i, argv in enumerate(CLI_COMMANDS):
        outputs = []
        path = tmp_path / f"cmd{i}.json"
        for _ in range(2):
            assert main([*argv, "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
        json.loads(outputs[0])
        identical += outputs[0] == outputs[1]
    capsys.readouterr()
    ok = identical == len(CLI_COMMANDS)
    verdict(capsys, 11, "byte-identical CLI output", ok, f"{identical}/{len(CLI_COMMANDS)} commands identical", t0)

