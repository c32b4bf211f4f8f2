"""Symmetrization schedules and staged experiments.

A schedule is a list of stages; each stage symmetrizes with respect to the
vectors of one orthogonal basis. After the first stage the body is centrally
symmetric and the last vector of every later basis is dropped, so

    random6:  n + 5(n - 1) = 6n - 5 reflections,
    walsh5:   n + 4(n - 1) = 5n - 4 (4n - 4 when the input is unconditional).
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bodies import (
    Exact,
    IntersectionBody,
    MonteCarlo,
    ScaledCrossPolytope,
    SupportBody,
    SymmetrizedBody,
    body_to_dict,
)
from .estimators import (
    DegenerateBodyError,
    EstimatorConfig,
    maximize_support,
    mean_width,
    sandwich,
    symmetry_defect,
    unconditionality_report,
)
from .linalg import (
    Seed,
    check_orthonormal,
    derive_seed,
    relative_flat_basis,
    sample_haar_basis,
    sample_sphere,
    walsh_flat_basis,
)
from .stats import EstimateWithCI, combined_half_width

__all__ = [
    "Given",
    "HaarRandom",
    "WalshRelativeToPrevious",
    "WalshRelativeTo",
    "StageSpec",
    "Schedule",
    "StageReport",
    "ExperimentReport",
    "StageError",
    "schedule_random6",
    "schedule_walsh5",
    "schedule_log_star",
    "make_schedule",
    "run_pipeline",
    "decay_experiment",
    "decay_cell",
    "decay_table",
    "DecayResult",
    "log_star",
    "SCHEDULE_KINDS",
]


class StageError(RuntimeError):
    """An estimator failed while reporting on a stage."""


@dataclass(frozen=True)
class Given:
    basis: np.ndarray = field(compare=False, repr=False)
    label: str = "given"

    def describe(self) -> str:
        return self.label


@dataclass(frozen=True)
class HaarRandom:
    def describe(self) -> str:
        return "haar"


@dataclass(frozen=True)
class WalshRelativeToPrevious:
    def describe(self) -> str:
        return "walsh-previous"


@dataclass(frozen=True)
class WalshRelativeTo:
    stage: int  # 1-based index of an earlier stage

    def describe(self) -> str:
        return f"walsh-stage-{self.stage}"


@dataclass(frozen=True)
class StageSpec:
    source: Given | HaarRandom | WalshRelativeToPrevious | WalshRelativeTo
    skip_last: bool


@dataclass(frozen=True)
class Schedule:
    n: int
    stages: tuple[StageSpec, ...]
    kind: str = "custom"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        for i, st in enumerate(self.stages, start=1):
            src = st.source
            if isinstance(src, WalshRelativeToPrevious) and i == 1:
                raise ValueError("the first stage has no previous basis")
            if isinstance(src, WalshRelativeTo) and not 1 <= src.stage < i:
                raise ValueError(f"stage {i} refers to stage {src.stage}, which is not earlier")
            if isinstance(src, Given) and np.shape(src.basis) != (self.n, self.n):
                raise ValueError(f"stage {i} basis has shape {np.shape(src.basis)}")

    @property
    def reflection_counts(self) -> list[int]:
        return [self.n - 1 if st.skip_last else self.n for st in self.stages]

    @property
    def total_reflections(self) -> int:
        return sum(self.reflection_counts)

    def truncated(self, stages: int) -> "Schedule":
        return Schedule(self.n, self.stages[:stages], self.kind)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "stages": [{"source": st.source.describe(), "skip_last": st.skip_last} for st in self.stages],
            "total_reflections": self.total_reflections,
        }


def _first_stage(n: int, first: str) -> StageSpec:
    if first == "identity":
        return StageSpec(Given(np.eye(n), "identity"), skip_last=False)
    if first == "haar":
        return StageSpec(HaarRandom(), skip_last=False)
    raise ValueError(f"first stage must be 'identity' or 'haar', got {first!r}")


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"schedules need n >= 2, got {n!r}")
    return int(n)


def schedule_random6(n: int, first: str = "identity") -> Schedule:
    """One basis to make the body unconditional, then five Haar bases."""
    n = _check_n(n)
    later = tuple(StageSpec(HaarRandom(), skip_last=True) for _ in range(5))
    return Schedule(n, (_first_stage(n, first),) + later, "random6")


def schedule_walsh5(
    n: int,
    first: str = "identity",
    second: str = "walsh",
    fifth: str = "walsh",
    unconditional: bool = False,
) -> Schedule:
    """Any basis, Walsh or Haar, Walsh of the previous, Haar, Walsh or Haar.

    With ``unconditional=True`` the first stage is dropped; the body is then
    taken to be unconditional in the standard frame.
    """
    n = _check_n(n)
    for name, val in (("second", second), ("fifth", fifth)):
        if val not in ("walsh", "haar"):
            raise ValueError(f"{name} stage must be 'walsh' or 'haar', got {val!r}")
    stage2 = WalshRelativeToPrevious() if second == "walsh" else HaarRandom()
    stage5 = WalshRelativeToPrevious() if fifth == "walsh" else HaarRandom()
    tail = [
        StageSpec(WalshRelativeToPrevious(), True),
        StageSpec(HaarRandom(), True),
        StageSpec(stage5, True),
    ]
    if unconditional:
        if second == "walsh":
            head = StageSpec(Given(walsh_flat_basis(n), "walsh-identity"), True)
        else:
            head = StageSpec(HaarRandom(), True)
        return Schedule(n, tuple([head] + tail), "walsh5-unconditional")
    return Schedule(n, tuple([_first_stage(n, first), StageSpec(stage2, True)] + tail), "walsh5")


def log_star(n: float) -> int:
    """Iterated logarithm: how many times ``log`` brings ``n`` to at most 1."""
    count = 0
    x = float(n)
    while x > 1.0:
        x = math.log(x)
        count += 1
    return count


def schedule_log_star(n: int, rounds: int | None = None, first: str = "identity") -> Schedule:
    """Haar stage followed by repeated Walsh-of-previous stages (``log* n`` by default).

    No acceptance claim is attached to this generator.
    """
    n = _check_n(n)
    rounds = log_star(n) if rounds is None else int(rounds)
    stages = [_first_stage(n, first), StageSpec(HaarRandom(), True)]
    stages += [StageSpec(WalshRelativeToPrevious(), True) for _ in range(rounds)]
    return Schedule(n, tuple(stages), "log-star")


SCHEDULE_KINDS: dict[str, Callable[[int], Schedule]] = {
    "random6": schedule_random6,
    "walsh5": schedule_walsh5,
    "walsh5-unconditional": lambda n: schedule_walsh5(n, unconditional=True),
    "log-star": schedule_log_star,
}


def make_schedule(kind: str, n: int) -> Schedule:
    try:
        return SCHEDULE_KINDS[kind](n)
    except KeyError:
        raise ValueError(f"unknown schedule {kind!r}; choose from {sorted(SCHEDULE_KINDS)}") from None


@dataclass
class StageReport:
    stage: int
    source: str
    reflections: int
    total_reflections: int
    mode: str
    mean_width: EstimateWithCI
    circumradius_lb: float
    h_min: float
    sandwich_ratio: float
    unconditionality_defect: float
    unconditionality_ci_ratio: float
    symmetry_defect: float
    symmetry_ci_ratio: float
    paired_defect: float | None = None
    seconds: float | None = None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["mean_width"] = self.mean_width.to_dict()
        return d


@dataclass
class ExperimentReport:
    schedule: dict
    seed: int
    body: dict
    config: dict
    stages: list[StageReport]
    verdicts: dict
    bases: list[np.ndarray] = field(default_factory=list, repr=False)
    final_body: SupportBody | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule,
            "seed": self.seed,
            "body": self.body,
            "config": self.config,
            "stages": [s.to_dict() for s in self.stages],
            "verdicts": self.verdicts,
        }


def _materialize(spec: StageSpec, index: int, bases: Sequence[np.ndarray], n: int, seed: Seed) -> np.ndarray:
    src = spec.source
    if isinstance(src, Given):
        return check_orthonormal(src.basis)
    if isinstance(src, HaarRandom):
        return sample_haar_basis(n, seed, "stage", index)
    if isinstance(src, WalshRelativeToPrevious):
        return relative_flat_basis(bases[-1])
    if isinstance(src, WalshRelativeTo):
        return relative_flat_basis(bases[src.stage - 1])
    raise TypeError(f"unknown basis source {src!r}")


_ORBIT_POINTS = 1024


def _orbit_defect(before: SymmetrizedBody, after: SymmetrizedBody, block: np.ndarray, dirs: int, seed: Seed):
    """Relative change of the mean width over direction sets closed under the block's sign flips.

    Summing ``h`` over a flip orbit is exactly unchanged by symmetrizing with
    respect to the block, so the two sums agree up to rounding. Only run in
    exact mode and for blocks of at most 10 directions; otherwise ``None``.
    """
    r = block.shape[1]
    if not isinstance(after.mode, Exact) or r > 10:
        return None
    x = sample_sphere(before.n, seed, "orbit", size=max(1, min(dirs, _ORBIT_POINTS >> r)))
    codes = np.arange(1 << r)
    signs = 1.0 - 2.0 * ((codes[:, None] >> np.arange(r)) & 1)
    coords = x @ block
    rest = x - coords @ block.T
    orbit = rest[:, None, :] + (coords[:, None, :] * signs[None]) @ block.T
    pts = orbit.reshape(-1, before.n)
    a = float(np.sum(before.support(pts)))
    b = float(np.sum(after.support(pts)))
    return abs(a - b) / max(abs(a), 1e-300)


def _mode_for(total: int, config: EstimatorConfig, seed: Seed):
    if total <= config.exact_cap:
        return Exact()
    return MonteCarlo(config.mc_samples, derive_seed(seed, "signs"))


def _report_stage(body, index, spec, basis, added, mode_name, config, seed, paired_defect, t0):
    mw = mean_width(body, config.n_dirs, derive_seed(seed, "mean-width"))
    sw = sandwich(
        body,
        max(config.n_dirs, 10),
        derive_seed(seed, "sandwich", index),
        n_starts=config.starts,
        steps=config.steps,
        search_samples=config.search_samples,
        step0=config.step0,
        decay=config.decay,
    )
    unc = unconditionality_report(body, basis, config.n_tests, derive_seed(seed, "uncond", index))
    sym = symmetry_defect(body, config.n_tests, derive_seed(seed, "symmetry", index))
    return StageReport(
        stage=index,
        source=spec.source.describe(),
        reflections=added,
        total_reflections=body.m,
        mode=mode_name,
        mean_width=mw,
        circumradius_lb=sw.h_max,
        h_min=sw.h_min,
        sandwich_ratio=sw.ratio,
        unconditionality_defect=unc.defect,
        unconditionality_ci_ratio=unc.ci_ratio,
        symmetry_defect=sym.defect,
        symmetry_ci_ratio=sym.ci_ratio,
        paired_defect=paired_defect,
        seconds=(time.perf_counter() - t0) if config.timing else None,
    )


def _radius_stage(body, index, spec, added, mode_name, config, seed, paired_defect, t0):
    radius, _ = maximize_support(
        body, config.starts, config.steps, derive_seed(seed, "sandwich", index), config.search_samples
    )
    nan = float("nan")
    return StageReport(
        stage=index,
        source=spec.source.describe(),
        reflections=added,
        total_reflections=body.m,
        mode=mode_name,
        mean_width=EstimateWithCI(nan, 0.0, 0),
        circumradius_lb=radius,
        h_min=nan,
        sandwich_ratio=nan,
        unconditionality_defect=nan,
        unconditionality_ci_ratio=nan,
        symmetry_defect=nan,
        symmetry_ci_ratio=nan,
        paired_defect=paired_defect,
        seconds=(time.perf_counter() - t0) if config.timing else None,
    )


def _within(defect: float, ci_ratio: float, exact: bool) -> bool:
    return defect <= 1e-9 if exact else ci_ratio <= 3.0


def _full(s: StageReport) -> bool:
    return s.mean_width.samples > 0


def _verdicts(stages: list[StageReport], schedule: Schedule) -> dict:
    """Bookkeeping and property checks over the fully reported stages."""
    full = [s for s in stages if _full(s)]
    paired = [s.paired_defect for s in stages if s.paired_defect is not None]
    checks = {
        "reflections_total": stages[-1].total_reflections if stages else 0,
        "reflections_expected": schedule.total_reflections,
        "paired_invariance": (max(paired) <= 1e-10) if paired else None,
    }
    if full:
        mw0 = full[0].mean_width
        checks["mean_width_stable"] = all(
            abs(s.mean_width.value - mw0.value)
            <= 3.0 * combined_half_width(s.mean_width, mw0) + 1e-12 * abs(mw0.value)
            for s in full
        )
    if stages and _full(stages[0]):
        first = stages[0]
        exact = first.mode == "exact"
        checks["unconditional_after_stage1"] = _within(
            first.unconditionality_defect, first.unconditionality_ci_ratio, exact
        )
        checks["symmetric_after_stage1"] = _within(first.symmetry_defect, first.symmetry_ci_ratio, exact)
    if stages and _full(stages[-1]):
        checks["final_sandwich_ratio"] = stages[-1].sandwich_ratio
        checks["final_sandwich_le_2"] = stages[-1].sandwich_ratio <= 2.0
    logn = math.log(schedule.n)
    if len(stages) >= 2 and logn > 0:
        checks["stage2_radius_over_log_n"] = stages[1].circumradius_lb / logn
    if len(stages) >= 4 and logn > 1:
        checks["stage4_radius_over_loglog_n"] = stages[3].circumradius_lb / math.log(logn)
    return checks


METRICS = ("full", "final", "radius")


def run_pipeline(
    body: SupportBody,
    schedule: Schedule,
    seed: Seed,
    config: EstimatorConfig = EstimatorConfig(),
    max_stages: int | None = None,
    metrics: str = "full",
) -> ExperimentReport:
    """Apply the schedule stage by stage, reporting after each stage.

    Evaluation is exact while the reflection stack fits ``config.exact_cap``
    and Monte Carlo afterwards. ``metrics="full"`` measures every stage;
    ``"radius"`` records only the circumradius bound (other fields NaN) and
    ``"final"`` does so for all stages but the last.
    """
    if metrics not in METRICS:
        raise ValueError(f"metrics must be one of {METRICS}, got {metrics!r}")
    if body.n != schedule.n:
        raise ValueError(f"body dimension {body.n} does not match schedule dimension {schedule.n}")
    if max_stages is not None:
        schedule = schedule.truncated(max_stages)
    n = schedule.n
    current = body if isinstance(body, SymmetrizedBody) else SymmetrizedBody(body, (), Exact(), config.exact_cap)
    bases: list[np.ndarray] = []
    reports: list[StageReport] = []
    for index, spec in enumerate(schedule.stages, start=1):
        t0 = time.perf_counter()
        basis = _materialize(spec, index, bases, n, seed)
        bases.append(basis)
        block = basis[:, :-1] if spec.skip_last else basis
        mode = _mode_for(current.m + block.shape[1], config, seed)
        before = current if current.mode == mode else current.with_mode(mode)
        current = before.add_basis(basis, spec.skip_last)
        paired = _orbit_defect(before, current, block, config.paired_dirs, derive_seed(seed, "orbit", index))
        mode_name = "exact" if isinstance(mode, Exact) else "mc"
        full = metrics == "full" or (metrics == "final" and index == len(schedule.stages))
        try:
            if full:
                rep = _report_stage(
                    current, index, spec, basis, block.shape[1], mode_name, config, seed, paired, t0
                )
            else:
                rep = _radius_stage(current, index, spec, block.shape[1], mode_name, config, seed, paired, t0)
        except DegenerateBodyError as exc:
            raise StageError(f"stage {index} ({spec.source.describe()}): {exc}") from exc
        reports.append(rep)
    return ExperimentReport(
        schedule=schedule.describe(),
        seed=int(seed),
        body=_describe_body(body),
        config=config.to_dict(),
        stages=reports,
        verdicts=_verdicts(reports, schedule),
        bases=bases,
        final_body=current,
    )


def _describe_body(body: SupportBody) -> dict:
    try:
        return body_to_dict(body)
    except (TypeError, NotImplementedError):
        return {"kind": body.kind, "n": body.n}


@dataclass
class DecayResult:
    kind: str
    table: list[dict]
    cells: list[dict]
    reports: list[ExperimentReport]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "table": self.table,
            "cells": self.cells,
            "reports": [r.to_dict() for r in self.reports],
        }


def _kt_stages(kind: str, n: int, seed: Seed) -> list[np.ndarray]:
    if kind.startswith("walsh5"):
        return [walsh_flat_basis(n)]
    return [sample_haar_basis(n, seed, "kt", 1), sample_haar_basis(n, seed, "kt", 2)]


def decay_cell(
    n: int,
    seed: Seed,
    kind: str = "random6",
    config: EstimatorConfig = EstimatorConfig(),
    max_stages: int | None = None,
    kt_check: bool = True,
    metrics: str = "full",
) -> tuple[dict, ExperimentReport]:
    """One ``(n, seed)`` cell of the decay experiment.

    The schedule is run on ``sqrt(n) conv{+-e_i}`` and the stage-2
    circumradius compared with ``log n``. When ``kt_check`` is set, ``K_t``
    with ``t`` equal to that measured radius is symmetrized with fresh bases
    (two Haar bases, or one Walsh basis for the walsh5 kinds) and its
    circumradius compared with ``log t``.
    """
    if max_stages is not None and max_stages < 2:
        raise ValueError("the decay experiment needs at least two stages")
    schedule = make_schedule(kind, n)
    if len(schedule.stages) < 2:
        raise ValueError("the decay experiment needs at least two stages")
    rep = run_pipeline(ScaledCrossPolytope(n), schedule, seed, config, max_stages, metrics)
    r2 = rep.stages[1].circumradius_lb
    cell = {"n": n, "seed": seed, "stage2_radius": r2, "stage2_ratio": r2 / math.log(n)}
    if kt_check:
        t = min(r2, math.sqrt(n))
        kt = SymmetrizedBody(IntersectionBody(n, t), (), Exact(), config.exact_cap)
        for basis in _kt_stages(kind, n, seed):
            mode = _mode_for(kt.m + n - 1, config, derive_seed(seed, "kt"))
            kt = (kt if kt.mode == mode else kt.with_mode(mode)).add_basis(basis, skip_last=True)
        r3, _ = maximize_support(
            kt, config.starts, config.steps, derive_seed(seed, "kt-search"), config.search_samples
        )
        cell.update(
            t=t,
            kt_radius=r3,
            kt_ratio=r3 / math.log(t) if t > 1 else float("nan"),
            kt_below_t=bool(r3 < t),
        )
    return cell, rep


def decay_table(cells: Sequence[dict]) -> list[dict]:
    """Per-``n`` median and max of the normalized radii, in order of first appearance."""
    table = []
    for n in dict.fromkeys(c["n"] for c in cells):
        rows = [c for c in cells if c["n"] == n]
        entry = {
            "n": n,
            "seeds": len(rows),
            "median_stage2_ratio": statistics.median(c["stage2_ratio"] for c in rows),
            "max_stage2_ratio": max(c["stage2_ratio"] for c in rows),
        }
        if all("kt_ratio" in c for c in rows):
            entry.update(
                median_kt_ratio=statistics.median(c["kt_ratio"] for c in rows),
                max_kt_ratio=max(c["kt_ratio"] for c in rows),
                kt_below_t_rate=sum(c["kt_below_t"] for c in rows) / len(rows),
            )
        table.append(entry)
    return table


def decay_experiment(
    ns: Sequence[int],
    kind: str = "random6",
    seeds: Sequence[int] = (0,),
    config: EstimatorConfig = EstimatorConfig(),
    max_stages: int | None = None,
    kt_check: bool = True,
    metrics: str = "full",
) -> DecayResult:
    """Diameter decay of the scaled cross-polytope across dimensions (see :func:`decay_cell`)."""
    if not ns:
        raise ValueError("ns must be non-empty")
    if not seeds:
        raise ValueError("seeds must be non-empty")
    cells, reports = [], []
    for n in ns:
        for seed in seeds:
            cell, rep = decay_cell(n, seed, kind, config, max_stages, kt_check, metrics)
            cells.append(cell)
            reports.append(rep)
    return DecayResult(kind, decay_table(cells), cells, reports)
