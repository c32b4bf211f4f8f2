"""Command-line front end.

Exit codes: 0 success, 1 a checked property was violated, 2 bad
configuration, 3 runtime failure (including unwritable output).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import EuclideanBall, IntersectionBody, PolytopeHull, ScaledCrossPolytope
from .estimators import EstimatorConfig
from .linalg import make_rng
from .norms import inf_conv_norm, tail_l2_surrogate
from .pipeline import SCHEDULE_KINDS, decay_cell, decay_table, make_schedule, run_pipeline
from .probes import DISTRIBUTIONS, PROBES

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

STAGE_COLUMNS = (
    "n",
    "seed",
    "stage",
    "reflections",
    "mean_width",
    "ci",
    "circumradius_lb",
    "sandwich_ratio",
    "defect",
    "seconds",
)
TABLE_COLUMNS = (
    "n",
    "seeds",
    "median_stage2_ratio",
    "max_stage2_ratio",
    "median_kt_ratio",
    "max_kt_ratio",
    "kt_below_t_rate",
)
PROBE_COLUMNS = ("name", "n", "trials", "mean", "min", "max", "q50", "q90", "q99", "threshold", "success_rate")
NORM_COLUMNS = ("n", "k", "vectors", "max_ratio", "max_inverse_ratio", "in_range")

ESTIMATOR_FLAGS = {
    "n_dirs": int,
    "mc_samples": int,
    "exact_cap": int,
    "starts": int,
    "steps": int,
    "search_samples": int,
    "n_tests": int,
    "paired_dirs": int,
}

SQRT2 = math.sqrt(2.0)


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with defaults for any flag of this command")
    p.add_argument("--out", help="output path; the suffix is replaced per format (default: JSON on stdout)")
    p.add_argument("--format", choices=("csv", "json", "both"), help="default: from --out suffix, else json")


def _estimator(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("estimator")
    for name, typ in ESTIMATOR_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    g.add_argument("--timing", action="store_true", default=None, help="record wall time (breaks byte-identical output)")
    p.add_argument("--jobs", type=int, help="worker processes for independent (n, seed) cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minksym", description="Minkowski symmetrization experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decay", help="diameter decay of the scaled cross-polytope across n")
    _common(d)
    d.add_argument("--ns", type=_int_list)
    d.add_argument("--schedule", choices=sorted(SCHEDULE_KINDS))
    d.add_argument("--seeds", type=_int_list)
    d.add_argument("--max-stages", type=int)
    d.add_argument("--no-kt", action="store_true", default=None, help="skip the K_t stage check")
    _estimator(d)

    p = sub.add_parser("pipeline", help="run one schedule on one body per seed")
    _common(p)
    p.add_argument("--body", help="cross | ball | kt:T | hull:FILE")
    p.add_argument("--n", type=int)
    p.add_argument("--schedule", choices=sorted(SCHEDULE_KINDS))
    p.add_argument("--seed", type=_int_list, dest="seeds", help="one seed or a comma-separated list")
    p.add_argument("--seeds", type=_int_list, dest="seeds")
    p.add_argument("--max-stages", type=int)
    _estimator(p)

    pr = sub.add_parser("probe", help="run a statistical probe")
    _common(pr)
    pr.add_argument("name", help="one of: " + ", ".join(sorted(PROBES)))
    pr.add_argument("--n", type=int)
    pr.add_argument("--trials", type=int)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--c1", type=float)
    pr.add_argument("--k", type=int)
    pr.add_argument("--dist", choices=DISTRIBUTIONS)
    pr.add_argument("--samples", type=int)
    pr.add_argument("--threshold", type=float)

    nc = sub.add_parser("norm-check", help="two-sided sqrt(2) equivalence of the inf-convolution norm")
    _common(nc)
    nc.add_argument("--ns", type=_int_list)
    nc.add_argument("--vectors", type=int, help="random vectors per distribution and n")
    nc.add_argument("--seed", type=int)
    nc.add_argument("--x", type=_float_list, help="check a single vector instead of the sweep")
    nc.add_argument("--k", type=_float_list, help="k values (default: 1, 2, sqrt(n)/4, sqrt(n))")
    return parser


DEFAULTS = {
    "decay": {"schedule": "random6", "max_stages": None, "no_kt": False, "jobs": 1},
    "pipeline": {"schedule": "random6", "max_stages": None, "jobs": 1},
    "probe": {"c1": 5.0, "dist": "exponential"},
    "norm-check": {"ns": [8, 32, 128], "vectors": 2000},
}


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over built-in defaults."""
    cfg = vars(args).copy()
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        est = file_cfg.pop("estimator", {})
        if not isinstance(est, dict):
            raise ConfigError("'estimator' must be a JSON object")
        file_cfg.update(est)
        if "seed" in file_cfg and args.command == "pipeline":
            file_cfg.setdefault("seeds", file_cfg.pop("seed"))
        unknown = set(file_cfg) - set(cfg) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, val in file_cfg.items():
        if cfg.get(key) is None:
            if key in ("ns", "seeds") and isinstance(val, int):
                val = [val]
            cfg[key] = val
    for key, val in DEFAULTS.get(args.command, {}).items():
        if cfg.get(key) is None:
            cfg[key] = val
    cfg.pop("config", None)
    return cfg


def _estimator_config(cfg: dict) -> EstimatorConfig:
    kw = {k: cfg[k] for k in ESTIMATOR_FLAGS if cfg.get(k) is not None}
    if cfg.get("timing"):
        kw["timing"] = True
    try:
        config = EstimatorConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.update(config.to_dict())
    return config


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) in (None, [])]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ConfigError(f"missing required setting(s): {flags}")


# output ---------------------------------------------------------------------


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _dump_json(payload: dict) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def _csv_text(columns, rows, provenance: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# minksym {__version__}\n")
    buf.write("# config " + json.dumps(_clean(provenance), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row.get(c) is None else _cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _formats(cfg: dict) -> tuple[bool, bool]:
    fmt = cfg.get("format")
    if fmt is None:
        out = cfg.get("out")
        fmt = "csv" if out and out.endswith(".csv") else "json"
    return fmt in ("csv", "both"), fmt in ("json", "both")


def _emit(cfg: dict, payload: dict, csv_tables: dict[str, tuple]) -> None:
    """Write JSON and/or CSV outputs. ``csv_tables`` maps a stem suffix to (columns, rows)."""
    want_csv, want_json = _formats(cfg)
    provenance = {"version": __version__, "config": cfg}
    doc = {"minksym_version": __version__, "config": cfg, **payload}
    out = cfg.get("out")
    if not out:
        sys.stdout.write(_dump_json(doc))
        return
    base = Path(out)
    stem = base.with_suffix("") if base.suffix in (".csv", ".json") else base
    if want_json:
        _atomic_write(stem.with_name(stem.name + ".json"), _dump_json(doc))
    if want_csv:
        for suffix, (columns, rows) in csv_tables.items():
            _atomic_write(stem.with_name(stem.name + suffix + ".csv"), _csv_text(columns, rows, provenance))


def stage_rows(n: int, seed: int, report) -> list[dict]:
    rows = []
    for s in report.stages:
        rows.append(
            {
                "n": n,
                "seed": seed,
                "stage": s.stage,
                "reflections": s.total_reflections,
                "mean_width": s.mean_width.value,
                "ci": s.mean_width.half_width,
                "circumradius_lb": s.circumradius_lb,
                "sandwich_ratio": s.sandwich_ratio,
                "defect": s.unconditionality_defect,
                "seconds": s.seconds,
            }
        )
    return rows


# commands -------------------------------------------------------------------


def _map(fn, jobs: int, items: list):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, *zip(*items)))
    return [fn(*it) for it in items]


def cmd_decay(cfg: dict) -> int:
    _require(cfg, "ns", "seeds")
    config = _estimator_config(cfg)
    kind = cfg["schedule"]
    kt = not cfg["no_kt"]
    for n in cfg["ns"]:
        if n < 2:
            raise ConfigError(f"dimensions must be >= 2, got {n}")
    if cfg["max_stages"] is not None and cfg["max_stages"] < 2:
        raise ConfigError("decay needs --max-stages >= 2")
    items = [(n, s, kind, config, cfg["max_stages"], kt) for n in cfg["ns"] for s in cfg["seeds"]]
    results = _map(decay_cell, cfg["jobs"], items)
    cells = [c for c, _ in results]
    table = decay_table(cells)
    rows = [r for (c, rep) in results for r in stage_rows(c["n"], c["seed"], rep)]
    payload = {
        "table": table,
        "cells": cells,
        "reports": [rep.to_dict() for _, rep in results],
    }
    _emit(cfg, payload, {"": (STAGE_COLUMNS, rows), ".table": (TABLE_COLUMNS, table)})
    return EXIT_OK


def parse_body(selector: str, n: int):
    if selector == "cross":
        return ScaledCrossPolytope(n)
    if selector == "ball":
        return EuclideanBall(n)
    if selector.startswith("kt:"):
        try:
            t = float(selector[3:])
        except ValueError:
            raise ConfigError(f"kt body needs a number, got {selector!r}") from None
        try:
            return IntersectionBody(n, t)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if selector.startswith("hull:"):
        path = selector[5:]
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read vertex file {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"vertex file {path} is not valid JSON: {exc}") from None
        verts = data.get("vertices") if isinstance(data, dict) else data
        try:
            arr = np.asarray(verts, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != n:
                raise ValueError(f"expected a list of {n}-dimensional vertices, got shape {arr.shape}")
            return PolytopeHull(arr)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"vertex file {path}: {exc}") from None
    raise ConfigError(f"unknown body {selector!r}; use cross, ball, kt:T or hull:FILE")


def _pipeline_cell(body, kind, n, seed, config, max_stages):
    return run_pipeline(body, make_schedule(kind, n), seed, config, max_stages)


def cmd_pipeline(cfg: dict) -> int:
    _require(cfg, "body", "n", "seeds")
    n = cfg["n"]
    body = parse_body(cfg["body"], n)
    config = _estimator_config(cfg)
    try:
        make_schedule(cfg["schedule"], n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    items = [(body, cfg["schedule"], n, s, config, cfg["max_stages"]) for s in cfg["seeds"]]
    reports = _map(_pipeline_cell, cfg["jobs"], items)
    rows = [r for s, rep in zip(cfg["seeds"], reports) for r in stage_rows(n, s, rep)]
    _emit(cfg, {"reports": [r.to_dict() for r in reports]}, {"": (STAGE_COLUMNS, rows)})
    return EXIT_OK


_PROBE_ARGS = {
    "basis-overlap": ("n", "trials", "c1", "seed"),
    "product-sum": ("n", "trials", "seed", "threshold"),
    "chaos-psi1": ("n", "trials", "seed", "samples", "threshold"),
    "unbiased-directions": ("n", "trials", "seed", "c1"),
    "rearranged-moment": ("n", "k", "trials", "dist", "seed", "threshold"),
}


def cmd_probe(cfg: dict) -> int:
    name = cfg["name"]
    if name not in PROBES:
        raise ConfigError(f"unknown probe {name!r}; available: {', '.join(sorted(PROBES))}")
    required = ("n", "seed", "k") if name == "rearranged-moment" else ("n", "seed")
    _require(cfg, *required)
    kw = {a: cfg[a] for a in _PROBE_ARGS[name] if cfg.get(a) is not None}
    try:
        report = PROBES[name](**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    row = {"name": report.name, "n": report.n, "trials": report.trials, **report.summary}
    row.update(threshold=report.threshold, success_rate=report.success_rate)
    _emit(cfg, {"report": report.to_dict()}, {"": (PROBE_COLUMNS, [row])})
    if report.extra.get("violations", 0) > 0:
        return EXIT_VIOLATION
    return EXIT_OK


def _sweep_vectors(n: int, count: int, seed: int) -> np.ndarray:
    rng = make_rng(seed, "norm-check", n)
    gauss = rng.standard_normal((count, n))
    sparse = gauss * (rng.random((count, n)) < min(1.0, 3.0 / n))
    sparse[np.all(sparse == 0, axis=1), 0] = 1.0
    heavy = rng.standard_cauchy((count, n))
    special = [np.ones(n), np.eye(n)[0], np.r_[np.ones(max(1, n // 2)), np.zeros(n - max(1, n // 2))]]
    for m in range(1, n + 1):
        special.append(np.r_[np.ones(m), np.zeros(n - m)])
    return np.vstack([gauss, sparse, heavy, np.array(special)])


def _norm_row(n: int, k: float, x: np.ndarray) -> dict:
    if k <= 0:
        raise ConfigError("k must be positive")
    hi, inv = norm_ratios(x, k)
    # Below 1/sqrt(2) the ratio equals k exactly, so the sqrt(2) bound is not claimed there.
    in_range = k >= 1.0 / SQRT2 - 1e-12
    return {"n": n, "k": k, "vectors": x.shape[0], "max_ratio": hi, "max_inverse_ratio": inv, "in_range": in_range}


def norm_ratios(x: np.ndarray, k: float) -> tuple[float, float]:
    """Largest ``inf_conv / surrogate`` and its reciprocal over the rows of ``x``."""
    r = np.atleast_1d(inf_conv_norm(x, k)) / np.atleast_1d(tail_l2_surrogate(x, k))
    return float(np.max(r)), float(np.max(1.0 / r))


def cmd_norm_check(cfg: dict) -> int:
    rows = []
    if cfg.get("x"):
        x = np.asarray(cfg["x"], dtype=float)
        if not np.any(x):
            raise ConfigError("the vector must be non-zero")
        rows = [_norm_row(x.size, k, x[None]) for k in cfg.get("k") or [1.0]]
    else:
        _require(cfg, "seed")
        for n in cfg["ns"]:
            if n < 1:
                raise ConfigError(f"dimensions must be positive, got {n}")
            x = _sweep_vectors(n, cfg["vectors"], cfg["seed"])
            ks = cfg.get("k") or [1.0, 2.0, math.sqrt(n) / 4.0, math.sqrt(n)]
            rows.extend(_norm_row(n, k, x) for k in ks)
    checked = [max(r["max_ratio"], r["max_inverse_ratio"]) for r in rows if r["in_range"]]
    worst = max(checked) if checked else None
    ok = worst is None or worst <= SQRT2 + 1e-9
    _emit(cfg, {"rows": rows, "worst": worst, "bound": SQRT2, "passed": ok}, {"": (NORM_COLUMNS, rows)})
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {"decay": cmd_decay, "pipeline": cmd_pipeline, "probe": cmd_probe, "norm-check": cmd_norm_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on usage errors
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(parser.format_usage())
        print(f"minksym {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"minksym {args.command}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - the CLI reports every failure as an exit code
        print(f"minksym {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
