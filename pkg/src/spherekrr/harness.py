"""Experiment configuration, sweep orchestration and report output.

A sweep walks a grid of sampling ratios delta; at each point it derives the
sample size n = round(delta * d^K / K!), emits one theory row from the
asymptotic predictor and, per mode flags, seeded simulation / surrogate /
Wishart rows with mean and standard-error aggregates.  Trials are addressed
by (master_seed, stream_index) so results are identical for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coefficients import (
    KernelSpec,
    TeacherSpec,
    build_table,
    random_feature_profile,
)
from .rng import make_stream
from .simulate import gaussian_equivalent_run, kernel_trial, wishart_stieltjes_mc
from .theory import Regime, predict, stieltjes_mp

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepRow",
    "parse_config",
    "config_from_dict",
    "figure_recipe",
    "kernel_from_config",
    "teacher_from_config",
    "run_sweep",
    "rows_to_csv",
    "rows_to_json",
    "write_output",
    "RECIPE_NAMES",
]

# Stream-index partition so kernel, surrogate and Wishart trials never collide.
_GE_STREAM_BASE = 2**40
_MP_STREAM_BASE = 2**41

_CSV_HEADER = "delta,n,kind,trial,e_train,e_test,bias,variance,r_star,theta,seed,ms"

_MODE_NAMES = ("theory", "simulate", "ge", "mp_check")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: dict
    teacher: dict
    phase_K: int
    dimension_d: int
    ridge: float
    deltas: tuple
    trials: int
    truncation: int | None
    m_test: int
    master_seed: int
    modes: dict
    output_path: str | None
    output_format: str
    mp_samples: int = 1500

    def sample_size(self, delta: float) -> int:
        return max(int(round(delta * self.dimension_d**self.phase_K / math.factorial(self.phase_K))), 1)

    def planned_trial_count(self) -> int:
        active = sum(1 for m in ("simulate", "ge") if self.modes.get(m))
        return len(self.deltas) * self.trials * active

    def to_dict(self) -> dict:
        return {
            "kernel": dict(self.kernel),
            "teacher": dict(self.teacher),
            "K": self.phase_K,
            "d": self.dimension_d,
            "lambda": self.ridge,
            "deltas": list(self.deltas),
            "trials": self.trials,
            "truncation": "auto" if self.truncation is None else self.truncation,
            "m_test": self.m_test,
            "master_seed": self.master_seed,
            "modes": dict(self.modes),
            "output": {"path": self.output_path, "format": self.output_format},
            "mp_samples": self.mp_samples,
        }


@dataclass(frozen=True)
class SweepRow:
    delta: float
    n: int
    kind: str
    trial: int | None = None
    e_train: float | None = None
    e_test: float | None = None
    bias: float | None = None
    variance: float | None = None
    r_star: float | None = None
    theta: float | None = None
    seed: int | None = None
    ms: float | None = None


# ---------------------------------------------------------------------------
# Config parsing and recipes
# ---------------------------------------------------------------------------


def _require(condition: bool, path: str, message: str):
    if not condition:
        raise ConfigError(f"config error at {path}: {message}")


def _check_keys(obj: dict, path: str, allowed: set):
    unknown = set(obj) - allowed
    _require(not unknown, path, f"unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def _as_number(value, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "expected a number")
    return float(value)


def _as_int(value, path: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), path, "expected an integer")
    return value


def _validate_kernel(obj, path="kernel") -> dict:
    _require(isinstance(obj, dict), path, "expected an object")
    variant = obj.get("variant")
    _require(isinstance(variant, str), f"{path}.variant", "expected a string")
    if variant == "taylor":
        _check_keys(obj, path, {"variant", "coefficients"})
        coeffs = obj.get("coefficients")
        _require(isinstance(coeffs, list) and coeffs, f"{path}.coefficients", "expected a nonempty list of numbers")
        for i, c in enumerate(coeffs):
            _as_number(c, f"{path}.coefficients[{i}]")
    elif variant == "polynomial":
        _check_keys(obj, path, {"variant", "offset", "degree"})
        _require(_as_number(obj.get("offset", None), f"{path}.offset") >= 0, f"{path}.offset", "must be >= 0")
        _require(_as_int(obj.get("degree", None), f"{path}.degree") >= 1, f"{path}.degree", "must be >= 1")
    elif variant == "random_feature":
        _check_keys(obj, path, {"variant", "activation", "truncation"})
        _require(isinstance(obj.get("activation"), str), f"{path}.activation", "expected a string")
        if "truncation" in obj:
            _require(_as_int(obj["truncation"], f"{path}.truncation") >= 1, f"{path}.truncation", "must be >= 1")
    else:
        raise ConfigError(
            f"config error at {path}.variant: expected one of taylor, polynomial, random_feature "
            "(profile kernels take a callable and are library-only)"
        )
    return obj


def _validate_teacher(obj, path="teacher") -> dict:
    _require(isinstance(obj, dict), path, "expected an object")
    _check_keys(obj, path, {"coefficients", "noise_sigma"})
    coeffs = obj.get("coefficients")
    _require(isinstance(coeffs, list) and coeffs, f"{path}.coefficients", "expected a nonempty list of numbers")
    for i, c in enumerate(coeffs):
        _as_number(c, f"{path}.coefficients[{i}]")
    sigma = _as_number(obj.get("noise_sigma", 0.0), f"{path}.noise_sigma")
    _require(sigma >= 0, f"{path}.noise_sigma", "must be >= 0")
    return obj


def _validate_deltas(obj, path="deltas") -> tuple:
    if isinstance(obj, list):
        _require(bool(obj), path, "delta grid must be nonempty")
        values = []
        for i, v in enumerate(obj):
            value = _as_number(v, f"{path}[{i}]")
            _require(value > 0, f"{path}[{i}]", "delta must be > 0")
            values.append(value)
        return tuple(values)
    if isinstance(obj, dict):
        _check_keys(obj, path, {"start", "stop", "points", "spacing"})
        start = _as_number(obj.get("start", None), f"{path}.start")
        stop = _as_number(obj.get("stop", None), f"{path}.stop")
        points = _as_int(obj.get("points", None), f"{path}.points")
        spacing = obj.get("spacing", "log")
        _require(start > 0 and stop >= start, path, "need 0 < start <= stop")
        _require(points >= 1, f"{path}.points", "must be >= 1")
        _require(spacing in ("log", "linear"), f"{path}.spacing", "expected 'log' or 'linear'")
        grid = np.geomspace(start, stop, points) if spacing == "log" else np.linspace(start, stop, points)
        return tuple(float(v) for v in grid)
    raise ConfigError(f"config error at {path}: expected a list of numbers or a range object")


def config_from_dict(raw: dict) -> ExperimentConfig:
    _require(isinstance(raw, dict), "$", "expected a JSON object")
    if "recipe" in raw:
        name = raw["recipe"]
        _require(isinstance(name, str), "recipe", "expected a string")
        base = figure_recipe(name).to_dict()
        merged = dict(base)
        for key, value in raw.items():
            if key != "recipe":
                merged[key] = value
        raw = merged

    allowed = {
        "kernel", "teacher", "K", "d", "lambda", "deltas", "trials", "truncation",
        "m_test", "master_seed", "modes", "output", "mp_samples",
    }
    _check_keys(raw, "$", allowed)
    _require("kernel" in raw, "kernel", "missing (give a kernel or a recipe)")
    _require("teacher" in raw, "teacher", "missing (give a teacher or a recipe)")
    _require("K" in raw, "K", "missing")
    _require("d" in raw, "d", "missing")

    kernel = _validate_kernel(raw["kernel"])
    teacher = _validate_teacher(raw["teacher"])
    phase_k = _as_int(raw["K"], "K")
    _require(phase_k >= 1, "K", "must be >= 1")
    dim = _as_int(raw["d"], "d")
    _require(dim >= 3, "d", "must be >= 3")
    ridge = _as_number(raw.get("lambda", 1e-4), "lambda")
    if ridge <= 0:
        raise ConfigError(
            "config error at lambda: must be > 0; the ridgeless case is handled by "
            "the explicit lambda -> 0 limit (theory.ridgeless_limit), not by lambda = 0"
        )
    deltas = _validate_deltas(raw.get("deltas", {"start": 0.25, "stop": 4.0, "points": 9, "spacing": "log"}))
    trials = _as_int(raw.get("trials", 10), "trials")
    _require(trials >= 1, "trials", "must be >= 1")
    truncation_raw = raw.get("truncation", "auto")
    if truncation_raw == "auto":
        truncation = None
    else:
        truncation = _as_int(truncation_raw, "truncation")
        _require(truncation >= phase_k, "truncation", f"must be >= K = {phase_k}")
    m_test = _as_int(raw.get("m_test", 0), "m_test")
    _require(m_test == 0 or m_test >= 1000, "m_test", "must be 0 (skip) or >= 1000")
    master_seed = _as_int(raw.get("master_seed", 20260801), "master_seed")
    _require(0 <= master_seed < 2**64, "master_seed", "must fit in 64 unsigned bits")

    modes_raw = raw.get("modes", {"theory": True, "simulate": True})
    _require(isinstance(modes_raw, dict), "modes", "expected an object of booleans")
    _check_keys(modes_raw, "modes", set(_MODE_NAMES))
    modes = {name: bool(modes_raw.get(name, False)) for name in _MODE_NAMES}
    _require(any(modes.values()), "modes", "at least one mode must be enabled")

    output = raw.get("output", {})
    _require(isinstance(output, dict), "output", "expected an object")
    _check_keys(output, "output", {"path", "format"})
    out_path = output.get("path")
    _require(out_path is None or isinstance(out_path, str), "output.path", "expected a string or null")
    out_format = output.get("format", "csv")
    _require(out_format in ("csv", "json"), "output.format", "expected 'csv' or 'json'")
    mp_samples = _as_int(raw.get("mp_samples", 1500), "mp_samples")
    _require(mp_samples >= 100, "mp_samples", "must be >= 100")

    return ExperimentConfig(
        kernel=kernel,
        teacher=teacher,
        phase_K=phase_k,
        dimension_d=dim,
        ridge=ridge,
        deltas=deltas,
        trials=trials,
        truncation=truncation,
        m_test=m_test,
        master_seed=master_seed,
        modes=modes,
        output_path=out_path,
        output_format=out_format,
        mp_samples=mp_samples,
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a JSON experiment config; unknown keys are rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    return config_from_dict(raw)


_FIG1_KERNEL = {"variant": "taylor", "coefficients": [1.0, 1.0, 0.5, 1.0 / 30.0]}
_FIG1_TEACHER = {"coefficients": [0.0, 1.0, 1.0, 0.5, 0.05], "noise_sigma": 0.5}
_RECIPE_DIMS = {"fig1-k1": (1, 500), "fig1-k2": (2, 60), "fig1-k3": (3, 12)}
RECIPE_NAMES = tuple(sorted(_RECIPE_DIMS))


def figure_recipe(name: str) -> ExperimentConfig:
    """Hierarchical learning-curve transition recipes at desk-scale dimensions.

    All three share the cubic kernel 1 + z + z^2/2 + z^3/30, the quartic
    teacher x + x^2 + x^3/2 + x^4/20 with noise 0.5, and ridge 1e-4; they
    differ in the phase degree K and a dimension d chosen to keep the largest
    solve desk-sized.
    """
    if name not in _RECIPE_DIMS:
        raise ConfigError(f"unknown recipe {name!r}; known: {', '.join(RECIPE_NAMES)}")
    phase_k, dim = _RECIPE_DIMS[name]
    grid = np.geomspace(0.1, 4.0, 17)
    return ExperimentConfig(
        kernel=dict(_FIG1_KERNEL),
        teacher=dict(_FIG1_TEACHER),
        phase_K=phase_k,
        dimension_d=dim,
        ridge=1e-4,
        deltas=tuple(float(v) for v in grid),
        trials=10,
        truncation=None,
        m_test=0,
        master_seed=20260801,
        modes={"theory": True, "simulate": True, "ge": False, "mp_check": False},
        output_path=None,
        output_format="csv",
    )


def kernel_from_config(cfg: dict) -> KernelSpec:
    variant = cfg["variant"]
    if variant == "taylor":
        return KernelSpec.from_taylor(cfg["coefficients"])
    if variant == "polynomial":
        return KernelSpec.polynomial(cfg["offset"], cfg["degree"])
    if variant == "random_feature":
        return random_feature_profile(cfg["activation"], cfg.get("truncation", 16))
    raise ConfigError(f"unsupported kernel variant {variant!r}")


def teacher_from_config(cfg: dict) -> TeacherSpec:
    return TeacherSpec.polynomial(cfg["coefficients"], cfg.get("noise_sigma", 0.0))


# ---------------------------------------------------------------------------
# Sweep execution
# ---------------------------------------------------------------------------


def _trial_task(args):
    """Worker entry; returns (delta_index, kind, trial_index, run_or_error)."""
    (kind, delta_idx, trial_idx, kernel, teacher, table, n, d, ridge,
     master_seed, stream_index, m_test) = args
    try:
        stream = make_stream(master_seed, stream_index)
        if kind == "trial":
            run = kernel_trial(kernel, teacher, table, n, d, ridge, stream, m_test)
        elif kind == "ge-trial":
            run = gaussian_equivalent_run(table, n, ridge, stream)
        else:
            raise ValueError(f"unknown task kind {kind}")
        return delta_idx, kind, trial_idx, run
    except Exception as err:  # recorded per row; the sweep continues
        return delta_idx, kind, trial_idx, f"{type(err).__name__}: {err}"


def _aggregate(rows: list, delta: float, n: int, kind_prefix: str) -> list:
    values_train = np.array([r.e_train for r in rows])
    values_test = np.array([r.e_test for r in rows])
    out = [
        SweepRow(delta=delta, n=n, kind=f"{kind_prefix}mean",
                 e_train=float(values_train.mean()), e_test=float(values_test.mean()))
    ]
    if len(rows) >= 2:
        out.append(
            SweepRow(
                delta=delta, n=n, kind=f"{kind_prefix}se",
                e_train=float(values_train.std(ddof=1) / math.sqrt(len(rows))),
                e_test=float(values_test.std(ddof=1) / math.sqrt(len(rows))),
            )
        )
    return out


def run_sweep(config: ExperimentConfig, workers: int = 1) -> tuple[list, list]:
    """Execute the sweep; returns (rows, failures).

    failures is a list of (delta, kind, trial_index, message) for trials that
    raised; they also appear as kind='failed' rows so the report records them.
    """
    kernel = kernel_from_config(config.kernel)
    teacher = teacher_from_config(config.teacher)
    table = build_table(
        kernel, teacher, config.phase_K, config.ridge,
        truncation=config.truncation, d=config.dimension_d,
    )
    sizes = [config.sample_size(delta) for delta in config.deltas]

    theory_rows: dict[int, SweepRow] = {}
    if config.modes.get("theory"):
        for i, delta in enumerate(config.deltas):
            regime = Regime(config.phase_K, delta, config.ridge,
                            dimension_d=config.dimension_d, samples_n=sizes[i])
            pred = predict(table, regime)
            theory_rows[i] = SweepRow(
                delta=delta, n=sizes[i], kind="theory",
                e_train=pred.e_train, e_test=pred.e_test,
                bias=pred.bias, variance=pred.variance,
                r_star=pred.r_star, theta=pred.theta,
            )

    tasks = []
    if config.modes.get("simulate"):
        for i in range(len(config.deltas)):
            for t in range(config.trials):
                idx = i * config.trials + t
                tasks.append(("trial", i, t, kernel, teacher, table, sizes[i],
                              config.dimension_d, config.ridge, config.master_seed,
                              idx, config.m_test))
    if config.modes.get("ge"):
        for i in range(len(config.deltas)):
            for t in range(config.trials):
                idx = _GE_STREAM_BASE + i * config.trials + t
                tasks.append(("ge-trial", i, t, kernel, teacher, table, sizes[i],
                              config.dimension_d, config.ridge, config.master_seed,
                              idx, 0))

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_task, tasks))
    else:
        results = [_trial_task(task) for task in tasks]

    by_point: dict[tuple[int, str], list] = {}
    failures = []
    failed_rows = []
    for delta_idx, kind, trial_idx, outcome in results:
        if isinstance(outcome, str):
            failures.append((config.deltas[delta_idx], kind, trial_idx, outcome))
            failed_rows.append((delta_idx, kind, trial_idx))
        else:
            by_point.setdefault((delta_idx, kind), []).append((trial_idx, outcome))

    rows: list[SweepRow] = []
    for i, delta in enumerate(config.deltas):
        if i in theory_rows:
            rows.append(theory_rows[i])
        for kind, prefix in (("trial", ""), ("ge-trial", "ge-")):
            point_runs = sorted(by_point.get((i, kind), []))
            trial_rows = []
            for trial_idx, run in point_runs:
                trial_rows.append(
                    SweepRow(
                        delta=delta, n=sizes[i], kind=kind, trial=trial_idx,
                        e_train=run.e_train, e_test=run.e_test_semi,
                        seed=run.trial_seed, ms=run.elapsed_ms,
                    )
                )
            rows.extend(trial_rows)
            for delta_j, failed_kind, trial_idx in failed_rows:
                if delta_j == i and failed_kind == kind:
                    rows.append(SweepRow(delta=delta, n=sizes[i], kind="failed",
                                         trial=trial_idx,
                                         seed=(_GE_STREAM_BASE if kind == "ge-trial" else 0)
                                         + i * config.trials + trial_idx))
            if trial_rows:
                rows.extend(_aggregate(trial_rows, delta, sizes[i], prefix))

    if config.modes.get("mp_check"):
        mu_k = float(table.mu_limit[config.phase_K]) if np.all(np.isfinite(table.mu_limit)) \
            else float(table.mu_finite[config.phase_K])
        lambda_eff = config.ridge + table.kernel_tail_mass + table.kernel_tail_residual
        for i, delta in enumerate(config.deltas):
            rows.append(SweepRow(delta=delta, n=config.mp_samples, kind="mp-theory",
                                 r_star=stieltjes_mp(lambda_eff, mu_k, delta)))
            estimates = []
            for t in range(config.trials):
                stream = make_stream(config.master_seed,
                                     _MP_STREAM_BASE + i * config.trials + t)
                value = wishart_stieltjes_mc(lambda_eff, mu_k, delta, config.mp_samples, stream)
                estimates.append(value)
                rows.append(SweepRow(delta=delta, n=config.mp_samples, kind="mp-mc",
                                     trial=t, r_star=value,
                                     seed=_MP_STREAM_BASE + i * config.trials + t))
            arr = np.array(estimates)
            rows.append(SweepRow(delta=delta, n=config.mp_samples, kind="mp-mean",
                                 r_star=float(arr.mean())))
            if len(arr) >= 2:
                rows.append(SweepRow(delta=delta, n=config.mp_samples, kind="mp-se",
                                     r_star=float(arr.std(ddof=1) / math.sqrt(len(arr)))))

    return rows, failures


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def rows_to_csv(rows: list, include_timings: bool = False) -> str:
    """Render rows as CSV with a fixed header and 17 significant digits.

    Wall-clock timings are scheduler-dependent, so by default the ms column is
    left empty and the report is byte-identical for any worker count.
    """
    if not rows:
        raise ValueError("refusing to write an empty row set")
    lines = [_CSV_HEADER]
    for row in rows:
        lines.append(",".join([
            _fmt(row.delta), _fmt(row.n), row.kind, _fmt(row.trial),
            _fmt(row.e_train), _fmt(row.e_test), _fmt(row.bias), _fmt(row.variance),
            _fmt(row.r_star), _fmt(row.theta), _fmt(row.seed),
            _fmt(row.ms) if include_timings else "",
        ]))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list, config: ExperimentConfig | None = None,
                 include_timings: bool = False) -> str:
    if not rows:
        raise ValueError("refusing to write an empty row set")
    payload = {
        "config": config.to_dict() if config is not None else None,
        "columns": _CSV_HEADER.split(","),
        "rows": [
            {
                "delta": row.delta, "n": row.n, "kind": row.kind, "trial": row.trial,
                "e_train": row.e_train, "e_test": row.e_test,
                "bias": row.bias, "variance": row.variance,
                "r_star": row.r_star, "theta": row.theta, "seed": row.seed,
                "ms": row.ms if include_timings else None,
            }
            for row in rows
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def write_output(rows: list, output_format: str, path: str,
                 config: ExperimentConfig | None = None,
                 include_timings: bool = False) -> None:
    """Write rows to path as CSV or JSON (with the config embedded for provenance)."""
    if output_format == "csv":
        text = rows_to_csv(rows, include_timings)
    elif output_format == "json":
        text = rows_to_json(rows, config, include_timings)
    else:
        raise ValueError(f"unknown output format {output_format!r}")
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as err:
        raise OSError(f"cannot write output to {path}: {err}") from err
