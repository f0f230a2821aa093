"""Command-line interface.

Subcommands:
  theory     asymptotic predictions over the delta grid
  coeffs     serialize the coefficient table as JSON
  simulate   finite-size trials plus the matching theory rows
  sweep      run whatever the config's mode flags enable
  mp-check   fixed point vs Wishart Monte Carlo resolvent trace
  ge-check   paired kernel and Gaussian-surrogate trials
  recipe     emit a named experiment config as JSON

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .coefficients import QuadratureNotConverged, build_table
from .harness import (
    ConfigError,
    figure_recipe,
    kernel_from_config,
    parse_config,
    rows_to_csv,
    rows_to_json,
    run_sweep,
    teacher_from_config,
    write_output,
)
from .linalg import NotPositiveDefiniteError

_MODE_OVERRIDES = {
    "theory": {"theory": True, "simulate": False, "ge": False, "mp_check": False},
    "simulate": {"theory": True, "simulate": True, "ge": False, "mp_check": False},
    "mp-check": {"theory": False, "simulate": False, "ge": False, "mp_check": True},
    "ge-check": {"theory": True, "simulate": True, "ge": True, "mp_check": False},
    "sweep": None,  # honor the config's own mode flags
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spherekrr",
        description="Learning-curve predictions and simulations for inner-product "
        "kernel ridge regression on the sqrt(d)-sphere.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="output path (default: config's, else stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None, dest="out_format")
        p.add_argument("--workers", type=int, default=1, help="parallel trial workers")
        p.add_argument("--quiet", action="store_true", help="suppress progress messages")
        p.add_argument("--plot", action="store_true",
                       help="also render figures next to the output file")
        p.add_argument("--timings", action="store_true",
                       help="include wall-clock ms in the report (breaks byte-for-byte "
                            "reproducibility across runs)")

    for name in ("theory", "coeffs", "simulate", "sweep", "mp-check", "ge-check"):
        add_common(sub.add_parser(name))

    recipe = sub.add_parser("recipe", help="emit a named experiment config as JSON")
    recipe.add_argument("name", help="recipe name, e.g. fig1-k1, fig1-k2, fig1-k3")
    recipe.add_argument("--out", default=None)
    recipe.add_argument("--quiet", action="store_true")
    return parser


def _emit(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _load_config(args):
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {args.config}: {err}") from err
    config = parse_config(text)
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out is not None:
        updates["output_path"] = args.out
    if args.out_format is not None:
        updates["output_format"] = args.out_format
    override = _MODE_OVERRIDES.get(args.command)
    if override is not None:
        updates["modes"] = override
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    return config


def _run(args) -> int:
    if args.command == "recipe":
        config = figure_recipe(args.name)
        _emit(json.dumps(config.to_dict(), indent=2) + "\n", args.out)
        return 0

    config = _load_config(args)

    if args.command == "coeffs":
        kernel = kernel_from_config(config.kernel)
        teacher = teacher_from_config(config.teacher)
        table = build_table(
            kernel, teacher, config.phase_K, config.ridge,
            truncation=config.truncation, d=config.dimension_d,
            n=config.sample_size(config.deltas[0]),
        )
        _emit(json.dumps(table.to_dict(), indent=2) + "\n", config.output_path)
        return 0

    rows, failures = run_sweep(config, workers=args.workers)
    if not args.quiet:
        active = ", ".join(k for k, v in config.modes.items() if v)
        print(f"[spherekrr] {len(rows)} rows over {len(config.deltas)} delta points "
              f"(modes: {active})", file=sys.stderr)
        for delta, kind, trial, message in failures:
            print(f"[spherekrr] FAILED {kind} delta={delta:g} trial={trial}: {message}",
                  file=sys.stderr)

    path = config.output_path
    if path is None or path == "-":
        text = (rows_to_csv(rows, args.timings) if config.output_format == "csv"
                else rows_to_json(rows, config, args.timings))
        sys.stdout.write(text)
    else:
        write_output(rows, config.output_format, path, config, args.timings)
        if args.plot:
            from .plotting import render_report_figures

            for figure_path in render_report_figures(rows, path, title=args.command):
                if not args.quiet:
                    print(f"[spherekrr] wrote {figure_path}", file=sys.stderr)

    total_trials = config.planned_trial_count()
    if failures:
        if total_trials and len(failures) > 0.5 * total_trials:
            return 2
        return 3
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (NotPositiveDefiniteError, QuadratureNotConverged, ArithmeticError,
            FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
