"""Config-driven command-line front end.

Subcommands::

    model   derived quantities for each configured detuning
    cool    synthesize + analyze one cooling curve
    sweep   cooling curves across all configured detunings
    fit     analyze externally provided spectrum CSV files
    synth   synthesis only (writes spectrum CSV files)

Every output is deterministic for a given configuration and seed,
independent of ``--jobs``.  The seed is resolved in priority order:
``--seed``, the ``SIDEBAND_LIMIT_SEED`` environment variable, then the
configuration file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from sidebandlimit import __version__
from sidebandlimit.analysis import AnalysisError, detuning_sweep_summary
from sidebandlimit.config import (
    ConfigError,
    ExperimentConfig,
    default_config,
    load_config,
    save_config,
)
from sidebandlimit.io import SchemaError, config_hash, write_points_csv, write_report_json
from sidebandlimit.physics import (
    backaction_limit,
    optimal_detuning,
    regime_boundaries,
    sideband_ratio,
    thermal_occupation,
)
from sidebandlimit.pipeline import (
    CurveRun,
    analyze_spectrum_files,
    plan_curve,
    run_cooling_curve,
    run_point,
)

TWO_PI = 2.0 * math.pi

SEED_ENV_VAR = "SIDEBAND_LIMIT_SEED"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sideband-limit",
        description="Sideband-cooling simulator and ratio-thermometry pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    p_model = sub.add_parser("model", help="print derived quantities")
    common(p_model)
    p_model.add_argument("--json", action="store_true", help="emit JSON instead of text")

    p_cool = sub.add_parser("cool", help="run one cooling curve")
    common(p_cool)
    p_cool.add_argument(
        "--detuning", type=float, help="override detuning (Hz, negative)"
    )
    p_cool.add_argument(
        "--no-noise", action="store_true", help="noiseless analytic synthesis"
    )
    p_cool.add_argument(
        "--save-spectra",
        action="store_true",
        help="persist raw spectra (weak-drive points can reach GB-scale files)",
    )

    p_sweep = sub.add_parser("sweep", help="cooling curves across all detunings")
    common(p_sweep)
    p_sweep.add_argument("--no-noise", action="store_true")
    p_sweep.add_argument("--save-spectra", action="store_true")

    p_fit = sub.add_parser("fit", help="analyze existing spectrum CSV files")
    common(p_fit)
    p_fit.add_argument("inputs", nargs="+", type=Path, help="spectrum CSV files")

    p_synth = sub.add_parser("synth", help="synthesize spectra without analysis")
    common(p_synth)
    p_synth.add_argument("--detuning", type=float, help="override detuning (Hz)")
    p_synth.add_argument("--no-noise", action="store_true")

    p_init = sub.add_parser("init-config", help="write the default configuration")
    p_init.add_argument("path", type=Path)
    return parser


def _resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else default_config()
    if getattr(args, "out", None) is not None:
        config = replace(config, output_dir=str(args.out))
    return config


def _resolve_seed(args, config: ExperimentConfig) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR}: not an integer ({env!r})") from exc
    return config.seed


def _resolve_detuning_hz(args, config: ExperimentConfig) -> float:
    if getattr(args, "detuning", None) is not None:
        if args.detuning >= 0:
            raise ConfigError("--detuning: must be negative (red-detuned), in Hz")
        return args.detuning
    return config.detunings_hz[0]


def _detuning_label(detuning_hz: float) -> str:
    return f"{detuning_hz:.10g}Hz"


def _curve_report(
    run: CurveRun, config: ExperimentConfig, seed: int, command: str
) -> dict:
    curve = run.curve
    points = [
        {
            "gamma_opt_hz": o.gamma_opt_hz,
            "n_bar": p.n_bar,
            "sigma_n": p.sigma_n,
            "flags": list(p.flags),
        }
        for o, p in zip(run.outcomes, run.occupation)
    ]
    report = {
        "schema": f"sidebandlimit-{command} v1",
        "seed": seed,
        "config_hash": config_hash(config.hash_dict()),
        "parameters": {
            "detuning_hz": run.detuning_hz,
            "system": {
                "kappa_hz": config.system.kappa_hz,
                "omega_m_hz": config.system.omega_m_hz,
                "gamma_0_hz": config.system.gamma_0_hz,
                "efficiency": config.system.efficiency,
            },
            "bath_temperature_k": config.bath_temperature_k,
            "power_scale_hz_per_uw": config.power_scale_hz_per_uw,
        },
        "estimates": {
            "s_hat": curve.s_hat,
            "s_classical": run.s_est.s_classical,
            "n0": curve.n0_fit,
            "n_ba": curve.n_ba_fit,
            "t0_k": curve.t0_fit,
            "n_ba_predicted": curve.n_ba_predicted,
        },
        "uncertainties": {
            "sigma_s": curve.sigma_s,
            "sigma_s_classical": run.s_est.sigma_classical,
            "sigma_n0": curve.sigma_n0,
            "sigma_n_ba": curve.sigma_n_ba,
            "sigma_t0_k": curve.sigma_t0,
        },
        "systematics": {
            "delta_n_laser": run.bias_laser,
            "delta_n_substrate": run.bias_substrate,
        },
        "flags": sorted(set(run.flags) | set(run.s_est.flags)),
        "points": points,
    }
    return report


def _write_curve_outputs(
    run: CurveRun, config: ExperimentConfig, seed: int, out_dir: Path, command: str
) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [
        {
            "gamma_opt_hz": o.gamma_opt_hz,
            "n_bar": p.n_bar,
            "sigma_n": p.sigma_n,
            "flags": p.flags,
        }
        for o, p in zip(run.outcomes, run.occupation)
    ]
    write_points_csv(out_dir / "points.csv", rows)
    report = _curve_report(run, config, seed, command)
    write_report_json(out_dir / "summary.json", report)
    return report


def _print_curve_summary(run: CurveRun, out_dir: Path) -> None:
    curve = run.curve
    print(f"s_hat = {curve.s_hat:.6f} +- {curve.sigma_s:.2g}")
    print(f"n0 = {curve.n0_fit:.4g} +- {curve.sigma_n0:.2g}")
    print(f"t0 = {curve.t0_fit * 1e3:.1f} +- {curve.sigma_t0 * 1e3:.1f} mK")
    predicted = curve.n_ba_predicted
    predicted_text = f" (closed form {predicted:.4f})" if predicted is not None else ""
    print(f"n_ba = {curve.n_ba_fit:.4f} +- {curve.sigma_n_ba:.4f}{predicted_text}")
    print(f"flags: {', '.join(sorted(set(run.flags))) or 'none'}")
    print(f"outputs in {out_dir}")


def _cmd_model(args) -> int:
    config = _resolve_config(args)
    params = config.system_params()
    n0 = thermal_occupation(config.bath_temperature_k, params.omega_m)
    delta_opt, n_ba_min = optimal_detuning(params)
    rows = []
    for detuning_hz in config.detunings_hz:
        detuning = TWO_PI * detuning_hz
        s = sideband_ratio(detuning, params)
        n_ba = backaction_limit(detuning, params)
        bounds = regime_boundaries(n0, n_ba, params.gamma_0)
        rows.append(
            {
                "detuning_hz": detuning_hz,
                "s": s,
                "n_ba": n_ba,
                "gamma_opt_onset_hz": bounds.onset / TWO_PI,
                "gamma_opt_ground_state_hz": bounds.ground_state / TWO_PI,
                "gamma_opt_backaction_hz": bounds.backaction / TWO_PI,
            }
        )
    payload = {
        "config_hash": config_hash(config.hash_dict()),
        "n0": n0,
        "bath_temperature_k": config.bath_temperature_k,
        "delta_opt_hz": delta_opt / TWO_PI,
        "n_ba_min": n_ba_min,
        "detunings": rows,
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
        return EXIT_OK
    print(f"bath occupation n0 = {n0:.1f} at {config.bath_temperature_k * 1e3:.0f} mK")
    print(f"optimal detuning = {delta_opt / TWO_PI / 1e6:.4f} MHz, n_ba_min = {n_ba_min:.4f}")
    print("detuning_MHz      s     n_ba   onset_Hz  ground_Hz  backaction_Hz")
    for row in rows:
        print(
            f"{row['detuning_hz'] / 1e6:12.4f} {row['s']:.4f} {row['n_ba']:8.4f} "
            f"{row['gamma_opt_onset_hz']:9.3g} {row['gamma_opt_ground_state_hz']:10.4g} "
            f"{row['gamma_opt_backaction_hz']:13.4g}"
        )
    return EXIT_OK


def _cmd_cool(args) -> int:
    config = _resolve_config(args)
    seed = _resolve_seed(args, config)
    detuning_hz = _resolve_detuning_hz(args, config)
    out_dir = Path(config.output_dir) / f"cool_{_detuning_label(detuning_hz)}"
    spectra_dir = str(out_dir / "spectra") if args.save_spectra else None
    run = run_cooling_curve(
        config,
        detuning_hz,
        master_seed=seed,
        detuning_index=0,
        jobs=max(args.jobs, 1),
        noiseless=args.no_noise,
        spectra_dir=spectra_dir,
    )
    _write_curve_outputs(run, config, seed, out_dir, "cool")
    _print_curve_summary(run, out_dir)
    failed = [o for o in run.outcomes if o.fit is None]
    for outcome in failed:
        print(
            f"point {outcome.index} (gamma_opt = {outcome.gamma_opt_hz:.6g} Hz) "
            f"failed: {outcome.error}",
            file=sys.stderr,
        )
    return EXIT_FAILURE if failed else EXIT_OK


def _cmd_sweep(args) -> int:
    config = _resolve_config(args)
    seed = _resolve_seed(args, config)
    params = config.system_params()
    out_root = Path(config.output_dir) / "sweep"
    out_root.mkdir(parents=True, exist_ok=True)

    results = {}
    errors = {}
    for index, detuning_hz in enumerate(config.detunings_hz):
        label = _detuning_label(detuning_hz)
        out_dir = out_root / f"d{index:02d}_{label}"
        try:
            run = run_cooling_curve(
                config,
                detuning_hz,
                master_seed=seed,
                detuning_index=index,
                jobs=max(args.jobs, 1),
                noiseless=args.no_noise,
                spectra_dir=str(out_dir / "spectra") if args.save_spectra else None,
            )
        except AnalysisError as exc:
            errors[detuning_hz] = f"{type(exc).__name__}: {exc}"
            print(f"detuning {label}: failed: {exc}", file=sys.stderr)
            continue
        _write_curve_outputs(run, config, seed, out_dir, "cool")
        results[detuning_hz] = run

    if results:
        summary = detuning_sweep_summary(
            {TWO_PI * d_hz: run.curve for d_hz, run in results.items()},
            params.omega_m,
        )
        # summary rows are sorted by detuning; map back to the exact
        # configured Hz values through the same ordering
        sorted_hz = sorted(results)
        rows = [
            {
                "detuning_hz": d_hz,
                "min_n_bar": row.min_n_bar,
                "sigma": row.sigma,
                "n_ba_predicted": row.n_ba_predicted,
                "flags": list(row.flags),
            }
            for d_hz, row in zip(sorted_hz, summary.rows)
        ]
        with (out_root / "sweep_summary.csv").open("w") as handle:
            handle.write("detuning_hz,min_n_bar,sigma,n_ba_predicted,flags\n")
            for row in rows:
                handle.write(
                    f"{row['detuning_hz']!r},{row['min_n_bar']!r},{row['sigma']!r},"
                    f"{row['n_ba_predicted']!r},{';'.join(row['flags'])}\n"
                )
        write_report_json(
            out_root / "sweep.json",
            {
                "schema": "sidebandlimit-sweep v1",
                "seed": seed,
                "config_hash": config_hash(config.hash_dict()),
                "global_min_detuning_hz": min(
                    rows, key=lambda r: r["min_n_bar"]
                )["detuning_hz"],
                "flags": list(summary.flags),
                "rows": rows,
                "errors": {
                    _detuning_label(d): message for d, message in errors.items()
                },
            },
        )
        print("detuning_MHz  min_n_bar   sigma    closed_form")
        for row in rows:
            print(
                f"{row['detuning_hz'] / 1e6:12.4f} {row['min_n_bar']:9.4f} "
                f"{row['sigma']:8.4f} {row['n_ba_predicted']:11.4f}"
            )
        best_hz = min(rows, key=lambda r: r["min_n_bar"])["detuning_hz"]
        print(f"global minimum at {best_hz / 1e6:.4f} MHz; outputs in {out_root}")
    return EXIT_FAILURE if errors else EXIT_OK


def _cmd_fit(args) -> int:
    config = _resolve_config(args)
    seed = _resolve_seed(args, config)
    run, detuning_hz = analyze_spectrum_files(list(args.inputs), config)
    label = _detuning_label(detuning_hz) if detuning_hz is not None else "external"
    out_dir = Path(config.output_dir) / f"cool_{label}"
    _write_curve_outputs(run, config, seed, out_dir, "cool")
    _print_curve_summary(run, out_dir)
    failed = [o for o in run.outcomes if o.fit is None]
    for outcome in failed:
        print(
            f"input {outcome.spectrum_file} failed: {outcome.error}", file=sys.stderr
        )
    return EXIT_FAILURE if failed else EXIT_OK


def _cmd_synth(args) -> int:
    config = _resolve_config(args)
    seed = _resolve_seed(args, config)
    detuning_hz = _resolve_detuning_hz(args, config)
    out_dir = Path(config.output_dir) / f"synth_{_detuning_label(detuning_hz)}"
    out_dir.mkdir(parents=True, exist_ok=True)
    plans = plan_curve(config, detuning_hz, seed, 0, noiseless=args.no_noise)
    metadata = {
        "detuning_hz": detuning_hz,
        "seed": seed,
        "detuning_index": 0,
        "config_hash": config_hash(config.hash_dict()),
    }
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(run_point, plan, str(out_dir), metadata) for plan in plans
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_point(plan, str(out_dir), metadata) for plan in plans]
    print(f"wrote {len(outcomes)} spectra to {out_dir}")
    return EXIT_OK


def _cmd_init_config(args) -> int:
    save_config(default_config(), args.path)
    print(f"wrote default configuration to {args.path}")
    return EXIT_OK


_COMMANDS = {
    "model": _cmd_model,
    "cool": _cmd_cool,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
    "synth": _cmd_synth,
    "init-config": _cmd_init_config,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AnalysisError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
