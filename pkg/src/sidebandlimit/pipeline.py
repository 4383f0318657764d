"""Cooling-experiment orchestration shared by the command-line front end.

A cooling curve is planned point by point from the configuration: the
drive grid fixes each point's optical damping, the rate equation predicts
its occupation, and synthesis settings (grid resolution tied to the
linewidth, averaging scaled with occupation) follow.  Points own
independent RNG streams derived from ``(master seed, detuning index,
point index)``, so any execution order -- including process pools --
reproduces identical data.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sidebandlimit.analysis import (
    AnalysisError,
    CoolingCurveResult,
    OccupationPoint,
    SidebandFit,
    SRatioEstimate,
    estimate_s,
    fit_cooling_curve,
    fit_sidebands,
    occupation_series,
)
from sidebandlimit.config import ExperimentConfig
from sidebandlimit.io import read_spectrum_csv, write_spectrum_csv
from sidebandlimit.physics import (
    SystemParams,
    backaction_limit,
    cooling_point,
    regime_boundaries,
    steady_state_occupation,
    thermal_occupation,
)
from sidebandlimit.spectra import SpectrumModel, apparent_sideband_bias, build_model, laser_noise_bias
from sidebandlimit.synth import SynthConfig, synthesize_spectrum

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PointPlan:
    """Everything needed to synthesize and fit one cooling-curve point.

    ``gamma_opt_hz`` keeps the configured ordinary-frequency value so
    that file metadata and reports carry the number the user wrote, not
    its rad/s round-trip.
    """

    index: int
    gamma_opt: float  # rad/s
    gamma_opt_hz: float
    n_bar_truth: float
    model: SpectrumModel
    synth: SynthConfig


@dataclass(frozen=True)
class PointOutcome:
    """Fit result (or recorded failure) for one point."""

    index: int
    gamma_opt: float  # rad/s
    gamma_opt_hz: float
    n_avg: float
    fit: SidebandFit | None = None
    error: str | None = None
    spectrum_file: str | None = None


def plan_curve(
    config: ExperimentConfig,
    detuning_hz: float,
    master_seed: int,
    detuning_index: int = 0,
    noiseless: bool = False,
) -> list[PointPlan]:
    """Lay out synthesis plans for every drive setting of one curve."""
    params = config.system_params()
    detuning = TWO_PI * detuning_hz
    n0 = thermal_occupation(config.bath_temperature_k, params.omega_m)
    syn = config.synthesis
    plans = []
    for i, gamma_opt_hz in enumerate(config.gamma_opt_grid_hz):
        gamma_opt = TWO_PI * gamma_opt_hz
        point = cooling_point(params, detuning, gamma_opt)
        n_bar = steady_state_occupation(n0, params.gamma_0, point.n_ba, gamma_opt)
        model = build_model(
            params,
            point,
            n_bar,
            background_fraction=config.systematics.background_fraction,
        )
        factor = min(n_bar + 1.0, syn.n_avg_occupation_cap + 1.0) ** 2
        n_avg = math.inf if noiseless else float(math.ceil(syn.n_avg_base * factor))
        resolution = model.gamma_eff / syn.bins_per_linewidth
        span = params.omega_m + syn.grid_margin_linewidths * model.gamma_eff
        half_bins = int(math.ceil(span / resolution))
        plans.append(
            PointPlan(
                index=i,
                gamma_opt=gamma_opt,
                gamma_opt_hz=gamma_opt_hz,
                n_bar_truth=n_bar,
                model=model,
                synth=SynthConfig(
                    f_lo=-half_bins * resolution,
                    f_hi=half_bins * resolution,
                    resolution=resolution,
                    n_avg=n_avg,
                    seed=np.random.SeedSequence(
                        entropy=master_seed, spawn_key=(detuning_index, i)
                    ),
                    oracle_duration=syn.oracle_duration_s,
                    oracle_rate=syn.oracle_rate_hz,
                ),
            )
        )
    return plans


def run_point(
    plan: PointPlan,
    spectra_dir: str | None = None,
    file_metadata: dict | None = None,
) -> PointOutcome:
    """Synthesize one point, optionally persist it, and fit it."""
    spectrum = synthesize_spectrum(plan.model, plan.synth)
    spectrum_file = None
    if spectra_dir is not None:
        path = Path(spectra_dir) / f"point_{plan.index:02d}.csv"
        metadata = dict(file_metadata or {})
        metadata["gamma_opt_hz"] = plan.gamma_opt_hz
        metadata["point_index"] = plan.index
        write_spectrum_csv(path, spectrum, metadata)
        spectrum_file = str(path)
    try:
        fit = fit_sidebands(spectrum)
    except AnalysisError as exc:
        return PointOutcome(
            index=plan.index,
            gamma_opt=plan.gamma_opt,
            gamma_opt_hz=plan.gamma_opt_hz,
            n_avg=plan.synth.n_avg,
            error=f"{type(exc).__name__}: {exc}",
            spectrum_file=spectrum_file,
        )
    return PointOutcome(
        index=plan.index,
        gamma_opt=plan.gamma_opt,
        gamma_opt_hz=plan.gamma_opt_hz,
        n_avg=plan.synth.n_avg,
        fit=fit,
        spectrum_file=spectrum_file,
    )


@dataclass(frozen=True)
class CurveRun:
    """One analyzed cooling curve plus its diagnostics."""

    detuning_hz: float | None
    outcomes: tuple[PointOutcome, ...]
    s_est: SRatioEstimate
    occupation: tuple[OccupationPoint, ...]
    curve: CoolingCurveResult
    flags: tuple[str, ...]
    bias_laser: float | None = None
    bias_substrate: float | None = None


def analyze_outcomes(
    outcomes: list[PointOutcome],
    params: SystemParams,
    detuning: float | None = None,
) -> tuple[SRatioEstimate, list[OccupationPoint], CoolingCurveResult, tuple[str, ...]]:
    """Reduce per-point fits to a cooling curve; failures stay flagged."""
    series = [(o.gamma_opt, o.fit) for o in outcomes if o.fit is not None]
    if len(series) < 3:
        raise AnalysisError(
            f"only {len(series)} of {len(outcomes)} points produced usable fits"
        )
    s_est = estimate_s(series, params.gamma_0)
    fitted = iter(occupation_series(series, s_est))
    occupation = [
        next(fitted)
        if o.fit is not None
        else OccupationPoint(
            gamma_opt=o.gamma_opt,
            n_bar=math.nan,
            sigma_n=math.nan,
            flags=("fit_failed",),
        )
        for o in outcomes
    ]
    n_ba_predicted = (
        float(backaction_limit(detuning, params)) if detuning is not None else None
    )
    curve = fit_cooling_curve(
        occupation,
        params.gamma_0,
        params.omega_m,
        s_hat=s_est.s_hat,
        sigma_s=s_est.sigma_s,
        n_ba_predicted=n_ba_predicted,
    )

    flags = list(curve.flags)
    top = max(o.gamma_opt for o in outcomes)
    bounds = regime_boundaries(
        max(curve.n0_fit, 1e-12), max(curve.n_ba_fit, 1e-12), params.gamma_0
    )
    if top < bounds.ground_state:
        flags.append("classical_regime_only")
    elif top >= bounds.backaction:
        flags.append("backaction_limited")
    else:
        flags.append("ground_state_regime")
    return s_est, occupation, curve, tuple(flags)


def systematics_biases(
    config: ExperimentConfig, detuning_hz: float, gamma_opt_top_hz: float
) -> tuple[float, float]:
    """Predicted occupation shifts of both systematics channels.

    Evaluated from the configuration alone at the strongest drive
    setting, so analyses of synthesized and of re-read data report the
    same numbers.
    """
    params = config.system_params()
    gamma_opt = TWO_PI * gamma_opt_top_hz
    n0 = thermal_occupation(config.bath_temperature_k, params.omega_m)
    point = cooling_point(params, TWO_PI * detuning_hz, gamma_opt)
    n_bar = steady_state_occupation(n0, params.gamma_0, point.n_ba, gamma_opt)
    sysc = config.systematics
    model = build_model(
        params, point, n_bar, background_fraction=sysc.background_fraction
    )
    return (
        laser_noise_bias(sysc.amp_noise, sysc.phase_noise, point, n_bar),
        apparent_sideband_bias(model, sysc.background_fraction),
    )


def run_cooling_curve(
    config: ExperimentConfig,
    detuning_hz: float,
    master_seed: int,
    detuning_index: int = 0,
    jobs: int = 1,
    noiseless: bool = False,
    spectra_dir: str | None = None,
) -> CurveRun:
    """Synthesize, fit and reduce one full cooling curve."""
    plans = plan_curve(config, detuning_hz, master_seed, detuning_index, noiseless)
    if spectra_dir is not None:
        Path(spectra_dir).mkdir(parents=True, exist_ok=True)
    from sidebandlimit.io import config_hash

    metadata = {
        "detuning_hz": detuning_hz,
        "seed": master_seed,
        "detuning_index": detuning_index,
        "config_hash": config_hash(config.hash_dict()),
    }
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run_point, plan, spectra_dir, metadata) for plan in plans
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_point(plan, spectra_dir, metadata) for plan in plans]
    outcomes.sort(key=lambda o: o.index)

    params = config.system_params()
    s_est, occupation, curve, flags = analyze_outcomes(
        outcomes, params, TWO_PI * detuning_hz
    )
    bias_laser, bias_substrate = systematics_biases(
        config, detuning_hz, max(p.gamma_opt_hz for p in plans)
    )
    return CurveRun(
        detuning_hz=detuning_hz,
        outcomes=tuple(outcomes),
        s_est=s_est,
        occupation=tuple(occupation),
        curve=curve,
        flags=flags,
        bias_laser=bias_laser,
        bias_substrate=bias_substrate,
    )


def analyze_spectrum_files(
    files: list, config: ExperimentConfig
) -> tuple[CurveRun, float | None]:
    """Run the reduction chain on externally provided spectrum files.

    Files must follow the spectra CSV schema and carry ``gamma_opt_hz``
    metadata; ``detuning_hz`` is optional and only feeds the closed-form
    comparison value.
    """
    from sidebandlimit.io import SchemaError

    outcomes = []
    detunings_hz = set()
    for path in files:
        spectrum, metadata = read_spectrum_csv(path)
        if "gamma_opt_hz" not in metadata:
            raise SchemaError(path, 1, "missing required metadata key 'gamma_opt_hz'")
        gamma_opt_hz = float(metadata["gamma_opt_hz"])
        if "detuning_hz" in metadata:
            detunings_hz.add(float(metadata["detuning_hz"]))
        try:
            fit = fit_sidebands(spectrum)
            error = None
        except AnalysisError as exc:
            fit = None
            error = f"{type(exc).__name__}: {exc}"
        outcomes.append(
            PointOutcome(
                index=len(outcomes),
                gamma_opt=TWO_PI * gamma_opt_hz,
                gamma_opt_hz=gamma_opt_hz,
                n_avg=spectrum.n_avg,
                fit=fit,
                error=error,
                spectrum_file=str(path),
            )
        )
    outcomes.sort(key=lambda o: o.gamma_opt_hz)
    outcomes = [
        PointOutcome(
            index=i,
            gamma_opt=o.gamma_opt,
            gamma_opt_hz=o.gamma_opt_hz,
            n_avg=o.n_avg,
            fit=o.fit,
            error=o.error,
            spectrum_file=o.spectrum_file,
        )
        for i, o in enumerate(outcomes)
    ]

    detuning_hz = detunings_hz.pop() if len(detunings_hz) == 1 else None
    params = config.system_params()
    s_est, occupation, curve, flags = analyze_outcomes(
        outcomes, params, TWO_PI * detuning_hz if detuning_hz is not None else None
    )
    bias_laser = bias_substrate = None
    if detuning_hz is not None:
        bias_laser, bias_substrate = systematics_biases(
            config, detuning_hz, max(o.gamma_opt_hz for o in outcomes)
        )
    run = CurveRun(
        detuning_hz=detuning_hz,
        outcomes=tuple(outcomes),
        s_est=s_est,
        occupation=tuple(occupation),
        curve=curve,
        flags=flags,
        bias_laser=bias_laser,
        bias_substrate=bias_substrate,
    )
    return run, detuning_hz
