"""Analytic heterodyne power-spectral-density model.

A cooled mechanical mode shows up in the heterodyne spectrum as two
Lorentzian sidebands riding on a flat photodetection floor.  Spectra are
expressed in shot-noise units (off-resonant floor of the ideal detector
equals 1) on a frequency axis relative to the heterodyne beat note: the
Stokes sideband sits at ``-omega_m`` and the anti-Stokes sideband at
``+omega_m``.

Only the sideband amplitude *ratio* carries the thermometry; the absolute
peak height convention is fixed by ``PEAK_HEIGHT_NORM`` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sidebandlimit.physics import CoolingPoint, SystemParams, occupation_from_ratio

# Line-center transduction constant: peak height = 4 * efficiency * flux /
# linewidth, the standard weak-coupling heterodyne result.  A pure
# convention here; every inferred quantity depends only on the ratio of
# the two peaks.
PEAK_HEIGHT_NORM = 4.0

# Single calibrated scale of the classical laser-noise model: converts the
# summed amplitude + phase noise fraction (relative to shot noise) into an
# equivalent occupation shift.  Calibrated once so that the independently
# measured noise levels of the reference device (0.2% amplitude, 2% phase)
# shift the inferred occupation by 0.006 phonons at its final operating
# point; not an ab-initio prediction.
LASER_NOISE_OCCUPATION_SCALE = 0.006 / 0.022

# Analysis-band conventions shared with the sideband fitter: how far the
# fit window extends around each sideband and how finely a linewidth is
# sampled when a grid has to be built from scratch.
WINDOW_LINEWIDTHS = 60.0
BINS_PER_LINEWIDTH = 14


def lorentzian(omega, center: float, fwhm: float):
    """Unit-peak Lorentzian (fwhm/2)^2 / ((omega - center)^2 + (fwhm/2)^2)."""
    half = 0.5 * fwhm
    return half**2 / ((np.asarray(omega, dtype=float) - center) ** 2 + half**2)


@dataclass(frozen=True)
class SpectrumModel:
    """Two mechanical sidebands over a flat floor, in shot-noise units.

    ``s_ratio`` and ``n_bar`` record the generating physics when the model
    was built by :func:`build_model`; they are metadata for the systematics
    diagnostics, not free parameters of the lineshape.
    """

    omega_m: float  # sideband offset from the beat note (rad/s)
    gamma_eff: float  # effective mechanical linewidth gamma_0 + gamma_opt (rad/s)
    peak_stokes: float  # Stokes peak height (shot-noise units)
    peak_antistokes: float  # anti-Stokes peak height (shot-noise units)
    floor: float  # off-resonant level, 1 + background_fraction
    background_fraction: float  # substrate-mode excess floor, >= 0
    center_offset: float = 0.0  # heterodyne beat frequency; axes are relative to it
    s_ratio: float | None = None
    n_bar: float | None = None

    def __post_init__(self) -> None:
        if not self.gamma_eff > 0:
            raise ValueError(f"gamma_eff must be positive, got {self.gamma_eff}")
        if self.peak_stokes < 0 or self.peak_antistokes < 0:
            raise ValueError("peak heights must be non-negative")
        if self.background_fraction < 0:
            raise ValueError(
                f"background_fraction must be >= 0, got {self.background_fraction}"
            )
        if abs(self.floor - (1.0 + self.background_fraction)) > 1e-12:
            raise ValueError("floor must equal 1 + background_fraction")


@dataclass(frozen=True)
class HeterodyneSpectrum:
    """A uniformly binned heterodyne PSD record.

    The frequency grid is stored implicitly as ``f_lo + i * resolution``
    (rad/s, relative to the beat note) so that very fine grids do not pay
    for an explicit axis until one is requested.
    """

    f_lo: float  # first bin (rad/s)
    resolution: float  # bin spacing (rad/s)
    psd: np.ndarray  # PSD values (shot-noise units, or 1/Hz for estimates)
    n_avg: float  # averaged periodograms behind each bin (>= 1)

    def __post_init__(self) -> None:
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not self.n_avg >= 1:
            raise ValueError(f"n_avg must be >= 1, got {self.n_avg}")
        if self.psd.ndim != 1 or self.psd.size < 2:
            raise ValueError("psd must be a 1-d array with at least two bins")
        if np.any(self.psd < 0) or not np.all(np.isfinite(self.psd)):
            raise ValueError("psd values must be finite and non-negative")

    @property
    def n_bins(self) -> int:
        return self.psd.size

    @property
    def f_hi(self) -> float:
        return self.f_lo + (self.n_bins - 1) * self.resolution

    @property
    def frequencies(self) -> np.ndarray:
        """Materialized frequency axis (rad/s)."""
        return self.f_lo + self.resolution * np.arange(self.n_bins)

    def index_range(self, lo: float, hi: float) -> slice:
        """Bin slice covering the closed frequency interval [lo, hi]."""
        i0 = max(0, math.ceil((lo - self.f_lo) / self.resolution))
        i1 = min(self.n_bins, math.floor((hi - self.f_lo) / self.resolution) + 1)
        return slice(i0, max(i0, i1))

    def frequencies_at(self, sel) -> np.ndarray:
        """Frequency axis for a slice or index array, without a full axis."""
        if isinstance(sel, slice):
            start, stop, step = sel.indices(self.n_bins)
            idx = np.arange(start, stop, step)
        else:
            idx = np.asarray(sel)
        return self.f_lo + self.resolution * idx

    @classmethod
    def from_frequencies(
        cls, frequencies: np.ndarray, psd: np.ndarray, n_avg: float
    ) -> "HeterodyneSpectrum":
        frequencies = np.asarray(frequencies, dtype=float)
        if frequencies.ndim != 1 or frequencies.size < 2:
            raise ValueError("frequency grid must be 1-d with at least two bins")
        steps = np.diff(frequencies)
        res = float(steps[0])
        if res <= 0 or not np.allclose(steps, res, rtol=1e-6, atol=0.0):
            raise ValueError("frequency grid must be strictly increasing and uniform")
        return cls(
            f_lo=float(frequencies[0]),
            resolution=res,
            psd=np.asarray(psd, dtype=float),
            n_avg=n_avg,
        )


def build_model(
    params: SystemParams,
    point: CoolingPoint,
    n_bar: float,
    background_fraction: float = 0.0,
) -> SpectrumModel:
    """Predict the heterodyne spectrum for a drive setting and occupation.

    Anti-Stokes flux is ``A- * n_bar`` and Stokes flux ``A+ * (n_bar + 1)``;
    peak heights follow by the line-center convention ``PEAK_HEIGHT_NORM *
    efficiency * flux / gamma_eff``.  Their ratio is then
    ``s * (n_bar + 1) / n_bar`` -- the thermometry-bearing quantity.
    """
    if n_bar < 0:
        raise ValueError(f"n_bar must be >= 0, got {n_bar}")
    gamma_eff = params.gamma_0 + point.gamma_opt
    scale = PEAK_HEIGHT_NORM * params.efficiency / gamma_eff
    return SpectrumModel(
        omega_m=params.omega_m,
        gamma_eff=gamma_eff,
        peak_stokes=scale * point.rate_stokes_per_quantum * (n_bar + 1.0),
        peak_antistokes=scale * point.rate_antistokes_per_quantum * n_bar,
        floor=1.0 + background_fraction,
        background_fraction=background_fraction,
        s_ratio=point.s_ratio,
        n_bar=n_bar,
    )


def evaluate_psd(model: SpectrumModel, frequencies) -> np.ndarray:
    """Model PSD on a frequency grid (rad/s, relative to the beat note)."""
    omega = np.asarray(frequencies, dtype=float)
    if omega.size == 0:
        raise ValueError("frequency grid is empty")
    if not np.all(np.isfinite(omega)):
        raise ValueError("frequency grid must be finite")
    return (
        model.floor
        + model.peak_stokes * lorentzian(omega, -model.omega_m, model.gamma_eff)
        + model.peak_antistokes * lorentzian(omega, +model.omega_m, model.gamma_eff)
    )


def _sideband_windows(model: SpectrumModel) -> np.ndarray:
    """Analysis-band grid: one window around each sideband."""
    half = WINDOW_LINEWIDTHS * model.gamma_eff
    step = model.gamma_eff / BINS_PER_LINEWIDTH
    offsets = np.arange(-half, half + 0.5 * step, step)
    return np.concatenate([offsets - model.omega_m, offsets + model.omega_m])


def _require_physics_metadata(model: SpectrumModel) -> tuple[float, float]:
    if model.s_ratio is None or model.n_bar is None:
        raise ValueError(
            "model carries no generating-physics metadata (s_ratio, n_bar); "
            "build it with build_model to use the systematics diagnostics"
        )
    return model.s_ratio, model.n_bar


def apparent_sideband_bias(model: SpectrumModel, background_fraction: float) -> float:
    """Occupation shift from normalizing to a substrate-elevated floor.

    Substrate modes sit away from the mechanical sidebands and raise the
    off-resonant level used for shot-noise normalization to
    ``1 + background_fraction`` while the floor directly under the
    sidebands stays at the true shot-noise level.  An analysis that
    divides by the elevated level and then reads amplitudes against an
    assumed floor of exactly 1 sees both sidebands shrunk by the common
    factor (which cancels in the ratio) plus a small flat deficit that
    leaks into both fitted amplitudes equally and biases the ratio at
    second order.  This function pushes a noiseless spectrum through that
    chain and returns the resulting occupation shift.
    """
    if background_fraction < 0:
        raise ValueError("background_fraction must be >= 0")
    s, n_bar = _require_physics_metadata(model)
    if background_fraction == 0.0:
        return 0.0

    omega = _sideband_windows(model)
    local = (
        1.0
        + model.peak_stokes * lorentzian(omega, -model.omega_m, model.gamma_eff)
        + model.peak_antistokes * lorentzian(omega, +model.omega_m, model.gamma_eff)
    )
    normalized = local / (1.0 + background_fraction)

    design = np.column_stack(
        [
            lorentzian(omega, -model.omega_m, model.gamma_eff),
            lorentzian(omega, +model.omega_m, model.gamma_eff),
        ]
    )
    amp_stokes, amp_antistokes = np.linalg.lstsq(
        design, normalized - 1.0, rcond=None
    )[0]
    if amp_stokes <= 0 or amp_antistokes <= 0:
        return math.nan
    biased = occupation_from_ratio(amp_stokes / amp_antistokes, s)
    if biased.unphysical:
        return math.nan
    return biased.n_bar - n_bar


def solve_background_for_bias(model: SpectrumModel, target: float) -> float:
    """Background fraction whose apparent-sideband bias magnitude is ``target``."""
    if not target > 0:
        raise ValueError("target bias magnitude must be positive")
    from scipy.optimize import brentq

    def gap(b: float) -> float:
        bias = apparent_sideband_bias(model, b)
        # Past the point where the leak swallows an amplitude the chain
        # returns NaN; treat that as far beyond any finite target.
        return math.inf if math.isnan(bias) else abs(bias) - target

    lo, hi = 0.0, 1e-4
    while gap(hi) < 0:
        lo, hi = hi, hi * 2.0
        if hi > 1.0:
            raise ValueError("target bias not reachable for background_fraction <= 1")
    return brentq(lambda b: gap(b) if math.isfinite(gap(b)) else 1.0, lo, hi,
                  xtol=1e-12, rtol=1e-12)


def laser_noise_bias(
    amp_noise: float, phase_noise: float, point: CoolingPoint, n_bar: float
) -> float:
    """Occupation shift induced by classical noise on the cooling laser.

    First-order model: classical amplitude and phase noise contaminate the
    two sidebands coherently with the same cavity susceptibility weights as
    the Raman-scattered signal, i.e. in proportion (1, s).  In units of the
    anti-Stokes signal per phonon the contamination therefore adds
    ``LASER_NOISE_OCCUPATION_SCALE * (amp_noise + phase_noise)`` quanta of
    apparent occupation.  The scale is calibrated, not derived; see the
    constant's note.
    """
    if amp_noise < 0 or phase_noise < 0:
        raise ValueError("noise fractions must be >= 0")
    if n_bar < 0:
        raise ValueError(f"n_bar must be >= 0, got {n_bar}")
    s = point.s_ratio
    contamination = LASER_NOISE_OCCUPATION_SCALE * (amp_noise + phase_noise)
    if contamination == 0.0:
        return 0.0
    # Sideband amplitudes in per-phonon units: (s (n+1) + s c) / (n + c).
    r_biased = (s * (n_bar + 1.0) + s * contamination) / (n_bar + contamination)
    biased = occupation_from_ratio(r_biased, s)
    return biased.n_bar - n_bar
