"""Synthetic measurement data with realistic finite-averaging noise.

Two independent routes produce spectra:

* :func:`synthesize_spectrum` draws each bin of an analytic model from the
  exact n_avg-averaged-periodogram law (a Gamma distribution), preserving
  the skew of low-average data.
* :func:`simulate_oscillator` plus :func:`estimate_psd` build a spectrum
  the long way, from a time-domain stochastic oscillator record, and serve
  as an oracle for the spectral analysis chain.  The time-domain route
  covers lineshape, width and area only; sideband asymmetry is a quantum
  effect injected at the frequency-domain model level.

Determinism: a fixed seed yields bit-identical output regardless of how
work is scheduled.  Sweeps derive one child stream per spectrum from
(master seed, sweep index) via `numpy.random.SeedSequence` spawn keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, welch
from scipy.signal.windows import hann

from sidebandlimit.spectra import HeterodyneSpectrum, SpectrumModel, evaluate_psd

# Bins per RNG request; fixed so chunking never affects the stream.
_CHUNK = 1 << 22

# Coverage demanded of a synthesis grid around each sideband.
_MIN_SPAN_LINEWIDTHS = 3.0


@dataclass(frozen=True)
class SynthConfig:
    """Synthesis settings for one spectrum or oscillator record.

    ``n_avg`` may be ``math.inf`` to request the noiseless analytic limit.
    ``seed`` accepts an integer or a `numpy.random.SeedSequence` (the
    pipeline passes per-point children of the master seed).
    """

    f_lo: float  # grid start (rad/s, relative to beat note)
    f_hi: float  # grid end (rad/s)
    resolution: float  # bin spacing (rad/s)
    n_avg: float = 1000.0
    seed: int | np.random.SeedSequence = 0
    oracle_duration: float = 0.05  # time-domain record length (s)
    oracle_rate: float = 1.0e8  # sample rate (samples/s)

    def __post_init__(self) -> None:
        if not self.f_hi > self.f_lo:
            raise ValueError("f_hi must exceed f_lo")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if not self.n_avg >= 1:
            raise ValueError(f"n_avg must be >= 1, got {self.n_avg}")
        if not self.oracle_duration > 0 or not self.oracle_rate > 0:
            raise ValueError("oracle_duration and oracle_rate must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class OscillatorRecord:
    """Demodulated complex quadrature record of the mechanical mode."""

    dt: float  # sample spacing (s)
    values: np.ndarray  # complex amplitude, |values|^2 in phonon units

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.values.ndim != 1:
            raise ValueError("record must be 1-d")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)

    @property
    def duration(self) -> float:
        return self.dt * self.values.size


def synthesize_spectrum(model: SpectrumModel, config: SynthConfig) -> HeterodyneSpectrum:
    """Draw a noisy spectrum from the model, bin by bin.

    Each bin is an independent Gamma(n_avg) variate with mean equal to the
    model PSD there -- the exact distribution of an average of n_avg
    exponential periodogram bins.  ``n_avg = inf`` returns the model
    evaluated on the grid.
    """
    margin = _MIN_SPAN_LINEWIDTHS * model.gamma_eff
    if config.f_lo > -(model.omega_m + margin) or config.f_hi < model.omega_m + margin:
        raise ValueError(
            "synthesis grid must span both sidebands: need at least "
            f"[{-(model.omega_m + margin):.6g}, {model.omega_m + margin:.6g}] rad/s, "
            f"got [{config.f_lo:.6g}, {config.f_hi:.6g}]"
        )
    n_bins = int(math.floor((config.f_hi - config.f_lo) / config.resolution)) + 1
    psd = np.empty(n_bins)
    noiseless = math.isinf(config.n_avg)
    rng = None if noiseless else config.rng()
    for start in range(0, n_bins, _CHUNK):
        stop = min(start + _CHUNK, n_bins)
        freqs = config.f_lo + config.resolution * np.arange(start, stop)
        mean = evaluate_psd(model, freqs)
        if noiseless:
            psd[start:stop] = mean
        else:
            draws = rng.standard_gamma(config.n_avg, size=mean.size)
            psd[start:stop] = draws * (mean / config.n_avg)
    return HeterodyneSpectrum(
        f_lo=config.f_lo,
        resolution=config.resolution,
        psd=psd,
        n_avg=config.n_avg,
    )


def simulate_oscillator(
    gamma_eff: float, omega_m: float, n_target: float, config: SynthConfig
) -> OscillatorRecord:
    """Integrate a complex Ornstein-Uhlenbeck oscillator record.

    The amplitude decays at gamma_eff / 2, rotates at +omega_m relative to
    the beat note, and is driven so the stationary mean of |amplitude|^2
    is ``n_target``.  Uses the exact one-step update, so the statistics
    are correct for any stable step; steps coarser than 0.1 / omega_m are
    rejected because they no longer resolve the rotation.
    """
    if not 0 < gamma_eff < 0.1 * omega_m:
        raise ValueError(
            "need gamma_eff well below omega_m (high-Q demodulated record)"
        )
    if n_target < 0:
        raise ValueError(f"n_target must be >= 0, got {n_target}")
    if config.oracle_rate <= 4.0 * omega_m / (2.0 * math.pi):
        raise ValueError("oracle_rate must exceed four times the sideband frequency")
    dt = 1.0 / config.oracle_rate
    if dt > 0.1 / omega_m:
        raise ValueError(
            f"integration step too coarse: dt={dt:.3g} s exceeds 0.1/omega_m"
        )
    n = int(round(config.oracle_duration * config.oracle_rate))
    if n < 2:
        raise ValueError("record would be shorter than two samples")
    if n_target == 0.0:
        return OscillatorRecord(dt=dt, values=np.zeros(n, dtype=complex))

    rng = config.rng()
    phi = np.exp((1j * omega_m - 0.5 * gamma_eff) * dt)
    # stationary AR(1): var(step noise) = n_target * (1 - |phi|^2)
    step_var = n_target * (1.0 - math.exp(-gamma_eff * dt))
    alpha0 = math.sqrt(n_target / 2.0) * complex(
        rng.standard_normal(), rng.standard_normal()
    )
    noise = math.sqrt(step_var / 2.0) * (
        rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
    )
    values = np.empty(n, dtype=complex)
    values[0] = alpha0
    values[1:], _ = lfilter([1.0], [1.0, -phi], noise, zi=[phi * alpha0])
    return OscillatorRecord(dt=dt, values=values)


def estimate_psd(
    record: OscillatorRecord, segment_length: int, overlap: float = 0.5
) -> HeterodyneSpectrum:
    """Averaged windowed periodogram (Welch, Hann taper) of a record.

    Returns a two-sided PSD in units of 1/Hz on a rad/s axis, so that
    ``sum(psd) * resolution / (2 pi)`` equals the record variance up to
    the windowing correction.  The reported ``n_avg`` is the effective
    number of independent averages after accounting for segment overlap.
    """
    n = record.values.size
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    if not 2 <= segment_length <= n:
        raise ValueError(
            f"degenerate segmentation: segment_length={segment_length} "
            f"for a record of {n} samples"
        )
    noverlap = int(round(overlap * segment_length))
    if noverlap >= segment_length:
        noverlap = segment_length - 1
    fs = 1.0 / record.dt
    freqs_hz, psd = welch(
        record.values,
        fs=fs,
        window="hann",
        nperseg=segment_length,
        noverlap=noverlap,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    order = np.argsort(freqs_hz)
    freqs_hz = freqs_hz[order]
    psd = np.maximum(psd[order].real, 0.0)

    step = segment_length - noverlap
    n_segments = 1 + (n - segment_length) // step
    n_avg_eff = _effective_averages(segment_length, step, n_segments)
    return HeterodyneSpectrum(
        f_lo=2.0 * math.pi * float(freqs_hz[0]),
        resolution=2.0 * math.pi * fs / segment_length,
        psd=psd,
        n_avg=max(1.0, n_avg_eff),
    )


def _effective_averages(nperseg: int, step: int, n_segments: int) -> float:
    """Welch's effective average count for overlapping Hann segments."""
    if n_segments <= 1:
        return float(max(n_segments, 1))
    w = hann(nperseg, sym=False)
    denom = float(np.sum(w * w))
    correction = 0.0
    m = 1
    while m * step < nperseg:
        c = float(np.sum(w[m * step :] * w[: nperseg - m * step])) / denom
        correction += 2.0 * (1.0 - m / n_segments) * c * c
        m += 1
    return n_segments / (1.0 + correction)
