"""CSV and JSON schemas for spectra, time series, points and reports.

All files are deterministic for a given configuration and seed: floats are
written with round-trip precision, JSON keys are sorted, and no timestamps
or environment details are embedded.

Spectrum CSV schema (one file per spectrum)::

    # sidebandlimit-spectrum v1 key=value key=value ...
    frequency_hz,psd_sn
    -1.6199...e6,1.0023...

The header metadata carries the exact grid (``f_lo_rad``,
``resolution_rad``), the averaging count and the drive context
(``gamma_opt_hz``, ``detuning_hz``), so an analysis of the file is
bit-identical to an analysis of the in-memory spectrum it was written
from.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from sidebandlimit.spectra import HeterodyneSpectrum
from sidebandlimit.synth import OscillatorRecord

SPECTRUM_MAGIC = "sidebandlimit-spectrum v1"
TIMESERIES_MAGIC = "sidebandlimit-timeseries v1"
SPECTRUM_COLUMNS = "frequency_hz,psd_sn"
TIMESERIES_COLUMNS = "time_s,value_i,value_q"
POINTS_COLUMNS = "gamma_opt_hz,n_bar,sigma_n,flags"

TWO_PI = 2.0 * math.pi


class SchemaError(ValueError):
    """A file does not conform to the documented schema."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _format_metadata(metadata: Mapping[str, Any]) -> str:
    parts = [f"{key}={_format_value(metadata[key])}" for key in sorted(metadata)]
    return " ".join(parts)


def _parse_metadata(path, line: str) -> dict[str, str]:
    body = line[1:].strip()
    if not body.startswith(SPECTRUM_MAGIC):
        raise SchemaError(path, 1, f"expected header magic '{SPECTRUM_MAGIC}'")
    fields = body[len(SPECTRUM_MAGIC) :].split()
    metadata: dict[str, str] = {}
    for item in fields:
        if "=" not in item:
            raise SchemaError(path, 1, f"malformed metadata item {item!r}")
        key, value = item.split("=", 1)
        metadata[key] = value
    return metadata


def write_spectrum_csv(
    path, spectrum: HeterodyneSpectrum, metadata: Mapping[str, Any] | None = None
) -> None:
    """Write a spectrum with its exact grid and context in the header."""
    meta = dict(metadata or {})
    meta.update(
        f_lo_rad=float(spectrum.f_lo),
        resolution_rad=float(spectrum.resolution),
        n_avg=float(spectrum.n_avg),
        n_bins=spectrum.n_bins,
    )
    path = Path(path)
    with path.open("w") as handle:
        handle.write(f"# {SPECTRUM_MAGIC} {_format_metadata(meta)}\n")
        handle.write(SPECTRUM_COLUMNS + "\n")
        table = np.column_stack([spectrum.frequencies / TWO_PI, spectrum.psd])
        np.savetxt(handle, table, fmt="%.17g", delimiter=",")


def read_spectrum_csv(path) -> tuple[HeterodyneSpectrum, dict[str, str]]:
    """Read a spectrum file, validating the schema with line numbers."""
    path = Path(path)
    with path.open("r") as handle:
        header = handle.readline()
        if not header.startswith("#"):
            raise SchemaError(path, 1, "missing metadata header line")
        metadata = _parse_metadata(path, header)
        columns = handle.readline().strip()
        if columns != SPECTRUM_COLUMNS:
            raise SchemaError(
                path, 2, f"expected column header {SPECTRUM_COLUMNS!r}, got {columns!r}"
            )
        try:
            table = np.loadtxt(handle, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise SchemaError(path, None, f"malformed data row: {exc}") from exc

    for key in ("f_lo_rad", "resolution_rad", "n_avg", "n_bins"):
        if key not in metadata:
            raise SchemaError(path, 1, f"missing required metadata key {key!r}")
    n_bins = int(metadata["n_bins"])
    if table.shape[0] != n_bins:
        raise SchemaError(
            path,
            3,
            f"expected {n_bins} data rows per metadata, found {table.shape[0]}",
        )
    if table.shape[1] != 2:
        raise SchemaError(path, 3, "expected exactly two columns")
    spectrum = HeterodyneSpectrum(
        f_lo=float(metadata["f_lo_rad"]),
        resolution=float(metadata["resolution_rad"]),
        psd=table[:, 1].copy(),
        n_avg=float(metadata["n_avg"]),
    )
    # The frequency column is displayed in Hz; verify it matches the grid.
    expected_hz = spectrum.frequencies / TWO_PI
    if not np.allclose(table[:, 0], expected_hz, rtol=1e-9, atol=0.0):
        raise SchemaError(path, 3, "frequency column inconsistent with header grid")
    return spectrum, metadata


def write_timeseries_csv(
    path, record: OscillatorRecord, metadata: Mapping[str, Any] | None = None
) -> None:
    """Write a demodulated record as I/Q columns."""
    meta = dict(metadata or {})
    meta.update(dt_s=float(record.dt), n_samples=record.values.size)
    path = Path(path)
    with path.open("w") as handle:
        handle.write(f"# {TIMESERIES_MAGIC} {_format_metadata(meta)}\n")
        handle.write(TIMESERIES_COLUMNS + "\n")
        table = np.column_stack(
            [record.times, record.values.real, record.values.imag]
        )
        np.savetxt(handle, table, fmt="%.17g", delimiter=",")


def write_points_csv(path, rows: Iterable[Mapping[str, Any]]) -> None:
    """Write per-point thermometry results.

    Each row carries ``gamma_opt_hz``, ``n_bar``, ``sigma_n`` and a
    semicolon-joined ``flags`` string (empty when clean).
    """
    path = Path(path)
    with path.open("w") as handle:
        handle.write(POINTS_COLUMNS + "\n")
        for row in rows:
            flags = ";".join(row.get("flags", ()))
            handle.write(
                f"{row['gamma_opt_hz']!r},{row['n_bar']!r},{row['sigma_n']!r},{flags}\n"
            )


def read_points_csv(path) -> list[dict[str, Any]]:
    path = Path(path)
    rows: list[dict[str, Any]] = []
    with path.open("r") as handle:
        header = handle.readline().strip()
        if header != POINTS_COLUMNS:
            raise SchemaError(path, 1, f"expected header {POINTS_COLUMNS!r}")
        for number, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise SchemaError(path, number, "expected 4 comma-separated fields")
            try:
                rows.append(
                    dict(
                        gamma_opt_hz=float(parts[0]),
                        n_bar=float(parts[1]),
                        sigma_n=float(parts[2]),
                        flags=tuple(f for f in parts[3].split(";") if f),
                    )
                )
            except ValueError as exc:
                raise SchemaError(path, number, f"malformed number: {exc}") from exc
    return rows


def write_report_json(path, report: Mapping[str, Any]) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def config_hash(config_dict: Mapping[str, Any]) -> str:
    """Stable short hash of a configuration dictionary."""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
