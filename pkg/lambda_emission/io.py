"""
Artifact readers and writers: spectrum CSV with a `# key=value` header,
sorted-key JSON, population traces and sweep tables.
"""

import json
import logging
import os
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .analysis import Spectrum
from .errors import ConfigError
from .model import FrequencyGrid

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SPECTRUM_COLUMNS = ("detuning", "intensity")
TRACE_COLUMNS = ("t", "upper_population")


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _header_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_header_value(item) for item in value)
    return str(value)


def _write_header(fh, header: Mapping[str, str]) -> None:
    for key in sorted(header):
        fh.write(f"# {key}={header[key]}\n")


def _read_header(path: str) -> Dict[str, str]:
    """Leading `# key=value` lines of a CSV artifact."""
    header: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                header[key.strip()] = value.strip()
    return header


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(record: Mapping[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, indent=2, default=_jsonable) + "\n"


def write_json(record: Mapping[str, Any], path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(record))
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_spectrum_csv(spectrum: Spectrum, path: str, config: Optional[Mapping[str, Any]] = None) -> str:
    """
    Header lines `# key=value` (sorted: resolved config, spectrum meta, grid, norm),
    then `detuning,intensity` rows at full double precision.
    """
    header: Dict[str, str] = {}
    for key, value in (config or {}).items():
        header[key] = _header_value(value)
    for key, value in spectrum.meta.items():
        header.setdefault(key, _header_value(value))
    header["grid_lo"] = _header_value(float(spectrum.grid.lo))
    header["grid_hi"] = _header_value(float(spectrum.grid.hi))
    header["grid_count"] = str(int(spectrum.grid.count))
    header["norm"] = _header_value(spectrum.norm)

    frame = pd.DataFrame({"detuning": spectrum.detunings(), "intensity": spectrum.values})
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        _write_header(fh, header)
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote spectrum {path} ({spectrum.grid.count} rows)")
    return path


def read_spectrum_csv(path: str) -> Spectrum:
    """
    Inverse of write_spectrum_csv; the grid comes from the header when present.

    Raises:
        ConfigError: missing file or malformed table
    """
    if not os.path.isfile(path):
        raise ConfigError(f"Spectrum file not found: {path}")
    meta = _read_header(path)
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    if tuple(frame.columns) != SPECTRUM_COLUMNS:
        raise ConfigError(f"{path}: expected columns {SPECTRUM_COLUMNS}, got {tuple(frame.columns)}")
    deltas = frame["detuning"].to_numpy(dtype=float)
    if deltas.size < 2:
        raise ConfigError(f"{path}: need at least two rows")
    try:
        grid = FrequencyGrid(float(meta["grid_lo"]), float(meta["grid_hi"]), int(meta["grid_count"]))
    except KeyError:
        grid = FrequencyGrid(float(deltas[0]), float(deltas[-1]), int(deltas.size))
    if grid.count != deltas.size:
        raise ConfigError(f"{path}: header declares {grid.count} samples, table has {deltas.size}")
    meta.pop("norm", None)
    return Spectrum(grid, frame["intensity"].to_numpy(dtype=float), dict(meta, source=os.path.basename(path)))


def write_trace(times: Sequence[float], population: Sequence[float], path: str) -> str:
    """Decay curve CSV with columns t, upper_population."""
    frame = pd.DataFrame({"t": np.asarray(times, dtype=float), "upper_population": np.asarray(population, dtype=float)})
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_trace(path: str) -> Tuple[np.ndarray, np.ndarray]:
    frame = pd.read_csv(path, float_precision="round_trip")
    return frame["t"].to_numpy(dtype=float), frame["upper_population"].to_numpy(dtype=float)


def write_table(rows: List[Dict[str, Any]], path: str, columns: Optional[Sequence[str]] = None,
                config: Optional[Mapping[str, Any]] = None) -> str:
    """Sweep-style table, one row per point, after a sorted `# key=value` config header."""
    frame = pd.DataFrame(rows, columns=list(columns) if columns else None)
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        _write_header(fh, {key: _header_value(value) for key, value in (config or {}).items()})
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def read_table(path: str) -> pd.DataFrame:
    """Table rows; the header, if any, lands in frame.attrs["config"]."""
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    frame.attrs["config"] = _read_header(path)
    return frame
