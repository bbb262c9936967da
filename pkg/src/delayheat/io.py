"""CSV and key-value serialization for fields, traces and report tables.

All floats are written with 17 significant digits so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import EigenBasis, SpectralField
from .errors import InvalidArgumentError


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])
            n += 1
    return n


def write_field_csv(fld: SpectralField, path) -> int:
    """Rows "k,coeff", one per retained mode."""
    return _write_rows(Path(path), ["k", "coeff"],
                       ((str(k + 1), c) for k, c in enumerate(fld.coeffs)))


def write_coeff_trace_csv(times: np.ndarray, coeffs: np.ndarray, path) -> int:
    """Rows "t,k,coeff", one per (time, mode)."""
    rows = ((fmt(t), str(k + 1), coeffs[i, k])
            for i, t in enumerate(times) for k in range(coeffs.shape[1]))
    return _write_rows(Path(path), ["t", "k", "coeff"], rows)


def write_grid_trace_csv(times: np.ndarray, xs: np.ndarray, values: np.ndarray, path) -> int:
    """Rows "t,x,value" on a fixed spatial mesh."""
    rows = ((fmt(t), fmt(x), values[i, j])
            for i, t in enumerate(times) for j, x in enumerate(xs))
    return _write_rows(Path(path), ["t", "x", "value"], rows)


def write_transport_dump_csv(t: float, s_mesh: np.ndarray, xs: np.ndarray,
                             z: np.ndarray, path) -> int:
    """Rows "t,s,x,value" for one snapshot of the delay-line component."""
    rows = ((fmt(t), fmt(s), fmt(x), z[i, j])
            for i, s in enumerate(s_mesh) for j, x in enumerate(xs))
    return _write_rows(Path(path), ["t", "s", "x", "value"], rows)


def write_jump_table_csv(rows, path) -> int:
    """Rows "j,predicted_norm,measured_norm,rel_error"."""
    return _write_rows(Path(path), ["j", "predicted_norm", "measured_norm", "rel_error"],
                       ((str(r.j), r.predicted_norm, r.measured_norm, r.rel_error) for r in rows))


def write_keyvalue(mapping: dict, path) -> int:
    """Flat "key = value" report, one entry per line."""
    n = 0
    with open(path, "w") as fh:
        for k, v in mapping.items():
            v = fmt(v) if isinstance(v, float) else str(v)
            fh.write(f"{k} = {v}\n")
            n += 1
    return n


def read_grid_history_csv(path, basis: EigenBasis) -> tuple[np.ndarray, np.ndarray]:
    """Read "gamma,k,coeff" rows into (times, coefficient rows) for a grid history."""
    by_time: dict[float, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["gamma", "k", "coeff"]:
            raise InvalidArgumentError(f"{path}: expected header 'gamma,k,coeff'")
        for row in reader:
            if not row:
                continue
            g, k, c = float(row[0]), int(row[1]), float(row[2])
            by_time.setdefault(g, {})[k] = c
    if len(by_time) < 2:
        raise InvalidArgumentError(f"{path}: grid history needs at least 2 samples")
    times = np.array(sorted(by_time))
    rows = np.zeros((len(times), basis.K))
    for i, t in enumerate(times):
        for k, c in by_time[t].items():
            if not 1 <= k <= basis.K:
                raise InvalidArgumentError(f"{path}: mode {k} outside 1..{basis.K}")
            rows[i, k - 1] = c
    return times, rows
