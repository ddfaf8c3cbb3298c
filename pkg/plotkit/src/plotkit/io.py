"""Readers for the simulation CLI's output files, with schema validation.

Every loader checks the file against the emitted format (a block of ``#``
comments whose last line names the columns, then tab-separated float rows)
and raises :class:`SchemaError` naming the offending file before any
rendering starts.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

SCAN_COLUMNS = (
    "Gamma", "dp_numeric", "dp_analytic", "dp_point",
    "ratio", "model_ratio", "feasible",
)
DETUNING_COLUMNS = ("theta_bar", "dp2", "dp2_classical")

_FRAME_NAME = re.compile(r"frame_(\d{4})\.tsv$")
_KEYVAL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S+)")


class SchemaError(ValueError):
    """An input file does not match the emitted result-file format."""


def read_table(path) -> tuple:
    """Parse one table file into ``(column_names, metadata, array)``.

    ``metadata`` collects ``key = value`` pairs found in the comment block;
    the last comment line is taken as the column-name row.
    """
    path = Path(path)
    names, meta, rows = [], {}, []
    try:
        lines = path.read_text().splitlines()
    except OSError as err:
        raise SchemaError(f"{path}: cannot read ({err})") from err
    for line in lines:
        if line.startswith("#"):
            body = line[1:].strip()
            m = _KEYVAL.match(body)
            if m:
                try:
                    meta[m.group(1)] = float(m.group(2))
                except ValueError:
                    meta[m.group(1)] = m.group(2)
            names = body.split("\t") if "\t" in body else body.split()
        elif line.strip():
            rows.append(line.split("\t"))
    if not rows:
        raise SchemaError(f"{path}: empty table")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SchemaError(f"{path}: ragged rows (widths {sorted(widths)})")
    try:
        data = np.array(rows, dtype=float)
    except ValueError as err:
        raise SchemaError(f"{path}: non-numeric cell ({err})") from err
    if names and len(names) != data.shape[1]:
        raise SchemaError(
            f"{path}: header names {len(names)} columns, data has {data.shape[1]}"
        )
    return names, meta, data


def load_spectrum(path) -> tuple:
    """Load a two-column spectrum file -> (axis, density, axis_name)."""
    names, _, data = read_table(path)
    if data.shape[1] != 2:
        raise SchemaError(f"{path}: spectrum files have 2 columns, got {data.shape[1]}")
    if names and not names[0].startswith("p"):
        raise SchemaError(f"{path}: first column {names[0]!r} is not a momentum axis")
    return data[:, 0], data[:, 1], (names[0] if names else "p")


def load_scan(path) -> dict:
    """Load a scan table into a dict of named columns."""
    names, _, data = read_table(path)
    if tuple(names) != SCAN_COLUMNS:
        missing = [c for c in SCAN_COLUMNS if c not in names]
        raise SchemaError(f"{path}: scan table missing columns {missing}")
    return {name: data[:, i] for i, name in enumerate(names)}


def load_detuning(path) -> dict:
    names, meta, data = read_table(path)
    if tuple(names) != DETUNING_COLUMNS:
        missing = [c for c in DETUNING_COLUMNS if c not in names]
        raise SchemaError(f"{path}: detuning table missing columns {missing}")
    out = {name: data[:, i] for i, name in enumerate(names)}
    out["epsilon"] = meta.get("epsilon")
    return out


def load_frames(frames_dir) -> list:
    """Load a snapshot directory into ``[(index, time, names, data), ...]``.

    Indices must be gap-free from 0; each frame carries four columns
    (position axis, spatial density, momentum axis, momentum density).
    """
    frames_dir = Path(frames_dir)
    found = {}
    for p in sorted(frames_dir.glob("frame_*.tsv")):
        m = _FRAME_NAME.search(p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise SchemaError(f"{frames_dir}: no frame_NNNN.tsv files")
    expected = range(len(found))
    missing = sorted(set(expected) - set(found))
    if missing:
        raise SchemaError(f"{frames_dir}: gap in frame indices (missing {missing})")
    frames = []
    for idx in expected:
        names, meta, data = read_table(found[idx])
        if data.shape[1] != 4:
            raise SchemaError(
                f"{found[idx]}: frames have 4 columns, got {data.shape[1]}"
            )
        frames.append((idx, meta.get("t_over_transit"), names, data))
    return frames
