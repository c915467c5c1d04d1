"""Deterministic CSV / JSON-lines writers and the calibration table file.

CSV layout: ``#`` comment lines (artifact version, seed, config hash and any
extra provenance), then the header row, then data rows. Floats are written
with 6 significant digits; files end with exactly one newline.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, is_dataclass

import numpy as np

from . import __version__
from .control import CalibrationEntry, CalibrationTable
from .errors import ConfigurationError, MissingCalibrationError

CALIBRATION_COLUMNS = ("target_freq_hz", "pitch_mm", "tilt_rad", "vswr")


def fmt(value):
    """Locale-independent 6-significant-digit text for one cell."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0.0:
            return "0"
        return format(v, ".6g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return fmt(v)
        return float(format(v, ".6g"))
    return value


def header_lines(seed=None, config_hash=None, extra=None):
    lines = [f"artifact: helixlink {__version__}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    if config_hash is not None:
        lines.append(f"config_hash: {config_hash}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {v}")
    return lines


def render_csv(columns, rows, meta=()):
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def render_records(columns, rows, meta=()):
    out = [json.dumps({"_meta": list(meta)}, sort_keys=True)]
    for row in rows:
        out.append(json.dumps({c: _json_value(v) for c, v in zip(columns, row)}, sort_keys=True))
    return "\n".join(out) + "\n"


def write_table(path, columns, rows, meta=(), fmt_name="csv"):
    """Write rows as CSV or JSON lines (``.jsonl`` replaces ``.csv``)."""
    if fmt_name == "records":
        path = os.path.splitext(path)[0] + ".jsonl"
        text = render_records(columns, rows, meta)
    elif fmt_name == "csv":
        text = render_csv(columns, rows, meta)
    else:
        raise ConfigurationError(f"unknown output format {fmt_name!r}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def rows_of(items, columns):
    out = []
    for it in items:
        d = asdict(it) if is_dataclass(it) else dict(it)
        out.append([d[c] for c in columns])
    return out


def read_csv(path):
    """Return (meta dict, columns, rows as lists of strings)."""
    meta, body = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(":")
                meta[k.strip()] = v.strip()
            else:
                body.append(line)
    reader = csv.reader(body)
    try:
        columns = next(reader)
    except StopIteration:
        raise ConfigurationError(f"{path}: no header row") from None
    return meta, columns, [r for r in reader if r]


def file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


# calibration table

def write_calibration(path, table, meta=()):
    rows = [(e.target_frequency_hz, e.pitch_setting_mm, e.tilt_setting_rad, e.achieved_vswr)
            for e in table.entries]
    # frequencies need more than 6 digits to stay unique at 25 Hz on a GHz carrier
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    buf.write(f"# frequency_step_hz: {fmt(table.frequency_step_hz)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CALIBRATION_COLUMNS)
    for f, p, t, v in rows:
        w.writerow([repr(float(f)), fmt(p), fmt(t), fmt(v)])
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_calibration(path):
    if not os.path.exists(path):
        raise MissingCalibrationError(
            f"calibration table not found at {path}; run 'helixlink calibrate' first")
    meta, columns, rows = read_csv(path)
    if tuple(columns) != CALIBRATION_COLUMNS:
        raise ConfigurationError(f"{path}: expected columns {','.join(CALIBRATION_COLUMNS)}")
    try:
        entries = tuple(CalibrationEntry(float(f), float(p), float(t), float(v)) for f, p, t, v in rows)
        step = float(meta.get("frequency_step_hz", "nan"))
    except ValueError as e:
        raise ConfigurationError(f"{path}: {e}") from None
    if math.isnan(step):
        freqs = [e.target_frequency_hz for e in entries]
        step = min(b - a for a, b in zip(freqs, freqs[1:])) if len(freqs) > 1 else 0.0
    return CalibrationTable(entries, step)
