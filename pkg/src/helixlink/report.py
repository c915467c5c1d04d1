"""Re-aggregate existing outputs into summary tables, x-y plot data and PNGs.

Every figure is written twice: as a column file that any plotting tool can
read, and as a rendered PNG next to it. Inputs that are missing are skipped.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .control import steer_beam
from .antenna import gain_pattern_db
from .engine import SWEEP_COLUMNS, SweepRow
from .output import read_csv, rows_of, write_table
from .stats import polynomial_fit, polyval

REPORT_DIR = "report"
FIT_DEGREE = 2


def load_rows(out_dir, stem):
    """Rows of ``stem.csv`` or ``stem.jsonl`` as dicts, or None if absent."""
    csv_path = os.path.join(out_dir, stem + ".csv")
    jl_path = os.path.join(out_dir, stem + ".jsonl")
    if os.path.exists(csv_path):
        _, cols, rows = read_csv(csv_path)
        return [dict(zip(cols, r)) for r in rows]
    if os.path.exists(jl_path):
        with open(jl_path, encoding="utf-8") as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        return [{k: str(v) for k, v in r.items()} for r in recs if "_meta" not in r]
    return None


def _f(rows, key):
    return np.array([float(r[key]) for r in rows])


def _figure(path, xlabel, ylabel, series, title=None):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"figure.figsize": (5.0, 3.2), "font.size": 9, "axes.linewidth": 0.6}):
        fig, ax = plt.subplots()
        for label, x, y, style in series:
            ax.plot(x, y, style, label=label, lw=1.2, ms=4)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, lw=0.3, alpha=0.5)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
    return path


def _sweep_summary(runs):
    cells = {}
    for r in runs:
        cells.setdefault((float(r["speed_mph"]), r["mode"], r["env"]), []).append(r)
    order = {"static": 0, "tuned": 1}
    out = []
    for (speed, mode, env), rs in sorted(cells.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], 9))):
        per = _f(rs, "per")
        out.append(SweepRow(speed, mode, env, len(rs), float(per.mean()),
                            float(per.std(ddof=1)) if len(rs) > 1 else 0.0,
                            float(_f(rs, "vswr_mean").mean()), float(_f(rs, "vswr_max").max()),
                            float(_f(rs, "rssi_p95_range_db").mean()), float(_f(rs, "rssi_std_db").mean()),
                            float(_f(rs, "mean_effective_detune_hz").mean())))
    return out


def build_report(out_dir, meta=(), fmt="csv"):
    rdir = os.path.join(out_dir, REPORT_DIR)
    os.makedirs(rdir, exist_ok=True)
    written = []

    runs = load_rows(out_dir, "sweep_runs")
    if runs:
        summary = _sweep_summary(runs)
        written.append(write_table(os.path.join(rdir, "summary.csv"), SWEEP_COLUMNS,
                                   rows_of(summary, SWEEP_COLUMNS), meta, fmt))
        speeds = sorted({r.speed_mph for r in summary})
        modes = [m for m in ("static", "tuned") if any(r.mode == m for r in summary)]
        by = {(r.speed_mph, r.mode): r for r in summary}

        cols, rows = ["speed_mph"], []
        for m in modes:
            cols += [f"per_{m}", f"per_std_{m}"]
        for s in speeds:
            row = [s]
            for m in modes:
                r = by.get((s, m))
                row += [r.per_mean, r.per_std] if r else [math.nan, math.nan]
            rows.append(row)
        written.append(write_table(os.path.join(rdir, "per_vs_speed.csv"), cols, rows, meta, fmt))

        series = []
        styles = {"static": "C1", "tuned": "C0"}
        if len(speeds) > FIT_DEGREE:
            grid = np.linspace(min(speeds), max(speeds), 37)
            fit_cols, fit_rows = ["speed_mph"], [[x] for x in grid]
            for m in modes:
                ys = [by[(s, m)].per_mean for s in speeds]
                coef = polynomial_fit(speeds, ys, FIT_DEGREE)
                fit_cols.append(f"fit_{m}")
                for row, y in zip(fit_rows, polyval(coef, grid)):
                    row.append(float(y))
                series.append((f"{m} fit", grid, 100 * polyval(coef, grid), styles[m] + "-"))
            written.append(write_table(os.path.join(rdir, "per_fit_curve.csv"), fit_cols, fit_rows, meta, fmt))
        for m in modes:
            series.append((m, speeds, [100 * by[(s, m)].per_mean for s in speeds], styles[m] + "o"))
        written.append(_figure(os.path.join(rdir, "per_vs_speed.png"), "speed (mph)", "PER (%)", series))

        cols = ["speed_mph"] + [f"vswr_{m}" for m in modes]
        rows = [[s] + [by[(s, m)].vswr_mean for m in modes] for s in speeds]
        written.append(write_table(os.path.join(rdir, "vswr_vs_speed.csv"), cols, rows, meta, fmt))
        written.append(_figure(os.path.join(rdir, "vswr_vs_speed.png"), "speed (mph)", "mean VSWR",
                               [(m, speeds, [by[(s, m)].vswr_mean for s in speeds], styles[m] + "-o")
                                for m in modes]))

    bench = load_rows(out_dir, "bench")
    if bench:
        offsets = sorted({float(r["offset_hz"]) for r in bench})
        modes = [m for m in ("static", "tuned") if any(r["mode"] == m for r in bench)]
        per = {(float(r["offset_hz"]), r["mode"]): float(r["per"]) for r in bench}
        cols = ["offset_hz"] + [f"per_{m}" for m in modes]
        rows = [[o] + [per.get((o, m), math.nan) for m in modes] for o in offsets]
        written.append(write_table(os.path.join(rdir, "per_vs_offset.csv"), cols, rows, meta, fmt))
        written.append(_figure(os.path.join(rdir, "per_vs_offset.png"), "Doppler offset (Hz)", "PER (%)",
                               [(m, offsets, [100 * per.get((o, m), math.nan) for o in offsets], "-o")
                                for m in modes]))

    trace = load_rows(out_dir, "actuator_trace_tuned")
    if trace:
        t, cmd, act = _f(trace, "t_s"), _f(trace, "commanded_mm"), _f(trace, "actual_mm")
        written.append(write_table(os.path.join(rdir, "actuator_trace.csv"),
                                   ("t_s", "commanded_mm", "actual_mm"), zip(t, cmd, act), meta, fmt))
        written.append(_figure(os.path.join(rdir, "actuator_trace.png"), "time (s)", "pitch offset (mm)",
                               [("commanded", t, cmd, "C1-"), ("actual", t, act, "C0-")]))

    rssi_series, rssi_cols, rssi_data = [], ["t_s"], []
    for m in ("static", "tuned"):
        pk = load_rows(out_dir, f"packets_{m}")
        if pk:
            t = _f(pk, "t_s")
            if not rssi_data:
                rssi_data.append(t)
            if len(t) == len(rssi_data[0]):
                rssi_cols.append(f"rssi_{m}_dbm")
                rssi_data.append(_f(pk, "rssi_dbm"))
                rssi_series.append((m, t, rssi_data[-1], "-"))
    if rssi_series:
        written.append(write_table(os.path.join(rdir, "rssi_trace.csv"), rssi_cols, zip(*rssi_data), meta, fmt))
        written.append(_figure(os.path.join(rdir, "rssi_trace.png"), "time (s)", "RSSI (dBm)", rssi_series))

    # boresight gain against bank, fixed helix versus steered helix
    bank = np.arange(-60, 61, 5, dtype=float)
    static = gain_pattern_db(np.radians(np.abs(bank)))
    tuned = np.array([gain_pattern_db(steer_beam((math.radians(b), 0.0, 0.0)).residual_rad) for b in bank])
    written.append(write_table(os.path.join(rdir, "gain_vs_bank.csv"), ("bank_deg", "gain_static_db", "gain_tuned_db"),
                               zip(bank, static, tuned), meta, fmt))
    written.append(_figure(os.path.join(rdir, "gain_vs_bank.png"), "bank (deg)", "relative gain (dB)",
                           [("static", bank, static, "C1-"), ("tuned", bank, tuned, "C0-")]))
    return written
