"""Deterministic run outputs: series.csv, field snapshots and summary.json."""
from __future__ import annotations

import json
import math
import os

import numpy as np

SERIES_COLUMNS = (
    "t", "dt", "sup_u", "inf_u", "residual_norm", "positivity_margin", "volume_lhs",
    "volume_rel_err", "ricci_identity_err", "ricci_min_eig", "trace_C", "c0_gap",
    "energy_value", "energy_identity_rel_err", "newton_iters",
)


def format_real(x) -> str:
    return "%.17g" % x


def snapshot_stem(t) -> str:
    return "u_%s" % ("%.12g" % t)


def _clean(obj):
    """JSON-safe copy: NaN and inf become null / strings, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_series(rows, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for row in rows:
            cells = [str(int(row[c])) if c == "newton_iters" else format_real(row[c]) for c in SERIES_COLUMNS]
            fh.write(",".join(cells) + "\n")


def read_series(path) -> list:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            vals = line.strip().split(",")
            rows.append({k: (int(v) if k == "newton_iters" else float(v)) for k, v in zip(header, vals)})
    return rows


def write_snapshot(directory, descriptor, t, u, extra=None):
    """Write ``u_<t>.f64`` (raw little-endian float64, row-major) and its JSON sidecar."""
    stem = os.path.join(directory, snapshot_stem(t))
    data = np.ascontiguousarray(u, dtype="<f8")
    with open(stem + ".f64", "wb") as fh:
        fh.write(data.tobytes(order="C"))
    meta = {
        "geometry": descriptor,
        "t": float(t),
        "field": "u",
        "shape": list(data.shape),
        "byte_order": "little-endian",
        "element": "float64",
        "layout": "row-major",
    }
    if extra:
        meta.update(extra)
    with open(stem + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(_clean(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return stem


def read_snapshot(stem):
    """Return ``(meta, array)`` for a snapshot written by :func:`write_snapshot`."""
    if stem.endswith(".f64") or stem.endswith(".meta.json"):
        stem = stem.rsplit(".meta.json", 1)[0].rsplit(".f64", 1)[0]
    with open(stem + ".meta.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("element") != "float64" or meta.get("byte_order") != "little-endian":
        raise ValueError(f"unsupported snapshot encoding in {stem}")
    arr = np.fromfile(stem + ".f64", dtype="<f8").reshape(meta["shape"])
    return meta, arr


def worst_cases(rows) -> dict:
    def pick(col, fn):
        vals = [r[col] for r in rows if r.get(col) is not None and not math.isnan(r[col])]
        return fn(vals) if vals else None

    return {
        "max_residual_norm": pick("residual_norm", max),
        "min_positivity_margin": pick("positivity_margin", min),
        "max_volume_rel_err": pick("volume_rel_err", max),
        "max_ricci_identity_err": pick("ricci_identity_err", max),
        "min_ricci_min_eig": pick("ricci_min_eig", min),
        "max_trace_C": pick("trace_C", max),
        "min_c0_gap": pick("c0_gap", min),
        "max_energy_value": pick("energy_value", max),
        "max_energy_identity_rel_err": pick("energy_identity_rel_err", max),
        "max_newton_iters": pick("newton_iters", max),
    }


def summary_dict(record, config) -> dict:
    return _clean({
        "termination": record.termination,
        "t_final": record.last_state.t if record.last_state is not None else None,
        "t_break": record.t_break,
        "extrapolated_T": record.extrapolated_T,
        "message": record.message,
        "steps": len(record.rows),
        "class": record.class_data.as_dict() if record.class_data else None,
        "config": config.as_dict(),
        "tolerances": record.tolerances,
        "worst": worst_cases(record.rows),
        "bootstrap": record.bootstrap,
        "snapshots": [snapshot_stem(t) for t in sorted(record.snapshots)],
    })


def write_outputs(record, directory, config):
    """Write series.csv, every snapshot pair and summary.json into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    write_series(record.rows, os.path.join(directory, "series.csv"))
    for t in sorted(record.snapshots):
        snap = record.snapshots[t]
        extra = {"dt_next": snap["dt"], "streak": snap["streak"], "residual_norm": snap["residual_norm"]}
        write_snapshot(directory, record.descriptor, t, snap["u"], extra)
    with open(os.path.join(directory, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary_dict(record, config), fh, indent=2, sort_keys=True)
        fh.write("\n")
