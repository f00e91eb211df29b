"""On-disk formats: JSONL for trajectories and measures, CSV for reports.

Every file is schema-versioned: JSONL files open with a header object whose
``format`` field names the schema; CSV reports carry the schema tag in a
``format`` column on every row (keeping the file strictly rectangular).
Floats pass through repr-exact JSON, so a write/read cycle is bit-identical.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import ConfigError
from .measure import EmpiricalMeasure
from .segment import Segment
from .solver import Trajectory

TRAJECTORY_FORMAT = "nsfde-trajectory/1"
MEASURE_FORMAT = "nsfde-measure/1"
REPORT_FORMAT = "nsfde-report/1"

REPORT_COLUMNS = ("statistic", "estimate", "stderr", "threshold", "verdict")


def _read_header(path, expected: str) -> tuple[dict, list]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ConfigError(f"{path}: empty file")
    header = json.loads(lines[0])
    if header.get("format") != expected:
        raise ConfigError(f"{path}: expected format {expected!r}, "
                          f"found {header.get('format')!r}")
    return header, lines[1:]


def write_trajectory_jsonl(traj: Trajectory, path):
    header = {
        "format": TRAJECTORY_FORMAT,
        "h": traj.final_segment.h,
        "dt": traj.dt,
        "n_modes": traj.n_modes,
        "seed": traj.seed,
        "stream_id": traj.stream_id,
        "store_stride": traj.store_stride,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for i in range(traj.times.size):
            row = {
                "t": float(traj.times[i]),
                "u": traj.snapshots[i].tolist(),
                "seg_norm": float(traj.seg_norms[i]),
                "fp_iters": int(traj.fp_iters[i]),
            }
            fh.write(json.dumps(row) + "\n")


def read_trajectory_jsonl(path) -> dict:
    """Header fields plus times / snapshots / seg_norms / fp_iters arrays."""
    header, rows = _read_header(path, TRAJECTORY_FORMAT)
    recs = [json.loads(ln) for ln in rows]
    out = dict(header)
    out["times"] = np.array([r["t"] for r in recs])
    out["snapshots"] = np.array([r["u"] for r in recs])
    out["seg_norms"] = np.array([r["seg_norm"] for r in recs])
    out["fp_iters"] = np.array([r["fp_iters"] for r in recs], dtype=int)
    return out


def write_measure_jsonl(mu: EmpiricalMeasure, path):
    seg0 = mu.segments[0]
    header = {
        "format": MEASURE_FORMAT,
        "h": seg0.h,
        "dt": seg0.dt,
        "n_modes": seg0.n_modes,
        "burn_in": mu.burn_in,
        "thin": mu.thin,
        "t_end": mu.t_end,
        "n_samples": mu.n_samples,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for i, seg in enumerate(mu.segments):
            row = {
                "t": float(mu.times[i]),
                "seed": int(mu.sources[i, 0]),
                "stream": int(mu.sources[i, 1]),
                "values": seg.values.tolist(),
            }
            fh.write(json.dumps(row) + "\n")


def read_measure_jsonl(path) -> EmpiricalMeasure:
    header, rows = _read_header(path, MEASURE_FORMAT)
    recs = [json.loads(ln) for ln in rows]
    if not recs:
        raise ConfigError(f"{path}: measure file holds no samples")
    segments = [Segment(h=header["h"], dt=header["dt"],
                        values=np.array(r["values"])) for r in recs]
    return EmpiricalMeasure(
        segments=segments,
        times=np.array([r["t"] for r in recs]),
        sources=np.array([[r["seed"], r["stream"]] for r in recs], dtype=np.int64),
        burn_in=header["burn_in"], thin=header["thin"], t_end=header["t_end"])


def write_report_csv(path, rows, columns=REPORT_COLUMNS):
    """Rectangular CSV: header ``format,<columns>``, then one tagged row each.

    ``rows`` yields tuples matching ``columns``; floats are written via repr
    so they reload exactly.
    """
    def cell(x):
        if isinstance(x, float):
            return repr(x)
        return "" if x is None else str(x)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("format",) + tuple(columns))
        for row in rows:
            writer.writerow((REPORT_FORMAT,) + tuple(cell(x) for x in row))


def read_report_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if not head or head[0] != "format":
            raise ConfigError(f"{path}: missing report header row")
        out = []
        for row in reader:
            if row[0] != REPORT_FORMAT:
                raise ConfigError(f"{path}: unexpected row tag {row[0]!r}")
            out.append(dict(zip(head[1:], row[1:])))
    return out
