"""CSV and JSON emission of convergence reports."""
import csv
import io
import json
from pathlib import Path

import numpy as np

HEADER = ("epsilon", "cost", "rmse", "slope_window")


def fmt(x):
    """Positional notation with 12 significant digits."""
    return np.format_float_positional(float(x), precision=12, unique=False, fractional=False,
                                      trim="-")


def report_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    n = len(report.rows)
    for i, row in enumerate(report.rows):
        in_window = int(i >= n - report.window)
        writer.writerow((fmt(row.epsilon), fmt(row.cost), fmt(row.rmse), in_window))
    return buf.getvalue()


def emit_report(report, path):
    """Write ``path`` (CSV) and a ``.json`` sidecar next to it; returns both paths."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    meta = dict(report.metadata)
    meta["rows"] = [
        {"epsilon": r.epsilon, "level": r.level, "particles": r.particles, "steps": r.steps,
         "cost": r.cost, "rmse": r.rmse, "costs": r.costs, "qois": r.qois}
        for r in report.rows
    ]
    meta["slope_window"] = report.window
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report_csv(report))
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path, sidecar


def read_report_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            {"epsilon": float(r["epsilon"]), "cost": float(r["cost"]), "rmse": float(r["rmse"]),
             "slope_window": int(r["slope_window"])}
            for r in reader
        ]
