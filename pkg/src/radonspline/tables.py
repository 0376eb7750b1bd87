"""CSV tables with known schemas, and format sniffing for ``inspect``."""
import csv
import json
import math
import os

import numpy as np

# schema name -> column tuple; a header must match one of these exactly
SCHEMAS = {
    "exp1_metrics": ("activation", "replicate", "optimizer", "iterations", "train_mse", "relative_error"),
    "exp1_timings": ("activation", "replicate", "optimizer", "gd_seconds", "convex_seconds"),
    "exp2_metrics": ("target", "activation", "feasible", "train_mse", "test_mse"),
    "total_magnitude": ("r", "M_fit", "M_target"),
    "adaptive_history": ("epoch", "phase", "train_loss", "test_accuracy", "auc", "step_distance"),
    "step_distances": ("step", "step_distance"),
    "kernel_losses": ("iteration", "train_loss"),
    "fit_grid": ("x1", "x2", "f"),
    "spectrum": ("r", "M"),
    "sinogram": ("angle", "offset", "value"),
    "events": ("step", "neuron", "event", "datapoints"),
}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class CsvTable:
    """Append-only CSV writer; every row is flushed so partial runs stay readable."""

    def __init__(self, path, schema):
        self.path = os.fspath(path)
        self.columns = SCHEMAS[schema]
        with open(self.path, "w", newline="") as fh:
            csv.writer(fh).writerow(self.columns)

    def append(self, row):
        if isinstance(row, dict):
            row = [row.get(c, "") for c in self.columns]
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(self.columns)}")
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow([_fmt(v) for v in row])


def write_csv(path, schema, rows):
    t = CsvTable(path, schema)
    for r in rows:
        t.append(r)
    return path


def _parse(v):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def read_csv(path):
    """Return ``(schema, rows)``; rows are dicts with numbers parsed.

    Raises ``ValueError`` when the header matches no known schema or a row
    has the wrong width.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        schema = next((k for k, cols in SCHEMAS.items() if cols == header), None)
        if schema is None:
            raise ValueError(f"{path}: unknown CSV header {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            rows.append({c: _parse(v) for c, v in zip(header, rec)})
    return schema, rows


def sniff(path):
    """Best guess of a file's format.

    One of ``grid``, ``checkpoint``, ``csv`` (headed table), ``matrix``
    (headerless numeric CSV), ``jsonl`` or ``two_column``.
    """
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == b"GRID":
        return "grid"
    if head == b"RSPL":
        return "checkpoint"
    with open(path, errors="replace") as fh:
        first = fh.readline().strip()
    if first.startswith("{"):
        return "jsonl"
    if first.startswith("#"):
        return "two_column"
    if first and all(isinstance(_parse(v), (int, float)) for v in first.split(",")):
        return "matrix"
    return "csv"


def summarize(path):
    """Load a file in any emitted format and describe it as a dict."""
    from .network import load_checkpoint
    from .spectral import load_grid

    kind = sniff(path)
    if kind == "grid":
        g = load_grid(path)
        return {"format": "GRID", "shape": list(g.shape), "extents": [list(e) for e in g.extents],
                "min": float(g.values.min()), "max": float(g.values.max())}
    if kind == "checkpoint":
        s, meta = load_checkpoint(path)
        return {"format": "RSPL", "H": s.n_neurons, "D": s.dim, "metadata": meta}
    if kind == "jsonl":
        with open(path) as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        return {"format": "jsonl", "records": len(recs), "keys": sorted(set().union(*recs)) if recs else []}
    if kind == "two_column":
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns")
        return {"format": "two_column", "rows": int(data.shape[0])}
    if kind == "matrix":
        M = np.loadtxt(path, delimiter=",", ndmin=2)
        return {"format": "matrix", "shape": list(M.shape), "symmetric": bool(
            M.shape[0] == M.shape[1] and np.allclose(M, M.T))}
    schema, rows = read_csv(path)
    out = {"format": "csv", "schema": schema, "rows": len(rows)}
    finite = [r for r in rows if all(not (isinstance(v, float) and math.isnan(v)) for v in r.values())]
    out["rows_without_nan"] = len(finite)
    return out
