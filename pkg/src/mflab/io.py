"""Output formats: CSV tables, JSON reports and the run manifest.

CSV files have one header line with fixed column order; floats are written
with ``repr`` (shortest round-trip decimal), so files are bit-stable.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

SERIES_COLUMNS = ("series", "parameter", "error")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(columns, rows) -> str:
    """Rows are dicts keyed by column name; missing keys become empty cells."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, p)
    return p


def write_csv(path, columns, rows) -> Path:
    return write_text(path, csv_text(columns, rows))


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --- reports -------------------------------------------------------------------------------

def write_report(report, outdir, figures: bool = True) -> list:
    """report.json, errors.csv, series.csv and (optionally) convergence.png."""
    from .lab.report import ERROR_COLUMNS
    out = Path(outdir)
    paths = [write_text(out / "report.json", report.to_json()),
             write_csv(out / "errors.csv", ERROR_COLUMNS, report.rows)]
    srows = [{"series": k, "parameter": p, "error": e}
             for k, s in report.series.items() for p, e in zip(s["parameter"], s["error"])]
    paths.append(write_csv(out / "series.csv", SERIES_COLUMNS, srows))
    if figures and report.series:
        from .plotting import plot_report
        paths.append(plot_report(report, out / "convergence.png"))
    return paths


# --- state exports ---------------------------------------------------------------------------

def ensemble_to_csv(state, path) -> Path:
    d = state.d
    cols = ["weight"] + [f"x{a}" for a in range(d)] + [f"v{a}" for a in range(d)]
    rows = [dict(zip(cols, [w, *x, *v])) for w, x, v in zip(state.weights, state.positions, state.velocities)]
    return write_csv(path, cols, rows)


def field_to_csv(field, path) -> Path:
    d = field.grid.d
    pts = field.grid.points()
    cols = [f"x{a}" for a in range(d)] + ["rho"] + [f"u{a}" for a in range(d)]
    rows = [dict(zip(cols, [*x, r, *u])) for x, r, u in zip(pts, field.rho, field.u)]
    return write_csv(path, cols, rows)


def wavefield_to_csv(psi, path) -> Path:
    cols = ["x", "re", "im"]
    rows = [dict(zip(cols, [x, v.real, v.imag])) for x, v in zip(psi.x, psi.values)]
    return write_csv(path, cols, rows)


def wigner_to_csv(f, path) -> Path:
    """Long format (x, v, f) with x varying slowest."""
    cols = ["x", "v", "f"]
    X, V = np.meshgrid(f.x, f.v, indexing="ij")
    rows = [dict(zip(cols, r)) for r in zip(X.ravel(), V.ravel(), f.values.ravel())]
    return write_csv(path, cols, rows)


def blocks_to_csv(blocks, path) -> Path:
    """One row per (i, j, a, b) entry of the position and momentum blocks."""
    cols = ["i", "j", "a", "b", "position", "momentum"]
    rows = []
    k, _, d, _ = blocks.position.shape
    for p in range(k):
        for q in range(k):
            for a in range(d):
                for b in range(d):
                    rows.append({"i": int(blocks.indices[p]), "j": int(blocks.indices[q]), "a": a, "b": b,
                                 "position": blocks.position[p, q, a, b],
                                 "momentum": blocks.momentum[p, q, a, b]})
    return write_csv(path, cols, rows)


# --- manifest -----------------------------------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Run bookkeeping written next to the outputs as manifest.json.

    ``status`` is "incomplete" until the run finishes; a crashed or
    interrupted run keeps that flag (or "failed") with whatever files
    were already written.
    """

    config_hash: str
    experiment: str
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "incomplete"
    valid: bool | None = None
    error: str | None = None
    stages: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def add_files(self, paths, root):
        root = Path(root)
        for p in paths:
            p = Path(p)
            self.files.append({"path": str(p.relative_to(root)), "sha256": sha256_file(p),
                               "bytes": p.stat().st_size})
        self.files.sort(key=lambda f: f["path"])

    def finish(self, status: str, valid: bool | None = None, error: str | None = None):
        self.status = status
        self.valid = valid
        self.error = error
        self.finished = _now()

    def write(self, outdir) -> Path:
        return write_text(Path(outdir) / "manifest.json", json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))
