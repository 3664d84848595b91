"""Experiment reports: error tables, slope fits and validity checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .fitting import SlopeFit, fit_slope

ERROR_COLUMNS = ("parameter", "seed", "test_function", "time", "value", "reference", "error")


@dataclass
class Check:
    """Named scalar measurement compared against a bound."""

    name: str
    value: float
    bound: str
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _num(self.value), "bound": self.bound, "passed": bool(self.passed)}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else repr(x)


@dataclass
class ExperimentReport:
    """Result of one limit experiment.

    ``rows`` hold one entry per (parameter, test function, time) triple so
    every reported error is traceable; ``series`` holds the per-parameter
    maxima the slope fits are made from.
    """

    experiment: str
    parameter_name: str
    ladder: list
    config: dict
    config_hash: str
    rows: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    regime: str = ""
    wall_clock: float = 0.0

    def add_errors(self, parameter, t: float, names, values, reference, seed=None):
        values = np.asarray(values, dtype=float)
        reference = np.asarray(reference, dtype=float)
        err = np.abs(values - reference)
        for name, v, r, e in zip(names, values, reference, err):
            self.rows.append({"parameter": parameter, "seed": seed, "test_function": name, "time": float(t),
                              "value": float(v), "reference": float(r), "error": float(e)})
        return float(err.max())

    def fit(self, key: str, series: str | None = None, min_points: int = 4, **kw) -> SlopeFit | None:
        """Fit a series; ladders shorter than ``min_points`` record a failed check instead."""
        s = self.series[series or key]
        if len(s["parameter"]) < min_points:
            self.check(f"fit_points[{key}]", len(s["parameter"]), lo=min_points)
            return None
        f = fit_slope(s["parameter"], s["error"], min_points=min_points, **kw)
        self.fits[key] = f
        return f

    def check(self, name: str, value: float, lo: float | None = None, hi: float | None = None,
              strict_hi: bool = False) -> Check:
        v = float(value)
        ok = bool(np.isfinite(v))
        if lo is not None:
            ok &= v >= lo
        if hi is not None:
            ok &= (v < hi) if strict_hi else (v <= hi)
        lo_s = "" if lo is None else f"{lo:g} <= "
        hi_s = "" if hi is None else (f" < {hi:g}" if strict_hi else f" <= {hi:g}")
        c = Check(name, v, f"{lo_s}value{hi_s}", ok)
        self.checks.append(c)
        return c

    def get_check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        """Deterministic content (no wall-clock; timings go to the manifest)."""
        return {
            "experiment": self.experiment,
            "parameter_name": self.parameter_name,
            "ladder": self.ladder,
            "regime": self.regime,
            "valid": self.valid,
            "fits": {k: {"slope": f.slope, "intercept": f.intercept, "residual": f.residual,
                         "n_points": f.n_points} for k, f in self.fits.items()},
            "checks": [c.to_dict() for c in self.checks],
            "series": {k: {kk: [float(x) for x in vv] for kk, vv in v.items()} for k, v in self.series.items()},
            "info": self.info,
            "errors": self.rows,
            "config_hash": self.config_hash,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def summary_lines(self) -> list:
        out = [f"{self.experiment}: {'VALID' if self.valid else 'INVALID'} ({self.regime})"]
        for k, f in self.fits.items():
            out.append(f"  slope[{k}] = {f.slope:.4f} (rms residual {f.residual:.3g}, {f.n_points} points)")
        for c in self.checks:
            out.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.name} = {c.value:.6g} ({c.bound})")
        return out
