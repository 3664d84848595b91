"""Log-log power-law fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    n_points: int

    def predict(self, p):
        return np.exp(self.intercept) * np.asarray(p, dtype=float) ** self.slope


def fit_slope(params, errors, min_points: int = 4, floor: float | None = None) -> SlopeFit:
    """Least-squares line through (log p, log e).

    Parameters
    ----------
    params, errors : sequences of positive numbers
    min_points : int
        Minimum ladder length (4 for reported experiments).
    floor : float, optional
        If given, errors below it are raised to it instead of rejected.

    Returns
    -------
    SlopeFit
        ``residual`` is the root-mean-square deviation in log space.
    """
    p = np.asarray(params, dtype=float)
    e = np.asarray(errors, dtype=float)
    if p.shape != e.shape or p.ndim != 1:
        raise ValueError("params and errors must be 1D sequences of equal length")
    if len(p) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(p)}")
    if np.any(p <= 0):
        raise ValueError("parameters must be positive")
    if floor is not None:
        e = np.maximum(e, floor)
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise ValueError("errors must be positive and finite; pass floor= to clip at a tolerance")
    lp, le = np.log(p), np.log(e)
    A = np.stack([lp, np.ones_like(lp)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, le, rcond=None)
    res = float(np.sqrt(np.mean((A @ np.array([slope, icpt]) - le) ** 2)))
    return SlopeFit(float(slope), float(icpt), res, len(p))
