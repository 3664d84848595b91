"""One-particle wavefunctions on a periodic grid and WKB initial data."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..core.grids import SpatialGrid, next_pow2
from ..errors import ResolutionError


@dataclass(eq=False)
class WaveField:
    """Complex psi on a periodic 1D spectral grid, semiclassical parameter h."""

    grid: SpatialGrid
    values: np.ndarray
    h: float
    t: float = 0.0

    def __post_init__(self):
        if self.grid.d != 1:
            raise ValueError("quantum fields are one-dimensional")
        self.grid.require_spectral()
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n[0],):
            raise ValueError("values must match the grid")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def dx(self) -> float:
        return self.grid.spacing[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dx))

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def expectation_x2(self) -> float:
        return float(np.sum(self.x**2 * self.density()) * self.dx)

    def l2_distance(self, other: "WaveField") -> float:
        return float(np.sqrt(np.sum(np.abs(self.values - other.values) ** 2) * self.dx))


def required_points(length: float, h: float, max_speed: float, safety: float = 1.0) -> int:
    """Smallest power of two with spacing <= h / (4 max|grad sigma| + safety)."""
    return next_pow2(length * (4 * max_speed + safety) / h)


def boundary_mass(values: np.ndarray, dx: float, fraction: float = 0.05) -> float:
    """Mass within ``fraction`` of the domain length from either edge."""
    n = len(values)
    k = max(1, int(fraction * n))
    rho = np.abs(values) ** 2
    return float((rho[:k].sum() + rho[-k:].sum()) * dx)


def wkb_initialize(a, sigma, h: float, grid: SpatialGrid, safety: float = 1.0,
                   normalize: bool = True) -> WaveField:
    """psi(x) = a(x) exp(i sigma(x) / h), normalized to unit L2 norm.

    Parameters
    ----------
    a : callable or array
        Amplitude profile (complex allowed).
    sigma : Phase or array
        Real phase. Arrays must be sampled on ``grid``.
    safety : float
        Velocity margin in the resolution rule dx <= h / (4 max|sigma'| + safety).

    Raises
    ------
    ResolutionError
        If the grid under-resolves the phase oscillation; the message and
        ``required`` attribute give the needed number of points.
    """
    x = grid.x
    if callable(a):
        av = np.asarray(a(x[:, None]), dtype=complex)
    else:
        av = np.asarray(a, dtype=complex)
    if hasattr(sigma, "gradient"):
        sv = np.asarray(sigma.value(x[:, None]), dtype=float)
        speed = sigma.max_speed(x[:, None])
    else:
        sv = np.asarray(sigma, dtype=float)
        k = grid.wavenumbers()
        speed = float(np.max(np.abs(np.real(np.fft.ifft(1j * k * np.fft.fft(sv))))))
    dx = grid.spacing[0]
    limit = h / (4 * speed + safety)
    if dx > limit * (1 + 1e-12):
        need = required_points(grid.length[0], h, speed, safety)
        raise ResolutionError(f"grid spacing {dx:.4g} exceeds h/(4 max|grad sigma| + {safety}) = {limit:.4g}; "
                              f"use at least {need} points", required=need)
    psi = av * np.exp(1j * sv / h)
    nrm = np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    if normalize:
        psi = psi / nrm
    edge = boundary_mass(psi, dx)
    if edge > 1e-8:
        warnings.warn(f"mass {edge:.2e} near the periodic boundary; enlarge the domain", stacklevel=2)
    return WaveField(grid, psi, h)
