"""Initial-data profiles: densities, phases and WKB amplitudes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import ndtri


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


# --- densities -------------------------------------------------------------

@dataclass(frozen=True)
class GaussianDensity:
    """Isotropic Gaussian density with standard deviation ``std`` per axis."""

    std: float
    center: float = 0.0
    d: int = 1
    mass: float = 1.0

    def pdf(self, x):
        x = _as_points(x, self.d)
        r2 = np.sum((x - self.center) ** 2, axis=-1)
        return self.mass * np.exp(-0.5 * r2 / self.std**2) / (2 * np.pi * self.std**2) ** (self.d / 2)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.center + self.std * rng.standard_normal((n, self.d))

    def quantile_nodes(self, n: int):
        """Equal-mass midpoint nodes Q((i - 1/2)/m) per axis (tensor product).

        Requires n to be a perfect d-th power. Returns (points (n, d), weights).
        """
        m = int(round(n ** (1.0 / self.d)))
        if m**self.d != n:
            raise ValueError(f"quadrature mode needs N = m^{self.d}, got {n}")
        q = self.center + self.std * ndtri((np.arange(m) + 0.5) / m)
        mesh = np.meshgrid(*([q] * self.d), indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        return pts, np.full(n, self.mass / n)

    def normalization(self) -> float:
        return self.mass


@dataclass(frozen=True)
class DensityFromPdf:
    """A 1D density given by a callable on a finite interval.

    Quantiles come from the cumulative integral on a fine grid.
    """

    pdf_fn: Callable
    lower: float
    upper: float
    resolution: int = 20001
    d: int = 1

    def pdf(self, x):
        x = _as_points(x, 1)[..., 0]
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, self.pdf_fn(x), 0.0)

    def _cdf_table(self):
        s = np.linspace(self.lower, self.upper, self.resolution)
        c = integrate.cumulative_trapezoid(self.pdf_fn(s), s, initial=0.0)
        return s, c

    def normalization(self) -> float:
        val, _ = integrate.quad(self.pdf_fn, self.lower, self.upper, limit=400,
                                epsabs=1e-13, epsrel=1e-13)
        return float(val)

    def quantile_nodes(self, n: int):
        s, c = self._cdf_table()
        q = np.interp((np.arange(n) + 0.5) / n * c[-1], c, s)
        return q[:, None], np.full(n, 1.0 / n)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        s, c = self._cdf_table()
        return np.interp(rng.random(n) * c[-1], c, s)[:, None]


# --- phases ----------------------------------------------------------------

class Phase:
    """Real phase sigma(x) with gradient and Hessian.

    Phases split as a quadratic background c + p.x + x.Q.x/2 plus a remainder
    that is periodic on the quantum domain; :meth:`background` returns
    (c, p, Q) with p a d-vector and Q a d x d matrix.
    """

    d = 1

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def background(self):
        return 0.0, np.zeros(self.d), np.zeros((self.d, self.d))

    def periodic_part(self, x):
        x = _as_points(x, self.d)
        c, p, Q = self.background()
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, Q, x)
        return self.value(x) - (c + x @ p + quad)

    def max_speed(self, x):
        return float(np.max(np.linalg.norm(self.gradient(x), axis=-1)))


@dataclass(frozen=True)
class ZeroPhase(Phase):
    d: int = 1

    def value(self, x):
        return np.zeros(_as_points(x, self.d).shape[:-1])

    def gradient(self, x):
        return np.zeros(_as_points(x, self.d).shape)

    def hessian(self, x):
        s = _as_points(x, self.d).shape
        return np.zeros(s + (self.d,))


@dataclass(frozen=True)
class LinearPhase(Phase):
    """sigma(x) = w . x."""

    w: tuple
    d: int = 1

    def value(self, x):
        return _as_points(x, self.d) @ np.asarray(self.w, dtype=float)

    def gradient(self, x):
        x = _as_points(x, self.d)
        return np.broadcast_to(np.asarray(self.w, dtype=float), x.shape).copy()

    def hessian(self, x):
        s = _as_points(x, self.d).shape
        return np.zeros(s + (self.d,))

    def background(self):
        return 0.0, np.asarray(self.w, dtype=float), np.zeros((self.d, self.d))


@dataclass(frozen=True)
class QuadraticPhase(Phase):
    """sigma(x) = curvature |x|^2 / 2 (curvature -1 focuses at t = 1)."""

    curvature: float
    d: int = 1

    def value(self, x):
        x = _as_points(x, self.d)
        return 0.5 * self.curvature * np.sum(x * x, axis=-1)

    def gradient(self, x):
        return self.curvature * _as_points(x, self.d)

    def hessian(self, x):
        s = _as_points(x, self.d).shape
        return np.broadcast_to(self.curvature * np.eye(self.d), s + (self.d,)).copy()

    def background(self):
        return 0.0, np.zeros(self.d), self.curvature * np.eye(self.d)


@dataclass(frozen=True)
class SinePhase(Phase):
    """sigma(x) = amplitude * sum_a sin(wavenumber x_a)."""

    amplitude: float
    wavenumber: float = 1.0
    d: int = 1

    def value(self, x):
        x = _as_points(x, self.d)
        return self.amplitude * np.sum(np.sin(self.wavenumber * x), axis=-1)

    def gradient(self, x):
        x = _as_points(x, self.d)
        return self.amplitude * self.wavenumber * np.cos(self.wavenumber * x)

    def hessian(self, x):
        x = _as_points(x, self.d)
        diag = -self.amplitude * self.wavenumber**2 * np.sin(self.wavenumber * x)
        return diag[..., :, None] * np.eye(self.d)


def make_phase(kind: str, d: int = 1, amplitude: float = 0.2, wavenumber: float = 1.0,
               slope: float = 0.0, curvature: float = 0.0) -> Phase:
    if kind == "zero":
        return ZeroPhase(d)
    if kind == "sine":
        return SinePhase(amplitude, wavenumber, d)
    if kind == "linear":
        return LinearPhase((slope,) * d, d)
    if kind == "quadratic":
        return QuadraticPhase(curvature, d)
    raise ValueError(f"unknown phase kind {kind!r}")


# --- amplitudes ------------------------------------------------------------

@dataclass(frozen=True)
class GaussianAmplitude:
    """a(x) = (pi width^2)^(-d/4) exp(-|x-c|^2/(2 width^2)) exp(i chirp |x-c|^2 / 2).

    The chirp is an O(1) phase carried by the amplitude, so |a|^2 and the
    semiclassical velocity field are independent of it.
    """

    width: float = 1.0
    center: float = 0.0
    chirp: float = 0.0
    d: int = 1

    def __call__(self, x):
        x = _as_points(x, self.d)
        r2 = np.sum((x - self.center) ** 2, axis=-1)
        norm = (np.pi * self.width**2) ** (-self.d / 4)
        return norm * np.exp(-0.5 * r2 / self.width**2 + 0.5j * self.chirp * r2)

    def gradient(self, x):
        x = _as_points(x, self.d)
        r = x - self.center
        return (-1 / self.width**2 + 1j * self.chirp) * r * self(x)[..., None]

    def density(self) -> GaussianDensity:
        return GaussianDensity(self.width / np.sqrt(2), self.center, self.d)

    def gradient_norm_sq(self) -> float:
        """||grad a||_2^2 in closed form: d (1 + chirp^2 width^4) / (2 width^2)."""
        return self.d * (1 + self.chirp**2 * self.width**4) / (2 * self.width**2)
