"""Uniform spatial and velocity grids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def next_pow2(n: float) -> int:
    return 1 << max(0, int(np.ceil(np.log2(max(n, 1)))))


@dataclass(frozen=True)
class SpatialGrid:
    """Tensor grid with ``n`` points per axis on [lower, lower + length).

    Periodic grids exclude the right endpoint; non-periodic grids include
    both endpoints (spacing ``length / (n - 1)``).
    """

    d: int
    lower: tuple
    length: tuple
    n: tuple
    periodic: bool = True

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        for name in ("lower", "length", "n"):
            if len(getattr(self, name)) != self.d:
                raise ValueError(f"{name} must have {self.d} entries")
        if any(int(m) < 16 for m in self.n):
            raise ValueError(f"need at least 16 points per axis, got {self.n}")
        if any(not L > 0 for L in self.length):
            raise ValueError("extent must be positive")

    @classmethod
    def centered(cls, length: float, n: int, d: int = 1, periodic: bool = True) -> "SpatialGrid":
        return cls(d, (-0.5 * length,) * d, (float(length),) * d, (int(n),) * d, periodic)

    @property
    def spacing(self) -> tuple:
        if self.periodic:
            return tuple(L / m for L, m in zip(self.length, self.n))
        return tuple(L / (m - 1) for L, m in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def is_spectral(self) -> bool:
        return self.periodic and all(_is_pow2(m) for m in self.n)

    def require_spectral(self):
        if not self.is_spectral:
            raise ValueError("spectral operations need a periodic grid with power-of-two points per axis")

    def axis(self, k: int = 0) -> np.ndarray:
        return self.lower[k] + self.spacing[k] * np.arange(self.n[k])

    @property
    def x(self) -> np.ndarray:
        """Coordinates of a 1D grid."""
        if self.d != 1:
            raise ValueError("x is only defined for d = 1; use points()")
        return self.axis(0)

    def points(self) -> np.ndarray:
        """All grid nodes, shape (prod(n), d), C order."""
        mesh = np.meshgrid(*[self.axis(k) for k in range(self.d)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def wavenumbers(self, k: int = 0) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n[k], self.spacing[k])

    @property
    def k_max(self) -> float:
        return float(np.pi / min(self.spacing))

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights per node (flattened C order)."""
        ws = []
        for k in range(self.d):
            w = np.full(self.n[k], self.spacing[k])
            if not self.periodic:
                w[0] *= 0.5
                w[-1] *= 0.5
            ws.append(w)
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out.ravel()


@dataclass(frozen=True)
class VelocityGrid:
    """n_v cells on [-v_max, v_max): v_j = -v_max + j dv, dv = 2 v_max / n_v."""

    n_v: int
    v_max: float

    def __post_init__(self):
        if not _is_pow2(self.n_v) or self.n_v < 16:
            raise ValueError("n_v must be a power of two >= 16")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")

    @property
    def dv(self) -> float:
        return 2 * self.v_max / self.n_v

    @property
    def v(self) -> np.ndarray:
        return -self.v_max + self.dv * np.arange(self.n_v)

    @property
    def dy(self) -> float:
        """Dual correlation spacing, so that n_v * dv * dy = 2 pi."""
        return np.pi / self.v_max
