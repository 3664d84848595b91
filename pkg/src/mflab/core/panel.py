"""Smooth test functions F(x, v) on one-particle phase space.

Every panel function is a finite sum of products ``coef * A(x) * B(v)``.
The separable form gives closed-form gradients and a closed-form Fourier
transform of the velocity factor, which the Wigner pairings exploit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_FOURIER_TOL = 37.0  # exp(-37) ~ 1e-16


class Factor:
    """A smooth function of one d-vector (position or velocity)."""

    def __call__(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fourier(self, y: np.ndarray) -> np.ndarray:
        """(2 pi)^-1 int exp(-i y v) B(v) dv for d = 1."""
        raise NotImplementedError

    def y_extent(self) -> float:
        """|y| beyond which :meth:`fourier` is below 1e-16 of its peak."""
        raise NotImplementedError

    is_constant = False


@dataclass(frozen=True)
class GaussianFactor(Factor):
    """exp(-|z - center|^2 / (2 width^2)); center is broadcast over axes as given."""

    center: tuple
    width: float

    def _c(self, z):
        return np.asarray(self.center, dtype=float)[: z.shape[-1]]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        r = z - self._c(z)
        return np.exp(-0.5 * np.sum(r * r, axis=-1) / self.width**2)

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        return -(z - self._c(z)) / self.width**2 * self(z)[..., None]

    def fourier(self, y):
        y = np.asarray(y, dtype=float)
        s, c = self.width, float(self.center[0])
        return s / np.sqrt(2 * np.pi) * np.exp(-1j * y * c - 0.5 * (s * y) ** 2)

    def y_extent(self):
        return np.sqrt(2 * _FOURIER_TOL) / self.width

    def sup(self):
        return 1.0, np.exp(-0.5) / self.width


@dataclass(frozen=True)
class MonomialGaussianFactor(Factor):
    """z[axis]^power * exp(-|z|^2 / (2 cutoff^2)) for power in {1, 2}."""

    axis: int
    power: int
    cutoff: float

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        env = np.exp(-0.5 * np.sum(z * z, axis=-1) / self.cutoff**2)
        return z[..., self.axis] ** self.power * env

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        L2 = self.cutoff**2
        env = np.exp(-0.5 * np.sum(z * z, axis=-1) / L2)
        mono = z[..., self.axis] ** self.power
        g = -(z / L2) * (mono * env)[..., None]
        g[..., self.axis] += self.power * z[..., self.axis] ** (self.power - 1) * env
        return g

    def fourier(self, y):
        y = np.asarray(y, dtype=float)
        L = self.cutoff
        env = np.exp(-0.5 * (L * y) ** 2) / np.sqrt(2 * np.pi)
        if self.power == 1:
            return -1j * L**3 * y * env
        if self.power == 2:
            return L**3 * (1 - (L * y) ** 2) * env + 0j
        raise NotImplementedError("closed-form transform only for power 1 and 2")

    def y_extent(self):
        return np.sqrt(2 * (_FOURIER_TOL + 5.0)) / self.cutoff

    def sup(self):
        # maxima of |s|^p e^{-s^2/2L^2} and of its derivative, by 1D sampling
        s = np.linspace(-12 * self.cutoff, 12 * self.cutoff, 200001)
        env = np.exp(-0.5 * s * s / self.cutoff**2)
        f = s**self.power * env
        df = (self.power * s ** (self.power - 1) - s ** (self.power + 1) / self.cutoff**2) * env
        return float(np.max(np.abs(f))), float(np.max(np.abs(df)))


@dataclass(frozen=True)
class ConstantFactor(Factor):
    is_constant = True

    def __call__(self, z):
        return np.ones(np.shape(z)[:-1])

    def grad(self, z):
        return np.zeros(np.shape(z))

    def fourier(self, y):
        raise ValueError("the transform of a constant is a delta; callers special-case it")

    def y_extent(self):
        return 0.0

    def sup(self):
        return 1.0, 0.0


@dataclass(frozen=True)
class TestFunction:
    """F(x, v) = sum_k coef_k * A_k(x) * B_k(v).

    Positions and velocities are arrays with trailing axis d.
    """

    name: str
    terms: tuple  # of (coef, Factor, Factor)
    d: int = 1

    __test__ = False  # not a pytest class

    def __call__(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        out = 0.0
        for c, A, B in self.terms:
            out = out + c * A(x) * B(v)
        return out

    def gradient(self, x, v):
        """Return (dF/dx, dF/dv), each with the shape of x."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        gx = np.zeros(np.broadcast_shapes(x.shape, v.shape))
        gv = np.zeros_like(gx)
        for c, A, B in self.terms:
            gx = gx + c * A.grad(x) * B(v)[..., None]
            gv = gv + c * A(x)[..., None] * B.grad(v)
        return gx, gv

    @property
    def sup_norm(self) -> float:
        return float(sum(abs(c) * A.sup()[0] * B.sup()[0] for c, A, B in self.terms))

    @property
    def gradient_sup_norm(self) -> float:
        tot = 0.0
        for c, A, B in self.terms:
            (a0, a1), (b0, b1) = A.sup(), B.sup()
            tot += abs(c) * np.hypot(a1 * b0, a0 * b1)
        return float(tot)


@dataclass(frozen=True)
class TestFunctionPanel:
    functions: tuple
    d: int

    __test__ = False

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i):
        return self.functions[i]

    @property
    def names(self):
        return [F.name for F in self.functions]

    @property
    def bounds(self):
        """{name: (sup |F|, sup |grad F|)}."""
        return {F.name: (F.sup_norm, F.gradient_sup_norm) for F in self.functions}

    def pair_points(self, x, v, weights) -> np.ndarray:
        """sum_i w_i F(x_i, v_i) for every panel function."""
        w = np.asarray(weights, dtype=float)
        return np.array([float(np.sum(w * F(x, v))) for F in self.functions])


def default_test_panel(d: int = 1, moment_cutoff_x: float = 2.0,
                       moment_cutoff_v: float = 1.0) -> TestFunctionPanel:
    """Nine separable functions: four Gaussians and five cut-off moments.

    The moments x, v, x^2, v^2, xv use the first coordinate axis and a
    Gaussian cutoff of width ``moment_cutoff_x`` / ``moment_cutoff_v``.
    """
    if d not in (1, 2, 3):
        raise ValueError(f"d must be 1, 2 or 3, got {d}")

    def e1(c):
        return (c,) + (0.0,) * (d - 1)

    g = GaussianFactor
    r = np.sqrt(0.5)
    gauss = [
        ("gauss_origin", g(e1(0.0), r), g(e1(0.0), r)),
        ("gauss_a", g(e1(0.5), 0.7), g(e1(0.2), 0.3)),
        ("gauss_b", g(e1(-0.5), 1.0), g(e1(-0.1), 0.5)),
        ("gauss_c", g(e1(1.0), 0.5), g(e1(0.3), 0.4)),
    ]
    cx, cv = g(e1(0.0), moment_cutoff_x), g(e1(0.0), moment_cutoff_v)
    mx = MonomialGaussianFactor(0, 1, moment_cutoff_x)
    mv = MonomialGaussianFactor(0, 1, moment_cutoff_v)
    mxx = MonomialGaussianFactor(0, 2, moment_cutoff_x)
    mvv = MonomialGaussianFactor(0, 2, moment_cutoff_v)
    moments = [
        ("moment_x", mx, cv),
        ("moment_v", cx, mv),
        ("moment_xx", mxx, cv),
        ("moment_vv", cx, mvv),
        ("moment_xv", mx, mv),
    ]
    fns = tuple(TestFunction(name, ((1.0, A, B),), d) for name, A, B in gauss + moments)
    return TestFunctionPanel(fns, d)


def constant_function(d: int = 1) -> TestFunction:
    """F = 1, the normalization functional."""
    return TestFunction("one", ((1.0, ConstantFactor(), ConstantFactor()),), d)


def velocity_function(d: int = 1, axis: int = 0) -> TestFunction:
    """F(x, v) = v[axis] (not decaying; used for exact mean-momentum checks)."""
    return TestFunction(f"v{axis}", ((1.0, ConstantFactor(), _Linear(axis)),), d)


def position_square_function(d: int = 1, axis: int = 0) -> TestFunction:
    """F(x, v) = x[axis]^2."""
    return TestFunction(f"x{axis}^2", ((1.0, _Square(axis), ConstantFactor()),), d)


@dataclass(frozen=True)
class _Linear(Factor):
    axis: int

    def __call__(self, z):
        return np.asarray(z, dtype=float)[..., self.axis]

    def grad(self, z):
        g = np.zeros(np.shape(z))
        g[..., self.axis] = 1.0
        return g

    def sup(self):
        return np.inf, 1.0


@dataclass(frozen=True)
class _Square(Factor):
    axis: int

    def __call__(self, z):
        return np.asarray(z, dtype=float)[..., self.axis] ** 2

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        g = np.zeros(z.shape)
        g[..., self.axis] = 2 * z[..., self.axis]
        return g

    def sup(self):
        return np.inf, np.inf
