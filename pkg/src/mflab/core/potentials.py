"""Pair potentials and the Kac rescaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class TwoBodyPotential:
    """Even pair potential with analytic first and second derivatives.

    All evaluators act on arrays of separation vectors with trailing axis of
    length ``d``: ``value(r)`` has shape ``r.shape[:-1]``, ``gradient(r)``
    has shape ``r.shape`` and ``hessian(r)`` has shape ``r.shape + (d,)``.

    ``bounds`` holds sup-norms of (phi, |grad phi|, |hess phi|) where the
    latter is the operator 2-norm. Unbounded potentials record ``inf``.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    d: int
    kind: str
    smoothness: str = "C-infinity"
    bounds: tuple[float, float, float] = (np.inf, np.inf, np.inf)
    params: dict = field(default_factory=dict)

    @property
    def length_scale(self):
        return self.params.get("width")

    @property
    def is_zero(self):
        return self.kind == "zero"


def make_gaussian_potential(amplitude: float, width: float, d: int = 1) -> TwoBodyPotential:
    """phi(x) = amplitude * exp(-|x|^2 / (2 width^2)).

    Positive amplitude is repulsive.
    """
    if not np.isfinite(amplitude):
        raise ValueError("amplitude must be finite")
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    if d not in (1, 2, 3):
        raise ValueError(f"d must be 1, 2 or 3, got {d}")
    a, w2 = float(amplitude), float(width) ** 2

    def value(r):
        r = np.asarray(r, dtype=float)
        return a * np.exp(-0.5 * np.sum(r * r, axis=-1) / w2)

    def gradient(r):
        r = np.asarray(r, dtype=float)
        return -(r / w2) * value(r)[..., None]

    def hessian(r):
        r = np.asarray(r, dtype=float)
        outer = r[..., :, None] * r[..., None, :] / (w2 * w2)
        return (outer - np.eye(r.shape[-1]) / w2) * value(r)[..., None, None]

    # sup|grad| at |x| = width; sup of the Hessian 2-norm is attained at 0
    bounds = (abs(a), abs(a) * np.exp(-0.5) / width, abs(a) / w2)
    return TwoBodyPotential(value, gradient, hessian, d, "gaussian", "C-infinity", bounds,
                            {"amplitude": a, "width": float(width)})


def make_zero_potential(d: int = 1) -> TwoBodyPotential:
    def value(r):
        return np.zeros(np.shape(r)[:-1])

    def gradient(r):
        return np.zeros(np.shape(r))

    def hessian(r):
        s = np.shape(r)
        return np.zeros(s + (s[-1],))

    return TwoBodyPotential(value, gradient, hessian, d, "zero", "C-infinity", (0.0, 0.0, 0.0))


def make_harmonic_potential(stiffness: float = 1.0, d: int = 1) -> TwoBodyPotential:
    """phi(x) = stiffness |x|^2 / 2. Unbounded; used for closed-form checks."""
    k = float(stiffness)

    def value(r):
        r = np.asarray(r, dtype=float)
        return 0.5 * k * np.sum(r * r, axis=-1)

    def gradient(r):
        return k * np.asarray(r, dtype=float)

    def hessian(r):
        s = np.shape(r)
        return np.broadcast_to(k * np.eye(s[-1]), s + (s[-1],)).copy()

    return TwoBodyPotential(value, gradient, hessian, d, "harmonic", "C-infinity",
                            (np.inf, np.inf, abs(k)), {"stiffness": k})


@dataclass(frozen=True)
class KacScaling:
    lam: Fraction
    hbar: Fraction

    @property
    def effective_h_exact(self) -> Fraction:
        return self.hbar / self.lam

    @property
    def effective_h(self) -> float:
        return float(self.effective_h_exact)

    @property
    def coupling(self) -> float:
        """Mean-field pair coupling 1/lambda in the rescaled coordinates."""
        return float(1 / self.lam)

    @property
    def lambda_(self) -> float:
        return float(self.lam)


def kac_potential(phi: TwoBodyPotential, lam: float) -> TwoBodyPotential:
    """Physical Kac potential V(x) = phi(x / lam) / lam."""
    lam = float(lam)

    def value(x):
        return phi.value(np.asarray(x, dtype=float) / lam) / lam

    def gradient(x):
        return phi.gradient(np.asarray(x, dtype=float) / lam) / lam**2

    def hessian(x):
        return phi.hessian(np.asarray(x, dtype=float) / lam) / lam**3

    b = phi.bounds
    params = dict(phi.params, kac_lambda=lam)
    if "width" in params:
        params["width"] = params["width"] * lam
    return TwoBodyPotential(value, gradient, hessian, phi.d, f"kac[{phi.kind}]", phi.smoothness,
                            (b[0] / lam, b[1] / lam**2, b[2] / lam**3), params)


def kac_rescale(phi: TwoBodyPotential, lam: float, hbar: float):
    """Rescale the Kac N-body problem to mean-field form.

    With x = lam q the Hamiltonian
    ``-hbar^2/2 sum Lap_x + sum_{i<j} V(x_i - x_j)``, V(x) = phi(x/lam)/lam,
    becomes ``-(hbar/lam)^2/2 sum Lap_q + lam^-1 sum_{i<j} phi(q_i - q_j)``.
    Returns the pair potential in q-coordinates, obtained from V as
    ``q -> lam V(lam q)``, together with the :class:`KacScaling`.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not hbar > 0:
        raise ValueError(f"hbar must be positive, got {hbar}")
    if lam == 1:
        return phi, KacScaling(Fraction(1), Fraction(hbar))
    V = kac_potential(phi, lam)
    lam_f = float(lam)

    def value(q):
        return lam_f * V.value(lam_f * np.asarray(q, dtype=float))

    def gradient(q):
        return lam_f**2 * V.gradient(lam_f * np.asarray(q, dtype=float))

    def hessian(q):
        return lam_f**3 * V.hessian(lam_f * np.asarray(q, dtype=float))

    rescaled = TwoBodyPotential(value, gradient, hessian, phi.d, phi.kind, phi.smoothness,
                                phi.bounds, dict(phi.params))
    return rescaled, KacScaling(Fraction(lam), Fraction(hbar))


def make_constant_potential(value: float, d: int = 1) -> TwoBodyPotential:
    """phi(x) = value. Exerts no force; useful as a field-solver check."""
    c = float(value)

    def val(r):
        return np.full(np.shape(r)[:-1], c)

    def gradient(r):
        return np.zeros(np.shape(r))

    def hessian(r):
        s = np.shape(r)
        return np.zeros(s + (s[-1],))

    return TwoBodyPotential(val, gradient, hessian, d, "constant", "C-infinity",
                            (abs(c), 0.0, 0.0), {"value": c})


def make_potential(kind: str, amplitude: float = 1.0, width: float = 1.0, d: int = 1) -> TwoBodyPotential:
    """Build a potential from its configuration name."""
    if kind == "gaussian":
        return make_gaussian_potential(amplitude, width, d)
    if kind == "zero":
        return make_zero_potential(d)
    if kind == "harmonic":
        return make_harmonic_potential(amplitude, d)
    if kind == "constant":
        return make_constant_potential(amplitude, d)
    raise ValueError(f"unknown potential kind {kind!r}")
