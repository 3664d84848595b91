"""Phase-amplitude (WKB) form of the Hartree equation.

Writing psi = a exp(i sigma / h) with real sigma gives

    sigma_t + |sigma'|^2 / 2 + phi * |a|^2 = 0,
    a_t + sigma' a' + a sigma'' / 2 = i (h / 2) a''.

Dropping the right side of the amplitude equation gives the classical
transport system. The phase is stored as a quadratic background
c + p x + q x^2 / 2, evolved in closed form, plus a periodic remainder, so
linear and focusing phases fit on a periodic grid. The remainder must stay
localized when the background is nonzero.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..core.potentials import TwoBodyPotential
from ..errors import CausticError
from ..kinetic import CausticReport
from .hartree import periodic_kernel_hat
from .wavefield import WaveField


@dataclass(eq=False)
class WKBFields:
    """Amplitude, phase and log-Jacobian fields at time t.

    ``background`` holds (c0, p0, q0) at time ``t_ref``; the background at
    time t follows q = q0 / (1 + q0 s), p = p0 / (1 + q0 s),
    c = c0 - p0^2 s / (2 (1 + q0 s)) with s = t - t_ref.
    """

    grid: object
    a: np.ndarray
    sigma_periodic: np.ndarray
    h: float
    background: tuple = (0.0, 0.0, 0.0)
    t: float = 0.0
    t_ref: float = 0.0
    log_jac: np.ndarray | None = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.sigma_periodic = np.asarray(self.sigma_periodic, dtype=float)
        if self.log_jac is None:
            self.log_jac = np.zeros_like(self.sigma_periodic)
        self._k = self.grid.wavenumbers()
        self._k_odd = self._k.copy()
        self._k_odd[len(self._k) // 2] = 0.0

    # background ------------------------------------------------------------
    def background_at(self, t: float):
        c0, p0, q0 = self.background
        s = t - self.t_ref
        g = 1.0 + q0 * s
        if g <= 0:
            raise CausticError(f"quadratic phase focuses at t = {self.t_ref - 1 / q0:.6g}")
        return c0 - p0**2 * s / (2 * g), p0 / g, q0 / g, np.log(g)

    # derived fields -----------------------------------------------------------
    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def dx(self) -> float:
        return self.grid.spacing[0]

    def deriv(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        k = self._k_odd if order % 2 else self._k
        out = np.fft.ifft((1j * k) ** order * np.fft.fft(f))
        return out.real if np.isrealobj(f) else out

    @property
    def sigma(self) -> np.ndarray:
        c, p, q, _ = self.background_at(self.t)
        x = self.x
        return c + p * x + 0.5 * q * x * x + self.sigma_periodic

    @property
    def momentum(self) -> np.ndarray:
        """P = sigma'."""
        _, p, q, _ = self.background_at(self.t)
        return p + q * self.x + self.deriv(self.sigma_periodic)

    @property
    def gamma(self) -> np.ndarray:
        """Gamma = |a|^2."""
        return np.abs(self.a) ** 2

    @property
    def commutator(self) -> np.ndarray:
        """B = (i h / 2)(conj(a) a'' - a conj(a)'') = -h Im(conj(a) a'')."""
        return -self.h * np.imag(np.conj(self.a) * self.deriv(self.a, 2))

    @property
    def jacobian(self) -> np.ndarray:
        """Jacobian of the characteristic map, expressed at the current x."""
        *_, lb = self.background_at(self.t)
        return np.exp(lb + self.log_jac)

    def mass(self) -> float:
        return float(np.sum(self.gamma) * self.dx)

    def h1_seminorm(self) -> float:
        """||a'||_L2."""
        return float(np.sqrt(np.sum(np.abs(self.deriv(self.a)) ** 2) * self.dx))

    def reconstruct(self) -> WaveField:
        return WaveField(self.grid, self.a * np.exp(1j * self.sigma / self.h), self.h, self.t)

    # constructors ---------------------------------------------------------------
    @classmethod
    def from_profiles(cls, amplitude, phase, h: float, grid, normalize: bool = True) -> "WKBFields":
        x = grid.x[:, None]
        a = np.asarray(amplitude(x), dtype=complex)
        if normalize:
            a = a / np.sqrt(np.sum(np.abs(a) ** 2) * grid.spacing[0])
        c, p, Q = phase.background()
        sp = np.asarray(phase.periodic_part(x), dtype=float)
        return cls(grid, a, sp, h, (float(c), float(p[0]), float(Q[0, 0])))

    @classmethod
    def from_wavefield(cls, psi: WaveField, phase) -> "WKBFields":
        """Split psi with a known phase: a = psi exp(-i sigma / h)."""
        x = psi.x[:, None]
        c, p, Q = phase.background()
        sig = phase.value(x)
        return cls(psi.grid, psi.values * np.exp(-1j * sig / psi.h), phase.periodic_part(x), psi.h,
                   (float(c), float(p[0]), float(Q[0, 0])), psi.t, psi.t)


class GrenierSolver:
    """SSP-RK3 integrator for the phase-amplitude system.

    Parameters
    ----------
    include_h_term : bool
        Keep the dispersive i (h/2) a'' term (exact rewriting of Hartree)
        or drop it (classical transport of the amplitude).
    threshold : float
        Caustic abort when the Jacobian proxy over the region holding mass
        drops to this value.
    """

    def __init__(self, grid, phi: TwoBodyPotential, include_h_term: bool = True,
                 threshold: float = 0.05, mass_floor: float = 1e-14, oscillation_tol: float = 1e-8):
        self.grid = grid
        self.phi = phi
        self.include_h_term = include_h_term
        self.threshold = threshold
        self.mass_floor = mass_floor
        self.oscillation_tol = oscillation_tol
        self.kernel_hat = None if phi.is_zero else periodic_kernel_hat(phi, grid)

    def _rhs(self, w: WKBFields, t, sp, a, lj):
        _, p, q, _ = w.background_at(t)
        x = w.x
        sx = w.deriv(sp)
        sxx = w.deriv(sp, 2)
        P = p + q * x + sx
        if self.kernel_hat is None:
            V = 0.0
        else:
            V = np.real(np.fft.ifft(self.kernel_hat * np.fft.fft(np.abs(a) ** 2)))
        dsp = -(p + q * x) * sx - 0.5 * sx * sx - V
        da = -P * w.deriv(a) - 0.5 * a * (q + sxx)
        if self.include_h_term:
            da = da + 0.5j * w.h * w.deriv(a, 2)
        dlj = -P * w.deriv(lj) + sxx
        return dsp, da, dlj

    def check_cfl(self, w: WKBFields, dt: float):
        kmax = self.grid.k_max
        if self.include_h_term and dt * 0.5 * w.h * kmax**2 > np.sqrt(3):
            raise ValueError(f"dt={dt} violates the dispersive limit sqrt(3)/((h/2) k_max^2) = "
                             f"{np.sqrt(3) / (0.5 * w.h * kmax ** 2):.3g}")
        mask = w.gamma > self.mass_floor * w.gamma.max()
        speed = np.max(np.abs(w.momentum[mask])) if mask.any() else 0.0
        if dt * speed * kmax > np.sqrt(3):
            raise ValueError(f"dt={dt} violates the advective limit sqrt(3)/(max|P| k_max)")

    def step(self, w: WKBFields, dt: float) -> WKBFields:
        t = w.t
        u0 = (w.sigma_periodic, w.a, w.log_jac)
        k1 = self._rhs(w, t, *u0)
        u1 = tuple(u + dt * k for u, k in zip(u0, k1))
        k2 = self._rhs(w, t + dt, *u1)
        u2 = tuple(0.75 * a + 0.25 * (b + dt * k) for a, b, k in zip(u0, u1, k2))
        k3 = self._rhs(w, t + 0.5 * dt, *u2)
        u3 = tuple(a / 3 + 2 / 3 * (b + dt * k) for a, b, k in zip(u0, u2, k3))
        return replace(w, sigma_periodic=u3[0], a=u3[1], log_jac=u3[2], t=t + dt)

    def monitor(self, w: WKBFields):
        """Raise CausticError on Jacobian collapse or grid-scale oscillation."""
        g = w.gamma
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(w.log_jac))):
            rep = CausticReport(True, self.threshold, w.t, None, None, float("nan"), None, w.t)
            raise CausticError(f"non-finite fields at t = {w.t:.6g}", rep, w)
        mask = g > self.mass_floor * g.max()
        j = w.jacobian
        jmin = float(np.min(j[mask]))
        if jmin <= self.threshold or not np.isfinite(jmin):
            i = int(np.argmin(np.where(mask, j, np.inf)))
            rep = CausticReport(True, self.threshold, w.t, w.t, None, jmin, [float(w.x[i])], w.t)
            raise CausticError(f"caustic: Jacobian {jmin:.4g} <= {self.threshold} at t = {w.t:.6g}", rep, w)
        for label, f in (("grad sigma", w.deriv(w.sigma_periodic)), ("amplitude", w.a)):
            power = np.abs(np.fft.fft(f)) ** 2
            total = power.sum()
            if total > 0:
                top = power[np.abs(w._k) > 2 * self.grid.k_max / 3].sum() / total
                if top > self.oscillation_tol:
                    rep = CausticReport(True, self.threshold, w.t, None, None, jmin, None, w.t)
                    raise CausticError(f"grid-scale oscillation in {label} at t = {w.t:.6g} "
                                       f"(high-mode fraction {top:.2e})", rep, w)

    def evolve(self, w: WKBFields, t: float, dt: float, record_times=None, monitor_every: int = 1):
        """Advance by t; return (fields, history) with H1 norms at ``record_times``."""
        n = int(np.ceil(t / dt - 1e-9))
        h = t / n if n else dt
        self.check_cfl(w, h)
        t0 = w.t
        rec = sorted(record_times) if record_times is not None else []
        hist = {"t": [], "h1": [], "mass": []}

        def record(cur):
            hist["t"].append(cur.t)
            hist["h1"].append(cur.h1_seminorm())
            hist["mass"].append(cur.mass())

        ri = 0
        while ri < len(rec) and rec[ri] <= t0 + 1e-12:
            record(w)
            ri += 1
        for s in range(1, n + 1):
            w = self.step(w, h)
            w.t = t0 + s * h
            if s % monitor_every == 0 or s == n:
                self.monitor(w)
            while ri < len(rec) and rec[ri] <= w.t + 0.5 * h:
                record(w)
                ri += 1
        return w, {k: np.array(v) for k, v in hist.items()}


def grenier_system_step(wkb: WKBFields, phi: TwoBodyPotential, dt: float,
                        include_h_term: bool = True) -> WKBFields:
    """One SSP-RK3 step of the phase-amplitude system, with CFL and caustic checks."""
    solver = GrenierSolver(wkb.grid, phi, include_h_term)
    solver.check_cfl(wkb, dt)
    out = solver.step(wkb, dt)
    solver.monitor(out)
    return out


def grenier_evolve(wkb: WKBFields, phi: TwoBodyPotential, t: float, dt: float,
                   include_h_term: bool = True, record_times=None, threshold: float = 0.05):
    return GrenierSolver(wkb.grid, phi, include_h_term, threshold).evolve(wkb, t, dt, record_times)


def h1_norm_track(wkb: WKBFields, times, phi: TwoBodyPotential | None = None, dt: float = 1e-3,
                  include_h_term: bool = True) -> np.ndarray:
    """||a'(t)||_L2 at the requested times (ascending, >= wkb.t)."""
    from ..core.potentials import make_zero_potential
    phi = phi or make_zero_potential()
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < wkb.t - 1e-12:
        raise ValueError("times must be ascending and not before the current time")
    _, hist = grenier_evolve(wkb, phi, float(times[-1] - wkb.t), dt, include_h_term, times)
    return hist["h1"]
