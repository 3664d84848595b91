"""Wigner transforms and weak phase-space pairings.

For psi on a periodic grid with semiclassical parameter h,

    f(x, v) = (2 pi)^-1 int dy exp(-i y v) psi(x + h y / 2) conj(psi(x - h y / 2)),

normalized so that int f dv = |psi(x)|^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.grids import VelocityGrid, next_pow2
from ..errors import AliasingError
from .wavefield import WaveField


@dataclass(eq=False)
class WignerGrid:
    """Real Wigner function on (x grid) x (velocity grid)."""

    x: np.ndarray
    vgrid: VelocityGrid
    values: np.ndarray  # (n_x, n_v)
    h: float
    dx: float
    imag_residue: float = 0.0

    @property
    def v(self) -> np.ndarray:
        return self.vgrid.v

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.vgrid.dv

    def v_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx

    def total(self) -> float:
        return float(self.values.sum() * self.dx * self.vgrid.dv)


def _shifted(values: np.ndarray, k: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """psi(x + s) for each shift s by Fourier interpolation, shape (len(shifts), n)."""
    vh = np.fft.fft(values)
    return np.fft.ifft(vh[None, :] * np.exp(1j * np.outer(shifts, k)), axis=1)


def wigner_values(values: np.ndarray, dx: float, h: float, vgrid: VelocityGrid, chunk: int = 64):
    """Wigner matrix (n_x, n_v) of a (not necessarily normalized) grid function.

    Returns (real values, imaginary residue relative to max |f|).
    """
    n = len(values)
    nv = vgrid.n_v
    _check_wrap(values, dx, 0.5 * h * (nv // 2) * vgrid.dy)
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    m = np.arange(nv) - nv // 2  # m = -nv/2 .. nv/2 - 1
    s = 0.5 * h * m * vgrid.dy
    out = np.empty((n, nv), dtype=complex)
    C = np.empty((nv, n), dtype=complex)
    for i0 in range(0, nv, chunk):
        sl = slice(i0, i0 + chunk)
        plus = _shifted(values, k, s[sl])
        minus = _shifted(values, k, -s[sl])
        C[sl] = plus * np.conj(minus)
    # the m = -nv/2 term has no partner; keep its Hermitian part
    C[0] = np.real(C[0])
    sign_m = np.where(m % 2 == 0, 1.0, -1.0)
    j = np.arange(nv)
    pref = (vgrid.dy / (2 * np.pi)) * np.where(j % 2 == 0, 1.0, -1.0) * (-1.0) ** (nv // 2)
    out = (np.fft.fft(sign_m[:, None] * C, axis=0) * pref[:, None]).T
    peak = np.max(np.abs(out))
    resid = float(np.max(np.abs(out.imag)) / peak) if peak > 0 else 0.0
    return np.ascontiguousarray(out.real), resid


def support_radius(values: np.ndarray, dx: float, rel: float = 1e-9) -> float:
    """Half-width about the domain centre holding all points with |psi|^2 > rel * max."""
    n = len(values)
    rho = np.abs(values) ** 2
    idx = np.nonzero(rho > rel * rho.max())[0]
    return float(np.max(np.abs(idx - n // 2)) * dx)


def _check_wrap(values, dx, s_max):
    # psi(x + s) conj psi(x - s) wraps onto the support once s_max >= L/2 - R
    L = len(values) * dx
    R = support_radius(values, dx)
    if s_max >= 0.5 * L - R:
        raise AliasingError(f"correlation shift {s_max:.3g} reaches L/2 - R = {0.5 * L - R:.3g}; "
                            "enlarge the domain or reduce n_v h / v_max")


def check_aliasing(v_marginal: np.ndarray, dv: float, tol: float = 1e-6, bins: int = 2):
    edge = (np.abs(v_marginal[:bins]).sum() + np.abs(v_marginal[-bins:]).sum()) * dv
    if edge > tol:
        raise AliasingError(f"momentum mass {edge:.2e} within {bins} bins of the velocity-grid edge; "
                            "increase v_max")
    return edge


def wigner_transform(psi: WaveField, vgrid: VelocityGrid, check: bool = True) -> WignerGrid:
    """Wigner function of ``psi`` on its x grid times ``vgrid``.

    Raises
    ------
    AliasingError
        When the v-marginal mass in the two outermost bins on either side
        exceeds 1e-6.
    """
    vals, resid = wigner_values(psi.values, psi.dx, psi.h, vgrid)
    f = WignerGrid(psi.x, vgrid, vals, psi.h, psi.dx, resid)
    if check:
        check_aliasing(f.v_marginal(), vgrid.dv)
    return f


def momentum_density(psi: WaveField, v: np.ndarray) -> np.ndarray:
    """|psi~(v)|^2 / (2 pi h) with psi~(v) = int psi(x) exp(-i v x / h) dx (direct sum)."""
    x = psi.x
    amp = np.exp(-1j * np.outer(v, x) / psi.h) @ psi.values * psi.dx
    return np.abs(amp) ** 2 / (2 * np.pi * psi.h)


def weak_pair_wigner(f: WignerGrid, F) -> float:
    """Trapezoidal phase-space quadrature of f F (periodic in x, uniform in v)."""
    X = f.x[:, None, None]
    V = f.v[None, :, None]
    vals = np.broadcast_to(F(X, V), f.values.shape)
    return float(np.sum(f.values * vals) * f.dx * f.vgrid.dv)


def correlation_pairing(values: np.ndarray, x: np.ndarray, dx: float, h: float, F,
                        y_cut: float | None = None, chunk: int = 32) -> float:
    """<W[psi], F> for separable F without forming the Wigner function.

    Uses int f(x, v) B(v) dv = int dy B^(y) psi(x + h y/2) conj(psi(x - h y/2))
    with B^ the closed-form (2 pi)^-1 transform of the velocity factor, and
    y sampled at 2 m dx / h so the shifts are whole grid steps.
    """
    rho = np.abs(values) ** 2
    total = 0.0
    dy = 2 * dx / h
    for coef, A, B in F.terms:
        Ax = A(x[:, None])
        if B.is_constant:
            total += coef * float(np.sum(Ax * rho) * dx)
            continue
        yc = B.y_extent() if y_cut is None else y_cut
        mmax = int(np.ceil(yc / dy))
        _check_wrap(values, dx, mmax * dx)
        acc = rho * B.fourier(np.zeros(1))[0]
        for m0 in range(1, mmax + 1, chunk):
            ms = np.arange(m0, min(m0 + chunk, mmax + 1))
            Bp = B.fourier(ms * dy)
            Bm = B.fourier(-ms * dy)
            for mm, bp, bm in zip(ms, Bp, Bm):
                plus = np.roll(values, -mm)
                minus = np.roll(values, mm)
                c = plus * np.conj(minus)
                # the -m term is the conjugate correlation
                acc = acc + bp * c + bm * np.conj(c)
        total += coef * float(np.real(np.sum(Ax * acc)) * dx * dy)
    return total


def wigner_pairing(psi: WaveField, F, y_cut: float | None = None) -> float:
    """<W[psi], F> in the correlation domain (see :func:`correlation_pairing`)."""
    return correlation_pairing(psi.values, psi.x, psi.dx, psi.h, F, y_cut)


def panel_wigner_pairings(psi: WaveField, panel) -> np.ndarray:
    return np.array([wigner_pairing(psi, F) for F in panel])


def required_wigner_points(length: float, h: float, v_window: float = 10.0) -> int:
    """Power of two with pi h / dx >= v_window, which keeps correlation sums unaliased."""
    return next_pow2(length * v_window / (np.pi * h))


def suggest_velocity_grid(psi: WaveField, v_max: float) -> VelocityGrid:
    """Velocity grid whose correlation window just covers the support of psi.

    The largest shift h n_v dy / 4 must reach the support radius R, giving
    n_v >= 4 R v_max / (pi h). After rounding n_v up to a power of two the
    velocity window is widened so that the largest shift equals R, which keeps
    the wrap-around margin L/2 - R as large as possible.
    """
    R = support_radius(psi.values, psi.dx)
    n_v = max(16, next_pow2(4 * R * v_max / (np.pi * psi.h)))
    return VelocityGrid(n_v, max(v_max, psi.h * n_v * np.pi / (4 * R)))
