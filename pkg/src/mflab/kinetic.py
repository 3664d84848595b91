"""Vlasov and pressureless hydrodynamic limit solvers.

The Vlasov solver pushes weighted markers along characteristics in the
self-consistent field E = -grad phi * rho, with rho deposited by
cloud-in-cell and convolved with the smooth kernel on a grid. The hydro
solver transports Lagrangian fluid markers and their flow-map Jacobians,
so density follows from rho(x(t), t) det J(t) = rho_0(x_0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal
from scipy.interpolate import CubicSpline, griddata

from .classical import SCHEMES, EnsembleState, Interaction
from .core.grids import SpatialGrid
from .core.potentials import TwoBodyPotential
from .errors import CausticError, DivergenceError, ResolutionError


class PhaseSpaceCloud(EnsembleState):
    """Weighted markers representing a kinetic distribution f(x, v)."""


@dataclass
class Markers:
    """Lagrangian fluid markers: labels x0, positions, velocities, Jacobians."""

    x0: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray
    rho0: np.ndarray
    jac: np.ndarray
    jac_rate: np.ndarray
    action: np.ndarray

    @property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.jac)

    @property
    def det_rate(self) -> np.ndarray:
        # d/dt det J = det J tr(J^-1 K)
        return self.det * np.trace(np.linalg.solve(self.jac, self.jac_rate), axis1=-2, axis2=-1)

    @property
    def rho(self) -> np.ndarray:
        return self.rho0 / self.det


@dataclass
class DensityField:
    """rho, u (and sigma when tracked) on a spatial grid at time t.

    ``rho`` has shape (P,) and ``u`` shape (P, d) with P grid points in C
    order. Lagrangian solutions also carry their ``markers``; pairings then
    use the exact push-forward instead of the grid reconstruction.
    """

    grid: SpatialGrid
    rho: np.ndarray
    u: np.ndarray
    t: float = 0.0
    sigma: np.ndarray | None = None
    markers: Markers | None = None
    velocity_gradient: np.ndarray | None = None

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float).ravel()
        self.u = np.asarray(self.u, dtype=float).reshape(self.rho.size, self.grid.d)
        if np.any(self.rho < -1e-12):
            raise ValueError("density must be nonnegative")

    @classmethod
    def from_profiles(cls, rho, phase, grid: SpatialGrid, check_mass: bool = True) -> "DensityField":
        pts = grid.points()
        out = cls(grid, rho.pdf(pts), phase.gradient(pts), 0.0, phase.value(pts),
                  velocity_gradient=phase.hessian(pts))
        if check_mass and abs(out.mass() - 1.0) > 1e-8:
            raise ValueError(f"density mass on the grid is {out.mass():.12g}, expected 1 to 1e-8")
        return out

    def mass(self) -> float:
        """Total mass. Exact Lagrangian quadrature when markers are present."""
        if self.markers is not None:
            m = self.markers
            return float(np.sum(m.rho * m.det / m.rho0 * m.weights))
        return float(np.sum(self.rho * self.grid.trapezoid_weights()))

    def grid_mass(self) -> float:
        return float(np.sum(self.rho * self.grid.trapezoid_weights()))


@dataclass
class ForceFieldCache:
    """E = -grad phi * rho sampled on a grid, with interpolation to points."""

    grid: SpatialGrid
    E: np.ndarray  # (P, d)
    order: int = 1

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.grid.d)
        if self.order == 1:
            idx, wts = _cic_stencil(pts, self.grid)
            return np.einsum("mc,mcd->md", wts, self.E[idx])
        if self.order == 3:
            shape = self.grid.n
            coords = np.stack([(pts[:, k] - self.grid.lower[k]) / self.grid.spacing[k]
                               for k in range(self.grid.d)])
            mode = "grid-wrap" if self.grid.periodic else "constant"
            return np.stack([ndimage.map_coordinates(self.E[:, k].reshape(shape), coords, order=3,
                                                     mode=mode, cval=0.0)
                             for k in range(self.grid.d)], axis=1)
        raise ValueError("interpolation order must be 1 or 3")


@dataclass
class CausticReport:
    """Outcome of the Jacobian monitor.

    ``t_detect`` is the first step time with min det J <= threshold,
    ``t_threshold`` the linear interpolation of the crossing inside that step,
    and ``t_caustic`` the zero of det J extrapolated with d(det J)/dt.
    """

    detected: bool
    threshold: float
    t_detect: float | None = None
    t_threshold: float | None = None
    t_caustic: float | None = None
    min_jacobian: float | None = None
    position: list | None = None
    t_reached: float = 0.0
    history: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("detected", "threshold", "t_detect", "t_threshold",
                                              "t_caustic", "min_jacobian", "position", "t_reached")}


# --- deposition and field --------------------------------------------------------

def _cic_stencil(points: np.ndarray, grid: SpatialGrid):
    """Corner node indices (M, 2^d) and weights for multilinear CIC."""
    M, d = points.shape
    base = np.empty((M, d), dtype=np.int64)
    frac = np.empty((M, d))
    for k in range(d):
        s = (points[:, k] - grid.lower[k]) / grid.spacing[k]
        i0 = np.floor(s).astype(np.int64)
        if grid.periodic:
            frac[:, k] = s - i0
            base[:, k] = i0
        else:
            if np.any(s < 0) or np.any(s > grid.n[k] - 1):
                raise ResolutionError("marker outside the field grid; enlarge the grid extent")
            i0 = np.minimum(i0, grid.n[k] - 2)
            frac[:, k] = s - i0
            base[:, k] = i0
    corners = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T  # (2^d, d)
    idx = np.zeros((M, len(corners)), dtype=np.int64)
    wts = np.ones((M, len(corners)))
    stride = 1
    for k in reversed(range(d)):
        ik = base[:, k, None] + corners[None, :, k]
        if grid.periodic:
            ik = ik % grid.n[k]
        idx += ik * stride
        stride *= grid.n[k]
        wts *= np.where(corners[None, :, k] == 1, frac[:, k, None], 1 - frac[:, k, None])
    return idx, wts


def deposit_cic(cloud: EnsembleState, grid: SpatialGrid) -> np.ndarray:
    """Cloud-in-cell density on grid nodes (mass per volume), shape (P,).

    Uses ``np.bincount``, which sums in a fixed order.
    """
    idx, wts = _cic_stencil(cloud.positions, grid)
    P = int(np.prod(grid.n))
    mass = np.bincount(idx.ravel(), weights=(wts * cloud.weights[:, None]).ravel(), minlength=P)
    return mass / grid.cell_volume


def _kernel_offsets(grid: SpatialGrid):
    """Offset vectors for the convolution kernel (non-periodic: 2n-1 per axis)."""
    axes = []
    for k in range(grid.d):
        n, h = grid.n[k], grid.spacing[k]
        if grid.periodic:
            j = np.fft.ifftshift(np.arange(n) - n // 2)
        else:
            j = np.arange(-(n - 1), n)
        axes.append(j * h)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def self_consistent_field(rho, phi: TwoBodyPotential, grid: SpatialGrid, order: int = 1) -> ForceFieldCache:
    """E(x) = -int grad phi(x - y) rho(y) dy on ``grid``.

    ``rho`` is a cloud (deposited by CIC), a :class:`DensityField` on the
    same grid, or an array of nodal densities.
    """
    if phi.length_scale is not None and phi.length_scale < 2 * max(grid.spacing):
        raise ResolutionError(
            f"potential width {phi.length_scale} is below two grid spacings ({max(grid.spacing):.4g})",
            required=phi.length_scale / 2)
    if isinstance(rho, EnsembleState):
        dens = deposit_cic(rho, grid)
    elif isinstance(rho, DensityField):
        dens = rho.rho
    else:
        dens = np.asarray(rho, dtype=float).ravel()
    P = int(np.prod(grid.n))
    if phi.is_zero or phi.kind == "constant":
        return ForceFieldCache(grid, np.zeros((P, grid.d)), order)
    shape = grid.n
    r = _kernel_offsets(grid)
    K = -phi.gradient(r) * grid.cell_volume
    dens = dens.reshape(shape)
    E = np.empty((P, grid.d))
    for k in range(grid.d):
        if grid.periodic:
            Ek = np.real(np.fft.ifftn(np.fft.fftn(K[..., k]) * np.fft.fftn(dens)))
        else:
            Ek = signal.fftconvolve(dens, K[..., k], mode="valid")
        E[:, k] = Ek.ravel()
    return ForceFieldCache(grid, E, order)


# --- Vlasov ------------------------------------------------------------------

def _as_cloud(state) -> PhaseSpaceCloud:
    if isinstance(state, PhaseSpaceCloud):
        return state
    return PhaseSpaceCloud(state.positions, state.velocities, state.weights, state.t)


def vlasov_step(cloud, phi: TwoBodyPotential, grid: SpatialGrid, dt: float, order: int = 1,
                field: ForceFieldCache | None = None):
    """One kick-drift-kick step; the field is rebuilt after the drift.

    Returns ``(cloud, field)`` where ``field`` belongs to the new positions
    and can be passed to the next call.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    cloud = _as_cloud(cloud)
    if field is None:
        field = self_consistent_field(cloud, phi, grid, order)
    v = cloud.velocities + 0.5 * dt * field(cloud.positions)
    x = cloud.positions + dt * v
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise DivergenceError(f"non-finite marker at t={cloud.t + dt:.6g}", t=cloud.t + dt)
    mid = PhaseSpaceCloud(x, v, cloud.weights, cloud.t + dt)
    field = self_consistent_field(mid, phi, grid, order)
    v = v + 0.5 * dt * field(x)
    return PhaseSpaceCloud(x, v, cloud.weights, cloud.t + dt), field


def vlasov_evolve(cloud, phi: TwoBodyPotential, grid: SpatialGrid, t: float, dt: float,
                  order: int = 1) -> PhaseSpaceCloud:
    n = int(np.ceil(t / dt - 1e-9))
    h = t / n if n else dt
    cloud = _as_cloud(cloud)
    field = None
    for _ in range(n):
        cloud, field = vlasov_step(cloud, phi, grid, h, order, field)
    return cloud


def cloud_from_density(rho, phase, grid: SpatialGrid, mass_cutoff: float = 0.0) -> PhaseSpaceCloud:
    """Monokinetic cloud: one marker per grid node with trapezoid weights."""
    pts = grid.points()
    w = rho.pdf(pts) * grid.trapezoid_weights()
    keep = w > mass_cutoff
    w = w[keep]
    return PhaseSpaceCloud(pts[keep], phase.gradient(pts[keep]), w / w.sum())


def kinetic_moments(cloud: EnsembleState, phi: TwoBodyPotential) -> dict:
    """Mass, momentum and mean-field energy of a cloud (energy per unit mass)."""
    w = cloud.weights
    kin = 0.5 * float(np.sum(w * np.sum(cloud.velocities**2, axis=1)))
    pot = Interaction(phi).pair_energy(cloud.positions, w)
    return {"mass": float(w.sum()), "momentum": w @ cloud.velocities, "energy": kin + pot}


# --- hydro -------------------------------------------------------------------

def _markers_from_field(init: DensityField, mass_cutoff: float):
    grid = init.grid
    pts = grid.points()
    w_raw = init.rho * grid.trapezoid_weights()
    if abs(w_raw.sum() - 1.0) > 1e-8:
        raise ValueError(f"initial density mass {w_raw.sum():.12g} differs from 1 by more than 1e-8")
    keep = w_raw > mass_cutoff * w_raw.max()
    K0 = _velocity_gradient(init)[keep]
    sig = None
    if init.sigma is not None:
        sig = np.asarray(init.sigma, dtype=float).ravel()[keep]
    return pts[keep], init.u[keep], w_raw[keep] / w_raw[keep].sum(), init.rho[keep], K0, sig


def _reconstruct(grid: SpatialGrid, markers: Markers):
    pts = grid.points()
    X, rho_m, U = markers.positions, markers.rho, markers.velocities
    P = pts.shape[0]
    if grid.d == 1:
        order = np.argsort(X[:, 0])
        xs = X[order, 0]
        rho = np.zeros(P)
        u = np.zeros((P, 1))
        inside = (pts[:, 0] >= xs[0]) & (pts[:, 0] <= xs[-1])
        rho[inside] = CubicSpline(xs, rho_m[order])(pts[inside, 0])
        u[:, 0] = np.interp(pts[:, 0], xs, U[order, 0])
        u[inside, 0] = CubicSpline(xs, U[order, 0])(pts[inside, 0])
        sigma = None
        if markers.action is not None:
            sigma = np.interp(pts[:, 0], xs, markers.action[order])
        return np.maximum(rho, 0.0), u, sigma
    rho = griddata(X, rho_m, pts, method="linear", fill_value=0.0)
    u = np.stack([griddata(X, U[:, k], pts, method="linear", fill_value=0.0) for k in range(grid.d)], axis=1)
    return np.maximum(rho, 0.0), u, None


def _caustic_times(m: Markers, sig: np.ndarray, t: float, prev_min: float, prev_t: float, thr: float):
    det = m.det
    rate = m.det_rate
    i = int(np.argmin(np.where(sig, det, np.inf)))
    dmin = det[i]
    t_ext = t + dmin / (-rate[i]) if rate[i] < 0 else t
    if prev_min is not None and prev_min > dmin:
        t_thr = prev_t + (prev_min - thr) / (prev_min - dmin) * (t - prev_t)
    else:
        t_thr = t
    return i, float(dmin), float(t_thr), float(t_ext)


def hydro_lagrangian_solve(init: DensityField, phi: TwoBodyPotential, grid: SpatialGrid | None,
                           t: float, dt: float, threshold: float = 0.05, scheme: str = "yoshida4",
                           mass_cutoff: float = 1e-14, raise_on_caustic: bool = True,
                           threads: int = 1):
    """Pressureless Euler flow by Lagrangian markers.

    Markers start at the nodes of ``init.grid`` with trapezoid masses and
    carry (x, u, J, dJ/dt, action). The force -grad phi * rho is the
    direct weighted pair sum over markers. Jacobians follow
    J' = K, K' = -(Hess phi * rho)(x) J, integrated with the same
    symplectic splitting as positions.

    Parameters
    ----------
    grid : SpatialGrid or None
        Output grid for the reconstructed rho and u (defaults to init.grid).
    threshold : float
        Abort when min det J over markers with relative mass above
        ``mass_cutoff`` drops to this value.
    raise_on_caustic : bool
        If False, return the last state before the crossing instead of
        raising :class:`CausticError`.

    Returns
    -------
    (DensityField, CausticReport)
    """
    out_grid = grid or init.grid
    x0, u0, w, rho0, K0, sig0 = _markers_from_field(init, mass_cutoff)
    M, d = x0.shape
    inter = Interaction(phi, threads)
    X, U = x0.copy(), u0.copy()
    J = np.broadcast_to(np.eye(d), (M, d, d)).copy()
    K = K0
    S = None if sig0 is None else sig0.copy()
    significant = np.ones(M, dtype=bool)
    n = int(np.ceil(t / dt - 1e-9))
    h = t / n if n else dt
    A = inter.accel(X, w)
    H = inter.hessian_sum(X, w)
    V = inter.potential_sum(X, w) if S is not None else None
    report = CausticReport(False, threshold)
    prev = (None, 0.0)

    def markers():
        return Markers(x0, X, U, w, rho0, J, K, S)

    last = markers()
    for step in range(1, n + 1):
        for c in SCHEMES[scheme]:
            hc = c * h
            U = U + 0.5 * hc * A
            K = K - 0.5 * hc * np.einsum("mab,mbc->mac", H, J)
            X = X + hc * U
            J = J + hc * K
            if S is not None:
                Vn = inter.potential_sum(X, w)
                S = S + hc * (0.5 * np.sum(U * U, axis=1) - 0.5 * (V + Vn))
                V = Vn
            A = inter.accel(X, w)
            H = inter.hessian_sum(X, w)
            U = U + 0.5 * hc * A
            K = K - 0.5 * hc * np.einsum("mab,mbc->mac", H, J)
        tnow = step * h
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(J))):
            raise DivergenceError(f"non-finite marker state at t={tnow:.6g}", t=tnow)
        cur = markers()
        det = cur.det
        dmin = float(np.min(det[significant]))
        if dmin <= threshold:
            i, dmin, t_thr, t_ext = _caustic_times(cur, significant, tnow, prev[0], prev[1], threshold)
            report = CausticReport(True, threshold, tnow, t_thr, t_ext, dmin, X[i].tolist(), tnow)
            field_prev = _field_from_markers(out_grid, last, tnow - h)
            if raise_on_caustic:
                raise CausticError(f"caustic: det J = {dmin:.4g} <= {threshold} at t = {tnow:.6g} "
                                   f"(extrapolated caustic time {t_ext:.6g})", report, field_prev)
            return field_prev, report
        prev = (dmin, tnow)
        last = cur
    report.t_reached = float(n * h)
    report.min_jacobian = float(np.min(last.det[significant]))
    return _field_from_markers(out_grid, last, float(n * h)), report


def _velocity_gradient(init: DensityField) -> np.ndarray:
    """grad u on the grid; exact when the field was built from a phase."""
    d = init.grid.d
    if init.velocity_gradient is not None:
        return np.asarray(init.velocity_gradient, dtype=float).reshape(-1, d, d)
    U = init.u.reshape(tuple(init.grid.n) + (d,))
    axes = tuple(range(d))
    grads = np.gradient(U, *init.grid.spacing, axis=axes, edge_order=2)
    if d == 1:
        grads = [grads]
    # G[..., a, b] = d u_a / d x_b
    return np.stack(grads, axis=-1).reshape(-1, d, d)


def _field_from_markers(grid, m: Markers, t: float) -> DensityField:
    rho, u, sigma = _reconstruct(grid, m)
    return DensityField(grid, rho, u, t, sigma, m)


def find_caustic(init: DensityField, phi: TwoBodyPotential, dt: float, t_max: float,
                 threshold: float = 0.05, scheme: str = "yoshida4", threads: int = 1) -> CausticReport:
    """Run the hydro flow until the Jacobian monitor trips or t_max is reached."""
    _, rep = hydro_lagrangian_solve(init, phi, None, t_max, dt, threshold, scheme,
                                    raise_on_caustic=False, threads=threads)
    return rep


def monokinetic_pairing(field: DensityField, F, method: str = "auto") -> float:
    """int rho(x, t) F(x, u(x, t)) dx.

    ``method="lagrangian"`` sums sum_m w_m F(x_m(t), u_m(t)) over markers,
    which is the exact push-forward of the initial quadrature;
    ``method="grid"`` integrates the reconstruction on the grid.
    """
    if method == "auto":
        method = "lagrangian" if field.markers is not None else "grid"
    if method == "lagrangian":
        m = field.markers
        if m is None:
            raise ValueError("field has no markers")
        return float(np.sum(m.weights * F(m.positions, m.velocities)))
    pts = field.grid.points()
    return float(np.sum(field.rho * field.grid.trapezoid_weights() * F(pts, field.u)))
