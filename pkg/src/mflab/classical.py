"""Classical mean-field N-particle dynamics and its variational system.

Particles carry weights w_i (1/N for the equal-mass system). The equations
of motion are

    x_i' = v_i,    v_i' = -sum_j w_j grad phi(x_i - x_j),

which is the mean-field Hamiltonian flow for w_i = 1/N. All arrays have
shape (N, d).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .core.potentials import TwoBodyPotential
from .errors import DivergenceError

_C1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_C0 = 1.0 - 2.0 * _C1
SCHEMES = {"verlet": (1.0,), "yoshida4": (_C1, _C0, _C1)}


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """Positions, velocities and weights of N particles at time t.

    Also serves as the empirical measure sum_i w_i delta(x_i, v_i).
    """

    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray = None
    t: float = 0.0

    def __post_init__(self):
        x = np.ascontiguousarray(self.positions, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        v = np.ascontiguousarray(self.velocities, dtype=float).reshape(x.shape)
        w = self.weights
        w = np.full(x.shape[0], 1.0 / x.shape[0]) if w is None else np.ascontiguousarray(w, dtype=float)
        if w.shape != (x.shape[0],):
            raise ValueError("weights must have one entry per particle")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DivergenceError("non-finite particle coordinates", t=self.t)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def momentum(self) -> np.ndarray:
        return self.weights @ self.velocities


@dataclass
class FlowResult:
    state: EnsembleState
    times: np.ndarray
    energies: np.ndarray
    steps: int
    dt: float
    scheme: str = "verlet"

    @property
    def energy_drift(self) -> np.ndarray:
        """Relative drift |E(t) - E(0)| / |E(0)| at each output time."""
        e0 = self.energies[0]
        return np.abs(self.energies - e0) / (abs(e0) if e0 != 0 else 1.0)


@dataclass
class SensitivityBlocks:
    """Derivative blocks for particles ``indices``.

    ``position[a, b]`` is the d x d block d x_{i_a}(t) / d x_{i_b}(0) and
    ``momentum[a, b]`` the corresponding velocity block, both taken along
    the monokinetic initial manifold v = grad sigma(x).
    """

    indices: np.ndarray
    position: np.ndarray
    momentum: np.ndarray
    N: int
    t: float
    meta: dict = field(default_factory=dict)

    def magnitudes(self) -> np.ndarray:
        """|dx_i/dx_j| + |dp_i/dx_j| per pair (spectral norms), shape (k, k)."""
        nx = np.linalg.norm(self.position, ord=2, axis=(-2, -1))
        nv = np.linalg.norm(self.momentum, ord=2, axis=(-2, -1))
        return nx + nv

    def momentum_magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.momentum, ord=2, axis=(-2, -1))

    def diagonal_max(self, which: str = "both") -> float:
        m = self._mags(which)
        return float(np.max(np.diag(m)))

    def offdiagonal_max(self, which: str = "both") -> float:
        m = self._mags(which)
        k = m.shape[0]
        if k < 2:
            return 0.0
        return float(np.max(m[~np.eye(k, dtype=bool)]))

    def _mags(self, which):
        if which == "both":
            return self.magnitudes()
        if which == "momentum":
            return self.momentum_magnitudes()
        if which == "position":
            return np.linalg.norm(self.position, ord=2, axis=(-2, -1))
        raise ValueError(which)


@dataclass
class JacobianBounds:
    diagonal_dets: np.ndarray
    phase_space_det: float
    t: float
    threshold: float = 0.05

    @property
    def min(self) -> float:
        return float(np.min(self.diagonal_dets))

    @property
    def max(self) -> float:
        return float(np.max(self.diagonal_dets))

    @property
    def caustic(self) -> bool:
        return self.min <= self.threshold


# --- pair sums ---------------------------------------------------------------

class Interaction:
    """Pair-sum evaluator bound to a potential.

    Gaussian potentials use compiled kernels; other potentials fall back to
    numpy row blocks. ``threads > 1`` selects the row-parallel kernel.
    """

    def __init__(self, phi: TwoBodyPotential, threads: int = 1, block: int = 512):
        self.phi = phi
        self.threads = int(threads)
        self.block = block
        self._gauss = phi.kind == "gaussian"
        if self._gauss:
            self._amp = phi.params["amplitude"]
            self._inv_w2 = 1.0 / phi.params["width"] ** 2

    def accel(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.phi.is_zero or self.phi.kind == "constant":
            return np.zeros_like(x)
        if self._gauss:
            if self.threads > 1:
                return _kernels.gauss_accel_parallel(x, w, self._amp, self._inv_w2)
            return _kernels.gauss_accel_serial(x, w, self._amp, self._inv_w2)
        out = np.empty_like(x)
        for i0 in range(0, x.shape[0], self.block):
            r = x[i0:i0 + self.block, None, :] - x[None, :, :]
            out[i0:i0 + self.block] = -np.einsum("ijk,j->ik", self.phi.gradient(r), w)
        return out

    def pair_energy(self, x: np.ndarray, w: np.ndarray) -> float:
        """sum_{i<j} w_i w_j phi(x_i - x_j)."""
        if self._gauss:
            return float(_kernels.gauss_pair_energy(x, w, self._amp, self._inv_w2))
        tot = 0.0
        for i0 in range(0, x.shape[0], self.block):
            r = x[i0:i0 + self.block, None, :] - x[None, :, :]
            vals = self.phi.value(r) * w[None, :]
            rows = np.arange(i0, min(i0 + self.block, x.shape[0]))
            mask = np.arange(x.shape[0])[None, :] > rows[:, None]
            tot += float(np.sum(w[rows] * np.sum(vals * mask, axis=1)))
        return tot

    def potential_sum(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """V_i = sum_k w_k phi(x_i - x_k), shape (N,)."""
        if self._gauss:
            return _kernels.gauss_potential_sum(x, w, self._amp, self._inv_w2)
        out = np.empty(x.shape[0])
        for i0 in range(0, x.shape[0], self.block):
            r = x[i0:i0 + self.block, None, :] - x[None, :, :]
            out[i0:i0 + self.block] = self.phi.value(r) @ w
        return out

    def hessian_sum(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """S_i = sum_k w_k Hess phi(x_i - x_k), shape (N, d, d)."""
        if self._gauss:
            return _kernels.gauss_hessian_sum(x, w, self._amp, self._inv_w2)
        out = np.empty(x.shape + (x.shape[1],))
        for i0 in range(0, x.shape[0], self.block):
            r = x[i0:i0 + self.block, None, :] - x[None, :, :]
            out[i0:i0 + self.block] = np.einsum("ijab,j->iab", self.phi.hessian(r), w)
        return out

    def tangent_operator(self, x: np.ndarray, w: np.ndarray):
        """Return a function dX -> d(accel) for columns dX of shape (N, d, m).

        (L dX)_i = -S_i dX_i + sum_k w_k H_ik dX_k.
        """
        H = self.phi.hessian(x[:, None, :] - x[None, :, :])
        S = np.einsum("ikab,k->iab", H, w)
        Hw = H * w[None, :, None, None]

        def apply(dX):
            return -np.einsum("iab,ibm->iam", S, dX) + np.einsum("ikab,kbm->iam", Hw, dX)

        return apply


def _check_finite(x, v, t):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise DivergenceError(f"non-finite coordinates at t={t:.6g}", t=t)


# --- operations ----------------------------------------------------------------

def mean_field_force(state: EnsembleState, phi: TwoBodyPotential, threads: int = 1) -> np.ndarray:
    """Accelerations a_i = -sum_j w_j grad phi(x_i - x_j), shape (N, d)."""
    a = Interaction(phi, threads).accel(state.positions, state.weights)
    _check_finite(a, a, state.t)
    return a


def total_energy(state: EnsembleState, phi: TwoBodyPotential) -> float:
    """N [sum_i w_i |v_i|^2 / 2 + sum_{i<j} w_i w_j phi(x_i - x_j)].

    For w = 1/N this is sum |v_i|^2/2 + (1/N) sum_{i<j} phi.
    """
    w = state.weights
    kin = 0.5 * float(np.sum(w * np.sum(state.velocities**2, axis=1)))
    pot = Interaction(phi).pair_energy(state.positions, w)
    return state.N * (kin + pot)


def _kdk(x, v, a, w, h, inter):
    v = v + 0.5 * h * a
    x = x + h * v
    a = inter.accel(x, w)
    v = v + 0.5 * h * a
    return x, v, a


def step_symplectic(state: EnsembleState, phi: TwoBodyPotential, dt: float,
                    scheme: str = "verlet", threads: int = 1) -> EnsembleState:
    """One velocity-Verlet (kick-drift-kick) step, or a Yoshida composition.

    A negative ``dt`` integrates backwards; the scheme is time-reversible.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    inter = Interaction(phi, threads)
    x, v, w = state.positions, state.velocities, state.weights
    a = inter.accel(x, w)
    for c in SCHEMES[scheme]:
        x, v, a = _kdk(x, v, a, w, c * dt, inter)
    _check_finite(x, v, state.t + dt)
    return EnsembleState(x, v, w, state.t + dt)


def _n_steps(t, dt):
    if t < 0 or not dt > 0:
        raise ValueError("need t >= 0 and dt > 0")
    n = int(np.ceil(t / dt - 1e-9))
    return n, (t / n if n else dt)


def flow(state0: EnsembleState, phi: TwoBodyPotential, t: float, dt: float,
         scheme: str = "verlet", n_output: int = 10, threads: int = 1) -> FlowResult:
    """Apply the time-t flow map with steps of at most ``dt``.

    The step is shrunk to t / ceil(t / dt) so the final time is exact.
    Energy is recorded at ``n_output`` evenly spaced steps (plus t = 0).
    """
    n, h = _n_steps(t, dt)
    inter = Interaction(phi, threads)
    x, v, w = state0.positions.copy(), state0.velocities.copy(), state0.weights
    a = inter.accel(x, w)
    out_at = set(np.unique(np.linspace(0, n, max(n_output, 1) + 1).round().astype(int)).tolist())
    times, energies = [state0.t], [total_energy(state0, phi)]
    for s in range(1, n + 1):
        for c in SCHEMES[scheme]:
            x, v, a = _kdk(x, v, a, w, c * h, inter)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DivergenceError(f"non-finite coordinates at t={state0.t + s * h:.6g}", t=state0.t + s * h)
        if s in out_at:
            times.append(state0.t + s * h)
            energies.append(total_energy(EnsembleState(x, v, w, times[-1]), phi))
    final = EnsembleState(x, v, w, state0.t + t)
    return FlowResult(final, np.array(times), np.array(energies), n, h, scheme)


def empirical_pairing(state: EnsembleState, F) -> float:
    """<mu^N, F> = sum_i w_i F(x_i, v_i)."""
    return float(np.sum(state.weights * F(state.positions, state.velocities)))


def pairing_time_derivative(state: EnsembleState, phi: TwoBodyPotential, F) -> float:
    """Right side of the weak Vlasov identity for the empirical measure.

    d/dt <mu, F> = <mu, v . grad_x F> - <mu, (grad phi * mu) . grad_v F>.
    """
    a = mean_field_force(state, phi)
    gx, gv = F.gradient(state.positions, state.velocities)
    return float(np.sum(state.weights * (np.sum(state.velocities * gx, axis=1) + np.sum(a * gv, axis=1))))


def pair_marginal_pairing(state: EnsembleState, F1, F2) -> float:
    """Two-particle marginal <mu_2, F1 (x) F2> over distinct pairs.

    Uses sum_{i != j} w_i w_j F1(z_i) F2(z_j) / (1 - sum_i w_i^2), which is
    the second marginal of the symmetrized empirical law.
    """
    w = state.weights
    f1 = F1(state.positions, state.velocities)
    f2 = F2(state.positions, state.velocities)
    s = np.sum(w * f1) * np.sum(w * f2) - np.sum(w * w * f1 * f2)
    return float(s / (1.0 - np.sum(w * w)))


def monokinetic_init(rho, phase, N: int, mode: str = "quadrature",
                     rng: np.random.Generator | None = None) -> EnsembleState:
    """Particles on the graph v = grad sigma(x) with positions distributed by rho.

    ``mode="quadrature"`` uses deterministic equal-mass midpoint nodes;
    ``mode="monte-carlo"`` draws iid samples from ``rng``.
    """
    if abs(rho.normalization() - 1.0) > 1e-8:
        raise ValueError(f"density is not normalized: integral = {rho.normalization():.12g}")
    if mode == "quadrature":
        x, w = rho.quantile_nodes(N)
    elif mode in ("monte-carlo", "monte_carlo"):
        if rng is None:
            raise ValueError("monte-carlo mode needs an rng")
        x, w = rho.sample(N, rng), np.full(N, 1.0 / N)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    x = np.asarray(x, dtype=float).reshape(N, -1)
    return EnsembleState(x, phase.gradient(x), w / w.sum())


# --- variational system ------------------------------------------------------------

def propagate_tangent(state0: EnsembleState, phi: TwoBodyPotential, t: float, dt: float,
                      dX0: np.ndarray, dV0: np.ndarray, scheme: str = "verlet"):
    """Integrate the flow together with tangent columns (N, d, m).

    The tangent update is the exact derivative of the discrete map, so it
    agrees with finite differences of :func:`flow` to rounding.
    """
    n, h = _n_steps(t, dt)
    inter = Interaction(phi)
    x, v, w = state0.positions.copy(), state0.velocities.copy(), state0.weights
    dX, dV = np.array(dX0, dtype=float), np.array(dV0, dtype=float)
    a = inter.accel(x, w)
    L = inter.tangent_operator(x, w)
    dA = L(dX)
    for s in range(n):
        for c in SCHEMES[scheme]:
            hc = c * h
            v = v + 0.5 * hc * a
            dV = dV + 0.5 * hc * dA
            x = x + hc * v
            dX = dX + hc * dV
            a = inter.accel(x, w)
            L = inter.tangent_operator(x, w)
            dA = L(dX)
            v = v + 0.5 * hc * a
            dV = dV + 0.5 * hc * dA
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(dX))):
            raise DivergenceError(f"non-finite tangent at t={state0.t + (s + 1) * h:.6g}")
    return EnsembleState(x, v, w, state0.t + t), dX, dV


def _hessian_at(sigma_hessian, x, d):
    if sigma_hessian is None:
        return np.zeros((x.shape[0], d, d))
    H = np.asarray(sigma_hessian(x), dtype=float)
    return H.reshape(x.shape[0], d, d)


def _index_columns(state, indices, sigma_hessian):
    N, d = state.N, state.d
    idx = np.asarray(indices, dtype=int)
    m = len(idx) * d
    dX0 = np.zeros((N, d, m))
    dV0 = np.zeros((N, d, m))
    Hs = _hessian_at(sigma_hessian, state.positions, d)
    for a, j in enumerate(idx):
        for g in range(d):
            dX0[j, g, a * d + g] = 1.0
            dV0[j, :, a * d + g] = Hs[j, :, g]
    return idx, dX0, dV0


def _blocks(cols, idx, d):
    k = len(idx)
    sub = cols[idx]  # (k, d, k*d)
    return sub.reshape(k, d, k, d).transpose(0, 2, 1, 3)


def sensitivity_blocks(state0: EnsembleState, phi: TwoBodyPotential, sigma_hessian, t: float,
                       indices, dt: float = 0.01, scheme: str = "verlet") -> SensitivityBlocks:
    """Blocks dx_i(t)/dx_j(0) and dp_i(t)/dx_j(0) for i, j in ``indices``.

    Initial velocities are grad sigma(x), so d v_j(0) / d x_j = Hess sigma(x_j);
    ``sigma_hessian`` maps (N, d) points to (N, d, d) Hessians.
    """
    idx, dX0, dV0 = _index_columns(state0, indices, sigma_hessian)
    if t == 0:
        dX, dV = dX0, dV0
    else:
        _, dX, dV = propagate_tangent(state0, phi, t, dt, dX0, dV0, scheme)
    d = state0.d
    return SensitivityBlocks(idx, _blocks(dX, idx, d), _blocks(dV, idx, d), state0.N, t)


def pullback_momentum_sensitivity(state0: EnsembleState, phi: TwoBodyPotential, t: float, s: float,
                                  phase, indices, dt: float = 0.01,
                                  scheme: str = "verlet") -> SensitivityBlocks:
    """Derivative of P_i(Phi^(t-s)(X), t) with respect to x_j.

    P(Y, t) is the velocity at time t of the monokinetic flow started at
    positions Y with velocities grad sigma(Y). The chain rule composes the
    position tangent of the first leg with the full tangent of the second.
    ``position`` holds the blocks of the intermediate map Y = Phi^(t-s)(X).
    """
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    Hs = phase.hessian
    idx, dX0, dV0 = _index_columns(state0, indices, Hs)
    if t - s > 0:
        mid, B, _ = propagate_tangent(state0, phi, t - s, dt, dX0, dV0, scheme)
    else:
        mid, B = state0, dX0
    Y = mid.positions
    start = EnsembleState(Y, phase.gradient(Y), state0.weights, 0.0)
    HY = _hessian_at(Hs, Y, state0.d)
    dV1 = np.einsum("iab,ibm->iam", HY, B)
    if t > 0:
        _, _, dV = propagate_tangent(start, phi, t, dt, B, dV1, scheme)
    else:
        dV = dV1
    d = state0.d
    return SensitivityBlocks(idx, _blocks(B, idx, d), _blocks(dV, idx, d), state0.N, t, {"s": s})


def flow_jacobian_bounds(state0: EnsembleState, phi: TwoBodyPotential, t: float,
                         sigma_hessian=None, dt: float = 0.01, scheme: str = "verlet",
                         threshold: float = 0.05, max_dim: int = 4096) -> JacobianBounds:
    """Per-particle determinants of d x_i(t)/d x_i(0) and the phase-space det.

    The full 2Nd x 2Nd tangent is integrated from the identity; diagonal
    blocks follow the monokinetic initial manifold. ``caustic`` is set when
    a diagonal determinant falls to ``threshold``.
    """
    N, d = state0.N, state0.d
    D = N * d
    if 2 * D > max_dim:
        raise ValueError(f"full tangent of dimension {2 * D} exceeds max_dim={max_dim}")
    eye = np.eye(D).reshape(N, d, D)
    zero = np.zeros((N, d, D))
    dX0 = np.concatenate([eye, zero], axis=2)
    dV0 = np.concatenate([zero, eye], axis=2)
    if t == 0:
        dX, dV = dX0, dV0
    else:
        _, dX, dV = propagate_tangent(state0, phi, t, dt, dX0, dV0, scheme)
    full = np.concatenate([dX.reshape(D, 2 * D), dV.reshape(D, 2 * D)], axis=0)
    sign, logdet = np.linalg.slogdet(full)
    Xx = dX[:, :, :D].reshape(N, d, N, d)
    Xv = dX[:, :, D:].reshape(N, d, N, d)
    Hs = _hessian_at(sigma_hessian, state0.positions, d)
    dets = np.empty(N)
    for i in range(N):
        # monokinetic column: dX/dx_i + dX/dv_i Hess sigma(x_i)
        blk = Xx[i, :, i, :] + Xv[i, :, i, :] @ Hs[i]
        dets[i] = np.linalg.det(blk)
    return JacobianBounds(dets, float(sign * np.exp(logdet)), t, threshold)


def with_time(state: EnsembleState, t: float) -> EnsembleState:
    return replace(state, t=t)
