"""Mixed WKB states: superpositions over a compact set of momenta.

The density matrix is rho(x, y) = int dw exp(i w (x - y) / h) a(x; w) conj(a(y; w)),
approximated by a fixed quadrature in w. Its Wigner function tends to
|a(x, v)|^2 as h -> 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.grids import VelocityGrid
from .wigner import WignerGrid, check_aliasing, correlation_pairing, wigner_values


@dataclass(eq=False)
class MixedWKBFamily:
    """a(x; w_k) on a periodic grid for quadrature nodes w_k with weights q_k."""

    grid: object
    nodes: np.ndarray
    weights: np.ndarray
    amplitudes: np.ndarray  # (K, n)

    def __post_init__(self):
        self.nodes = np.atleast_1d(np.asarray(self.nodes, dtype=float))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        self.amplitudes = np.atleast_2d(np.asarray(self.amplitudes, dtype=complex))
        if self.amplitudes.shape != (len(self.nodes), self.grid.n[0]):
            raise ValueError("amplitudes must have shape (n_nodes, n_x)")
        if abs(self.total_mass() - 1.0) > 1e-8:
            raise ValueError(f"int int |a|^2 = {self.total_mass():.12g}, expected 1 to 1e-8")

    def total_mass(self) -> float:
        dx = self.grid.spacing[0]
        return float(np.sum(self.weights * np.sum(np.abs(self.amplitudes) ** 2, axis=1)) * dx)

    def states(self, h: float) -> np.ndarray:
        """psi_k(x) = a(x; w_k) exp(i w_k x / h), shape (K, n)."""
        x = self.grid.x
        return self.amplitudes * np.exp(1j * np.outer(self.nodes, x) / h)

    def max_speed(self) -> float:
        return float(np.max(np.abs(self.nodes)))


def gaussian_mixed_family(grid, x_width: float = 1.0, w_center: float = 0.2, w_width: float = 0.3,
                          n_nodes: int = 24, support: float = 5.0, chirp: float = 1.0) -> MixedWKBFamily:
    """a(x; w) = sqrt(rho(x) g(w)) exp(i chirp x^2 / 2).

    rho is the Gaussian |a|^2 with amplitude width ``x_width``; g is a
    Gaussian in w truncated to w_center +- support * w_width and normalized
    under the Gauss-Legendre rule with ``n_nodes`` nodes.
    """
    t, q = np.polynomial.legendre.leggauss(n_nodes)
    half = support * w_width
    nodes = w_center + half * t
    weights = half * q
    g = np.exp(-0.5 * ((nodes - w_center) / w_width) ** 2)
    g = g / np.sum(weights * g)
    x = grid.x
    dx = grid.spacing[0]
    rho = np.exp(-(x / x_width) ** 2)
    rho = rho / (np.sum(rho) * dx)
    amp = np.sqrt(rho)[None, :] * np.sqrt(g)[:, None] * np.exp(0.5j * chirp * x * x)[None, :]
    return MixedWKBFamily(grid, nodes, weights, amp)


def mixed_wigner(family: MixedWKBFamily, h: float, vgrid: VelocityGrid, check: bool = True) -> WignerGrid:
    """Wigner function of the mixed state: sum_k q_k W[a_k exp(i w_k x / h)]."""
    dx = family.grid.spacing[0]
    total = None
    resid = 0.0
    for qk, psi in zip(family.weights, family.states(h)):
        vals, r = wigner_values(psi, dx, h, vgrid)
        total = qk * vals if total is None else total + qk * vals
        resid = max(resid, r)
    f = WignerGrid(family.grid.x, vgrid, total, h, dx, resid)
    if check:
        check_aliasing(f.v_marginal(), vgrid.dv)
    return f


def mixed_pairing(family: MixedWKBFamily, h: float, F) -> float:
    """<f_rho, F> by correlation-domain pairing of each node."""
    x = family.grid.x
    dx = family.grid.spacing[0]
    return float(sum(qk * correlation_pairing(psi, x, dx, h, F)
                     for qk, psi in zip(family.weights, family.states(h))))


def mixed_limit_pairing(family: MixedWKBFamily, F) -> float:
    """int int |a(x, v)|^2 F(x, v) dx dv under the same w quadrature."""
    x = family.grid.x[:, None]
    dx = family.grid.spacing[0]
    tot = 0.0
    for qk, wk, ak in zip(family.weights, family.nodes, family.amplitudes):
        tot += qk * float(np.sum(np.abs(ak) ** 2 * F(x, np.full_like(x, wk))) * dx)
    return tot
