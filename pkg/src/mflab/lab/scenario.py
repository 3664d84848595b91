"""Physical set-up shared by the experiments: potential, initial data and hydro reference."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..core import (GaussianAmplitude, GaussianDensity, SpatialGrid, default_test_panel, make_phase,
                    make_potential)
from ..kinetic import DensityField, find_caustic, hydro_lagrangian_solve, monokinetic_pairing


@dataclass(eq=False)
class ReferenceSolution:
    """Hydro reference at time t with its self-convergence check.

    ``pairings`` are panel pairings at reference resolution and ``refined``
    the same pairings with markers and dt both halved in spacing.
    """

    t: float
    field: DensityField
    pairings: np.ndarray
    refined: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def self_convergence(self) -> float:
        return float(np.max(np.abs(self.pairings - self.refined)))

    def is_converged(self, smallest_error: float, fraction: float = 0.1) -> bool:
        return self.self_convergence < fraction * smallest_error


class Scenario:
    """Objects built from a :class:`~mflab.config.RunConfig`."""

    def __init__(self, cfg):
        self.cfg = cfg
        p = cfg.potential
        self.phi = make_potential(p.kind, p.amplitude, p.width)
        ph = cfg.phase
        self.phase = make_phase(ph.kind, 1, ph.amplitude, ph.wavenumber, ph.velocity, ph.curvature)
        self.amplitude = GaussianAmplitude(cfg.amplitude.width, chirp=cfg.amplitude.chirp)
        # |a|^2 = exp(-x^2 / width^2) / (sqrt(pi) width)
        self.density = GaussianDensity(cfg.amplitude.width / np.sqrt(2.0))
        self.panel = default_test_panel(1)
        self._refs = {}

    # grids ---------------------------------------------------------------------
    def reference_grid(self, refine: int = 1) -> SpatialGrid:
        s = self.cfg.solver
        n = refine * (s.reference_markers - 1) + 1
        return SpatialGrid(1, (-s.reference_half_width,), (2 * s.reference_half_width,), (n,), False)

    def quantum_grid(self, n: int) -> SpatialGrid:
        return SpatialGrid.centered(self.cfg.solver.domain_length, n)

    # hydro -----------------------------------------------------------------------
    def initial_field(self, refine: int = 1) -> DensityField:
        return DensityField.from_profiles(self.density, self.phase, self.reference_grid(refine))

    @cached_property
    def caustic(self):
        s = self.cfg.solver
        return find_caustic(self.initial_field(), self.phi, s.reference_dt, self.cfg.time.t_max_search,
                            s.caustic_threshold, threads=self.cfg.threads)

    @property
    def caustic_time(self) -> float:
        rep = self.caustic
        return float(rep.t_caustic) if rep.detected else float("inf")

    @property
    def target_time(self) -> float:
        tm = self.cfg.time
        if tm.t_final is not None:
            return float(tm.t_final)
        tc = self.caustic_time
        if not np.isfinite(tc):
            raise ValueError("no caustic found within t_max_search; set time.t_final")
        return tm.caustic_fraction * tc

    def panel_pairings(self, field: DensityField) -> np.ndarray:
        return np.array([monokinetic_pairing(field, F) for F in self.panel])

    def limit_pairings_t0(self, x: np.ndarray, dx: float) -> np.ndarray:
        """int rho F(x, grad sigma) dx on a uniform periodic grid (initial data)."""
        pts = x[:, None]
        rho = self.density.pdf(pts)
        u = self.phase.gradient(pts)
        return np.array([float(np.sum(rho * F(pts, u)) * dx) for F in self.panel])

    def reference(self, t: float | None = None) -> ReferenceSolution:
        t = self.target_time if t is None else float(t)
        if t in self._refs:
            return self._refs[t]
        s = self.cfg.solver
        thr = s.caustic_threshold
        f1, _ = hydro_lagrangian_solve(self.initial_field(), self.phi, None, t, s.reference_dt, thr,
                                       threads=self.cfg.threads)
        f2, _ = hydro_lagrangian_solve(self.initial_field(2), self.phi, None, t, 0.5 * s.reference_dt, thr,
                                       threads=self.cfg.threads)
        prov = {"solver": "hydro_lagrangian", "scheme": "yoshida4", "markers": s.reference_markers,
                "half_width": s.reference_half_width, "dt": s.reference_dt, "t": t}
        ref = ReferenceSolution(t, f1, self.panel_pairings(f1), self.panel_pairings(f2), prov)
        self._refs[t] = ref
        return ref
