"""One-particle quantum side: WKB data, Hartree flow, Wigner transforms."""
from .grenier import (GrenierSolver, WKBFields, grenier_evolve, grenier_system_step,
                      h1_norm_track)
from .hartree import HartreePropagator, free_gaussian_exact, hartree_evolve, hartree_step
from .mixed import (MixedWKBFamily, gaussian_mixed_family, mixed_limit_pairing, mixed_pairing,
                    mixed_wigner)
from .wavefield import WaveField, required_points, wkb_initialize
from .wigner import (WignerGrid, correlation_pairing, momentum_density, panel_wigner_pairings,
                     required_wigner_points, suggest_velocity_grid, weak_pair_wigner,
                     wigner_pairing, wigner_transform)

__all__ = [
    "GrenierSolver", "WKBFields", "grenier_evolve", "grenier_system_step", "h1_norm_track",
    "HartreePropagator", "free_gaussian_exact", "hartree_evolve", "hartree_step",
    "MixedWKBFamily", "gaussian_mixed_family", "mixed_limit_pairing", "mixed_pairing", "mixed_wigner",
    "WaveField", "required_points", "wkb_initialize",
    "WignerGrid", "correlation_pairing", "momentum_density", "panel_wigner_pairings",
    "required_wigner_points", "suggest_velocity_grid", "weak_pair_wigner", "wigner_pairing",
    "wigner_transform",
]
