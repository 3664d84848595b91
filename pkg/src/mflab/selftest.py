"""Fast example checks run by ``mflab self-test``.

Each check is a small closed-form or structural example; together they take
a few seconds and confirm the installation computes what it should.
"""
from __future__ import annotations

import time

import numpy as np

CHECKS = []


def _check(fn):
    CHECKS.append(fn)
    return fn


@_check
def fit_exact_power_law():
    from .lab.fitting import fit_slope
    N = np.array([8, 16, 32, 64])
    f = fit_slope(N, 3.0 / N)
    return abs(f.slope + 1) < 1e-12 and abs(f.intercept - np.log(3)) < 1e-12, f"slope {f.slope:.6f}"


@_check
def free_flow_is_exact():
    from .classical import EnsembleState, flow
    from .core import make_zero_potential
    rng = np.random.default_rng(0)
    s = EnsembleState(rng.normal(size=(20, 1)), rng.normal(size=(20, 1)))
    out = flow(s, make_zero_potential(), 1.7, 0.1, n_output=1).state
    err = float(np.max(np.abs(out.positions - s.positions - 1.7 * s.velocities)))
    return err < 1e-13, f"max deviation {err:.2e}"


@_check
def momentum_conserved():
    from .classical import EnsembleState, flow
    from .core import make_gaussian_potential
    rng = np.random.default_rng(1)
    s = EnsembleState(rng.normal(size=(64, 1)), rng.normal(size=(64, 1)))
    out = flow(s, make_gaussian_potential(1.0, 1.0), 1.0, 0.05, n_output=1).state
    err = float(np.max(np.abs(out.momentum() - s.momentum())))
    return err < 1e-13, f"momentum drift {err:.2e}"


@_check
def wigner_gaussian_closed_form():
    from .core import GaussianAmplitude, SpatialGrid, VelocityGrid, ZeroPhase
    from .semiclassical import wigner_transform, wkb_initialize
    psi = wkb_initialize(GaussianAmplitude(1.0), ZeroPhase(), 1.0, SpatialGrid.centered(30.0, 256))
    f = wigner_transform(psi, VelocityGrid(64, 8.0))
    X, V = np.meshgrid(psi.x, f.v, indexing="ij")
    err = float(np.max(np.abs(f.values - np.exp(-X**2 - V**2) / np.pi)))
    return err < 1e-8 and f.imag_residue < 1e-10, f"max error {err:.2e}"


@_check
def hartree_norm_preserved():
    from .core import GaussianAmplitude, SinePhase, SpatialGrid, make_gaussian_potential
    from .semiclassical import hartree_step, wkb_initialize
    psi = wkb_initialize(GaussianAmplitude(1.0, chirp=1.0), SinePhase(0.2), 0.1, SpatialGrid.centered(6 * np.pi, 512))
    out = hartree_step(psi, make_gaussian_potential(1.0, 1.0), 0.01)
    err = abs(out.norm() - psi.norm())
    return err < 1e-12, f"norm drift {err:.2e}"


@_check
def free_focusing_caustic():
    from .core import GaussianDensity, QuadraticPhase, SpatialGrid, make_zero_potential
    from .kinetic import DensityField, find_caustic
    g = SpatialGrid(1, (-8.0,), (16.0,), (257,), False)
    f0 = DensityField.from_profiles(GaussianDensity(np.sqrt(0.5)), QuadraticPhase(-1.0), g)
    rep = find_caustic(f0, make_zero_potential(), 0.005, 2.0)
    return rep.detected and abs(rep.t_caustic - 1.0) <= 0.02, f"t_caustic {rep.t_caustic:.6f}"


@_check
def cic_self_force_zero():
    from .core import SpatialGrid, make_gaussian_potential
    from .kinetic import PhaseSpaceCloud, vlasov_evolve
    g = SpatialGrid(1, (-8.0,), (16.0,), (257,), False)
    c = PhaseSpaceCloud(np.array([[0.123]]), np.array([[0.4]]))
    out = vlasov_evolve(c, make_gaussian_potential(1.0, 1.0), g, 1.0, 0.05)
    err = abs(out.positions[0, 0] - 0.523)
    return err < 1e-13, f"single marker deviation {err:.2e}"


@_check
def config_round_trip():
    import yaml
    from .config import config_from_dict
    a = config_from_dict({"experiment": "h_rate"})
    b = config_from_dict(yaml.safe_load(a.to_yaml()))
    return a.config_hash() == b.config_hash(), a.config_hash()[:12]


def run_self_test(echo=print) -> bool:
    ok = True
    for fn in CHECKS:
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as err:  # report and continue
            passed, detail = False, f"{type(err).__name__}: {err}"
        ok &= bool(passed)
        echo(f"{'PASS' if passed else 'FAIL'} {fn.__name__}: {detail} ({time.perf_counter() - t0:.2f}s)")
    return ok
