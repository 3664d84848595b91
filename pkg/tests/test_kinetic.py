import numpy as np
import pytest

from mflab import classical as C
from mflab import kinetic as K
from mflab.core import (GaussianDensity, QuadraticPhase, SinePhase, SpatialGrid, ZeroPhase,
                        LinearPhase, constant_function, default_test_panel,
                        make_constant_potential, make_gaussian_potential, make_zero_potential)
from mflab.errors import CausticError, ResolutionError
from mflab.lab.fitting import fit_slope

GAUSS = make_gaussian_potential(1.0, 1.0)
RHO = GaussianDensity(np.sqrt(0.5))


def field_grid(n=513, length=16.0):
    return SpatialGrid.centered(length, n, periodic=False)


def test_constant_potential_has_no_field():
    g = field_grid()
    cloud = K.cloud_from_density(RHO, ZeroPhase(), g)
    E = K.self_consistent_field(cloud, make_constant_potential(3.0), g)
    assert np.all(E.E == 0)


def test_narrow_density_gives_kernel_gradient():
    g = field_grid(801)
    s = 4 * g.spacing[0]
    rho = GaussianDensity(s)
    E = K.self_consistent_field(rho.pdf(g.points()), GAUSS, g)
    x = g.points()
    err = np.max(np.abs(E.E + GAUSS.gradient(x)))
    assert err <= 0.01 * GAUSS.bounds[1]


def test_field_odd_for_even_density():
    g = field_grid()
    E = K.self_consistent_field(RHO.pdf(g.points()), GAUSS, g)
    e = E.E[:, 0]
    assert np.max(np.abs(e + e[::-1])) <= 1e-12
    assert abs(E(np.array([[0.0]]))[0, 0]) <= 1e-10


def test_field_rejects_coarse_grid():
    g = SpatialGrid.centered(16.0, 17, periodic=False)
    with pytest.raises(ResolutionError):
        K.self_consistent_field(RHO.pdf(g.points()), make_gaussian_potential(1.0, 0.5), g)


def test_field_2d_matches_direct_sum():
    g = SpatialGrid.centered(12.0, 65, d=2, periodic=False)
    phi = make_gaussian_potential(1.0, 1.0, 2)
    rho = GaussianDensity(0.8, d=2)
    dens = rho.pdf(g.points())
    E = K.self_consistent_field(dens, phi, g)
    pts = g.points()
    probe = [100, 2000, 2112, 3000]
    for p in probe:
        direct = -np.sum(phi.gradient(pts[p] - pts) * (dens * g.cell_volume)[:, None], axis=0)
        assert np.allclose(E.E[p], direct, atol=1e-12)


def test_cubic_gather_close_to_linear():
    g = field_grid()
    E = K.self_consistent_field(RHO.pdf(g.points()), GAUSS, g)
    E3 = K.ForceFieldCache(g, E.E, order=3)
    q = np.linspace(-3, 3, 37)[:, None]
    assert np.max(np.abs(E(q) - E3(q))) < 1e-3


def test_free_streaming_cloud(rng):
    g = field_grid()
    cloud = K.PhaseSpaceCloud(rng.normal(0, 1, (50, 1)), rng.normal(0, 0.3, (50, 1)))
    out = K.vlasov_evolve(cloud, make_zero_potential(), g, 2.0, 0.1)
    assert np.allclose(out.positions, cloud.positions + 2.0 * cloud.velocities, atol=1e-13)
    for F in default_test_panel(1):
        assert C.empirical_pairing(out, F) == pytest.approx(
            np.sum(cloud.weights * F(cloud.positions + 2.0 * cloud.velocities, cloud.velocities)))


def test_single_marker_moves_straight():
    g = field_grid()
    cloud = K.PhaseSpaceCloud(np.array([[0.123]]), np.array([[0.4]]))
    out = K.vlasov_evolve(cloud, GAUSS, g, 1.0, 0.05)
    assert out.positions[0, 0] == pytest.approx(0.523, abs=1e-13)
    assert out.velocities[0, 0] == pytest.approx(0.4, abs=1e-13)


def test_vlasov_keeps_weights_and_conserves(rng):
    g = field_grid()
    w = rng.random(400)
    cloud = K.PhaseSpaceCloud(rng.normal(0, 0.7, (400, 1)), rng.normal(0, 0.3, (400, 1)), w / w.sum())
    m0 = K.kinetic_moments(cloud, GAUSS)
    energies = []
    for dt in (0.2, 0.1, 0.05, 0.025):
        out = K.vlasov_evolve(cloud, GAUSS, g, 1.0, dt)
        assert np.array_equal(out.weights, cloud.weights)
        m = K.kinetic_moments(out, GAUSS)
        assert m["mass"] == m0["mass"]
        assert np.max(np.abs(m["momentum"] - m0["momentum"])) <= 1e-14
        energies.append(m["energy"])
    # energy error = c dt^2 + deposition offset: successive differences shrink by 4
    diffs = np.abs(np.diff(energies))
    assert np.all((diffs[:-1] / diffs[1:] > 3.5) & (diffs[:-1] / diffs[1:] < 4.5))


def test_weak_vlasov_residual_cloud(rng):
    g = field_grid(1025)
    cloud = K.cloud_from_density(RHO, SinePhase(0.2), g, mass_cutoff=1e-16)
    dt = 1e-3
    fwd = K.vlasov_evolve(cloud, GAUSS, g, dt, dt)
    # backward step by symmetry: reverse velocities, step, reverse again
    rev = K.PhaseSpaceCloud(cloud.positions, -cloud.velocities, cloud.weights)
    b = K.vlasov_evolve(rev, GAUSS, g, dt, dt)
    bwd = K.PhaseSpaceCloud(b.positions, -b.velocities, b.weights)
    E_direct = C.mean_field_force(cloud, GAUSS)
    for F in default_test_panel(1):
        lhs = (C.empirical_pairing(fwd, F) - C.empirical_pairing(bwd, F)) / (2 * dt)
        gx, gv = F.gradient(cloud.positions, cloud.velocities)
        rhs = np.sum(cloud.weights * (cloud.velocities[:, 0] * gx[:, 0] + E_direct[:, 0] * gv[:, 0]))
        assert abs(lhs - rhs) <= 1e-5, F.name


def test_hydro_frozen_without_motion():
    g = field_grid(257)
    f0 = K.DensityField.from_profiles(RHO, ZeroPhase(), g)
    f, rep = K.hydro_lagrangian_solve(f0, make_zero_potential(), None, 1.5, 0.05)
    assert not rep.detected
    assert np.allclose(f.rho, f0.rho, atol=1e-12)
    assert np.all(f.u == 0)


def test_hydro_free_focusing_and_caustic():
    g = field_grid(257)
    f0 = K.DensityField.from_profiles(RHO, QuadraticPhase(-1.0), g)
    f, rep = K.hydro_lagrangian_solve(f0, make_zero_potential(), None, 0.5, 0.01)
    m = f.markers
    assert np.allclose(m.positions, m.x0 * 0.5, atol=1e-12)
    assert np.allclose(m.det, 0.5, atol=1e-12)
    with pytest.raises(CausticError) as exc:
        K.hydro_lagrangian_solve(f0, make_zero_potential(), None, 2.0, 0.01)
    r = exc.value.report
    assert r.detected and abs(r.t_caustic - 1.0) <= 0.02
    assert exc.value.field is not None


def test_hydro_mass_and_reconstruction():
    g = field_grid(513)
    f0 = K.DensityField.from_profiles(RHO, SinePhase(0.2), g)
    f, _ = K.hydro_lagrangian_solve(f0, GAUSS, None, 1.0, 0.01)
    assert abs(f.mass() - 1.0) <= 1e-12
    assert abs(f.grid_mass() - 1.0) <= 1e-8
    for F in default_test_panel(1):
        lag = K.monokinetic_pairing(f, F, "lagrangian")
        grd = K.monokinetic_pairing(f, F, "grid")
        assert abs(lag - grd) <= 1e-6, F.name


def test_monokinetic_pairing_examples():
    g = field_grid(257)
    f0 = K.DensityField.from_profiles(RHO, LinearPhase((0.3,)), g)
    assert K.monokinetic_pairing(f0, constant_function()) == pytest.approx(1.0, abs=1e-12)
    assert K.monokinetic_pairing(f0, lambda x, v: v[:, 0]) == pytest.approx(0.3, abs=1e-12)


def test_hydro_matches_vlasov_cloud():
    g = field_grid(513)
    for phase, t in ((ZeroPhase(), 0.5), (SinePhase(0.2), 1.3)):
        f0 = K.DensityField.from_profiles(RHO, phase, g)
        f, _ = K.hydro_lagrangian_solve(f0, GAUSS, None, t, 0.01)
        cloud = K.vlasov_evolve(K.cloud_from_density(RHO, phase, g, 1e-16), GAUSS, g, t, 0.01)
        gap = max(abs(K.monokinetic_pairing(f, F) - C.empirical_pairing(cloud, F))
                  for F in default_test_panel(1))
        assert gap < 1e-3


def test_classical_ensemble_converges_to_hydro():
    g = field_grid(257)
    phase = SinePhase(0.2)
    f, _ = K.hydro_lagrangian_solve(K.DensityField.from_profiles(RHO, phase, g), GAUSS, None, 1.0, 0.01)
    panel = default_test_panel(1)
    errs = []
    Ns = [32, 128, 512]
    for N in Ns:
        s = C.flow(C.monokinetic_init(RHO, phase, N), GAUSS, 1.0, 0.01, scheme="yoshida4").state
        errs.append(max(abs(C.empirical_pairing(s, F) - K.monokinetic_pairing(f, F)) for F in panel))
    assert errs[0] > errs[1] > errs[2]
    assert fit_slope(Ns, errs, min_points=3).slope <= -0.9


def test_continuity_in_initial_data():
    g = field_grid(257)
    panel = default_test_panel(1)
    base = K.cloud_from_density(RHO, SinePhase(0.2), g, 1e-16)
    ref = K.vlasov_evolve(base, GAUSS, g, 1.0, 0.02)
    changes = []
    for eps in (1e-3, 2e-3, 4e-3):
        pert = K.PhaseSpaceCloud(base.positions + eps, base.velocities + eps, base.weights)
        out = K.vlasov_evolve(pert, GAUSS, g, 1.0, 0.02)
        changes.append(max(abs(C.empirical_pairing(out, F) - C.empirical_pairing(ref, F)) for F in panel))
    L = changes[-1] / 4e-3
    assert all(c <= 1.05 * L * e for c, e in zip(changes, (1e-3, 2e-3, 4e-3)))
