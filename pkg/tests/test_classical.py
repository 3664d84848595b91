import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from mflab import classical as C
from mflab.core import (GaussianDensity, LinearPhase, QuadraticPhase, SinePhase, ZeroPhase,
                        DensityFromPdf, default_test_panel, make_gaussian_potential,
                        make_harmonic_potential, make_zero_potential)
from mflab.errors import DivergenceError
from mflab.lab.fitting import fit_slope

GAUSS = make_gaussian_potential(1.0, 1.0)


def random_state(rng, N, d=1):
    return C.EnsembleState(rng.normal(0, 1, (N, d)), rng.normal(0, 0.5, (N, d)))


def test_state_validation():
    with pytest.raises(ValueError):
        C.EnsembleState(np.zeros((3, 1)), np.zeros((3, 1)), np.array([0.5, 0.5, 0.5]))
    with pytest.raises(DivergenceError):
        C.EnsembleState(np.array([[np.nan]]), np.zeros((1, 1)))


def test_force_zero_potential(rng):
    s = random_state(rng, 10, 2)
    assert np.all(C.mean_field_force(s, make_zero_potential(2)) == 0)


def test_force_harmonic_pair():
    s = C.EnsembleState(np.array([[1.0], [0.0]]), np.zeros((2, 1)))
    a = C.mean_field_force(s, make_harmonic_potential(1.0))
    assert a[:, 0] == pytest.approx([-0.5, 0.5])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_force_is_minus_energy_gradient(rng, d):
    s = random_state(rng, 8, d)
    a = C.mean_field_force(s, make_gaussian_potential(1.0, 0.8, d))
    phi = make_gaussian_potential(1.0, 0.8, d)
    # potential part of the Hamiltonian: (1/N) sum_{i<j} phi; force on x_i is N times -grad
    def U(x):
        return C.total_energy(C.EnsembleState(x, np.zeros_like(x)), phi)
    g = np.zeros_like(s.positions)
    h = 1e-5
    for i in range(8):
        for k in range(d):
            e = np.zeros_like(s.positions)
            e[i, k] = h
            g[i, k] = (U(s.positions + e) - U(s.positions - e)) / (2 * h)
    assert np.max(np.abs(a + g)) <= 1e-6 * np.max(np.abs(a))


def test_force_numpy_and_numba_agree(rng):
    s = random_state(rng, 50, 2)
    phi = make_gaussian_potential(0.9, 1.1, 2)
    a_fast = C.mean_field_force(s, phi)
    a_par = C.mean_field_force(s, phi, threads=2)
    generic = C.Interaction(phi)
    generic._gauss = False
    a_np = generic.accel(s.positions, s.weights)
    assert np.allclose(a_fast, a_np, atol=1e-14)
    assert np.allclose(a_par, a_np, atol=1e-14)
    assert C.Interaction(phi).pair_energy(s.positions, s.weights) == pytest.approx(
        generic.pair_energy(s.positions, s.weights), rel=1e-13)
    S = C.Interaction(phi).hessian_sum(s.positions, s.weights)
    generic_S = C.Interaction.hessian_sum(generic, s.positions, s.weights)
    assert np.allclose(S, generic_S, atol=1e-14)


def test_energy_examples():
    s = C.EnsembleState(np.zeros((3, 1)), np.zeros((3, 1)))
    assert C.total_energy(s, make_zero_potential()) == 0.0
    s = C.EnsembleState(np.array([[1.0], [0.0]]), np.array([[1.0], [0.0]]))
    assert C.total_energy(s, make_harmonic_potential(1.0)) == pytest.approx(0.75)


def test_free_streaming_step(rng):
    s = random_state(rng, 6, 2)
    s1 = C.step_symplectic(s, make_zero_potential(2), 0.3)
    assert np.array_equal(s1.velocities, s.velocities)
    assert np.allclose(s1.positions, s.positions + 0.3 * s.velocities, rtol=0, atol=1e-15)


def test_reversibility_and_momentum(rng):
    s = random_state(rng, 20)
    s1 = C.step_symplectic(s, GAUSS, 0.05)
    assert np.max(np.abs(s1.momentum() - s.momentum())) <= 1e-12
    back = C.step_symplectic(s1, GAUSS, -0.05)
    assert np.allclose(back.positions, s.positions, atol=1e-13)
    assert np.allclose(back.velocities, s.velocities, atol=1e-13)


def test_harmonic_pair_closed_form():
    r0, rd0 = 1.0, 0.3
    s = C.EnsembleState(np.array([[r0 / 2], [-r0 / 2]]), np.array([[rd0 / 2], [-rd0 / 2]]))
    phi = make_harmonic_potential(1.0)
    errs = []
    for dt in (0.02, 0.01):
        out = C.flow(s, phi, 2.0, dt).state
        r = out.positions[0, 0] - out.positions[1, 0]
        errs.append(abs(r - (r0 * np.cos(2.0) + rd0 * np.sin(2.0))))
    assert errs[0] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_free_flow_exact(rng):
    s = random_state(rng, 5, 3)
    out = C.flow(s, make_zero_potential(3), 1.7, 0.1).state
    assert np.allclose(out.positions, s.positions + 1.7 * s.velocities, atol=1e-13)


def test_flow_matches_reference_integrator(rng):
    s = random_state(rng, 64)
    out = C.flow(s, GAUSS, 1.0, 1e-3).state
    w = s.weights

    def rhs(t, y):
        x = y[:64, None]
        return np.concatenate([y[64:], C.Interaction(GAUSS).accel(x, w)[:, 0]])

    ref = solve_ivp(rhs, (0, 1), np.concatenate([s.positions[:, 0], s.velocities[:, 0]]),
                    method="DOP853", rtol=1e-12, atol=1e-12).y[:, -1]
    err = max(np.max(np.abs(out.positions[:, 0] - ref[:64])), np.max(np.abs(out.velocities[:, 0] - ref[64:])))
    assert err <= 1e-6


def test_flow_reports_divergence():
    s = C.EnsembleState(np.array([[0.0], [1.0]]), np.array([[1e300], [0.0]]))
    with pytest.raises(DivergenceError):
        C.flow(s, make_zero_potential(), 1e10, 1e9)


def test_energy_drift_exponent(rng):
    s = random_state(rng, 32)
    dts = [0.2, 0.1, 0.05, 0.025]
    drift = [np.max(C.flow(s, GAUSS, 2.0, dt, n_output=40).energy_drift) for dt in dts]
    fit = fit_slope(dts, drift)
    assert 1.8 <= fit.slope <= 2.2


def test_empirical_pairing_examples(rng):
    s = random_state(rng, 30)
    one = lambda x, v: np.ones(len(x))
    assert C.empirical_pairing(s, one) == pytest.approx(1.0, abs=1e-15)
    s2 = C.EnsembleState(s.positions, np.full((30, 1), 0.7))
    assert C.empirical_pairing(s2, lambda x, v: v[:, 0]) == pytest.approx(0.7)


def test_weak_vlasov_identity(rng):
    s = random_state(rng, 40)
    dt = 1e-3
    for F in default_test_panel(1):
        fwd = C.flow(s, GAUSS, dt, dt, scheme="yoshida4").state
        bwd = C.step_symplectic(s, GAUSS, -dt, scheme="yoshida4")
        lhs = (C.empirical_pairing(fwd, F) - C.empirical_pairing(bwd, F)) / (2 * dt)
        rhs = C.pairing_time_derivative(s, GAUSS, F)
        assert abs(lhs - rhs) <= 1e-5 * max(1.0, abs(rhs)), F.name


def test_pair_marginal_factorizes():
    rho = GaussianDensity(np.sqrt(0.5))
    panel = default_test_panel(1)
    F1, F2 = panel[0], panel[5]
    gaps = []
    for N in (16, 64, 256):
        s = C.monokinetic_init(rho, SinePhase(0.2), N)
        prod = C.empirical_pairing(s, F1) * C.empirical_pairing(s, F2)
        gaps.append(abs(C.pair_marginal_pairing(s, F1, F2) - prod))
    assert gaps[0] > gaps[1] > gaps[2]
    assert fit_slope([16, 64, 256], gaps, min_points=3).slope == pytest.approx(-1.0, abs=0.1)


def test_monokinetic_init_examples(rng):
    rho = GaussianDensity(np.sqrt(0.5))
    s = C.monokinetic_init(rho, ZeroPhase(), 64)
    assert np.all(s.velocities == 0)
    s = C.monokinetic_init(rho, LinearPhase((0.4,)), 64, mode="monte-carlo", rng=rng)
    assert np.all(s.velocities == 0.4)
    bad = DensityFromPdf(lambda x: 2 * np.exp(-x * x) / np.sqrt(np.pi), -10, 10)
    with pytest.raises(ValueError):
        C.monokinetic_init(bad, ZeroPhase(), 8)
    with pytest.raises(ValueError):
        C.monokinetic_init(rho, ZeroPhase(), 8, mode="monte-carlo")


def test_monokinetic_quadrature_matches_integral():
    # equal-mass midpoint nodes converge like N^-1.5 (tails dominate)
    rho = GaussianDensity(np.sqrt(0.5))
    phase = SinePhase(0.2)
    x = np.linspace(-8, 8, 8001)[:, None]
    dx = x[1, 0] - x[0, 0]
    panel = default_test_panel(1)
    exact = np.array([np.sum(rho.pdf(x) * F(x, phase.gradient(x))) * dx for F in panel])
    errs = []
    for N in (256, 1024):
        s = C.monokinetic_init(rho, phase, N)
        errs.append(np.max(np.abs([C.empirical_pairing(s, F) for F in panel] - exact)))
    assert errs[0] <= 5e-4
    assert errs[0] / errs[1] >= 6.0


def test_monokinetic_init_pdf_density():
    rho = DensityFromPdf(lambda x: np.exp(-x * x) / np.sqrt(np.pi), -10, 10)
    s = C.monokinetic_init(rho, ZeroPhase(), 100)
    assert np.mean(s.positions[:, 0] ** 2) == pytest.approx(0.5, rel=2e-2)


def test_sensitivity_free_zero_phase(rng):
    s = C.EnsembleState(rng.normal(size=(6, 1)), np.zeros((6, 1)))
    b = C.sensitivity_blocks(s, make_zero_potential(), None, 1.3, [0, 2, 4])
    assert np.allclose(b.position[:, :, 0, 0], np.eye(3))
    assert np.all(b.momentum == 0)


def test_sensitivity_initial_blocks():
    rho = GaussianDensity(np.sqrt(0.5))
    phase = SinePhase(0.2)
    s = C.monokinetic_init(rho, phase, 16)
    b = C.sensitivity_blocks(s, GAUSS, phase.hessian, 0.0, [1, 5, 9])
    assert np.allclose(b.position[:, :, 0, 0], np.eye(3))
    expected = np.diag(phase.hessian(s.positions[[1, 5, 9]])[:, 0, 0])
    assert np.allclose(b.momentum[:, :, 0, 0], expected)


def test_sensitivity_harmonic_pair_closed_form():
    # relative coordinate r'' = -r, centre of mass free; sigma = 0
    s = C.EnsembleState(np.array([[0.4], [-0.6]]), np.zeros((2, 1)))
    t = 1.1
    b = C.sensitivity_blocks(s, make_harmonic_potential(1.0), None, t, [0, 1], dt=1e-3)
    c = np.cos(t)
    exact_x = 0.5 * np.array([[1 + c, 1 - c], [1 - c, 1 + c]])
    exact_v = 0.5 * np.sin(t) * np.array([[-1, 1], [1, -1]])
    assert np.allclose(b.position[:, :, 0, 0], exact_x, atol=1e-6)
    assert np.allclose(b.momentum[:, :, 0, 0], exact_v, atol=1e-6)


def finite_difference_blocks(s, phase, t, idx, dt, eps=1e-6):
    k = len(idx)
    px = np.zeros((k, k))
    pv = np.zeros((k, k))
    for b, j in enumerate(idx):
        outs = []
        for sgn in (1, -1):
            x = s.positions.copy()
            x[j, 0] += sgn * eps
            st_ = C.EnsembleState(x, phase.gradient(x), s.weights)
            outs.append(C.flow(st_, GAUSS, t, dt, n_output=1).state)
        px[:, b] = (outs[0].positions[idx, 0] - outs[1].positions[idx, 0]) / (2 * eps)
        pv[:, b] = (outs[0].velocities[idx, 0] - outs[1].velocities[idx, 0]) / (2 * eps)
    return px, pv


def test_sensitivity_matches_finite_differences():
    phase = SinePhase(0.2)
    s = C.monokinetic_init(GaussianDensity(np.sqrt(0.5)), phase, 8)
    idx = [1, 3, 6]
    b = C.sensitivity_blocks(s, GAUSS, phase.hessian, 1.0, idx, dt=0.01)
    px, pv = finite_difference_blocks(s, phase, 1.0, idx, 0.01)
    assert np.max(np.abs(b.position[:, :, 0, 0] - px)) <= 1e-4 * np.max(np.abs(px))
    assert np.max(np.abs(b.momentum[:, :, 0, 0] - pv)) <= 1e-4 * np.max(np.abs(pv))


def test_sensitivity_offdiagonal_scaling():
    phase = SinePhase(0.2)
    rho = GaussianDensity(np.sqrt(0.5))
    offs, fd_offs = [], []
    for N in (8, 32, 128):
        s = C.monokinetic_init(rho, phase, N)
        idx = [int(f * N) for f in (0.25, 0.5, 0.75)]
        b = C.sensitivity_blocks(s, GAUSS, phase.hessian, 1.0, idx, dt=0.02)
        offs.append(b.offdiagonal_max())
        px, pv = finite_difference_blocks(s, phase, 1.0, idx, 0.02)
        m = np.abs(px) + np.abs(pv)
        fd_offs.append(np.max(m[~np.eye(3, dtype=bool)]))
    assert fit_slope([8, 32, 128], offs, min_points=3).slope == pytest.approx(-1.0, abs=0.15)
    assert fit_slope([8, 32, 128], fd_offs, min_points=3).slope == pytest.approx(-1.0, abs=0.15)


def test_pullback_reduces_to_velocity_block():
    phase = SinePhase(0.2)
    s = C.monokinetic_init(GaussianDensity(np.sqrt(0.5)), phase, 16)
    idx = [2, 8, 13]
    p = C.pullback_momentum_sensitivity(s, GAUSS, 1.0, 1.0, phase, idx, dt=0.02)
    b = C.sensitivity_blocks(s, GAUSS, phase.hessian, 1.0, idx, dt=0.02)
    assert np.allclose(p.momentum, b.momentum, atol=1e-14)


def test_pullback_zero_for_free_zero_phase(rng):
    s = C.EnsembleState(rng.normal(size=(8, 1)), np.zeros((8, 1)))
    p = C.pullback_momentum_sensitivity(s, make_zero_potential(), 1.0, 0.4, ZeroPhase(), [0, 3])
    assert np.all(p.momentum == 0)


def test_pullback_matches_finite_differences():
    phase = SinePhase(0.2)
    s = C.monokinetic_init(GaussianDensity(np.sqrt(0.5)), phase, 8)
    idx = [1, 4, 6]
    t, sv, dt = 1.0, 0.5, 0.02
    p = C.pullback_momentum_sensitivity(s, GAUSS, t, sv, phase, idx, dt=dt)
    eps = 1e-6
    fd = np.zeros((3, 3))
    for b, j in enumerate(idx):
        outs = []
        for sgn in (1, -1):
            x = s.positions.copy()
            x[j, 0] += sgn * eps
            y = C.flow(C.EnsembleState(x, phase.gradient(x)), GAUSS, t - sv, dt).state.positions
            outs.append(C.flow(C.EnsembleState(y, phase.gradient(y)), GAUSS, t, dt).state.velocities)
        fd[:, b] = (outs[0][idx, 0] - outs[1][idx, 0]) / (2 * eps)
    assert np.max(np.abs(p.momentum[:, :, 0, 0] - fd)) <= 1e-4 * np.max(np.abs(fd))


def test_jacobian_identity_at_zero(rng):
    s = random_state(rng, 5, 2)
    jb = C.flow_jacobian_bounds(s, make_gaussian_potential(1, 1, 2), 0.0)
    assert np.allclose(jb.diagonal_dets, 1.0)
    assert jb.phase_space_det == pytest.approx(1.0)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10**6), t=st.floats(0.1, 2.0), amp=st.floats(-2.0, 2.0))
def test_liouville(seed, t, amp):
    rng = np.random.default_rng(seed)
    s = random_state(rng, 12)
    jb = C.flow_jacobian_bounds(s, make_gaussian_potential(amp, 1.0), t, dt=0.05)
    assert abs(jb.phase_space_det - 1.0) <= 1e-6


def test_free_focusing_caustic():
    s = C.EnsembleState(np.array([[0.7]]), np.array([[-0.7]]))
    phase = QuadraticPhase(-1.0)
    for t in (0.3, 0.9):
        jb = C.flow_jacobian_bounds(s, make_zero_potential(), t, phase.hessian)
        assert jb.diagonal_dets[0] == pytest.approx(1 - t, abs=1e-12)
        assert not jb.caustic
    jb = C.flow_jacobian_bounds(s, make_zero_potential(), 1.0, phase.hessian)
    assert jb.caustic and abs(jb.min) < 1e-12
