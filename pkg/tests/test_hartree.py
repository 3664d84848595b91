import numpy as np
import pytest

from mflab.core import (GaussianAmplitude, LinearPhase, SinePhase, SpatialGrid, ZeroPhase,
                        make_gaussian_potential, make_zero_potential)
from mflab.errors import ResolutionError
from mflab.semiclassical import (free_gaussian_exact, hartree_evolve, hartree_step,
                                 wkb_initialize)

GAUSS = make_gaussian_potential(1.0, 1.0)


def grid(n=512, L=6 * np.pi):
    return SpatialGrid.centered(L, n)


def test_wkb_zero_phase_is_amplitude():
    g = grid()
    psi = wkb_initialize(GaussianAmplitude(1.0), ZeroPhase(), 0.1, g)
    assert np.max(np.abs(psi.values.imag)) == 0.0
    assert np.allclose(psi.values.real, GaussianAmplitude(1.0)(g.x[:, None]).real, atol=1e-14)


def test_wkb_linear_phase_shifts_momentum():
    h, w = 0.1, 0.5
    g = grid(1024)
    psi = wkb_initialize(GaussianAmplitude(1.0), LinearPhase((w,)), h, g)
    p = np.fft.fft(psi.values)
    v = h * g.wavenumbers()
    dens = np.abs(p) ** 2
    assert np.sum(v * dens) / np.sum(dens) == pytest.approx(w, abs=1e-10)


@pytest.mark.parametrize("h", [0.2, 0.05, 0.01])
def test_wkb_unit_norm(h):
    g = grid(8192)
    psi = wkb_initialize(GaussianAmplitude(1.0, chirp=1.0), SinePhase(0.2), h, g)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_wkb_rejects_underresolved():
    with pytest.raises(ResolutionError) as exc:
        wkb_initialize(GaussianAmplitude(1.0), SinePhase(0.2), 0.01, grid(256))
    assert exc.value.required == 4096
    assert "4096" in str(exc.value)


def test_free_evolution_closed_form():
    h, t = 0.1, 1.0
    g = grid(1024, 40.0)
    amp = GaussianAmplitude(1.0, chirp=0.5)
    psi0 = wkb_initialize(amp, LinearPhase((0.3,)), h, g)
    out = hartree_evolve(psi0, make_zero_potential(), t, 0.05)
    exact = free_gaussian_exact(g.x, t, h, 1.0, 0.5, 0.3)
    assert np.max(np.abs(out.values - exact)) <= 1e-10


def test_norm_preserved_per_step():
    g = grid()
    psi = wkb_initialize(GaussianAmplitude(1.0, chirp=1.0), SinePhase(0.2), 0.1, g)
    for _ in range(20):
        new = hartree_step(psi, GAUSS, 0.01)
        assert abs(new.norm() - psi.norm()) <= 1e-12
        psi = new


def test_strang_second_order():
    g = grid()
    psi = wkb_initialize(GaussianAmplitude(1.0, chirp=1.0), SinePhase(0.2), 0.1, g)
    ref = hartree_evolve(psi, GAUSS, 0.5, 1e-3, order=4)
    e = [hartree_evolve(psi, GAUSS, 0.5, dt).l2_distance(ref) for dt in (0.02, 0.01, 0.005)]
    assert e[0] / e[1] == pytest.approx(4.0, rel=0.05)
    assert e[1] / e[2] == pytest.approx(4.0, rel=0.05)


def test_fourth_order_composition():
    g = grid()
    psi = wkb_initialize(GaussianAmplitude(1.0, chirp=1.0), SinePhase(0.2), 0.1, g)
    ref = hartree_evolve(psi, GAUSS, 0.5, 5e-4, order=4)
    e = [hartree_evolve(psi, GAUSS, 0.5, dt, order=4).l2_distance(ref) for dt in (0.04, 0.02)]
    assert e[0] / e[1] == pytest.approx(16.0, rel=0.15)


def test_hartree_energy_conserved():
    from mflab.semiclassical.hartree import HartreePropagator
    g = grid()
    h = 0.1
    psi = wkb_initialize(GaussianAmplitude(1.0, chirp=1.0), SinePhase(0.2), h, g)
    prop = HartreePropagator(g, GAUSS, h)

    def energy(vals):
        k = g.wavenumbers()
        kin = 0.5 * h**2 * np.sum(k**2 * np.abs(np.fft.fft(vals)) ** 2) * g.spacing[0] / len(vals)
        pot = 0.5 * np.sum(prop.potential(vals) * np.abs(vals) ** 2) * g.spacing[0]
        return kin + pot

    e0 = energy(psi.values)
    out = prop.evolve(psi, 1.0, 0.005)
    assert abs(energy(out.values) - e0) <= 1e-5 * abs(e0)
