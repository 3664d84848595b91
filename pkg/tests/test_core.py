from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mflab.core import (GaussianAmplitude, GaussianDensity, SpatialGrid, VelocityGrid,
                        default_test_panel, kac_rescale, make_gaussian_potential,
                        make_harmonic_potential)


def central_grad(f, x, h):
    g = np.zeros_like(x)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = h
        g[..., k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_gaussian_value_at_origin():
    phi = make_gaussian_potential(1.0, 1.0, 1)
    assert phi.value(np.array([0.0])) == 1.0
    assert np.all(phi.gradient(np.array([0.0])) == 0.0)


def test_gaussian_gradient_at_one():
    phi = make_gaussian_potential(1.0, 1.0, 1)
    assert phi.gradient(np.array([1.0]))[0] == pytest.approx(-np.exp(-0.5), rel=1e-14)
    assert phi.gradient(np.array([1.0]))[0] == pytest.approx(-0.60653, abs=1e-5)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gaussian_evenness_and_derivatives(d, rng):
    phi = make_gaussian_potential(0.7, 1.3, d)
    x = rng.normal(0, 1.5, (100, d))
    v = phi.value(x)
    assert np.all(np.abs(v - phi.value(-x)) <= 1e-12 * np.abs(v))
    g = phi.gradient(x)
    g_fd = central_grad(phi.value, x, 1e-5)
    scale = np.max(np.abs(g))
    assert np.max(np.abs(g - g_fd)) <= 1e-6 * scale
    H = phi.hessian(x)
    H_fd = np.stack([central_grad(lambda y: phi.gradient(y)[..., b], x, 1e-4) for b in range(d)], axis=-2)
    assert np.max(np.abs(H - H_fd)) <= 1e-6 * np.max(np.abs(H))


def test_gaussian_bounds_are_finite_and_attained():
    phi = make_gaussian_potential(2.0, 0.5, 1)
    b = phi.bounds
    assert all(np.isfinite(b))
    s = np.linspace(-5, 5, 100001)[:, None]
    assert np.max(np.abs(phi.value(s))) == pytest.approx(b[0])
    assert np.max(np.abs(phi.gradient(s))) == pytest.approx(b[1], rel=1e-6)
    assert np.max(np.abs(phi.hessian(s))) == pytest.approx(b[2], rel=1e-6)


def test_gaussian_rejects_bad_width():
    with pytest.raises(ValueError):
        make_gaussian_potential(1.0, 0.0)
    with pytest.raises(ValueError):
        make_gaussian_potential(1.0, -1.0)


def test_kac_scaling_reference_value():
    _, k = kac_rescale(make_gaussian_potential(1, 1), 100, 1)
    assert k.effective_h == pytest.approx(0.01)
    assert k.effective_h_exact * k.lam == k.hbar


def test_kac_identity_scaling(rng):
    phi = make_gaussian_potential(1, 1)
    psi, k = kac_rescale(phi, 1, 1)
    assert k.effective_h == 1
    x = rng.normal(size=(50, 1))
    assert np.array_equal(psi.value(x), phi.value(x))


def test_kac_monotone_in_lambda():
    hs = [kac_rescale(make_gaussian_potential(1, 1), n, 1)[1].effective_h for n in (10, 100, 1000)]
    assert hs[0] > hs[1] > hs[2]
    assert hs == pytest.approx([0.1, 0.01, 0.001])


@given(lam=st.integers(1, 10**6), hbar=st.fractions(Fraction(1, 1000), Fraction(1000)))
def test_kac_product_exact(lam, hbar):
    _, k = kac_rescale(make_gaussian_potential(1, 1), lam, hbar)
    assert k.effective_h_exact * k.lam == k.hbar


@settings(max_examples=30)
@given(lam=st.floats(0.1, 50.0))
def test_kac_rescaled_potential_is_original_in_q(lam):
    # q -> lam * V(lam q) with V(x) = phi(x/lam)/lam gives back phi(q)
    phi = make_gaussian_potential(1.3, 0.8)
    psi, _ = kac_rescale(phi, lam, 1.0)
    q = np.linspace(-3, 3, 31)[:, None]
    assert np.allclose(psi.value(q), phi.value(q), rtol=1e-12)
    assert np.allclose(psi.gradient(q), phi.gradient(q), rtol=1e-10, atol=1e-14)


def test_kac_rejects_nonpositive():
    with pytest.raises(ValueError):
        kac_rescale(make_gaussian_potential(1, 1), 0, 1)
    with pytest.raises(ValueError):
        kac_rescale(make_gaussian_potential(1, 1), 1, -1)


def test_harmonic_potential_derivatives():
    phi = make_harmonic_potential(1.0, 1)
    assert phi.value(np.array([2.0])) == 2.0
    assert phi.gradient(np.array([2.0]))[0] == 2.0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_panel_contract(d, rng):
    panel = default_test_panel(d)
    assert len(panel) >= 8
    z = np.zeros((1, d))
    assert panel[0](z, z)[0] == 1.0
    x = rng.normal(0, 1, (100, d))
    v = rng.normal(0, 1, (100, d))
    for F in panel:
        gx, gv = F.gradient(x, v)
        fx = central_grad(lambda y: F(y, v), x, 1e-5)
        fv = central_grad(lambda y: F(x, y), v, 1e-5)
        scale = max(np.max(np.abs(gx)), np.max(np.abs(gv)))
        assert np.max(np.abs(gx - fx)) <= 1e-6 * scale, F.name
        assert np.max(np.abs(gv - fv)) <= 1e-6 * scale, F.name
        assert np.isfinite(F.sup_norm) and np.isfinite(F.gradient_sup_norm)


def test_panel_bounds_dominate_samples(rng):
    panel = default_test_panel(1)
    x = rng.normal(0, 2, (5000, 1))
    v = rng.normal(0, 2, (5000, 1))
    for F in panel:
        assert np.max(np.abs(F(x, v))) <= F.sup_norm * (1 + 1e-12)
        gx, gv = F.gradient(x, v)
        assert np.max(np.hypot(gx[:, 0], gv[:, 0])) <= F.gradient_sup_norm * (1 + 1e-9)


def test_panel_fourier_matches_quadrature():
    v = np.linspace(-40, 40, 400001)
    dv = v[1] - v[0]
    y = np.array([0.0, 0.3, 1.7, 4.0])
    for F in default_test_panel(1):
        (_, _, B), = F.terms
        num = np.array([np.sum(np.exp(-1j * yy * v) * B(v[:, None])) * dv / (2 * np.pi) for yy in y])
        assert np.allclose(B.fourier(y), num, atol=1e-10), F.name


def test_spatial_grid_contract():
    g = SpatialGrid.centered(6 * np.pi, 512)
    assert g.is_spectral
    assert g.spacing[0] == pytest.approx(6 * np.pi / 512)
    assert np.allclose(np.diff(g.x), g.spacing[0])
    with pytest.raises(ValueError):
        SpatialGrid.centered(1.0, 8)
    g2 = SpatialGrid((2), (-1.0, -1.0), (2.0, 2.0), (16, 16), periodic=False)
    assert g2.points().shape == (256, 2)
    assert g2.trapezoid_weights().sum() == pytest.approx(4.0)


def test_velocity_grid_duality():
    vg = VelocityGrid(128, 8.0)
    assert vg.n_v * vg.dv * vg.dy == pytest.approx(2 * np.pi)
    assert vg.v[0] == -8.0


def test_density_quantile_nodes_integrate_gaussian():
    rho = GaussianDensity(np.sqrt(0.5))
    x, w = rho.quantile_nodes(1000)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.sum(w * x[:, 0] ** 2) == pytest.approx(0.5, rel=1e-2)


def test_amplitude_normalized_and_gradient_norm():
    a = GaussianAmplitude(1.0, chirp=1.0)
    x = np.linspace(-12, 12, 4001)[:, None]
    dx = x[1, 0] - x[0, 0]
    assert np.sum(np.abs(a(x)) ** 2) * dx == pytest.approx(1.0, abs=1e-12)
    g = a.gradient(x)[:, 0]
    assert np.sum(np.abs(g) ** 2) * dx == pytest.approx(a.gradient_norm_sq(), rel=1e-10)
    assert GaussianAmplitude(1.0).gradient_norm_sq() == 0.5
