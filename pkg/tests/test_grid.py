import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdvlab.grid import (
    SpatialGrid,
    as_field,
    dealias,
    field_norms,
    fourier_l2,
    hyperviscosity_filter,
    hyperviscosity_for_damping,
    product,
    spectral_antiderivative,
    spectral_derivative,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        SpatialGrid(7, 1.0)
    with pytest.raises(ValueError):
        SpatialGrid(64, -1.0)
    g = SpatialGrid(64, 2 * np.pi)
    assert g.dx == pytest.approx(2 * np.pi / 64)
    assert g.nodes[0] == 0.0 and g.nodes[-1] < g.length


def test_as_field_rejects_bad_input():
    g = SpatialGrid(16, 1.0)
    with pytest.raises(ValueError):
        as_field(np.zeros(15), g)
    with pytest.raises(ValueError):
        as_field(np.full(16, np.nan), g)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivative_of_fourier_mode(order):
    g = SpatialGrid(64, 10.0)
    k = 2 * np.pi * 3 / g.length
    f = np.sin(k * g.nodes)
    exact = np.imag((1j * k) ** order * np.exp(1j * k * g.nodes))
    assert np.max(np.abs(spectral_derivative(f, g, order) - exact)) < 1e-10 * k**order


def test_odd_derivative_drops_nyquist():
    g = SpatialGrid(16, 1.0)
    nyq = np.cos(np.pi * np.arange(16))
    assert np.max(np.abs(spectral_derivative(nyq, g, 1))) < 1e-12


def test_antiderivative_inverts_derivative_mean_zero():
    g = SpatialGrid(64, 5.0)
    f = np.cos(2 * np.pi * g.nodes / g.length) + 0.3 * np.sin(6 * np.pi * g.nodes / g.length)
    F = spectral_antiderivative(f, g)
    assert abs(F.mean()) < 1e-14
    assert np.max(np.abs(spectral_derivative(F, g, 1) - f)) < 1e-12


def test_antiderivative_rejects_nonzero_mean():
    g = SpatialGrid(32, 1.0)
    with pytest.raises(ValueError):
        spectral_antiderivative(np.ones(32), g)


@given(st.lists(st.floats(-1, 1), min_size=5, max_size=5))
def test_parseval(coeffs):
    g = SpatialGrid(32, 3.0)
    f = sum(c * np.cos(2 * np.pi * (j + 1) * g.nodes / g.length) for j, c in enumerate(coeffs))
    assert fourier_l2(f, g) == pytest.approx(field_norms(f, g)[0], abs=1e-12)


def test_product_dealiased():
    g = SpatialGrid(24, 2 * np.pi)
    f = np.cos(7 * g.nodes)
    p = product(g, f, f)
    # cos^2(7x) = (1 + cos 14x)/2; mode 14 is beyond n/3 so only the mean survives
    assert np.allclose(p, 0.5, atol=1e-14)
    assert np.allclose(dealias(np.cos(9 * g.nodes), g), 0.0, atol=1e-14)


def test_hyperviscosity_damping_target():
    g = SpatialGrid(128, 40.0)
    nu = hyperviscosity_for_damping(g, 0.01, 1e-3)
    filt = hyperviscosity_filter(g, nu, 0.01)
    assert filt[0] == 1.0
    assert 1 - filt[g.dealias_mask].min() == pytest.approx(1e-3, rel=1e-6)
