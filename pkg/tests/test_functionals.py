import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdvlab.functionals import (
    FunctionalInputs,
    dissipation_d2,
    dissipation_weighted,
    energy_e2,
    energy_weighted,
    h_functional,
)
from kdvlab.grid import SpatialGrid
from kdvlab.kinetic import VelocityGrid
from kdvlab.landau import WeightParams

G = SpatialGrid(8, 2 * math.pi)
VG = VelocityGrid(8.0, 16)
FUNCTIONALS = (energy_e2, energy_weighted, dissipation_d2, dissipation_weighted, h_functional)


def _inputs(scale=1.0, delta=0.1, eps=0.01, **kw):
    x = G.nodes
    z = np.zeros(G.n)
    mu_half = np.exp(-0.25 * VG.speed**2)
    f = np.sin(x)[:, None, None, None] * mu_half * (1 + 0.3 * VG.v[0]) \
        + 0.2 * np.cos(2 * x)[:, None, None, None] * mu_half * VG.v[1]
    fields = dict(rho=np.sin(x), u=0.5 * np.cos(x), theta=0.2 * np.sin(2 * x), phi=0.1 * np.cos(x), f=f)
    fields.update(kw)
    fields = {k: scale * np.asarray(v) for k, v in fields.items()}
    return FunctionalInputs(G, VG, delta=delta, eps=eps, **fields)


def test_zero_inputs():
    z = np.zeros(G.n)
    inp = FunctionalInputs(G, VG, z, z, z, z, np.zeros((G.n,) + VG.weights.shape), 0.1, 0.01)
    for fn in FUNCTIONALS:
        assert fn(inp) == 0.0


def test_e2_single_mode_hand_quadrature():
    # rho~ = sin x on [0, 2 pi): ||rho||^2 = ||rho_x||^2 = ||rho_xx||^2 = pi
    z = np.zeros(G.n)
    inp = FunctionalInputs(G, VG, np.sin(G.nodes), z, z, z, np.zeros((G.n,) + VG.weights.shape), 0.1, 0.01)
    assert abs(energy_e2(inp) - math.pi * (1 + 1 + 0.01**2 / 0.1)) < 1e-10


def test_e2_phi_block_hand_quadrature():
    z = np.zeros(G.n)
    d, e = 0.2, 0.05
    inp = FunctionalInputs(G, VG, z, z, z, np.cos(2 * G.nodes), np.zeros((G.n,) + VG.weights.shape), d, e)
    # modes carry 4^a factors; delta block adds one more derivative
    low = math.pi * (1 + 4) + d * math.pi * (4 + 16)
    high = math.pi * 16 + d * math.pi * 64
    assert energy_e2(inp) == pytest.approx(low + e**2 / d * high, rel=1e-12)


@given(st.floats(0.1, 5.0))
def test_quadratic_scaling(s):
    base = _inputs()
    scaled = _inputs(scale=s)
    for fn in FUNCTIONALS:
        assert fn(scaled) == pytest.approx(s * s * fn(base), rel=1e-10)


def test_weighted_dominates_unweighted():
    inp = _inputs()
    assert energy_weighted(inp) >= energy_e2(inp)
    assert dissipation_weighted(inp) >= dissipation_d2(inp)
    assert all(fn(inp) >= 0 for fn in FUNCTIONALS)


def test_h_functional_dominates_weighted_part():
    inp = _inputs()
    # <v> >= 1 so H bounds the weighted f-part of E_{2,l,q1}
    assert h_functional(inp) >= energy_weighted(inp) - energy_e2(inp)


def test_three_component_velocity():
    x = G.nodes
    u3 = np.stack([np.cos(x), np.sin(x), 0 * x])
    a = _inputs(u=u3)
    b = _inputs(u=np.cos(x))
    # adding sin x as a second component adds pi + pi to the low block and eps^2/delta pi above
    assert energy_e2(a) - energy_e2(b) == pytest.approx(2 * math.pi + 0.01**2 / 0.1 * math.pi, rel=1e-10)


def test_missing_or_malformed_data():
    z = np.zeros(G.n)
    f = np.zeros((G.n,) + VG.weights.shape)
    with pytest.raises(ValueError):
        FunctionalInputs(G, VG, None, z, z, z, f, 0.1, 0.01)
    with pytest.raises(ValueError):
        FunctionalInputs(G, VG, z, z, z, z, f[:, :4], 0.1, 0.01)
    with pytest.raises(ValueError):
        FunctionalInputs(G, VG, z[:4], z, z, z, f, 0.1, 0.01)


def test_strict_window():
    _inputs(delta=1e-2, eps=1e-3, strict_window=True)
    with pytest.raises(ValueError):
        _inputs(delta=1e-5, eps=1e-3, strict_window=True)
    # the lenient default ignores the window
    _inputs(delta=1e-5, eps=1e-3)


def test_weight_time_dependence():
    early = _inputs()
    late = FunctionalInputs(G, VG, early.rho, early.u, early.theta, early.phi, early.f, 0.1, 0.01, t=5.0)
    # the Gaussian factor of w relaxes in time
    assert energy_weighted(late) < energy_weighted(early)
    assert energy_e2(late) == energy_e2(early)
