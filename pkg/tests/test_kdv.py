import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from kdvlab.grid import SpatialGrid, field_norms
from kdvlab.kdv import (
    A_EXACT,
    cascade_residual,
    expansion_profile,
    find_sound_speed,
    first_order_fields,
    kdv2_rhs,
    kdv2_solve,
    kdv2_source_g,
    kdv2_source_terms,
    kdv_rhs,
    kdv_soliton,
    kdv_solve,
    kdv_stable_dt,
    second_order_fields,
    sine_packet,
    soliton_params,
    sound_speed_determinant,
)


# --- sound speed -----------------------------------------------------------

def test_sound_speed_root():
    A = find_sound_speed()
    assert abs(float(A) - 1.6329931619) < 1e-10
    assert abs(float(A) - math.sqrt(8 / 3)) < 1e-12


def test_determinant_sign_change_and_value():
    # det = A (A^2 - 8/3) by cofactor expansion
    for a in (0.7, 1.0, 2.2):
        assert sound_speed_determinant(a) == pytest.approx(a * (a * a - 8 / 3), rel=1e-12)
    assert sound_speed_determinant(1.0) < 0 < sound_speed_determinant(2.0)


def test_no_root_in_bracket():
    with pytest.raises(RuntimeError):
        find_sound_speed(bracket=(2.0, 3.0))


@given(st.lists(st.floats(0.1, 10.0), min_size=4, max_size=4))
def test_root_invariant_under_row_scaling(scales):
    assert float(find_sound_speed(row_scales=scales)) == pytest.approx(A_EXACT, abs=1e-10)


# --- KdV flow --------------------------------------------------------------

def test_soliton_relations():
    a, k = soliton_params(A_EXACT, 0.5)
    assert a == pytest.approx(27 * A_EXACT * 0.5 / 29)
    assert k == pytest.approx(math.sqrt(0.5 * A_EXACT / 2))


def test_soliton_is_traveling_wave(grid512):
    # rho_t = -c rho_x for the exact profile
    from kdvlab.grid import spectral_derivative
    r = kdv_soliton(grid512, A_EXACT, 0.5)
    err = kdv_rhs(r, grid512, A_EXACT) + 0.5 * spectral_derivative(r, grid512, 1)
    assert np.max(np.abs(err)) < 1e-8


@given(st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=4))
def test_rhs_has_zero_mean(amps):
    g = SpatialGrid(64, 20.0)
    r = sine_packet(g, amps)
    assert abs(np.mean(kdv_rhs(r, g, A_EXACT))) < 1e-14


def test_zero_data_stays_zero(grid256):
    traj = kdv_solve(grid256.zeros(), grid256, A_EXACT, 0.5, 0.01)
    assert all(np.all(s.rho1 == 0) for s in traj)


def test_conservation_and_shape(grid256):
    r0 = kdv_soliton(grid256, A_EXACT, 0.5)
    traj = kdv_solve(r0, grid256, A_EXACT, 1.0, 0.01, output_times=np.linspace(0.1, 1, 10))
    m0, e0 = r0.sum(), (r0**2).sum()
    for s in traj:
        assert abs(s.rho1.sum() - m0) <= 1e-8 * abs(m0)
        assert abs((s.rho1**2).sum() - e0) <= 1e-8 * e0
    exact = kdv_soliton(grid256, A_EXACT, 0.5, t=1.0)
    assert np.max(np.abs(traj[-1].rho1 - exact)) < 1e-6


def test_crest_speed_matches_c():
    g = SpatialGrid(512, 60.0)
    c = 0.8
    traj = kdv_solve(kdv_soliton(g, A_EXACT, c, x0=20.0), g, A_EXACT, 5.0, 0.005, output_times=[5.0])
    # crest location by quadratic fit around the grid maximum
    def crest(f):
        i = int(np.argmax(f))
        ym, y0, yp = f[i - 1], f[i], f[i + 1]
        return g.nodes[i] + 0.5 * g.dx * (ym - yp) / (ym - 2 * y0 + yp)
    speed = (crest(traj[-1].rho1) - crest(traj[0].rho1)) / 5.0
    assert speed == pytest.approx(c, rel=0.01)


def test_dt_bound_enforced(grid256):
    r0 = kdv_soliton(grid256, A_EXACT, 0.5)
    with pytest.raises(ValueError):
        kdv_solve(r0, grid256, A_EXACT, 1.0, 10 * kdv_stable_dt(r0, grid256, A_EXACT))


def test_blowup_detected():
    g = SpatialGrid(64, 10.0)
    r0 = 1e200 * np.sin(2 * np.pi * g.nodes / g.length)
    with pytest.raises((FloatingPointError, ValueError)):
        kdv_solve(r0, g, A_EXACT, 1.0, 1e-3)


# --- source term g ---------------------------------------------------------

def _g_oracle(L, amp, x_nodes):
    """Independent symbolic assembly of h12 - h13/A for rho1 = amp sin(2 pi x / L)."""
    x = sp.symbols("x", real=True)
    A = sp.sqrt(sp.Rational(8, 3))
    r = sp.Float(amp, 30) * sp.sin(2 * sp.pi * x / L)
    Dx = lambda f, k=1: sp.diff(f, x, k)

    def rhs(f):  # KdV time derivative
        return -(sp.Rational(58, 9) * f * Dx(f) + Dx(f, 3)) / (2 * A)

    def lin(f, df):  # derivative of rhs along df
        return -(sp.Rational(58, 9) * Dx(f * df) + Dx(df, 3)) / (2 * A)

    def antider(f):
        F = sp.integrate(sp.expand(sp.expand_trig(f)), x)
        return F - sp.integrate(F, (x, 0, L)) / L

    r_t = rhs(r)
    h = antider(-(r_t + Dx(A * r**2)))
    h_t = antider(-(lin(r, r_t) + Dx(2 * A * r * r_t)))
    u1, th1, ph1 = A * r, sp.Rational(2, 3) * r, r
    h12 = (-A * r**2 * Dx(u1) + r * Dx(r * th1) + r**2 * Dx(ph1) + Dx(ph1**3 / 6) - h_t
           - 2 * A * Dx(r * h) + r**2 * Dx(r) / 9 - Dx(Dx(r, 2) - r**2 / 2, 3) + Dx(r * Dx(r, 2))
           - Dx(r * r**2 / 2))
    h13 = (-sp.Rational(2, 3) * Dx(r * h) - sp.diff(r**2, x) * 0 - 2 * r * r_t / 9
           + sp.Rational(4, 9) * r * Dx(h) - sp.Rational(2, 27) * A * r**2 * Dx(r)
           - A * r * Dx(r**2) / 9 + sp.Rational(2, 3) * h * Dx(r))
    g = sp.lambdify(x, h12 - h13 / A, "mpmath")
    return np.array([float(g(float(xi))) for xi in x_nodes])


def test_g_matches_symbolic_oracle():
    L = 20.0
    grid = SpatialGrid(64, L)
    r = 0.05 * np.sin(2 * np.pi * grid.nodes / L)
    g = kdv2_source_g(r, grid, A_EXACT)
    oracle = _g_oracle(L, 0.05, grid.nodes)
    assert np.max(np.abs(g - oracle)) < 1e-9


def test_g_trivial_and_deterministic(grid256):
    assert np.all(kdv2_source_g(grid256.zeros(), grid256, A_EXACT) == 0)
    r = kdv_soliton(grid256, A_EXACT, 0.5)
    g1 = kdv2_source_g(r, grid256, A_EXACT)
    # rho2 context does not enter g
    _ = kdv2_rhs(r, 0.3 * r, grid256, A_EXACT)
    g2 = kdv2_source_g(r.copy(), grid256, A_EXACT)
    assert np.array_equal(g1, g2)
    terms = kdv2_source_terms(r, grid256, A_EXACT)
    assert np.array_equal(terms["g"], terms["h12"] - terms["h13"] / A_EXACT)


# --- rho2 ------------------------------------------------------------------

def test_kdv2_trivial(grid256):
    traj = kdv_solve(grid256.zeros(), grid256, A_EXACT, 0.5, 0.01, output_times=[0.25, 0.5])
    out = kdv2_solve(traj, grid256.zeros(), grid256, A_EXACT, 0.01)
    assert all(np.all(s.rho2 == 0) for s in out)


def test_kdv2_airy_energy(grid256):
    traj = kdv_solve(grid256.zeros(), grid256, A_EXACT, 1.0, 0.01, output_times=np.linspace(0.1, 1, 10))
    r2 = sine_packet(grid256, [0.01, 0.005, 0.002])
    out = kdv2_solve(traj, r2, grid256, A_EXACT, 0.01)
    e0 = np.sum(r2**2)
    for s in out:
        assert abs(np.sum(s.rho2**2) - e0) < 1e-8 * e0


def test_kdv2_trajectory_errors(grid256):
    traj = kdv_solve(grid256.zeros(), grid256, A_EXACT, 0.5, 0.01, output_times=[0.25, 0.5])
    with pytest.raises(ValueError):
        kdv2_solve(traj[1:], grid256.zeros(), grid256, A_EXACT, 0.01)


def test_kdv2_a_posteriori_residual(grid256):
    A = A_EXACT
    h = 5e-4
    near = [0.5 + j * h for j in (-2, -1, 0, 1, 2)]
    times = sorted(set(np.round(np.arange(1, 51) * 0.01, 12)) | set(np.round(near, 12)))
    traj = kdv_solve(kdv_soliton(grid256, A, 0.5), grid256, A, 0.51, 0.001, output_times=times)
    out = {round(s.time, 12): s for s in kdv2_solve(traj, grid256.zeros(), grid256, A, 0.001)}
    f = [out[round(t, 12)].rho2 for t in near]
    dt_num = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    s = out[0.5]
    assert np.max(np.abs(dt_num - kdv2_rhs(s.rho1, s.rho2, grid256, A))) < 1e-5


# --- slaved fields and cascade -------------------------------------------

def test_second_order_fields_constant():
    g = SpatialGrid(32, 10.0)
    r1 = np.full(32, 0.1)
    u2, th2, ph2 = second_order_fields(r1, g.zeros(), g, A_EXACT, h11=g.zeros())
    assert np.allclose(th2, -0.01 / 9, atol=1e-15)
    assert np.allclose(ph2, -0.005, atol=1e-15)
    assert np.allclose(u2, 0.0)


def test_first_order_zero():
    z = np.zeros(8)
    assert all(np.all(f == 0) for f in first_order_fields(z, A_EXACT))


def test_cascade_order1(grid512, soliton512):
    prof = expansion_profile(soliton512, None, grid512, A_EXACT)
    r1t = kdv_rhs(soliton512, grid512, A_EXACT)
    res = cascade_residual(1, prof, r1t, grid512.zeros(), grid512, A_EXACT)
    assert max(l2 for l2, _ in res) < 1e-10


def test_cascade_order1_wrong_speed(grid512, soliton512):
    from kdvlab.grid import spectral_derivative
    u1, th1, ph1 = first_order_fields(soliton512, 1.0)
    prof = expansion_profile(soliton512, None, grid512, A_EXACT)
    prof = type(prof)(soliton512, u1, th1, ph1, prof.rho2, prof.u1_2, prof.theta2, prof.phi2)
    res = cascade_residual(1, prof, grid512.zeros(), grid512.zeros(), grid512, A_EXACT)
    ref = field_norms(spectral_derivative(soliton512, grid512, 1), grid512)[0]
    assert res[1][0] > 0.01 * ref


def test_cascade_order2(grid512, soliton512):
    A = A_EXACT
    r2 = 0.3 * kdv_soliton(grid512, A, 0.3, x0=15.0)
    prof = expansion_profile(soliton512, r2, grid512, A)
    res = cascade_residual(2, prof, kdv_rhs(soliton512, grid512, A), kdv2_rhs(soliton512, r2, grid512, A),
                           grid512, A)
    assert max(l2 for l2, _ in res) < 1e-6


def test_cascade_bad_order(grid256):
    prof = expansion_profile(grid256.zeros(), None, grid256, A_EXACT)
    with pytest.raises(ValueError):
        cascade_residual(3, prof, grid256.zeros(), grid256.zeros(), grid256, A_EXACT)
