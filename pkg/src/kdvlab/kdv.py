"""KdV hierarchy of the long-wave expansion of the rescaled Euler-Poisson system.

The first-order density rho1 solves

    2A d_t rho1 + (58/9) rho1 d_x rho1 + d_x^3 rho1 = 0,

the second-order density rho2 solves the linearised, forced equation

    2A d_t rho2 + (58/9) d_x(rho1 rho2) + d_x^3 rho2 = g(rho1),

and the remaining fields (velocity, temperature, potential) at each order are
algebraic/differential functions of rho1, rho2.  Both PDEs are integrated with
integrating-factor RK4 so the stiff dispersive term is handled exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .grid import (
    SpatialGrid,
    as_field,
    field_norms,
    product,
    spectral_antiderivative,
    spectral_derivative,
)

A_EXACT = math.sqrt(8.0 / 3.0)
NONLINEAR = 58.0 / 9.0


@dataclass(frozen=True)
class SoundSpeed:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"sound speed must be positive, got {self.value}")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class KdVState:
    rho1: np.ndarray
    time: float
    rho2: np.ndarray | None = None


@dataclass(frozen=True)
class ExpansionProfile:
    """Order-delta and order-delta^2 fields of the long-wave expansion."""

    rho1: np.ndarray
    u1_1: np.ndarray
    theta1: np.ndarray
    phi1: np.ndarray
    rho2: np.ndarray
    u1_2: np.ndarray
    theta2: np.ndarray
    phi2: np.ndarray


# ---------------------------------------------------------------------------
# sound speed


def sound_speed_matrix(A: float) -> np.ndarray:
    """Coefficient matrix of the order-delta system acting on d_x(rho1, u1, theta1, phi1)."""
    return np.array(
        [
            [-A, 1.0, 0.0, 0.0],
            [1.0, -A, 1.0, 1.0],
            [0.0, 2.0 / 3.0, -A, 0.0],
            [1.0, 0.0, 0.0, -1.0],
        ]
    )


def sound_speed_determinant(A: float, row_scales: Sequence[float] | None = None) -> float:
    m = sound_speed_matrix(A)
    if row_scales is not None:
        m = np.asarray(row_scales, dtype=float)[:, None] * m
    return float(np.linalg.det(m))


def find_sound_speed(bracket=(0.5, 3.0), row_scales=None) -> SoundSpeed:
    """Unique positive A in ``bracket`` for which the order-delta system is singular."""
    lo, hi = bracket
    f = lambda a: sound_speed_determinant(a, row_scales)  # noqa: E731
    if f(lo) * f(hi) > 0:
        raise RuntimeError(
            f"determinant has no sign change on [{lo}, {hi}]: "
            f"det={f(lo):.3e}, {f(hi):.3e}"
        )
    return SoundSpeed(brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def _a(A) -> float:
    return float(A)


# ---------------------------------------------------------------------------
# exact solutions


def soliton_params(A, c: float) -> tuple[float, float]:
    """(amplitude, inverse width) of the travelling sech^2 wave with speed ``c``."""
    A = _a(A)
    return 27.0 * A * c / 29.0, math.sqrt(c * A / 2.0)


def kdv_soliton(grid: SpatialGrid, A, c: float, x0: float | None = None, t: float = 0.0):
    """Periodised soliton a*sech^2(k(x - x0 - c t)), centre wrapped into the box."""
    amp, k = soliton_params(A, c)
    if x0 is None:
        x0 = grid.length / 2
    s = (grid.nodes - x0 - c * t + grid.length / 2) % grid.length - grid.length / 2
    return amp / np.cosh(k * s) ** 2


def sine_packet(grid: SpatialGrid, amplitudes: Sequence[float]) -> np.ndarray:
    """sum_m a_m sin(2 pi m x / L), m = 1, 2, ..."""
    out = grid.zeros()
    for m, a in enumerate(amplitudes, start=1):
        out += a * np.sin(2 * np.pi * m * grid.nodes / grid.length)
    return out


# ---------------------------------------------------------------------------
# right-hand sides


def kdv_rhs(rho1, grid: SpatialGrid, A) -> np.ndarray:
    """d_t rho1 = -(1/2A) [(58/9) rho1 d_x rho1 + d_x^3 rho1]."""
    A = _a(A)
    rho1 = as_field(rho1, grid, "rho1")
    flux = 0.5 * NONLINEAR * product(grid, rho1, rho1)
    return -(spectral_derivative(flux, grid, 1) + spectral_derivative(rho1, grid, 3)) / (2 * A)


def kdv_linearized_rhs(rho1, drho, grid: SpatialGrid, A) -> np.ndarray:
    """Directional derivative of ``kdv_rhs`` at rho1 along drho."""
    A = _a(A)
    flux = NONLINEAR * rho1 * drho
    return -(spectral_derivative(flux, grid, 1) + spectral_derivative(drho, grid, 3)) / (2 * A)


def kdv2_rhs(rho1, rho2, grid: SpatialGrid, A, g=None) -> np.ndarray:
    """d_t rho2 from the forced linearised KdV equation."""
    A = _a(A)
    if g is None:
        g = kdv2_source_g(rho1, grid, A)
    flux = NONLINEAR * product(grid, rho1, rho2)
    return (g - spectral_derivative(flux, grid, 1) - spectral_derivative(rho2, grid, 3)) / (2 * A)


# ---------------------------------------------------------------------------
# integrating-factor RK4


def _linear_symbol(grid: SpatialGrid, A) -> np.ndarray:
    # -(1/2A) (ik)^3 = i k^3 / (2A)
    return 1j * grid.rwavenumbers**3 / (2 * _a(A))


def kdv_stable_dt(rho, grid: SpatialGrid, A, safety: float = 0.5) -> float:
    """Advective step bound for IF-RK4; dispersion is integrated exactly."""
    speed = NONLINEAR / (2 * _a(A)) * max(float(np.max(np.abs(rho))), 1e-300)
    kmax = grid.rwavenumbers[grid.dealias_mask][-1]
    return safety * 2.8 / (speed * kmax)


def _check_finite(arr, what, t):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"{what} became non-finite at t={t:.6g}")


def _if_rk4(u0, nonlinear, lin, grid, t0, times, dt):
    """Integrate u_t = L u + N(u, t) with the exponential of L applied exactly.

    Returns the solution (physical space) at each of ``times``; the step is
    shrunk per output interval so every output time is hit exactly.
    """
    uh = np.fft.rfft(u0)
    t = t0
    out = []
    for t_out in times:
        span = t_out - t
        if span < -1e-14:
            raise ValueError("output times must be non-decreasing and >= the start time")
        nsteps = max(int(math.ceil(span / dt - 1e-9)), 0)
        if nsteps:
            h = span / nsteps
            e_half = np.exp(lin * h / 2)
            e_full = e_half * e_half
            for _ in range(nsteps):
                k1 = nonlinear(uh, t)
                k2 = nonlinear(e_half * (uh + 0.5 * h * k1), t + h / 2)
                k3 = nonlinear(e_half * uh + 0.5 * h * k2, t + h / 2)
                k4 = nonlinear(e_full * uh + h * e_half * k3, t + h)
                uh = e_full * uh + h / 6 * (e_full * k1 + 2 * e_half * (k2 + k3) + k4)
                t += h
                _check_finite(uh, "solution", t)
        t = t_out
        out.append(np.fft.irfft(uh, n=grid.n))
    return out


def _output_times(t_final, output_times):
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if output_times is None:
        return [float(t_final)]
    times = sorted(float(s) for s in output_times)
    if times[-1] > t_final + 1e-12 or times[0] < 0:
        raise ValueError("output times must lie in [0, t_final]")
    if abs(times[-1] - t_final) > 1e-12:
        times.append(float(t_final))
    return times


def kdv_solve(initial, grid: SpatialGrid, A, t_final: float, dt: float, output_times=None) -> list[KdVState]:
    """Evolve rho1 with IF-RK4; returns states at t=0 and at each output time."""
    A = _a(A)
    rho0 = as_field(initial, grid, "initial")
    bound = kdv_stable_dt(rho0, grid, A)
    if dt > bound:
        raise ValueError(f"dt={dt:.3e} exceeds the advective stability bound {bound:.3e}")
    times = _output_times(t_final, output_times)
    lin = _linear_symbol(grid, A)
    ik = 1j * grid.rwavenumbers
    mask = grid.dealias_mask
    coef = NONLINEAR / (4 * A)

    def nonlinear(uh, t):
        uh = np.where(mask, uh, 0.0)
        u = np.fft.irfft(uh, n=grid.n)
        wh = np.fft.rfft(u * u)
        wh[~mask] = 0.0
        return -coef * ik * wh

    snaps = _if_rk4(rho0, nonlinear, lin, grid, 0.0, times, dt)
    return [KdVState(rho1=rho0.copy(), time=0.0)] + [
        KdVState(rho1=s, time=t) for s, t in zip(snaps, times)
    ]


class _HermiteTrajectory:
    """Cubic Hermite interpolation of rho1(t) using kdv_rhs as the time slope."""

    def __init__(self, states: Sequence[KdVState], grid, A):
        self.t = np.array([s.time for s in states])
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        self.u = [s.rho1 for s in states]
        self.du = [kdv_rhs(s.rho1, grid, A) for s in states]

    def __call__(self, t):
        i = int(np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2))
        t0, t1 = self.t[i], self.t[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * self.u[i] + h10 * h * self.du[i] + h01 * self.u[i + 1] + h11 * h * self.du[i + 1]


def kdv2_solve(rho1_trajectory: Sequence[KdVState], rho2_initial, grid: SpatialGrid, A, dt: float) -> list[KdVState]:
    """Evolve rho2 along a stored rho1 trajectory.

    rho1 between stored samples is reconstructed by cubic Hermite interpolation
    (slopes from ``kdv_rhs``), so the samples must be dense enough for the
    requested accuracy.  Output states are returned at the trajectory times.
    """
    A = _a(A)
    traj = list(rho1_trajectory)
    if len(traj) < 2:
        raise ValueError("rho1 trajectory needs at least two samples")
    if abs(traj[0].time) > 1e-14:
        raise ValueError(f"trajectory starts at t={traj[0].time}, rho2 initial data is at t=0")
    rho2_0 = as_field(rho2_initial, grid, "rho2_initial")
    interp = _HermiteTrajectory(traj, grid, A)
    lin = _linear_symbol(grid, A)
    ik = 1j * grid.rwavenumbers
    mask = grid.dealias_mask

    def nonlinear(uh, t):
        r1 = interp(t)
        r2 = np.fft.irfft(np.where(mask, uh, 0.0), n=grid.n)
        wh = np.fft.rfft(dealiased(r1) * r2)
        wh[~mask] = 0.0
        gh = np.fft.rfft(kdv2_source_g(r1, grid, A))
        return (gh - NONLINEAR * ik * wh) / (2 * A)

    def dealiased(f):
        fh = np.fft.rfft(f)
        fh[~mask] = 0.0
        return np.fft.irfft(fh, n=grid.n)

    times = [s.time for s in traj[1:]]
    snaps = _if_rk4(rho2_0, nonlinear, lin, grid, 0.0, times, dt)
    out = [KdVState(rho1=traj[0].rho1, rho2=rho2_0.copy(), time=0.0)]
    out += [KdVState(rho1=s.rho1, rho2=r2, time=s.time) for s, r2 in zip(traj[1:], snaps)]
    return out


# ---------------------------------------------------------------------------
# expansion fields


def first_order_fields(rho1, A):
    """(u1_1, theta1, phi1) = (A rho1, 2/3 rho1, rho1)."""
    rho1 = np.asarray(rho1, dtype=float)
    return _a(A) * rho1, (2.0 / 3.0) * rho1, rho1.copy()


def source_h11(rho1, grid: SpatialGrid, A, rho1_t=None) -> np.ndarray:
    """Mean-zero h11 = -int^x [d_t rho1 + d_x(rho1 u1_1)]."""
    A = _a(A)
    rho1 = as_field(rho1, grid, "rho1")
    if rho1_t is None:
        rho1_t = kdv_rhs(rho1, grid, A)
    integrand = rho1_t + spectral_derivative(A * rho1 * rho1, grid, 1)
    return -spectral_antiderivative(integrand, grid)


def source_h11_t(rho1, grid: SpatialGrid, A, rho1_t=None) -> np.ndarray:
    """d_t h11 by the chain rule through the KdV flow (no time differencing)."""
    A = _a(A)
    if rho1_t is None:
        rho1_t = kdv_rhs(rho1, grid, A)
    rho1_tt = kdv_linearized_rhs(rho1, rho1_t, grid, A)
    integrand = rho1_tt + spectral_derivative(2 * A * rho1 * rho1_t, grid, 1)
    return -spectral_antiderivative(integrand, grid)


def kdv2_source_terms(rho1, grid: SpatialGrid, A) -> dict[str, np.ndarray]:
    """h11, d_t h11, h12, h13 and g = h12 - h13/A, assembled term by term."""
    A = _a(A)
    rho1 = as_field(rho1, grid, "rho1")
    D = lambda f, k=1: spectral_derivative(f, grid, k)  # noqa: E731
    r = rho1
    r_t = kdv_rhs(r, grid, A)
    u1, th1, ph1 = first_order_fields(r, A)
    h = source_h11(r, grid, A, r_t)
    h_t = source_h11_t(r, grid, A, r_t)
    r_x = D(r)
    r_xx = D(r, 2)

    h12 = (
        -A * r * r * D(u1)
        + r * D(r * th1)
        + r * r * D(ph1)
        + D(ph1**3 / 6)
        - h_t
        - 2 * A * D(r * h)
        + r * r * r_x / 9
        - D(r_xx - 0.5 * r * r, 3)
        + D(r * r_xx)
        - D(r * 0.5 * r * r)
    )
    h13 = (
        -(2.0 / 3.0) * D(r * h)
        - (2 * r * r_t) / 9
        + (4.0 / 9.0) * r * D(h)
        - (2.0 / 27.0) * A * r * r * r_x
        - A * r * D(r * r) / 9
        + (2.0 / 3.0) * h * r_x
    )
    return {"h11": h, "h11_t": h_t, "h12": h12, "h13": h13, "g": h12 - h13 / A}


def kdv2_source_g(rho1, grid: SpatialGrid, A) -> np.ndarray:
    """Forcing g(rho1) of the second-order equation; depends on rho1 only."""
    return kdv2_source_terms(rho1, grid, A)["g"]


def second_order_fields(rho1, rho2, grid: SpatialGrid, A, h11=None):
    """(u1_2, theta2, phi2) with u1_2 = A rho2 + h11."""
    A = _a(A)
    rho1 = as_field(rho1, grid, "rho1")
    rho2 = as_field(rho2, grid, "rho2")
    if h11 is None:
        h11 = source_h11(rho1, grid, A)
    u1_2 = A * rho2 + h11
    theta2 = (2.0 / 3.0) * rho2 - rho1**2 / 9.0
    phi2 = rho2 + spectral_derivative(rho1, grid, 2) - 0.5 * rho1**2
    return u1_2, theta2, phi2


def expansion_profile(rho1, rho2, grid: SpatialGrid, A) -> ExpansionProfile:
    A = _a(A)
    rho1 = as_field(rho1, grid, "rho1")
    rho2 = grid.zeros() if rho2 is None else as_field(rho2, grid, "rho2")
    u1, th1, ph1 = first_order_fields(rho1, A)
    u2, th2, ph2 = second_order_fields(rho1, rho2, grid, A)
    return ExpansionProfile(rho1, u1, th1, ph1, rho2, u2, th2, ph2)


def profile_time_derivatives(profile: ExpansionProfile, grid: SpatialGrid, A, rho2_t=None) -> dict[str, np.ndarray]:
    """Time derivatives of every expansion field via the KdV flows and the chain rule."""
    A = _a(A)
    r1, r2 = profile.rho1, profile.rho2
    r1_t = kdv_rhs(r1, grid, A)
    if rho2_t is None:
        rho2_t = kdv2_rhs(r1, r2, grid, A)
    h_t = source_h11_t(r1, grid, A, r1_t)
    return {
        "rho1": r1_t,
        "u1_1": A * r1_t,
        "theta1": (2.0 / 3.0) * r1_t,
        "phi1": r1_t,
        "rho2": rho2_t,
        "u1_2": A * rho2_t + h_t,
        "theta2": (2.0 / 3.0) * rho2_t - (2.0 / 9.0) * r1 * r1_t,
        "phi2": rho2_t + spectral_derivative(r1_t, grid, 2) - r1 * r1_t,
    }


def cascade_residual(order: int, profile: ExpansionProfile, rho1_t, rho2_t, grid: SpatialGrid, A) -> list[tuple[float, float]]:
    """(L2, Linf) of each of the four lines of the order-1 or order-2 cascade."""
    A = _a(A)
    D = lambda f, k=1: spectral_derivative(f, grid, k)  # noqa: E731
    p = profile
    if order == 1:
        lines = [
            -A * D(p.rho1) + D(p.u1_1),
            D(p.rho1) - A * D(p.u1_1) + D(p.theta1) + D(p.phi1),
            (2.0 / 3.0) * D(p.u1_1) - A * D(p.theta1),
            p.rho1 - p.phi1,
        ]
    elif order == 2:
        r1_t = as_field(rho1_t, grid, "rho1_t")
        # u1_1 and theta1 are slaved to rho1, so their time derivatives follow
        u1_t = A * r1_t
        th1_t = (2.0 / 3.0) * r1_t
        lines = [
            r1_t - A * D(p.rho2) + D(p.u1_2) + D(p.rho1 * p.u1_1),
            u1_t
            - A * D(p.u1_2)
            - A * p.rho1 * D(p.u1_1)
            + p.u1_1 * D(p.u1_1)
            + D(p.theta2)
            + D(p.rho2)
            + D(p.rho1 * p.theta1)
            + D(p.phi2)
            + p.rho1 * D(p.phi1),
            th1_t
            - A * D(p.theta2)
            + (2.0 / 3.0) * D(p.u1_2)
            + (2.0 / 3.0) * p.theta1 * D(p.u1_1)
            + p.u1_1 * D(p.theta1),
            D(p.phi1, 2) - p.phi2 - 0.5 * p.phi1**2 + p.rho2,
        ]
    else:
        raise ValueError(f"cascade order must be 1 or 2, got {order}")
    return [field_norms(line, grid) for line in lines]
