"""Rescaled Euler-Poisson system with Boltzmann electrons.

    delta d_t R     - A d_x R + d_x(R U)                                  = 0
    delta R d_t U   - A R d_x U + R U d_x U + 2/3 d_x(R Theta) + R d_x Pi = 0
    delta d_t Theta - A d_x Theta + 2/3 Theta d_x U + U d_x Theta         = 0
    delta d_x^2 Pi  = exp(Pi) - R

The velocity equation is advanced in non-conservative form (divided by R).
Pi is slaved to R and re-solved by Newton at every RK4 stage.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import SpatialGrid, as_field, field_norms, hyperviscosity_filter, hyperviscosity_for_damping, product, spectral_derivative

log = logging.getLogger(__name__)

NEWTON_MAXITER = 50
FILTER_OFF_DELTA = 0.05


class NewtonFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class FluidState:
    R: np.ndarray
    U: np.ndarray
    Theta: np.ndarray
    Pi: np.ndarray
    time: float = 0.0


@dataclass(frozen=True)
class EPParams:
    delta: float
    A: float
    dt: float = 1e-2
    poisson_tol: float = 1e-12
    c_cfl: float = 0.3
    # None: automatic policy (off for delta >= 0.05); 0.0 forces off
    hyperviscosity: float | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.poisson_tol <= 1e-10:
            raise ValueError("poisson_tol must be <= 1e-10")
        if not float(self.A) > 0 or not self.dt > 0:
            raise ValueError("A and dt must be positive")


@dataclass
class EPRun:
    """Trajectory plus solver diagnostics."""

    states: list[FluidState]
    dt: float
    nu: float
    filter_dissipation: float = 0.0
    newton_iterations: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


# ---------------------------------------------------------------------------
# Poisson


def poisson_residual(Pi, R, delta, grid: SpatialGrid) -> np.ndarray:
    return delta * spectral_derivative(Pi, grid, 2) - np.exp(Pi) + R


def _solve_linearized(F, ePi, delta, grid, tol, maxiter=500):
    """Solve (delta d_x^2 - e^Pi) s = -F by a fixed point preconditioned with the
    constant-coefficient operator (delta d_x^2 - c)."""
    c = 0.5 * (ePi.max() + ePi.min())
    inv = -1.0 / (delta * grid.rwavenumbers**2 + c)
    s = np.zeros_like(F)
    for _ in range(maxiter):
        rhs = -F + (ePi - c) * s
        s_new = np.fft.irfft(np.fft.rfft(rhs) * inv, n=grid.n)
        change = np.max(np.abs(s_new - s))
        s = s_new
        if change <= tol:
            break
    return s


def solve_poisson(R, params: EPParams, guess, grid: SpatialGrid, return_log: bool = False):
    """Newton iteration for delta Pi'' = exp(Pi) - R with Armijo backtracking.

    Returns Pi, or (Pi, residual_history) when ``return_log`` is set.
    """
    R = as_field(R, grid, "R")
    if np.any(R <= 0):
        raise ValueError("Poisson solve needs R > 0 everywhere")
    Pi = as_field(guess, grid, "guess").copy()
    delta, tol = params.delta, params.poisson_tol
    with np.errstate(over="ignore", invalid="ignore"):
        F = poisson_residual(Pi, R, delta, grid)
    res = float(np.max(np.abs(F)))
    if not math.isfinite(res):
        raise NewtonFailure("Poisson residual is non-finite at the initial guess")
    history = [res]
    it = 0
    while res >= tol:
        if it >= NEWTON_MAXITER:
            raise NewtonFailure(
                f"Newton did not converge in {NEWTON_MAXITER} iterations (|F|_inf={res:.3e}); "
                "R may be non-physical or the amplitude too large"
            )
        lin_tol = max(1e-3 * res * res, 1e-3 * tol)
        s = _solve_linearized(F, np.exp(Pi), delta, grid, lin_tol)
        lam = 1.0
        while True:
            trial = Pi + lam * s
            F_trial = poisson_residual(trial, R, delta, grid)
            res_trial = float(np.max(np.abs(F_trial)))
            if res_trial <= (1 - 1e-4 * lam) * res or lam < 1e-6:
                break
            lam *= 0.5
        Pi, F, res = trial, F_trial, res_trial
        history.append(res)
        it += 1
        if not math.isfinite(res):
            raise NewtonFailure("Newton iterate became non-finite")
    log.debug("poisson newton: %d iterations, residuals %s", it, history)
    return (Pi, history) if return_log else Pi


# ---------------------------------------------------------------------------
# dynamics


def equilibrium(grid: SpatialGrid, time: float = 0.0) -> FluidState:
    one = np.ones(grid.n)
    return FluidState(one.copy(), grid.zeros(), 1.5 * one, grid.zeros(), time)


def ep_rhs(state: FluidState, params: EPParams, grid: SpatialGrid):
    """Tendencies (dR, dU, dTheta); Pi is taken from ``state`` as given."""
    R, U, Th, Pi = state.R, state.U, state.Theta, state.Pi
    if np.any(R <= 0):
        raise ValueError("R must be positive")
    A, inv = float(params.A), 1.0 / params.delta
    D = lambda f: spectral_derivative(f, grid, 1)  # noqa: E731
    Rx, Ux, Thx = D(R), D(U), D(Th)
    dR = inv * (A * Rx - D(product(grid, R, U)))
    dU = inv * (
        A * Ux
        - product(grid, U, Ux)
        - (2.0 / 3.0) * Thx
        - (2.0 / 3.0) * product(grid, Th / R, Rx)
        - D(Pi)
    )
    dTh = inv * (A * Thx - (2.0 / 3.0) * product(grid, Th, Ux) - product(grid, U, Thx))
    return dR, dU, dTh


def max_speed(state: FluidState, A) -> float:
    return float(A) + float(np.max(np.abs(state.U))) + math.sqrt(float(np.max(state.Theta)))


def cfl_dt(state: FluidState, params: EPParams, grid: SpatialGrid) -> float:
    return params.c_cfl * params.delta * grid.dx / max_speed(state, params.A)


def make_state(R, U, Theta, params: EPParams, grid: SpatialGrid, guess=None, time: float = 0.0) -> FluidState:
    """Assemble a state whose potential satisfies the Poisson equation."""
    R = as_field(R, grid, "R")
    if guess is None:
        guess = np.log(R)
    Pi = solve_poisson(R, params, guess, grid)
    return FluidState(R, as_field(U, grid, "U"), as_field(Theta, grid, "Theta"), Pi, time)


def _check_state(s: FluidState, t: float):
    for name in ("R", "U", "Theta"):
        if not np.all(np.isfinite(getattr(s, name))):
            raise FloatingPointError(f"{name} became non-finite at t={t:.6g}")
    if np.any(s.R <= 0) or np.any(s.Theta <= 0):
        raise FloatingPointError(f"positivity lost at t={t:.6g} (min R={s.R.min():.3e}, min Theta={s.Theta.min():.3e})")


def ep_step(state: FluidState, params: EPParams, grid: SpatialGrid, dt: float) -> FluidState:
    """One classical RK4 step (dt may be negative); Pi re-solved at each stage."""

    def stage(base, k, h):
        R = base.R + h * k[0]
        if np.any(R <= 0) or not np.all(np.isfinite(R)):
            raise FloatingPointError(f"stage density invalid near t={base.time:.6g}")
        Pi = solve_poisson(R, params, base.Pi, grid)
        return FluidState(R, base.U + h * k[1], base.Theta + h * k[2], Pi, base.time + h)

    k1 = ep_rhs(state, params, grid)
    s2 = stage(state, k1, dt / 2)
    k2 = ep_rhs(s2, params, grid)
    s3 = stage(state, k2, dt / 2)
    k3 = ep_rhs(s3, params, grid)
    s4 = stage(state, k3, dt)
    k4 = ep_rhs(s4, params, grid)
    new = [
        getattr(state, name) + dt / 6 * (a + 2 * b + 2 * c + d)
        for name, a, b, c, d in zip(("R", "U", "Theta"), k1, k2, k3, k4)
    ]
    Pi = solve_poisson(new[0], params, s4.Pi, grid)
    return FluidState(new[0], new[1], new[2], Pi, state.time + dt)


def _filter_nu(params: EPParams, grid: SpatialGrid, dt: float) -> float:
    if params.hyperviscosity is not None:
        return float(params.hyperviscosity)
    if params.delta >= FILTER_OFF_DELTA:
        return 0.0
    return hyperviscosity_for_damping(grid, dt)


def ep_solve(initial: FluidState, params: EPParams, grid: SpatialGrid, t_final: float, output_times=None) -> EPRun:
    """RK4 integration from ``initial`` to ``t_final``.

    The step is min(params.dt, c_cfl * delta * dx / lambda_max), shrunk per
    output interval so that output times are hit exactly.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    res = float(np.max(np.abs(poisson_residual(initial.Pi, initial.R, params.delta, grid))))
    if res > params.poisson_tol:
        raise ValueError(f"initial state violates the Poisson relation (|F|_inf={res:.3e})")
    times = [float(t_final)] if output_times is None else sorted({float(s) for s in output_times} | {float(t_final)})
    dt = min(params.dt, cfl_dt(initial, params, grid))
    nu = _filter_nu(params, grid, dt)
    filt = hyperviscosity_filter(grid, nu, dt) if nu > 0 else None
    run = EPRun(states=[initial], dt=dt, nu=nu)
    state = initial
    for t_out in times:
        span = t_out - state.time
        if span <= 1e-14:
            continue
        nsteps = max(int(math.ceil(span / dt - 1e-9)), 1)
        h = span / nsteps
        for _ in range(nsteps):
            limit = params.delta * grid.dx / max_speed(state, params.A)
            if h > limit:
                raise FloatingPointError(f"CFL violated at t={state.time:.6g}: dt={h:.3e} > {limit:.3e}")
            state = ep_step(state, params, grid, h)
            if filt is not None:
                before = np.sum(state.R**2) * grid.dx
                R, U, Th = (np.fft.irfft(np.fft.rfft(f) * filt, n=grid.n) for f in (state.R, state.U, state.Theta))
                Pi = solve_poisson(R, params, state.Pi, grid)
                state = FluidState(R, U, Th, Pi, state.time)
                run.filter_dissipation += before - np.sum(R**2) * grid.dx
            _check_state(state, state.time)
        state = replace(state, time=t_out)
        run.states.append(state)
    if nu > 0:
        log.info("hyperviscosity nu=%.3e dissipated %.3e of int R^2", nu, run.filter_dissipation)
    return run


def mass(state: FluidState, grid: SpatialGrid) -> float:
    return float(np.sum(state.R) * grid.dx)


# ---------------------------------------------------------------------------
# linear waves


def acoustic_phase_speed(k_lab: float) -> float:
    """Lab-frame ion-acoustic phase speed of the linearised unscaled system."""
    return math.sqrt(5.0 / 3.0 + 1.0 / (1.0 + k_lab**2))


def linear_phase_speeds(params: EPParams, grid: SpatialGrid, mode: int = 1, eps: float = 1e-7) -> np.ndarray:
    """Lab-frame phase speeds of the discrete flow linearised about equilibrium.

    The tendency map is differentiated numerically along cos/sin perturbations
    of (R, U, Theta) in Fourier ``mode`` and restricted to exp(ikx).  Its
    eigenvalues lambda = -i Omega (scaled frame) map to lab speeds
    A + delta Omega / k.
    """
    eq = equilibrium(grid)
    k = 2 * np.pi * mode / grid.length
    x = grid.nodes
    e_minus = np.exp(-1j * k * x)
    M = np.zeros((3, 3), dtype=complex)
    for comp in range(3):
        resp = []
        for b in (np.cos(k * x), np.sin(k * x)):
            pm = []
            for sgn in (1.0, -1.0):
                fields = [eq.R.copy(), eq.U.copy(), eq.Theta.copy()]
                fields[comp] = fields[comp] + sgn * eps * b
                st = make_state(*fields, params, grid, guess=eq.Pi)
                pm.append(ep_rhs(st, params, grid))
            resp.append([(p - m) / (2 * eps) for p, m in zip(*pm)])
        for i in range(3):
            M[i, comp] = np.mean((resp[0][i] + 1j * resp[1][i]) * e_minus)
    omega = 1j * np.linalg.eigvals(M)
    return np.sort(float(params.A) + params.delta * omega.real / k)
