"""Energy, dissipation and auxiliary functionals of the perturbation
(rho~, u~, theta~, phi~, f).

x-derivatives are spectral on the periodic grid; v-derivatives are fourth
order finite differences. ``f`` is sampled as an (n, m, m, m) array.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import SpatialGrid, spectral_derivative
from .kinetic import VelocityGrid
from .landau import WeightParams, japanese, sigma_norm_sq, velocity_gradient, weight_w, window_check

# multi-indices beta with 1 <= |beta| <= 2
BETAS_1 = [b for b in itertools.product(range(3), repeat=3) if sum(b) == 1]
BETAS_2 = [b for b in itertools.product(range(3), repeat=3) if sum(b) == 2]


@dataclass(frozen=True, eq=False)
class FunctionalInputs:
    grid: SpatialGrid
    vgrid: VelocityGrid
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    delta: float
    eps: float
    weight: WeightParams = field(default_factory=WeightParams)
    t: float = 0.0
    strict_window: bool = False
    C_tilde: float = 1.0

    def __post_init__(self):
        n = self.grid.n
        for name in ("rho", "u", "theta", "phi", "f"):
            if getattr(self, name) is None:
                raise ValueError(f"missing field {name!r}")
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[None, :]
        object.__setattr__(self, "u", u)
        for name in ("rho", "theta", "phi"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {a.shape}")
            object.__setattr__(self, name, a)
        if u.shape[-1] != n or u.shape[0] not in (1, 3):
            raise ValueError(f"u must have shape ({n},) or (3, {n}), got {u.shape}")
        m = self.vgrid.m
        f = np.asarray(self.f, dtype=float)
        if f.shape != (n, m, m, m):
            raise ValueError(f"f must have shape ({n}, {m}, {m}, {m}), got {f.shape}")
        object.__setattr__(self, "f", f)
        if not (self.delta > 0 and self.eps > 0):
            raise ValueError("delta and eps must be positive")
        if self.strict_window:
            res = window_check(self.eps, self.delta, self.C_tilde)
            if not res.passed:
                raise ValueError(f"(eps, delta) = ({self.eps}, {self.delta}) outside the window "
                                 f"[{res.lower:.3e}, {res.upper:.3e}]")

    # -- derivatives -----------------------------------------------------
    def dx(self, a, order):
        """order-th x-derivative along axis 0 (spectral)."""
        if order == 0:
            return a
        a = np.asarray(a)
        if a.ndim == 1:
            return spectral_derivative(a, self.grid, order)
        flat = a.reshape(a.shape[0], -1)
        k = self.grid.rwavenumbers
        fh = np.fft.rfft(flat, axis=0) * ((1j * k) ** order)[:, None]
        if order % 2 == 1 and self.grid.n % 2 == 0:
            fh[-1] = 0.0
        return np.fft.irfft(fh, n=self.grid.n, axis=0).reshape(a.shape)

    @cached_property
    def fx(self):
        return [self.dx(self.f, a) for a in range(3)]

    def dv(self, g, beta):
        for axis, count in enumerate(beta):
            for _ in range(count):
                g = velocity_gradient(g, self.vgrid)[..., axis]
        return g

    # -- norms -----------------------------------------------------------
    def l2sq(self, a) -> float:
        """||a||^2 over x (and v when a carries velocity axes)."""
        a = np.asarray(a)
        if a.ndim == 1:
            return float(np.sum(a * a) * self.grid.dx)
        return float(np.sum(self.vgrid.integrate(a * a)) * self.grid.dx)

    def wsq(self, alpha, beta):
        return weight_w(alpha, beta, self.t, self.vgrid.vstack, self.weight) ** 2

    def w_norm_sq(self, g, alpha, beta, extra=None) -> float:
        dens = g * g * self.wsq(alpha, beta)
        if extra is not None:
            dens = dens * extra
        return float(np.sum(self.vgrid.integrate(dens)) * self.grid.dx)

    def sigma_sq(self, g, alpha=None, beta=(0, 0, 0)) -> float:
        w = None if alpha is None else np.sqrt(self.wsq(alpha, beta))
        return float(np.sum(sigma_norm_sq(g, self.vgrid, weight=w)) * self.grid.dx)


def _macro_block(inp: FunctionalInputs, alpha: int) -> float:
    """||d^a(rho,u,theta)||^2 + ||d^a phi||^2 + delta ||d^a dx phi||^2."""
    s = sum(inp.l2sq(inp.dx(a, alpha)) for a in (inp.rho, inp.theta))
    s += sum(inp.l2sq(inp.dx(uc, alpha)) for uc in inp.u)
    s += inp.l2sq(inp.dx(inp.phi, alpha)) + inp.delta * inp.l2sq(inp.dx(inp.phi, alpha + 1))
    return s


def energy_e2(inp: FunctionalInputs) -> float:
    low = sum(_macro_block(inp, a) + inp.l2sq(inp.fx[a]) for a in (0, 1))
    high = _macro_block(inp, 2) + inp.l2sq(inp.fx[2])
    return low + inp.eps**2 / inp.delta * high


def _mixed_terms(inp: FunctionalInputs):
    """(alpha, beta, d^alpha_beta f) for |alpha|+|beta| <= 2, |beta| >= 1."""
    for beta in BETAS_1:
        for alpha in (0, 1):
            yield alpha, beta, inp.dv(inp.fx[alpha], beta)
    for beta in BETAS_2:
        yield 0, beta, inp.dv(inp.fx[0], beta)


def _weighted_f_sum(inp: FunctionalInputs, extra=None) -> float:
    zero = (0, 0, 0)
    s = sum(inp.w_norm_sq(inp.fx[a], a, zero, extra) for a in (0, 1))
    s += inp.eps**2 * inp.w_norm_sq(inp.fx[2], 2, zero, extra)
    s += sum(inp.w_norm_sq(g, a, b, extra) for a, b, g in _mixed_terms(inp))
    return s


def energy_weighted(inp: FunctionalInputs) -> float:
    return energy_e2(inp) + _weighted_f_sum(inp)


def dissipation_d2(inp: FunctionalInputs) -> float:
    d, e = inp.delta, inp.eps
    macro = sum(_macro_block(inp, a) for a in (1, 2))
    micro = sum(inp.sigma_sq(inp.fx[a]) for a in (0, 1)) + e**2 / d * inp.sigma_sq(inp.fx[2])
    return e / math.sqrt(d) * macro + micro / (d**1.5 * e)


def dissipation_weighted(inp: FunctionalInputs) -> float:
    d, e = inp.delta, inp.eps
    zero = (0, 0, 0)
    s = sum(inp.sigma_sq(inp.fx[a], a, zero) for a in (0, 1))
    s += e**2 * inp.sigma_sq(inp.fx[2], 2, zero)
    s += sum(inp.sigma_sq(g, a, b) for a, b, g in _mixed_terms(inp))
    return dissipation_d2(inp) + s / (d**1.5 * e)


def h_functional(inp: FunctionalInputs) -> float:
    jv2 = japanese(inp.vgrid.vstack) ** 2
    return _weighted_f_sum(inp, extra=jv2)
