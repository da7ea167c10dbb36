"""Landau collision frequency, sigma-norms and the time-velocity weight.

sigma(v) is the Landau kernel convolved with the global Maxwellian. Because
the kernel is the Hessian of |xi|, sigma is the Hessian of the radial
potential r -> int |v - v*| mu(v*) dv*, so it only needs two radial profiles:

    sigma(v) = lam_par(|v|) vhat vhat^T + lam_perp(|v|) (I - vhat vhat^T).

Both profiles reduce to one-dimensional integrals via the shell theorem and
are tabulated once, then interpolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .kinetic import VelocityGrid

R_MAX = 30.0
N_TABLE = 241
REFINE_TOL = 1e-6
_NORM = (2 * math.pi) ** -1.5


def _mu_shell(s):
    # 4 pi s^2 mu(s)
    return 4 * math.pi * s * s * _NORM * math.exp(-0.5 * s * s)


def radial_profiles_quad(r: float) -> tuple[float, float]:
    """(lam_par, lam_perp) at radius r by adaptive quadrature."""
    r = float(r)
    if r < 0:
        raise ValueError("radius must be non-negative")
    outer_par = lambda s: _mu_shell(s) * 2.0 / (3.0 * s)
    if r == 0.0:
        val, _ = quad(outer_par, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)
        return val, val
    inner_par = lambda s: _mu_shell(s) * 2.0 * s * s / (3.0 * r**3)
    inner_perp = lambda s: _mu_shell(s) * (1.0 / r - s * s / (3.0 * r**3))
    kw = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    tail, _ = quad(outer_par, r, np.inf, **kw)
    par, _ = quad(inner_par, 0.0, r, **kw)
    perp, _ = quad(inner_perp, 0.0, r, **kw)
    return par + tail, perp + tail


def _asymptotic(r):
    r = np.asarray(r, dtype=float)
    return 2.0 / r**3, 1.0 / r - 1.0 / r**3


@dataclass(frozen=True)
class SigmaTable:
    r: np.ndarray
    lam_par: np.ndarray
    lam_perp: np.ndarray
    max_refinement_error: float

    def __call__(self, r):
        """Interpolated (lam_par, lam_perp) at radii r (any shape)."""
        r = np.asarray(r, dtype=float)
        par = np.empty_like(r)
        perp = np.empty_like(r)
        far = r > R_MAX
        near = ~far
        sp_par, sp_perp = _splines(self)
        rn = r[near]
        par[near] = sp_par(rn) * (1 + rn * rn) ** -1.5
        perp[near] = sp_perp(rn) * (1 + rn * rn) ** -0.5
        if np.any(far):
            par[far], perp[far] = _asymptotic(r[far])
        return par, perp


@lru_cache(maxsize=4)
def _splines(table: SigmaTable):
    # splines act on profiles rescaled by their decay rates, which stay O(1)
    jr = 1 + table.r**2
    return (CubicSpline(table.r, table.lam_par * jr**1.5),
            CubicSpline(table.r, table.lam_perp * jr**0.5))


# SigmaTable holds arrays, so hash by identity for the spline cache
SigmaTable.__hash__ = object.__hash__
SigmaTable.__eq__ = lambda a, b: a is b


@lru_cache(maxsize=1)
def sigma_table(n: int = N_TABLE) -> SigmaTable:
    """Build the radial table and verify it against fresh quadrature at midpoints."""
    r = np.concatenate([[0.0], np.logspace(-3, math.log10(R_MAX), n - 1)])
    vals = np.array([radial_profiles_quad(ri) for ri in r])
    table = SigmaTable(r, vals[:, 0], vals[:, 1], 0.0)
    mid = 0.5 * (r[1:] + r[:-1])
    exact = np.array([radial_profiles_quad(ri) for ri in mid])
    par, perp = table(mid)
    err = max(np.max(np.abs(par - exact[:, 0]) / exact[:, 0]),
              np.max(np.abs(perp - exact[:, 1]) / exact[:, 1]))
    if err > REFINE_TOL:
        raise RuntimeError(f"sigma table refinement disagreement {err:.2e} exceeds {REFINE_TOL:.0e}")
    return SigmaTable(r, vals[:, 0], vals[:, 1], float(err))


def collision_frequency(v) -> np.ndarray:
    """sigma_ij at velocities v; trailing axis of length 3, returns (..., 3, 3)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError("velocity must have a trailing axis of length 3")
    r = np.linalg.norm(v, axis=-1)
    par, perp = sigma_table()(r)
    safe = np.where(r > 0, r, 1.0)[..., None]
    vhat = np.where(r[..., None] > 0, v / safe, 0.0)
    proj = vhat[..., :, None] * vhat[..., None, :]
    eye = np.eye(3)
    return par[..., None, None] * proj + perp[..., None, None] * (eye - proj)


def sigma_bruteforce(v, m: int = 96, vmax: float = 12.0) -> np.ndarray:
    """Direct 3-D midpoint quadrature of the convolution (slow oracle)."""
    v = np.asarray(v, dtype=float)
    h = 2 * vmax / m
    x = -vmax + h * (np.arange(m) + 0.5)
    V = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    mu = _NORM * np.exp(-0.5 * np.sum(V * V, axis=-1))
    xi = v - V
    n = np.linalg.norm(xi, axis=-1)
    n = np.where(n > 0, n, np.inf)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            kern = ((i == j) - xi[..., i] * xi[..., j] / n**2) / n
            out[i, j] = out[j, i] = np.sum(kern * mu) * h**3
    return out


# --------------------------------------------------------------------------
# weights

@dataclass(frozen=True)
class WeightParams:
    l: int = 2
    q1: float = 0.1
    q2: float = 1.0

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 2:
            raise ValueError(f"l must be an integer >= 2, got {self.l}")
        if not 0 < self.q1 < 1:
            raise ValueError(f"q1 must lie in (0, 1), got {self.q1}")
        if not self.q2 > 0:
            raise ValueError(f"q2 must be positive, got {self.q2}")


def _order(beta) -> int:
    b = np.atleast_1d(np.asarray(beta, dtype=int))
    if np.any(b < 0):
        raise ValueError("multi-index entries must be non-negative")
    return int(b.sum())


def japanese(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


def weight_w(alpha: int, beta, t: float, v, params: WeightParams) -> np.ndarray:
    """w(alpha, beta)(t, v); ``v`` has a trailing axis of length 3."""
    total = int(alpha) + _order(beta)
    if alpha < 0 or params.l < total:
        raise ValueError(f"weight needs l >= |alpha|+|beta| = {total}, got l={params.l}")
    jv = japanese(v)
    rate = params.q1 / (1.0 + t) ** params.q2
    return jv ** (2 * (params.l - total)) * np.exp(rate * jv * jv / 2)


def weight_w_sq_dt(alpha: int, beta, t: float, v, params: WeightParams) -> np.ndarray:
    """Closed-form time derivative of w^2."""
    jv = japanese(v)
    w = weight_w(alpha, beta, t, v, params)
    return -params.q1 * params.q2 * (1.0 + t) ** (-(1.0 + params.q2)) * jv**2 * w**2


@dataclass(frozen=True)
class WindowResult:
    lower: float
    upper: float
    delta: float
    passed: bool


def window_check(eps: float, delta: float, C_tilde: float = 1.0, rtol: float = 1e-12) -> WindowResult:
    """Test eps^(2/3) <= delta <= eps^(2/5) / C_tilde (relative slack rtol)."""
    if not eps > 0 or not delta > 0:
        raise ValueError("eps and delta must be positive")
    lo = eps ** (2.0 / 3.0)
    hi = eps ** 0.4 / C_tilde
    ok = lo * (1 - rtol) <= delta <= hi * (1 + rtol)
    return WindowResult(lo, hi, delta, bool(ok))


# --------------------------------------------------------------------------
# norms

def velocity_gradient(g, vgrid: VelocityGrid) -> np.ndarray:
    """Fourth-order centered differences over the last three axes, (..., m, m, m, 3)."""
    g = np.asarray(g, dtype=float)
    h = vgrid.h
    nd = g.ndim
    comps = []
    for ax in range(nd - 3, nd):
        d = np.gradient(g, h, axis=ax, edge_order=2)
        sl = lambda a, b: tuple(slice(a, b) if k == ax else slice(None) for k in range(nd))
        m = g.shape[ax]
        d[sl(2, m - 2)] = (g[sl(0, m - 4)] - 8 * g[sl(1, m - 3)]
                           + 8 * g[sl(3, m - 1)] - g[sl(4, m)]) / (12 * h)
        comps.append(d)
    return np.stack(comps, axis=-1)


@lru_cache(maxsize=8)
def _grid_sigma(vgrid: VelocityGrid):
    r = vgrid.speed
    par, perp = sigma_table()(r)
    safe = np.where(r > 0, r, 1.0)
    vhat = vgrid.vstack / safe[..., None]
    return par, perp, vhat


def sigma_norm_sq(g, vgrid: VelocityGrid, weight=None, grad=None) -> np.ndarray:
    """Squared |g|_{sigma,w}; leading axes of g are kept."""
    g = np.asarray(g, dtype=float)
    if grad is None:
        grad = velocity_gradient(g, vgrid)
    par, perp, vhat = _grid_sigma(vgrid)
    radial = np.sum(grad * vhat, axis=-1)
    full = np.sum(grad * grad, axis=-1)
    # sigma v . v = lam_par |v|^2
    dens = par * radial**2 + perp * (full - radial**2) + 0.25 * par * vgrid.speed**2 * g * g
    if weight is not None:
        dens = dens * np.asarray(weight) ** 2
    val = vgrid.integrate(dens)
    if np.any(val < -1e-12):
        raise ArithmeticError(f"negative sigma-norm {np.min(val):.3e}; check gradient or sigma table")
    return np.maximum(val, 0.0)


def sigma_norm(g, vgrid: VelocityGrid, weight=None, grad=None):
    return np.sqrt(sigma_norm_sq(g, vgrid, weight, grad))


def three_term_norm(g, vgrid: VelocityGrid, weight=None, grad=None) -> float:
    """Sum of the three anisotropic weighted L2 pieces that the sigma-norm is comparable to."""
    g = np.asarray(g, dtype=float)
    if grad is None:
        grad = velocity_gradient(g, vgrid)
    w = 1.0 if weight is None else np.asarray(weight)
    jv = japanese(vgrid.vstack)
    _, _, vhat = _grid_sigma(vgrid)
    radial = np.sum(grad * vhat, axis=-1)
    cross = np.cross(grad, vhat)
    l2 = lambda h: math.sqrt(float(vgrid.integrate(h * h)))
    return (l2(w * jv**-0.5 * g) + l2(w * jv**-1.5 * radial)
            + math.sqrt(float(vgrid.integrate(np.sum(cross * cross, axis=-1) * (w * jv**-0.5) ** 2))))
