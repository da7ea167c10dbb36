"""Background profiles built from the expansion and their remainder terms.

The truncated expansion (rho_bar, u_bar, theta_bar, phi_bar) satisfies the
rescaled Euler-Poisson system up to delta^2 R1..R3 (tendency equations) and
delta^3 R4 (Poisson equation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import SpatialGrid, field_norms, spectral_derivative
from .kdv import ExpansionProfile, source_h11_t

SERIES_SWITCH = 0.1
_SERIES_TERMS = 14


@dataclass(frozen=True)
class BackgroundProfile:
    rho_bar: np.ndarray
    u_bar: np.ndarray
    theta_bar: np.ndarray
    phi_bar: np.ndarray
    delta: float


@dataclass(frozen=True)
class RemainderSet:
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    R4: np.ndarray

    def as_list(self):
        return [self.R1, self.R2, self.R3, self.R4]


def build_background(profile: ExpansionProfile, delta: float) -> BackgroundProfile:
    if not 0 < delta <= 0.5:
        raise ValueError(f"delta must lie in (0, 0.5], got {delta}")
    p = profile
    rho = 1 + delta * p.rho1 + delta**2 * p.rho2
    if np.any(rho <= 0):
        raise ValueError(f"background density non-positive (min {rho.min():.3e}); amplitude too large")
    u = delta * p.u1_1 + delta**2 * p.u1_2
    theta = 1.5 + 1.5 * delta * p.theta1 + 1.5 * delta**2 * p.theta2
    phi = delta * p.phi1 + delta**2 * p.phi2
    return BackgroundProfile(rho, u, theta, phi, delta)


def exp_quadratic_remainder(z) -> np.ndarray:
    """1 + z + z^2/2 - exp(z), without cancellation for small |z|."""
    z = np.asarray(z, dtype=float)
    out = -(np.expm1(z) - z - 0.5 * z * z)
    small = np.abs(z) < SERIES_SWITCH
    if np.any(small):
        zs = z[small]
        term = zs**3 / 6.0
        acc = np.zeros_like(zs)
        for n in range(3, 3 + _SERIES_TERMS):
            acc += term
            term = term * zs / (n + 1)
        out = np.where(small, 0.0, out)
        out[small] = -acc
    return out


def _time_derivatives(profile: ExpansionProfile, rho1_t, rho2_t, grid, A):
    r1 = profile.rho1
    h_t = source_h11_t(r1, grid, A, rho1_t)
    return {
        "u1_1": A * rho1_t,
        "rho2": rho2_t,
        "u1_2": A * rho2_t + h_t,
        "theta2": (2.0 / 3.0) * rho2_t - (2.0 / 9.0) * r1 * rho1_t,
    }


def compute_remainders(profile: ExpansionProfile, rho1_t, rho2_t, delta: float, grid: SpatialGrid, A) -> RemainderSet:
    """R1..R4 assembled term by term.

    R3 carries 3/2 d_t theta2: that coefficient is what the temperature
    equation produces at order delta^3 with theta_bar = 3/2(1 + ...).
    """
    A = float(A)
    p, d = profile, delta
    D = lambda f, k=1: spectral_derivative(f, grid, k)  # noqa: E731
    dt = _time_derivatives(p, np.asarray(rho1_t, float), np.asarray(rho2_t, float), grid, A)
    r1, r2 = p.rho1, p.rho2
    u1, u2 = p.u1_1, p.u1_2
    th1, th2 = p.theta1, p.theta2
    ph1, ph2 = p.phi1, p.phi2
    u1_t, u2_t = dt["u1_1"], dt["u1_2"]

    R1 = dt["rho2"] + D(r1 * u2) + D(r2 * u1) + d * D(r2 * u2)
    R2 = (
        r1 * u1_t + u2_t - A * r2 * D(u1) - A * r1 * D(u2) + D(u1 * u2)
        + r1 * u1 * D(u1) + D(r1 * th2) + D(r2 * th1) + r1 * D(ph2) + r2 * D(ph1)
        + d * (r2 * u1_t + r1 * u2_t - A * r2 * D(u2) + u2 * D(u2))
        + d * (r1 * D(u1 * u2) + r2 * u1 * D(u1) + D(r2 * th2) + r2 * D(ph2))
        + d**2 * (r2 * u2_t + r1 * u2 * D(u2) + r2 * D(u1 * u2))
        + d**3 * r2 * u2 * D(u2)
    )
    R3 = (
        1.5 * dt["theta2"] + th1 * D(u2) + th2 * D(u1) + 1.5 * u1 * D(th2) + 1.5 * u2 * D(th1)
        + d * (th2 * D(u2) + 1.5 * u2 * D(th2))
    )
    z = d * ph1 + d**2 * ph2
    R4 = D(ph2, 2) - ph1 * ph2 - 0.5 * d * ph2**2 + exp_quadratic_remainder(z) / d**3
    return RemainderSet(R1, R2, R3, R4)


def background_residuals(profile: ExpansionProfile, rho1_t, rho2_t, delta: float, grid: SpatialGrid, A) -> list[np.ndarray]:
    """Pointwise (LHS - delta^p R) of each background equation; zero up to round-off."""
    A = float(A)
    d = delta
    D = lambda f, k=1: spectral_derivative(f, grid, k)  # noqa: E731
    bg = build_background(profile, d)
    rem = compute_remainders(profile, rho1_t, rho2_t, d, grid, A)
    dt = _time_derivatives(profile, np.asarray(rho1_t, float), np.asarray(rho2_t, float), grid, A)
    rho_t = d * rho1_t + d**2 * dt["rho2"]
    u_t = d * dt["u1_1"] + d**2 * dt["u1_2"]
    th_t = 1.5 * (d * (2.0 / 3.0) * rho1_t + d**2 * dt["theta2"])
    rb, ub, tb, pb = bg.rho_bar, bg.u_bar, bg.theta_bar, bg.phi_bar
    e1 = rho_t - A / d * D(rb) + D(rb * ub) / d - d**2 * rem.R1
    e2 = (
        rb * u_t - A / d * rb * D(ub) + rb * ub * D(ub) / d
        + (2.0 / 3.0) / d * D(rb * tb) + rb * D(pb) / d - d**2 * rem.R2
    )
    e3 = th_t - A / d * D(tb) + (2.0 / 3.0) / d * tb * D(ub) + ub * D(tb) / d - d**2 * rem.R3
    e4 = -d * D(pb, 2) - rb + np.exp(pb) + d**3 * rem.R4
    return [e1, e2, e3, e4]


def hk_norm(f, grid: SpatialGrid, k: int) -> float:
    total = field_norms(f, grid)[0] ** 2
    for j in range(1, k + 1):
        total += field_norms(spectral_derivative(f, grid, j), grid)[0] ** 2
    return math.sqrt(total)


@dataclass
class RemainderTable:
    k: int
    rows: list[dict]
    passed: bool
    spread: list[float]

    def records(self):
        return [{"delta": r["delta"], "k": self.k, "norms": r["norms"]} for r in self.rows]


def remainder_bound_check(remainders: dict[float, RemainderSet], grid: SpatialGrid, k: int = 2, factor: float = 3.0) -> RemainderTable:
    """H^k norms of R1..R4 per delta; passes when max <= factor * min for each R."""
    if not 0 <= k <= 2:
        raise ValueError("k must be 0, 1 or 2")
    rows = []
    for delta in sorted(remainders, reverse=True):
        rows.append({"delta": float(delta), "norms": [hk_norm(r, grid, k) for r in remainders[delta].as_list()]})
    norms = np.array([r["norms"] for r in rows])
    spread = []
    passed = True
    for j in range(4):
        hi, lo = norms[:, j].max(), norms[:, j].min()
        spread.append(float(hi / lo) if lo > 0 else (1.0 if hi == 0 else math.inf))
        passed &= bool(hi <= factor * lo)
    return RemainderTable(k=k, rows=rows, passed=passed, spread=spread)
