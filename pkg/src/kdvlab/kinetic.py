"""Velocity-space toolkit: Maxwellians, moments, the collision-invariant basis
and the macroscopic/microscopic projections.

Distributions are arrays sampled on a tensor ``VelocityGrid``; a leading
spatial axis is allowed wherever a single location is not required.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

K = 2.0 / 3.0
MIN_VMAX = 8.0


@dataclass(frozen=True)
class VelocityGrid:
    """Tensor grid on [-vmax, vmax]^3 with ``m`` points per axis.

    ``kind="trapezoid"`` gives uniform nodes with trapezoid weights;
    ``kind="hermite"`` gives Gauss-Hermite nodes stretched to reach vmax.
    """

    vmax: float = 10.0
    m: int = 64
    kind: str = "trapezoid"

    def __post_init__(self):
        if self.vmax < MIN_VMAX:
            raise ValueError(f"vmax must be >= {MIN_VMAX} to resolve Maxwellian tails, got {self.vmax}")
        if self.m < 4:
            raise ValueError("need at least 4 velocity points per axis")
        if self.kind not in ("trapezoid", "hermite"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")

    @cached_property
    def _rule(self):
        if self.kind == "trapezoid":
            x = np.linspace(-self.vmax, self.vmax, self.m)
            w = np.full(self.m, x[1] - x[0])
            w[[0, -1]] *= 0.5
            return x, w
        x, w = np.polynomial.hermite.hermgauss(self.m)
        s = self.vmax / x[-1]
        return s * x, s * w * np.exp(x * x)

    @property
    def nodes(self) -> np.ndarray:
        return self._rule[0]

    @property
    def weights1d(self) -> np.ndarray:
        return self._rule[1]

    @property
    def uniform(self) -> bool:
        return self.kind == "trapezoid"

    @property
    def h(self) -> float:
        if not self.uniform:
            raise ValueError("finite differences need the uniform (trapezoid) grid")
        return float(self.nodes[1] - self.nodes[0])

    @cached_property
    def v(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.nodes, self.nodes, self.nodes, indexing="ij"))

    @cached_property
    def vstack(self) -> np.ndarray:
        """Velocities as an (m, m, m, 3) array."""
        return np.stack(self.v, axis=-1)

    @cached_property
    def speed(self) -> np.ndarray:
        v1, v2, v3 = self.v
        return np.sqrt(v1 * v1 + v2 * v2 + v3 * v3)

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.weights1d
        return w[:, None, None] * w[None, :, None] * w[None, None, :]

    def integrate(self, f) -> np.ndarray:
        """Integral over velocity of the trailing three axes."""
        return np.tensordot(np.asarray(f), self.weights, axes=([-3, -2, -1], [0, 1, 2]))

    def inner(self, f, g) -> np.ndarray:
        return self.integrate(np.asarray(f) * np.asarray(g))


@dataclass(frozen=True)
class MaxwellianParams:
    rho: float
    u: tuple = (0.0, 0.0, 0.0)
    theta: float = 1.5

    def __post_init__(self):
        if not self.rho > 0 or not self.theta > 0:
            raise ValueError(f"rho and theta must be positive, got rho={self.rho}, theta={self.theta}")
        object.__setattr__(self, "u", tuple(float(c) for c in self.u))
        if len(self.u) != 3:
            raise ValueError("u must have three components")


GLOBAL = MaxwellianParams(1.0, (0.0, 0.0, 0.0), 1.5)


def _centered(params: MaxwellianParams, vgrid: VelocityGrid):
    u = params.u
    return tuple(vi - ui for vi, ui in zip(vgrid.v, u))


def maxwellian(params: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    c1, c2, c3 = _centered(params, vgrid)
    kt = K * params.theta
    return params.rho / (2 * math.pi * kt) ** 1.5 * np.exp(-(c1 * c1 + c2 * c2 + c3 * c3) / (2 * kt))


def global_maxwellian(vgrid: VelocityGrid) -> np.ndarray:
    return maxwellian(GLOBAL, vgrid)


def moments(F, vgrid: VelocityGrid):
    """(rho, momentum[3], energy density) of F against 1, v, |v|^2/2."""
    F = np.asarray(F, dtype=float)
    if not np.all(np.isfinite(F)):
        raise ValueError("distribution has non-finite values")
    v1, v2, v3 = vgrid.v
    rho = vgrid.integrate(F)
    mom = np.stack([vgrid.inner(F, vi) for vi in (v1, v2, v3)], axis=-1)
    energy = vgrid.integrate(F * 0.5 * vgrid.speed**2)
    return rho, mom, energy


def fit_params(rho, momentum, energy) -> MaxwellianParams:
    """Invert the moment map with internal energy E = theta."""
    rho = float(rho)
    if not rho > 0:
        raise ValueError(f"non-positive density {rho:.3e}; distribution is unphysical")
    u = np.asarray(momentum, dtype=float) / rho
    theta = float(energy) / rho - 0.5 * float(u @ u)
    return MaxwellianParams(rho, tuple(u), theta)


@dataclass(frozen=True)
class ChiBasis:
    """chi_0..chi_4 and their ratios chi_i / M (explicit polynomials)."""

    chi: np.ndarray
    ratio: np.ndarray
    dual: np.ndarray  # ratio times quadrature weights

    def gram(self, vgrid: VelocityGrid) -> np.ndarray:
        return np.tensordot(self.chi, self.dual, axes=([1, 2, 3], [1, 2, 3]))


@lru_cache(maxsize=16)
def chi_basis(params: MaxwellianParams, vgrid: VelocityGrid) -> ChiBasis:
    M = maxwellian(params, vgrid)
    c = _centered(params, vgrid)
    kt = K * params.theta
    rho = params.rho
    c2 = c[0] ** 2 + c[1] ** 2 + c[2] ** 2
    ratio = np.empty((5,) + M.shape)
    ratio[0] = 1.0 / math.sqrt(rho)
    for i in range(3):
        ratio[i + 1] = c[i] / math.sqrt(K * rho * params.theta)
    ratio[4] = (c2 / kt - 3.0) / math.sqrt(6 * rho)
    chi = ratio * M
    dual = ratio * vgrid.weights
    for a in (chi, ratio, dual):
        a.flags.writeable = False
    return ChiBasis(chi, ratio, dual)


def project_p0(h, params: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    """Projection onto span{chi_i}: sum_i <h, chi_i/M> chi_i."""
    b = chi_basis(params, vgrid)
    coef = np.tensordot(np.asarray(h, float), b.dual, axes=([-3, -2, -1], [1, 2, 3]))
    return np.tensordot(coef, b.chi, axes=([-1], [0]))


def project_p1(h, params: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    return np.asarray(h, float) - project_p0(h, params, vgrid)


def burnett_A(j: int, w) -> np.ndarray:
    """A_j(w) = (|w|^2 - 5)/2 w_j, j in 1..3; ``w`` has a trailing axis of length 3."""
    _check_index(j)
    w = np.asarray(w, dtype=float)
    return 0.5 * (np.sum(w * w, axis=-1) - 5.0) * w[..., j - 1]


def burnett_B(i: int, j: int, w) -> np.ndarray:
    """B_ij(w) = w_i w_j - delta_ij |w|^2 / 3."""
    _check_index(i)
    _check_index(j)
    w = np.asarray(w, dtype=float)
    out = w[..., i - 1] * w[..., j - 1]
    if i == j:
        out = out - np.sum(w * w, axis=-1) / 3.0
    return out


def _check_index(i):
    if i not in (1, 2, 3):
        raise ValueError(f"Burnett index must be 1, 2 or 3, got {i}")


def _rel_err(lhs, rhs, vgrid):
    num = math.sqrt(float(vgrid.integrate((lhs - rhs) ** 2)))
    den = math.sqrt(float(vgrid.integrate(rhs**2)))
    return num / den


def p1_identity_check(params: MaxwellianParams, vgrid: VelocityGrid, j: int) -> tuple[float, float]:
    """Relative errors of the two Burnett projection identities.

    P1(v_1 v_j M)                   = K theta B_1j(c) M
    P1((v_j |v|^2/2 - v_j u.v) M)   = (K theta)^{3/2} A_j(c) M
    with c = (v - u)/sqrt(K theta).
    """
    _check_index(j)
    M = maxwellian(params, vgrid)
    kt = K * params.theta
    v = vgrid.v
    cvec = np.stack(_centered(params, vgrid), axis=-1) / math.sqrt(kt)
    u = params.u
    lhs_b = project_p1(v[0] * v[j - 1] * M, params, vgrid)
    rhs_b = kt * burnett_B(1, j, cvec) * M
    u_dot_v = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    vj = v[j - 1]
    lhs_a = project_p1((0.5 * vj * vgrid.speed**2 - vj * u_dot_v) * M, params, vgrid)
    rhs_a = kt**1.5 * burnett_A(j, cvec) * M
    return _rel_err(lhs_b, rhs_b, vgrid), _rel_err(lhs_a, rhs_a, vgrid)
