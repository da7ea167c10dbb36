"""Periodic 1-D grids and pseudospectral calculus.

Fields are plain float64 numpy arrays sampled on ``SpatialGrid.nodes``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

ANTIDERIVATIVE_MEAN_TOL = 1e-10


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [0, length) with ``n`` nodes."""

    n: int
    length: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Full (fft-ordered) wavenumbers, symmetric about zero except Nyquist."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers matching ``np.fft.rfft`` output."""
        return 2 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m = np.arange(self.n // 2 + 1)
        return m <= self.n // 3

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n)


def as_field(f, grid: SpatialGrid, name: str = "field") -> np.ndarray:
    """Validate ``f`` as a finite real field on ``grid`` and return it as float64."""
    arr = np.asarray(f, dtype=float)
    if arr.shape != (grid.n,):
        raise ValueError(f"{name} has shape {arr.shape}, expected ({grid.n},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _derivative_symbol(grid: SpatialGrid, order: int) -> np.ndarray:
    sym = (1j * grid.rwavenumbers) ** order
    if order % 2:
        sym[-1] = 0.0  # Nyquist
    return sym


def spectral_derivative(f, grid: SpatialGrid, order: int = 1) -> np.ndarray:
    """d^order f / dx^order by multiplication with (ik)^order in Fourier space."""
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    f = as_field(f, grid)
    return np.fft.irfft(np.fft.rfft(f) * _derivative_symbol(grid, order), n=grid.n)


def spectral_antiderivative(f, grid: SpatialGrid) -> np.ndarray:
    """Mean-zero periodic primitive of ``f``.

    ``f`` must itself have (numerically) zero mean, otherwise no periodic
    primitive exists and ValueError is raised.
    """
    f = as_field(f, grid)
    mean = f.mean()
    scale = np.max(np.abs(f))
    if abs(mean) > ANTIDERIVATIVE_MEAN_TOL * scale:
        raise ValueError(
            f"integrand mean {mean:.3e} exceeds tolerance "
            f"{ANTIDERIVATIVE_MEAN_TOL:.0e} * |f|_inf = {ANTIDERIVATIVE_MEAN_TOL * scale:.3e}"
        )
    fh = np.fft.rfft(f)
    k = grid.rwavenumbers
    out = np.zeros_like(fh)
    out[1:] = fh[1:] / (1j * k[1:])
    out[-1] = 0.0
    return np.fft.irfft(out, n=grid.n)


def field_norms(f, grid: SpatialGrid) -> tuple[float, float]:
    """(L2, Linf) norms; L2 uses the periodic trapezoid rule."""
    f = as_field(f, grid)
    return float(np.sqrt(np.sum(f * f) * grid.dx)), float(np.max(np.abs(f), initial=0.0))


def fourier_l2(f, grid: SpatialGrid) -> float:
    """L2 norm computed from Fourier coefficients (Parseval)."""
    f = as_field(f, grid)
    c = np.fft.fft(f) / grid.n
    return float(np.sqrt(grid.length * np.sum(np.abs(c) ** 2)))


def dealias(f, grid: SpatialGrid) -> np.ndarray:
    """Zero the upper third of the spectrum (2/3 rule)."""
    fh = np.fft.rfft(f)
    fh[~grid.dealias_mask] = 0.0
    return np.fft.irfft(fh, n=grid.n)


def product(grid: SpatialGrid, *fields) -> np.ndarray:
    """Pointwise product of fields with 2/3-rule truncation of inputs and result."""
    out = np.ones(grid.n)
    for f in fields:
        out = out * dealias(f, grid)
    return dealias(out, grid)


def hyperviscosity_filter(grid: SpatialGrid, nu: float, dt: float) -> np.ndarray:
    """Spectral multiplier exp(-nu k^8 dt) of the eighth-order hyperviscosity."""
    return np.exp(-nu * grid.rwavenumbers**8 * dt)


def hyperviscosity_for_damping(grid: SpatialGrid, dt: float, damping: float = 1e-3) -> float:
    """Coefficient whose per-step damping of the highest retained mode equals ``damping``."""
    kmax = grid.rwavenumbers[grid.dealias_mask][-1]
    return -np.log1p(-damping) / (kmax**8 * dt)
