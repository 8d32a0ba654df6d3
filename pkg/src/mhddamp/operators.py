"""
Fourier-space operators: truncation, Leray projection, derivatives and norms.

Everything here is exact coefficient algebra; no transforms are performed.
Integrals follow the convention of :mod:`mhddamp.fields`: for a field with
coefficients c(k), the squared L2 norm over the box is (2*pi)^3 sum |c(k)|^2.
"""

from __future__ import annotations

import numpy as np

from .fields import SpectralVectorField
from .grid import GridSpec


def friedrichs_truncate(s: SpectralVectorField, radius: float | None = None) -> SpectralVectorField:
    """Zero all coefficients with |k| >= radius (default: the grid cutoff).

    Idempotent; a radius beyond the Nyquist ball leaves the field unchanged.
    """
    if radius is None:
        mask = s.grid.keep_mask
    else:
        if radius <= 0:
            raise ValueError("truncation radius must be positive")
        mask = s.grid.k_sq < radius * radius
    return SpectralVectorField(s.coeffs * mask, s.grid)


def truncate_coeffs(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Raw-array form of :func:`friedrichs_truncate` at the grid cutoff."""
    return coeffs * grid.keep_mask


def leray_project(s: SpectralVectorField) -> SpectralVectorField:
    """Project onto divergence-free fields: c(k) -> c(k) - k (k.c)/|k|^2.

    The k = 0 mode passes through unchanged (a constant field is
    divergence-free).  Idempotent and self-adjoint for the discrete inner
    product.
    """
    return SpectralVectorField(leray_project_coeffs(s.coeffs, s.grid), s.grid)


def leray_project_coeffs(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    k_dot = grid.kx * coeffs[0] + grid.ky * coeffs[1] + grid.kz * coeffs[2]
    k_dot *= grid.inv_k_sq  # zero at k = 0: mean mode untouched
    out = coeffs.copy()
    out[0] -= grid.kx * k_dot
    out[1] -= grid.ky * k_dot
    out[2] -= grid.kz * k_dot
    return out


def gradient(s: SpectralVectorField) -> np.ndarray:
    """Spectral gradient tensor g[i, j] = coefficients of d s_i / d x_j.

    Shape (3, 3, N, N, N), complex.
    """
    g = np.empty((3, 3) + s.grid.shape, dtype=np.complex128)
    for i in range(3):
        g[i, 0] = 1j * s.grid.kx * s.coeffs[i]
        g[i, 1] = 1j * s.grid.ky * s.coeffs[i]
        g[i, 2] = 1j * s.grid.kz * s.coeffs[i]
    return g


def divergence(s: SpectralVectorField) -> np.ndarray:
    """Spectral scalar div(s) = i k . c(k), shape (N, N, N)."""
    return 1j * (s.grid.kx * s.coeffs[0] + s.grid.ky * s.coeffs[1] + s.grid.kz * s.coeffs[2])


def laplacian(s: SpectralVectorField, nu_h: float = 1.0, nu_v: float = 1.0) -> SpectralVectorField:
    """Anisotropic viscous operator: multiply by -(nu_h (k1^2+k2^2) + nu_v k3^2).

    With nu_h = nu_v = 1 this is the full Laplacian.
    """
    sym = viscous_symbol(s.grid, nu_h, nu_v)
    return SpectralVectorField(-sym * s.coeffs, s.grid)


def viscous_symbol(grid: GridSpec, nu_h: float, nu_v: float) -> np.ndarray:
    """Nonnegative multiplier nu_h (k1^2 + k2^2) + nu_v k3^2, shape (N, N, N)."""
    return nu_h * (grid.kx**2 + grid.ky**2) + nu_v * grid.kz**2


# Inner products and norms ------------------------------------------------


def inner_l2(a: SpectralVectorField, b: SpectralVectorField) -> float:
    """L2 inner product over the box, (2*pi)^3 sum Re(c_a . conj(c_b))."""
    return a.grid.volume * float(np.real(np.vdot(b.coeffs, a.coeffs)))


def l2_norm_sq(a: SpectralVectorField) -> float:
    return a.grid.volume * float(np.vdot(a.coeffs, a.coeffs).real)


def weighted_sum_sq(coeffs: np.ndarray, weight: np.ndarray, volume: float) -> float:
    """(2*pi)^3 sum_k weight(k) |c(k)|^2 accumulated over components."""
    return volume * float(np.sum(weight * (coeffs.real**2 + coeffs.imag**2)))


def sobolev_norm(s: SpectralVectorField, order: float, homogeneous: bool = False) -> float:
    """Sobolev norm of order ``order``.

    Inhomogeneous: weight (1 + |k|^2)^order; order 0 gives the L2 norm.
    Homogeneous: weight |k|^(2*order) with the k = 0 term omitted; for
    negative orders a nonzero mean mode is rejected (the norm is undefined).
    """
    g = s.grid
    if homogeneous:
        if order < 0:
            mean_amp = float(np.max(np.abs(s.coeffs[:, 0, 0, 0])))
            scale = float(np.max(np.abs(s.coeffs)))
            if mean_amp > 1e-14 * max(scale, 1e-300):
                raise ValueError(
                    "homogeneous norm of negative order requires a zero-mean field"
                )
        with np.errstate(divide="ignore"):
            weight = np.where(g.k_sq > 0, g.k_sq**order, 0.0)
    else:
        weight = (1.0 + g.k_sq) ** order
    return float(np.sqrt(weighted_sum_sq(s.coeffs, weight, g.volume)))


def divergence_l2(s: SpectralVectorField) -> float:
    """L2 norm of div(s) over the box."""
    d = divergence(s)
    return float(np.sqrt(s.grid.volume * np.vdot(d, d).real))


def h1_norm_pair(u: SpectralVectorField, b: SpectralVectorField) -> float:
    """Inhomogeneous H1 norm of the pair (u, b)."""
    return float(np.sqrt(sobolev_norm(u, 1.0) ** 2 + sobolev_norm(b, 1.0) ** 2))
