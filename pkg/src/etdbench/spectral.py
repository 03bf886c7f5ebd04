"""Periodic grids, real-FFT transforms, spectral derivatives, and dealiasing.

Conventions used throughout the package:

* A state ("spatial field") is a real float64 array of shape
  ``(C, N, [N, [N]])`` -- channels first, then one spatial axis per
  dimension.  Leading batch axes are allowed everywhere; transforms act
  on the trailing spatial axes only.
* A spectrum ("spectral field") is the complex array produced by an
  unnormalized forward real FFT over the spatial axes.  The LAST axis is
  halved to ``N//2 + 1`` entries; Hermitian symmetry is implicit in the
  layout, so inverse transforms are real by construction.
* The forward transform is unnormalized, the inverse carries the full
  ``1/N^D`` factor.  Every coefficient convention downstream depends on
  this choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "WavenumberGrid",
    "DealiasMask",
    "forward_transform",
    "inverse_transform",
    "build_wavenumber_grid",
    "derivative_diagonal",
    "dealias_mask",
    "conjugate_weights",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic Cartesian grid on ``(0, L)^D``.

    The left end of each cell is a degree of freedom; the right domain
    boundary is excluded (it aliases the left one under periodicity).

    Attributes:
        num_dims: Number of spatial dimensions (1, 2, or 3).
        num_points: Points per dimension; must be even and >= 4.
        domain_extent: Domain length ``L``, identical in every dimension.
    """

    num_dims: int
    num_points: int
    domain_extent: float = 1.0

    def __post_init__(self) -> None:
        if self.num_dims not in (1, 2, 3):
            raise ValueError(f"num_dims must be 1, 2, or 3, got {self.num_dims}")
        if self.num_points < 4 or self.num_points % 2 != 0:
            raise ValueError(f"num_points must be even and >= 4, got {self.num_points}")
        if not self.domain_extent > 0:
            raise ValueError(f"domain_extent must be positive, got {self.domain_extent}")

    @property
    def cell_width(self) -> float:
        return self.domain_extent / self.num_points

    @property
    def spatial_shape(self) -> tuple[int, ...]:
        return (self.num_points,) * self.num_dims

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        """Shape of one channel's half spectrum (last axis halved)."""
        return (self.num_points,) * (self.num_dims - 1) + (self.num_points // 2 + 1,)

    @property
    def spatial_axes(self) -> tuple[int, ...]:
        return tuple(range(-self.num_dims, 0))

    def axis_coordinates(self) -> np.ndarray:
        """Coordinates of the degrees of freedom along one axis."""
        return np.arange(self.num_points) * self.cell_width

    def coordinate_mesh(self) -> tuple[np.ndarray, ...]:
        """Full ``D``-dimensional coordinate arrays (indexing='ij')."""
        x = self.axis_coordinates()
        return tuple(np.meshgrid(*([x] * self.num_dims), indexing="ij"))


def _axis_modes(grid: Grid, axis: int) -> np.ndarray:
    """Signed integer wavenumbers along ``axis``, broadcastable to the spectrum.

    Leading axes use the standard signed ordering 0, 1, ..., N/2-1,
    -N/2, ..., -1; the last axis holds 0 .. N/2.
    """
    n = grid.num_points
    if axis < 0:
        axis += grid.num_dims
    if not 0 <= axis < grid.num_dims:
        raise ValueError(f"axis {axis} out of range for {grid.num_dims} dimensions")
    if axis == grid.num_dims - 1:
        k = np.arange(n // 2 + 1)
    else:
        k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    shape = [1] * grid.num_dims
    shape[axis] = k.size
    return k.reshape(shape)


@dataclass(frozen=True)
class WavenumberGrid:
    """Per-axis integer wavenumbers and scaled derivative symbols ``i*kappa``.

    ``kappa = 2*pi*k / L``; each entry of ``scaled`` is the elementwise
    first-derivative symbol for its axis, broadcastable to the spectrum.
    """

    integer_modes: tuple[np.ndarray, ...]
    scaled: tuple[np.ndarray, ...]


def build_wavenumber_grid(grid: Grid) -> WavenumberGrid:
    modes = tuple(_axis_modes(grid, a) for a in range(grid.num_dims))
    factor = 2.0 * np.pi / grid.domain_extent
    scaled = tuple(1j * factor * k.astype(np.float64) for k in modes)
    return WavenumberGrid(integer_modes=modes, scaled=scaled)


def derivative_diagonal(grid: Grid, order: int, axis: int) -> np.ndarray:
    """Elementwise symbol ``(i * 2*pi*k/L) ** order`` for one axis.

    For odd orders the Nyquist entries are zeroed so that derivatives of
    real fields stay real (the Nyquist mode has no well-defined sign).
    """
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    k = _axis_modes(grid, axis)
    ik = 1j * (2.0 * np.pi / grid.domain_extent) * k.astype(np.float64)
    diag = ik**order
    if order % 2 == 1:
        diag = np.where(np.abs(k) == grid.num_points // 2, 0.0, diag)
    return diag


@dataclass(frozen=True)
class DealiasMask:
    """Boolean retain-mask over the half spectrum plus its per-axis cutoff."""

    mask: np.ndarray
    cutoff: int

    def apply(self, spectrum: np.ndarray) -> np.ndarray:
        return np.where(self.mask, spectrum, 0.0)


def dealias_mask(grid: Grid, keep_fraction: float = 2.0 / 3.0) -> DealiasMask:
    """Per-axis truncation mask retaining modes with ``|k| <= floor(f*N/2)``.

    The multi-dimensional mask is the tensor product of the per-axis
    masks, not a radial cutoff.  A full-keep mask (``keep_fraction=1``)
    is the identity; it does not zero the Nyquist mode.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    cutoff = math.floor(keep_fraction * grid.num_points / 2)
    mask = np.ones(grid.spectral_shape, dtype=bool)
    for axis in range(grid.num_dims):
        mask &= np.abs(_axis_modes(grid, axis)) <= cutoff
    return DealiasMask(mask=mask, cutoff=cutoff)


def conjugate_weights(grid: Grid) -> np.ndarray:
    """Multiplicity of each half-spectrum bin in the full spectrum.

    Interior bins of the halved axis represent a conjugate pair (weight
    2); the self-conjugate columns ``k = 0`` and ``k = N/2`` appear once.
    With these weights Parseval reads
    ``sum(u**2) == sum(w * |u_hat|**2) / N**D``.
    """
    n = grid.num_points
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def _check_spatial_shape(field: np.ndarray, grid: Grid) -> None:
    if field.ndim < grid.num_dims or field.shape[-grid.num_dims :] != grid.spatial_shape:
        raise ValueError(
            f"field shape {field.shape} does not end in grid shape {grid.spatial_shape}"
        )


def _check_spectral_shape(spectrum: np.ndarray, grid: Grid) -> None:
    if (
        spectrum.ndim < grid.num_dims
        or spectrum.shape[-grid.num_dims :] != grid.spectral_shape
    ):
        raise ValueError(
            f"spectrum shape {spectrum.shape} does not end in {grid.spectral_shape}"
        )


def forward_transform(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Unnormalized forward real FFT over the spatial axes.

    Raises:
        ValueError: on shape mismatch or non-finite input.
    """
    _check_spatial_shape(field, grid)
    if not np.isfinite(field).all():
        raise ValueError("non-finite field")
    return np.fft.rfftn(field, axes=grid.spatial_axes)


def inverse_transform(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse real FFT; carries the ``1/N^D`` normalization, output is real."""
    _check_spectral_shape(spectrum, grid)
    return np.fft.irfftn(spectrum, s=grid.spatial_shape, axes=grid.spatial_axes)
