"""Builders for diagonal linear operators and pseudo-spectral nonlinearities.

Linear differential operators with constant coefficients diagonalize in
Fourier space; each builder returns the elementwise complex multiplier.
Nonlinear differential operators are evaluated pseudo-spectrally: mask
the input spectrum, transform to state space, apply the pointwise
nonlinearity, transform back, then apply any outer derivative and
scaling.

Sign conventions follow the catalog forms, e.g. convection with scale
``b`` is ``-(b/2) * div(u (x) u)`` and the gradient norm is
``-(b/2) * |grad u|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .spectral import DealiasMask, Grid, derivative_diagonal

__all__ = [
    "DiagonalLinearOperator",
    "UnbalancedAdvection",
    "DiagonalDiffusion",
    "AnisotropicDiffusion",
    "MixedDispersion",
    "MixedHyperDiffusion",
    "SpatialMixSpec",
    "Convection",
    "SingleChannelConvection",
    "GradientNorm",
    "Polynomial",
    "VorticityConvection",
    "GeneralNonlinearity",
    "GrayScottReaction",
    "NonlinearSpec",
    "build_isotropic_linear",
    "build_spatially_mixed_linear",
    "build_nonlinear",
    "inverse_laplacian",
    "laplacian_symbol",
]


@dataclass(frozen=True)
class DiagonalLinearOperator:
    """Elementwise complex multiplier representing a diagonalized operator.

    ``values`` broadcasts against per-channel spectra; shape is either the
    grid's spectral shape (shared across channels) or ``(C,) + spectral``.
    """

    grid: Grid
    values: np.ndarray
    num_channels: int = 1


def laplacian_symbol(grid: Grid) -> np.ndarray:
    """Fourier symbol of the Laplacian: ``sum_d (i kappa_d)^2 = -|kappa|^2``."""
    out = np.zeros(grid.spectral_shape, dtype=np.complex128)
    for axis in range(grid.num_dims):
        out = out + derivative_diagonal(grid, 2, axis)
    return out


def build_isotropic_linear(coefficients, grid: Grid) -> DiagonalLinearOperator:
    """Operator ``a_0 + sum_{j>=1} a_j sum_axes (i kappa_axis)^j``.

    ``coefficients`` lists ``a_0 .. a_S`` by derivative order; the order-0
    term contributes once, not per axis.
    """
    coeffs = np.asarray(coefficients, dtype=np.float64)
    values = np.full(grid.spectral_shape, complex(coeffs[0]) if coeffs.size else 0.0)
    for order in range(1, coeffs.size):
        if coeffs[order] == 0.0:
            continue
        for axis in range(grid.num_dims):
            values = values + coeffs[order] * derivative_diagonal(grid, order, axis)
    return DiagonalLinearOperator(grid=grid, values=values)


@dataclass(frozen=True)
class UnbalancedAdvection:
    """Advection with a distinct velocity per axis: ``-c . grad u``."""

    velocities: tuple[float, ...]


@dataclass(frozen=True)
class DiagonalDiffusion:
    """Per-axis diffusivities: ``div(nu (.) grad u)``."""

    diffusivities: tuple[float, ...]


@dataclass(frozen=True)
class AnisotropicDiffusion:
    """Full diffusivity matrix: ``div(A grad u)``; A symmetric PSD."""

    matrix: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class MixedDispersion:
    """Spatially-mixed dispersion: ``xi * 1 . grad(laplace u)``."""

    coefficient: float


@dataclass(frozen=True)
class MixedHyperDiffusion:
    """Spatially-mixed hyper-diffusion: ``-zeta * laplace(laplace u)``."""

    coefficient: float


SpatialMixSpec = Union[
    UnbalancedAdvection,
    DiagonalDiffusion,
    AnisotropicDiffusion,
    MixedDispersion,
    MixedHyperDiffusion,
]


def build_spatially_mixed_linear(spec: SpatialMixSpec, grid: Grid) -> DiagonalLinearOperator:
    """Diagonals for the spatially-mixing linear dynamics."""
    d = grid.num_dims
    first = [derivative_diagonal(grid, 1, a) for a in range(d)]
    if isinstance(spec, UnbalancedAdvection):
        if len(spec.velocities) != d:
            raise ValueError(f"need {d} velocities, got {len(spec.velocities)}")
        values = -sum(c * ik for c, ik in zip(spec.velocities, first))
    elif isinstance(spec, DiagonalDiffusion):
        if len(spec.diffusivities) != d:
            raise ValueError(f"need {d} diffusivities, got {len(spec.diffusivities)}")
        values = sum(
            nu * derivative_diagonal(grid, 2, a) for a, nu in enumerate(spec.diffusivities)
        )
    elif isinstance(spec, AnisotropicDiffusion):
        matrix = np.asarray(spec.matrix, dtype=np.float64)
        if matrix.shape != (d, d):
            raise ValueError(f"diffusivity matrix must be {d}x{d}, got {matrix.shape}")
        if not np.allclose(matrix, matrix.T):
            raise ValueError("diffusivity matrix must be symmetric")
        if np.linalg.eigvalsh(matrix).min() < -1e-14:
            raise ValueError("diffusivity matrix must be positive semi-definite")
        values = np.zeros(grid.spectral_shape, dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                if matrix[i, j] == 0.0:
                    continue
                if i == j:
                    values = values + matrix[i, j] * derivative_diagonal(grid, 2, i)
                else:
                    values = values + matrix[i, j] * first[i] * first[j]
    elif isinstance(spec, MixedDispersion):
        lap = laplacian_symbol(grid)
        values = spec.coefficient * sum(first) * lap
    elif isinstance(spec, MixedHyperDiffusion):
        lap = laplacian_symbol(grid)
        values = -spec.coefficient * lap * lap
    else:
        raise TypeError(f"unknown spatial-mix spec {type(spec).__name__}")
    return DiagonalLinearOperator(grid=grid, values=np.asarray(values, dtype=np.complex128))


@dataclass(frozen=True)
class Convection:
    """``-(b/2) * div(u (x) u)``; channels equal dimensions.

    With ``conservative=False`` the first-principles form ``-b (u . grad) u``
    is used instead.
    """

    scale: float
    conservative: bool = True


@dataclass(frozen=True)
class SingleChannelConvection:
    """``-(b/2) * (1 . grad) u^2`` on a single channel."""

    scale: float


@dataclass(frozen=True)
class GradientNorm:
    """``-(b/2) * |grad u|^2`` on a single channel."""

    scale: float


@dataclass(frozen=True)
class Polynomial:
    """Elementwise ``sum_j c_j u^j`` with ``coefficients = (c_0, c_1, ...)``."""

    coefficients: tuple[float, ...]


@dataclass(frozen=True)
class VorticityConvection:
    """2D streamfunction-vorticity advection ``-b (v . grad) u``.

    The velocity is the perpendicular gradient of the streamfunction
    obtained from a spectral Poisson solve.  An optional steady cosine
    forcing along the second axis (wavenumber ``forcing_wavenumber``,
    amplitude ``forcing_scale``) is added as a constant spectral term.
    Any linear drag belongs in the diagonal linear operator, not here.
    """

    scale: float
    forcing_wavenumber: int = 0
    forcing_scale: float = 0.0


@dataclass(frozen=True)
class GeneralNonlinearity:
    """``b0 u^2 - (b1/2)(1 . grad) u^2 - (b2/2)|grad u|^2`` on one channel.

    Each term matches the dedicated variant with the same coefficient.
    """

    quadratic: float = 0.0
    convection: float = 0.0
    gradient_norm: float = 0.0


@dataclass(frozen=True)
class GrayScottReaction:
    """Two-species reaction ``(-u0 u1^2 + f, +u0 u1^2)``.

    The feed constant enters channel 0 here; the linear decay terms
    ``-f u0`` and ``-(f + k) u1`` belong in the linear diagonals.
    """

    feed: float


NonlinearSpec = Union[
    Convection,
    SingleChannelConvection,
    GradientNorm,
    Polynomial,
    VorticityConvection,
    GeneralNonlinearity,
    GrayScottReaction,
]


def _expected_channels(spec: NonlinearSpec, grid: Grid) -> int:
    if isinstance(spec, Convection):
        return grid.num_dims
    if isinstance(spec, GrayScottReaction):
        return 2
    return 1


def inverse_laplacian(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    """Divide each mode by ``-|kappa|^2``; the mean mode is set to zero.

    The zero-mean convention fixes the gauge of the streamfunction.
    """
    lap = laplacian_symbol(grid).real
    inv = np.zeros_like(lap)
    np.divide(1.0, lap, out=inv, where=lap != 0.0)
    return spectrum * inv


def build_nonlinear(spec: NonlinearSpec, grid: Grid, dealias: DealiasMask):
    """Compile a nonlinear spec into a spectrum-to-spectrum callable.

    The returned function masks its input before every evaluation and
    accepts leading batch axes ahead of the ``(C,) + spectral`` core.
    """
    axes = grid.spatial_axes
    shape = grid.spatial_shape
    mask = dealias.mask
    channels = _expected_channels(spec, grid)

    def to_state(spectrum):
        return np.fft.irfftn(spectrum, s=shape, axes=axes)

    def to_spectrum(state):
        return np.fft.rfftn(state, axes=axes)

    def check(spectrum):
        if spectrum.shape[-grid.num_dims - 1] != channels:
            raise ValueError(
                f"nonlinearity expects {channels} channels, got shape {spectrum.shape}"
            )

    if isinstance(spec, Convection):
        derivs = [derivative_diagonal(grid, 1, a) for a in range(grid.num_dims)]
        return _make_convection(spec, grid, mask, derivs)

    if isinstance(spec, SingleChannelConvection):
        derivs = [derivative_diagonal(grid, 1, a) for a in range(grid.num_dims)]
        outer = sum(derivs)
        b = spec.scale

        def single_channel_convection(spectrum):
            check(spectrum)
            masked = np.where(mask, spectrum, 0.0)
            u = to_state(masked)
            return -(b / 2.0) * (outer * to_spectrum(u * u))

        return single_channel_convection

    if isinstance(spec, GradientNorm):
        derivs = [derivative_diagonal(grid, 1, a) for a in range(grid.num_dims)]
        b = spec.scale

        def gradient_norm(spectrum):
            check(spectrum)
            masked = np.where(mask, spectrum, 0.0)
            acc = 0.0
            for d in range(grid.num_dims):
                g = to_state(derivs[d] * masked)
                acc = acc + g * g
            return -(b / 2.0) * to_spectrum(acc)

        return gradient_norm

    if isinstance(spec, Polynomial):
        coeffs = tuple(float(c) for c in spec.coefficients)

        def polynomial(spectrum):
            check(spectrum)
            masked = np.where(mask, spectrum, 0.0)
            u = to_state(masked)
            acc = np.zeros_like(u)
            power = np.ones_like(u)
            for c in coeffs:
                if c != 0.0:
                    acc = acc + c * power
                power = power * u
            return to_spectrum(acc)

        return polynomial

    if isinstance(spec, VorticityConvection):
        if grid.num_dims != 2:
            raise ValueError("vorticity convection requires a 2D grid")
        d0 = derivative_diagonal(grid, 1, 0)
        d1 = derivative_diagonal(grid, 1, 1)
        b = spec.scale
        forcing = None
        if spec.forcing_scale != 0.0 and spec.forcing_wavenumber != 0:
            y = grid.coordinate_mesh()[1]
            field = spec.forcing_scale * np.cos(
                spec.forcing_wavenumber * 2.0 * np.pi / grid.domain_extent * y
            )
            forcing = to_spectrum(field[None])

        def vorticity_convection(spectrum):
            check(spectrum)
            masked = np.where(mask, spectrum, 0.0)
            psi = inverse_laplacian(masked, grid)
            v0 = to_state(d1 * psi)
            v1 = -to_state(d0 * psi)
            g0 = to_state(d0 * masked)
            g1 = to_state(d1 * masked)
            out = -b * to_spectrum(v0 * g0 + v1 * g1)
            if forcing is not None:
                out = out + forcing
            return out

        return vorticity_convection

    if isinstance(spec, GeneralNonlinearity):
        derivs = [derivative_diagonal(grid, 1, a) for a in range(grid.num_dims)]
        outer = sum(derivs)
        b0, b1, b2 = spec.quadratic, spec.convection, spec.gradient_norm

        def general(spectrum):
            check(spectrum)
            masked = np.where(mask, spectrum, 0.0)
            u = to_state(masked)
            out = np.zeros_like(spectrum)
            if b0 != 0.0:
                out = out + b0 * to_spectrum(u * u)
            if b1 != 0.0:
                out = out - (b1 / 2.0) * (outer * to_spectrum(u * u))
            if b2 != 0.0:
                acc = 0.0
                for d in range(grid.num_dims):
                    g = to_state(derivs[d] * masked)
                    acc = acc + g * g
                out = out - (b2 / 2.0) * to_spectrum(acc)
            return out

        return general

    if isinstance(spec, GrayScottReaction):
        feed_dc = spec.feed * grid.num_points**grid.num_dims
        full = (slice(None),) * grid.num_dims
        dc = (Ellipsis, 0) + (0,) * grid.num_dims

        def gray_scott(spectrum):
            check(spectrum)
            masked = np.where(mask, spectrum, 0.0)
            u = to_state(masked)
            reaction = to_spectrum(u[(Ellipsis, 0) + full] * u[(Ellipsis, 1) + full] ** 2)
            out = np.empty_like(spectrum)
            out[(Ellipsis, 0) + full] = -reaction
            out[(Ellipsis, 1) + full] = reaction
            out[dc] += feed_dc
            return out

        return gray_scott

    raise TypeError(f"unknown nonlinear spec {type(spec).__name__}")


def _make_convection(spec: Convection, grid: Grid, mask: np.ndarray, derivs):
    """Multi-channel convection; split out to keep build_nonlinear readable."""
    axes = grid.spatial_axes
    shape = grid.spatial_shape
    d = grid.num_dims
    b = spec.scale

    def to_state(spectrum):
        return np.fft.irfftn(spectrum, s=shape, axes=axes)

    def to_spectrum(state):
        return np.fft.rfftn(state, axes=axes)

    def take(arr, channel):
        return arr[(Ellipsis, channel) + (slice(None),) * d]

    def put(arr, channel, value):
        arr[(Ellipsis, channel) + (slice(None),) * d] = value

    if spec.conservative:

        def convection(spectrum):
            if spectrum.shape[-d - 1] != d:
                raise ValueError(
                    f"convection expects {d} channels, got shape {spectrum.shape}"
                )
            masked = np.where(mask, spectrum, 0.0)
            u = to_state(masked)
            out = np.empty_like(spectrum)
            for e in range(d):
                acc = 0.0
                for a in range(d):
                    acc = acc + derivs[a] * to_spectrum(take(u, a) * take(u, e))
                put(out, e, -(b / 2.0) * acc)
            return out

    else:

        def convection(spectrum):
            if spectrum.shape[-d - 1] != d:
                raise ValueError(
                    f"convection expects {d} channels, got shape {spectrum.shape}"
                )
            masked = np.where(mask, spectrum, 0.0)
            u = to_state(masked)
            out = np.empty_like(spectrum)
            for e in range(d):
                acc = 0.0
                for a in range(d):
                    acc = acc + take(u, a) * to_state(derivs[a] * take(masked, e))
                put(out, e, -b * to_spectrum(acc))
            return out

    return convection
