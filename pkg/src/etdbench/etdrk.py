"""Exponential time differencing Runge-Kutta steppers of orders 0 through 4.

The linear part of a semi-linear PDE diagonalizes in Fourier space and is
integrated exactly through elementwise exponentials; the nonlinear part is
approximated with Runge-Kutta stages.  Stage coefficients are smooth
functions of ``z = L_hat * dt`` of the form ``(exp(z) - 1) / z`` that
cancel catastrophically for small ``|z|``; they are therefore evaluated
as means over a circular contour around each ``z`` (Kassam-Trefethen
averaging), which is accurate to machine precision for these entire
functions at the default radius/point count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import Grid, forward_transform, inverse_transform

__all__ = [
    "NonlinearFunction",
    "EtdrkCoefficients",
    "Stepper",
    "TrajectoryDiverged",
    "phi_coefficients",
    "make_stepper",
    "rollout",
]

# Contract: maps a (possibly batched) spectrum to a spectrum and applies
# the dealias mask to its input before the pointwise nonlinearity.
NonlinearFunction = Callable[[np.ndarray], np.ndarray]


class TrajectoryDiverged(RuntimeError):
    """A step produced non-finite values.

    Attributes:
        last_valid_step: Index of the last finite state in a rollout, if known.
        sample_index: Dataset sample that diverged, if known.
    """

    def __init__(
        self,
        message: str = "trajectory diverged",
        last_valid_step: Optional[int] = None,
        sample_index: Optional[int] = None,
    ) -> None:
        super().__init__(message)
        self.last_valid_step = last_valid_step
        self.sample_index = sample_index


def _contour_mean(fn, z: np.ndarray, radius: float, points: int) -> np.ndarray:
    """Mean of ``fn`` over the circle ``z + radius * e^{i theta_j}``.

    The half-offset angles keep every evaluation point off the real axis
    so no contour point coincides with a real root of the denominators.
    """
    theta = 2.0 * np.pi * (np.arange(points) + 0.5) / points
    circle = radius * np.exp(1j * theta)
    values = fn(np.asarray(z, dtype=np.complex128)[..., None] + circle)
    return values.mean(axis=-1)


@dataclass(frozen=True)
class EtdrkCoefficients:
    """Precomputed per-mode coefficients for one ETDRK order.

    ``exp_full`` and ``exp_half`` are exact elementwise exponentials of
    ``z`` and ``z/2``.  The remaining entries are the dimensionless stage
    fractions; they must be scaled by the time step when used.  At
    ``z = 0`` each equals its analytic limit.  Unused entries are None.
    """

    order: int
    exp_full: np.ndarray
    exp_half: Optional[np.ndarray] = None
    phi1: Optional[np.ndarray] = None  # (e^z - 1) / z
    phi2: Optional[np.ndarray] = None  # (e^z - 1 - z) / z^2
    half_phi: Optional[np.ndarray] = None  # (e^{z/2} - 1) / z
    f1: Optional[np.ndarray] = None  # (-4 - z + e^z (4 - 3z + z^2)) / z^3
    f2: Optional[np.ndarray] = None  # (2 + z + e^z (z - 2)) / z^3
    f3: Optional[np.ndarray] = None  # (-4 - 3z - z^2 + e^z (4 - z)) / z^3


def phi_coefficients(
    z: np.ndarray,
    order: int,
    contour_radius: float = 1.0,
    contour_points: int = 16,
) -> EtdrkCoefficients:
    """Evaluate the stage coefficients needed by ETDRK ``order`` at ``z``.

    Exponentials are computed directly; every fractional coefficient is a
    contour mean, applied uniformly to all modes.
    """
    if order not in (0, 1, 2, 3, 4):
        raise ValueError(f"order must be in 0..4, got {order}")
    if contour_points < 8:
        raise ValueError(f"contour_points must be >= 8, got {contour_points}")

    z = np.asarray(z, dtype=np.complex128)
    parts: dict = {"order": order, "exp_full": np.exp(z)}

    def mean(fn):
        return _contour_mean(fn, z, contour_radius, contour_points)

    if order >= 1:
        parts["phi1"] = mean(lambda w: (np.exp(w) - 1.0) / w)
    if order == 2:
        parts["phi2"] = mean(lambda w: (np.exp(w) - 1.0 - w) / w**2)
    if order >= 3:
        parts["exp_half"] = np.exp(z / 2.0)
        parts["half_phi"] = mean(lambda w: (np.exp(w / 2.0) - 1.0) / w)
        parts["f1"] = mean(lambda w: (-4.0 - w + np.exp(w) * (4.0 - 3.0 * w + w**2)) / w**3)
        parts["f2"] = mean(lambda w: (2.0 + w + np.exp(w) * (w - 2.0)) / w**3)
        parts["f3"] = mean(lambda w: (-4.0 - 3.0 * w - w**2 + np.exp(w) * (4.0 - w)) / w**3)
    return EtdrkCoefficients(**parts)


@dataclass(frozen=True)
class Stepper:
    """Precomputed time advancer for one semi-linear dynamic.

    Advances a real state by ``dt`` per public step, internally taking
    ``substeps`` equal exponential-integrator steps.  Immutable and pure:
    concurrent rollouts over one stepper are safe.
    """

    grid: Grid
    dt: float
    order: int
    coefficients: EtdrkCoefficients
    nonlinear: Optional[NonlinearFunction]
    substeps: int = 1
    num_channels: int = 1

    @property
    def dt_internal(self) -> float:
        return self.dt / self.substeps

    def _advance(self, spectrum: np.ndarray) -> np.ndarray:
        c = self.coefficients
        h = self.dt_internal
        n = self.nonlinear
        if self.order == 0 or n is None:
            return c.exp_full * spectrum
        n0 = n(spectrum)
        if self.order == 1:
            return c.exp_full * spectrum + h * c.phi1 * n0
        if self.order == 2:
            stage = c.exp_full * spectrum + h * c.phi1 * n0
            return stage + h * c.phi2 * (n(stage) - n0)
        if self.order == 3:
            a = c.exp_half * spectrum + h * c.half_phi * n0
            b = c.exp_full * spectrum + h * c.phi1 * (2.0 * n(a) - n0)
            return c.exp_full * spectrum + h * (
                c.f1 * n0 + 4.0 * c.f2 * n(a) + c.f3 * n(b)
            )
        # order 4
        a = c.exp_half * spectrum + h * c.half_phi * n0
        na = n(a)
        b = c.exp_half * spectrum + h * c.half_phi * na
        nb = n(b)
        cc = c.exp_half * a + h * c.half_phi * (2.0 * nb - n0)
        return c.exp_full * spectrum + h * (
            c.f1 * n0 + 2.0 * c.f2 * (na + nb) + c.f3 * n(cc)
        )

    def step_spectrum(self, spectrum: np.ndarray) -> np.ndarray:
        """Advance a spectrum by ``dt`` (``substeps`` internal steps)."""
        for _ in range(self.substeps):
            spectrum = self._advance(spectrum)
        return spectrum

    def step(self, state: np.ndarray) -> np.ndarray:
        """Advance a real state by ``dt``; raises on divergence.

        Accepts leading batch axes ahead of the ``(C, spatial...)`` core.
        """
        d = self.grid.num_dims
        if state.ndim < d + 1 or state.shape[-d - 1] != self.num_channels:
            raise ValueError(
                f"state shape {state.shape} incompatible with "
                f"{self.num_channels} channels on {self.grid.spatial_shape}"
            )
        spectrum = np.fft.rfftn(state, axes=self.grid.spatial_axes)
        spectrum = self.step_spectrum(spectrum)
        out = np.fft.irfftn(spectrum, s=self.grid.spatial_shape, axes=self.grid.spatial_axes)
        if not np.isfinite(out).all():
            raise TrajectoryDiverged("trajectory diverged")
        return out


def make_stepper(
    linear,
    nonlinear: Optional[NonlinearFunction],
    dt: float,
    order: int = 2,
    substeps: int = 1,
    grid: Optional[Grid] = None,
    num_channels: Optional[int] = None,
    contour_radius: float = 1.0,
    contour_points: int = 16,
) -> Stepper:
    """Build a stepper from a diagonal linear operator and a nonlinearity.

    ``linear`` is an elementwise complex multiplier broadcastable to the
    per-channel half spectrum -- either a raw array (``grid`` must then be
    given) or an object carrying ``.grid`` and ``.values`` such as
    ``operators.DiagonalLinearOperator``.  Coefficients are evaluated once
    at ``linear * dt / substeps``.  Without a nonlinearity the order is
    treated as 0 (the pure exponential integrator).
    """
    values = getattr(linear, "values", linear)
    grid = grid if grid is not None else getattr(linear, "grid", None)
    if grid is None:
        raise ValueError("grid is required when linear is a raw array")
    if num_channels is None:
        num_channels = getattr(linear, "num_channels", 1)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    effective_order = order if nonlinear is not None else 0
    z = np.asarray(values, dtype=np.complex128) * (dt / substeps)
    coeffs = phi_coefficients(z, effective_order, contour_radius, contour_points)
    return Stepper(
        grid=grid,
        dt=dt,
        order=effective_order,
        coefficients=coeffs,
        nonlinear=nonlinear,
        substeps=substeps,
        num_channels=num_channels,
    )


def rollout(
    stepper: Stepper,
    ic: np.ndarray,
    num_steps: int,
    warmup: int = 0,
) -> np.ndarray:
    """Autoregressively advance ``ic``, returning ``num_steps + 1`` snapshots.

    Warmup steps run first and are discarded; snapshot 0 is the
    post-warmup state.  On divergence the raised error carries the index
    of the last valid recorded step.
    """
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    state = ic
    try:
        for _ in range(warmup):
            state = stepper.step(state)
    except TrajectoryDiverged as err:
        raise TrajectoryDiverged("trajectory diverged during warmup") from err
    snapshots = np.empty((num_steps + 1,) + state.shape, dtype=np.float64)
    snapshots[0] = state
    for i in range(1, num_steps + 1):
        try:
            state = stepper.step(state)
        except TrajectoryDiverged as err:
            raise TrajectoryDiverged(
                f"trajectory diverged at step {i} (last valid step {i - 1})",
                last_valid_step=i - 1,
            ) from err
        snapshots[i] = state
    return snapshots


def transform_state(state: np.ndarray, grid: Grid) -> np.ndarray:
    """Validated forward transform (public-API convenience)."""
    return forward_transform(state, grid)


def transform_spectrum(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    """Validated inverse transform (public-API convenience)."""
    return inverse_transform(spectrum, grid)
