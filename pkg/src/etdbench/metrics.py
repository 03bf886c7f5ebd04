"""Rollout comparison metrics in state space and Fourier space.

Aggregation always runs in the same order: per sample, per channel,
compute the difference, reduce over space with the inner exponent, apply
the outer exponent, optionally divide by the target reduction
(normalized) or by the average of both reductions (symmetric), then
aggregate channels and finally average over samples.  Fourier reductions
weight each half-spectrum bin by its conjugate multiplicity so the MSE
and RMSE families satisfy Parseval equality with their state-space
counterparts exactly; MAE families do not.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import Grid, build_wavenumber_grid, conjugate_weights

__all__ = [
    "MetricDescriptor",
    "RolloutReport",
    "metric_from_name",
    "compute_metric",
    "correlation",
    "rollout_metrics",
]


@dataclass(frozen=True)
class MetricDescriptor:
    """Declarative description of one comparison metric.

    ``frequency_range`` restricts Fourier reductions to modes whose
    integer wavenumber norm lies in ``[k_lo, k_hi]``; ``derivative_order=1``
    adds one first-derivative term per axis to the plain term (an
    H1-style weighting).  Both options require ``space='fourier'``.
    """

    space: str = "state"  # state | fourier
    inner_exponent: float = 2.0
    outer_exponent: float = 1.0
    normalization: str = "absolute"  # absolute | normalized | symmetric
    comparison: str = "difference"  # difference | inner_product
    frequency_range: Optional[tuple[float, float]] = None
    derivative_order: int = 0
    channel_aggregation: str = "mean"  # mean | sum

    def __post_init__(self) -> None:
        if self.space not in ("state", "fourier"):
            raise ValueError(f"unknown space {self.space!r}")
        if self.normalization not in ("absolute", "normalized", "symmetric"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.comparison not in ("difference", "inner_product"):
            raise ValueError(f"unknown comparison {self.comparison!r}")
        if self.channel_aggregation not in ("mean", "sum"):
            raise ValueError(f"unknown channel aggregation {self.channel_aggregation!r}")
        if self.space == "state" and (
            self.frequency_range is not None or self.derivative_order != 0
        ):
            raise ValueError("frequency/derivative options require fourier space")
        if self.comparison == "inner_product" and self.normalization != "absolute":
            raise ValueError("inner_product comparison only supports absolute normalization")
        if self.derivative_order not in (0, 1):
            raise ValueError("derivative_order must be 0 or 1")


_NAME_PATTERN = re.compile(
    r"^mean_(?P<space>fourier_|H1_)?(?P<norm>n|s)?(?P<family>MSE|MAE|RMSE)$"
)


def metric_from_name(name: str) -> MetricDescriptor:
    """Build a descriptor from a report-file metric name.

    The grammar is ``mean_[fourier_|H1_][n|s]{MAE,MSE,RMSE}`` plus
    ``mean_correlation``.
    """
    if name == "mean_correlation":
        return MetricDescriptor(comparison="inner_product")
    match = _NAME_PATTERN.match(name)
    if match is None:
        raise ValueError(f"unknown metric name {name!r}")
    family = match.group("family")
    inner = 1.0 if family == "MAE" else 2.0
    outer = 0.5 if family == "RMSE" else 1.0
    norm = {"n": "normalized", "s": "symmetric", None: "absolute"}[match.group("norm")]
    space = "state"
    derivative = 0
    if match.group("space") == "fourier_":
        space = "fourier"
    elif match.group("space") == "H1_":
        space = "fourier"
        derivative = 1
    return MetricDescriptor(
        space=space,
        inner_exponent=inner,
        outer_exponent=outer,
        normalization=norm,
        derivative_order=derivative,
    )


def _with_sample_axis(array: np.ndarray, grid: Grid) -> np.ndarray:
    core = grid.num_dims + 1
    if array.ndim == core:
        return array[None]
    if array.ndim == core + 1:
        return array
    raise ValueError(f"expected (C, spatial...) or (S, C, spatial...), got {array.shape}")


def _state_reduction(x: np.ndarray, desc: MetricDescriptor, grid: Grid) -> np.ndarray:
    axes = tuple(range(-grid.num_dims, 0))
    reduced = np.mean(np.abs(x) ** desc.inner_exponent, axis=axes)
    return reduced**desc.outer_exponent


def _fourier_reduction(x: np.ndarray, desc: MetricDescriptor, grid: Grid) -> np.ndarray:
    axes = tuple(range(-grid.num_dims, 0))
    spectrum = np.fft.rfftn(x, axes=axes)
    weights = conjugate_weights(grid)
    if desc.frequency_range is not None:
        wave = build_wavenumber_grid(grid)
        norm_sq = sum(k.astype(np.float64) ** 2 for k in wave.integer_modes)
        lo, hi = desc.frequency_range
        in_range = (norm_sq >= lo**2) & (norm_sq <= hi**2)
        weights = weights * in_range
    volume = float(grid.num_points**grid.num_dims) ** 2
    terms = [np.abs(spectrum) ** desc.inner_exponent]
    if desc.derivative_order == 1:
        wave = build_wavenumber_grid(grid)
        for ik in wave.scaled:
            terms.append(np.abs(ik * spectrum) ** desc.inner_exponent)
    reduced = sum(np.sum(weights * t, axis=axes) for t in terms) / volume
    return reduced**desc.outer_exponent


def _reduction(x: np.ndarray, desc: MetricDescriptor, grid: Grid) -> np.ndarray:
    if desc.space == "state":
        return _state_reduction(x, desc, grid)
    return _fourier_reduction(x, desc, grid)


def compute_metric(
    desc: MetricDescriptor, pred: np.ndarray, target: np.ndarray, grid: Grid
) -> float:
    """Scalar comparison of prediction against target.

    Inputs carry shape ``(C, spatial...)`` or ``(S, C, spatial...)``.
    """
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    pred = _with_sample_axis(pred, grid)
    target = _with_sample_axis(target, grid)

    if desc.comparison == "inner_product":
        return _cosine_similarity(pred, target, grid, desc.channel_aggregation)

    per_channel = _reduction(pred - target, desc, grid)
    if desc.normalization == "normalized":
        denom = _reduction(target, desc, grid)
        if np.any(denom == 0.0):
            raise ValueError("degenerate target")
        per_channel = per_channel / denom
    elif desc.normalization == "symmetric":
        denom = 0.5 * (_reduction(target, desc, grid) + _reduction(pred, desc, grid))
        if np.any(denom == 0.0):
            raise ValueError("degenerate target")
        per_channel = per_channel / denom

    if desc.channel_aggregation == "mean":
        per_sample = per_channel.mean(axis=-1)
    else:
        per_sample = per_channel.sum(axis=-1)
    return float(per_sample.mean())


def _cosine_similarity(
    pred: np.ndarray, target: np.ndarray, grid: Grid, channel_aggregation: str
) -> float:
    axes = tuple(range(-grid.num_dims, 0))
    dot = np.sum(pred * target, axis=axes)
    norms = np.sqrt(np.sum(pred**2, axis=axes) * np.sum(target**2, axis=axes))
    if np.any(norms == 0.0):
        raise ValueError("zero-norm input")
    per_channel = dot / norms
    per_sample = (
        per_channel.mean(axis=-1)
        if channel_aggregation == "mean"
        else per_channel.sum(axis=-1)
    )
    return float(per_sample.mean())


def correlation(pred: np.ndarray, target: np.ndarray, grid: Grid) -> float:
    """Per-channel cosine similarity, channel-averaged then sample-averaged."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    pred = _with_sample_axis(pred, grid)
    target = _with_sample_axis(target, grid)
    return _cosine_similarity(pred, target, grid, "mean")


@dataclass(frozen=True)
class RolloutReport:
    """Per-step losses over a test horizon plus their geometric mean.

    ``aggregate`` is the geometric mean over the first ``horizon`` steps;
    if any of those losses is exactly zero the aggregate degenerates and
    is reported as 0 with ``degenerate=True``.
    """

    per_step: np.ndarray
    aggregate: float
    horizon: int
    degenerate: bool = False


def rollout_metrics(
    pred_traj: np.ndarray,
    ref_traj: np.ndarray,
    desc: MetricDescriptor,
    grid: Grid,
    horizon: int = 100,
) -> RolloutReport:
    """Per-step metric for t = 1..T plus the geometric-mean aggregate.

    Trajectories carry shape ``(S, T+1, C, spatial...)`` or
    ``(T+1, C, spatial...)`` and must start from identical states.
    """
    if pred_traj.shape != ref_traj.shape:
        raise ValueError(f"shape mismatch: {pred_traj.shape} vs {ref_traj.shape}")
    core = grid.num_dims + 2
    if pred_traj.ndim == core:
        pred_traj = pred_traj[None]
        ref_traj = ref_traj[None]
    if not np.array_equal(pred_traj[:, 0], ref_traj[:, 0]):
        raise ValueError("rollouts must start from identical states")
    num_steps = pred_traj.shape[1] - 1
    per_step = np.array(
        [
            compute_metric(desc, pred_traj[:, t], ref_traj[:, t], grid)
            for t in range(1, num_steps + 1)
        ]
    )
    window = per_step[: min(horizon, num_steps)]
    if np.any(window == 0.0):
        return RolloutReport(per_step=per_step, aggregate=0.0, horizon=horizon, degenerate=True)
    aggregate = float(np.exp(np.mean(np.log(window))))
    return RolloutReport(per_step=per_step, aggregate=aggregate, horizon=horizon)
