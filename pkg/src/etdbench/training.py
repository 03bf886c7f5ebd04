"""Unrolled-training objectives and the desk-scale linear-stencil emulator.

The unified objective rolls the emulator along a *main chain* of length T
and, from every main-chain state, rolls the reference solver along a
*branch chain* of length B, penalizing the mean squared difference at
every (t, b) combination:

    L(theta) = E_windows[ sum_{t=0}^{T-B} sum_{b=1}^{B}
                          w_t * w_b * MSE(f^(t+b)(u), P^b(f^t(u))) ]

T = B = 1 is one-step supervised training, T = B is supervised unrolling
(branches come from the stored data), and B = 1 with free T is diverted
chain training, which calls the reference solver on the fly.  Gradient
cuts (main-chain or branch) change which finite-difference perturbation
paths see the live parameters; they never change the objective value.

The shipped emulator is a two-parameter circular stencil, trained with a
damped Newton method on finite-difference derivatives; with two
parameters this is exact enough and keeps the module dependency-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .etdrk import Stepper

__all__ = [
    "Emulator",
    "LinearStencilEmulator",
    "IdentityEmulator",
    "UnrollConfig",
    "CorrectionLayout",
    "ComposedEmulator",
    "NewtonError",
    "unrolled_objective",
    "diverted_chain_objective",
    "objective_gradient",
    "fou_stencil",
    "train_newton",
    "compose_correction",
    "extract_windows",
]


class Emulator:
    """Parametric one-step state map: ``apply(theta, state) -> state``.

    ``apply`` must be pure and accept leading batch axes.
    """

    num_parameters: int = 0

    def apply(self, theta: np.ndarray, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def initial_parameters(self) -> np.ndarray:
        return np.zeros(self.num_parameters)


class LinearStencilEmulator(Emulator):
    """Circular cross-correlation with the size-two kernel [center, right].

    ``out[i] = theta[0] * u[i] + theta[1] * u[i + 1]`` with periodic wrap,
    so ``theta = [0, 1]`` shifts the state left by one cell -- the exact
    transport map at unit CFL.  Linear in both the parameters and the
    state.
    """

    num_parameters = 2

    def apply(self, theta: np.ndarray, state: np.ndarray) -> np.ndarray:
        return theta[0] * state + theta[1] * np.roll(state, -1, axis=-1)

    def initial_parameters(self) -> np.ndarray:
        return np.array([1.0, 0.0])


class IdentityEmulator(Emulator):
    """Parameterless identity map; useful as a no-op corrector."""

    num_parameters = 0

    def apply(self, theta: np.ndarray, state: np.ndarray) -> np.ndarray:
        return state


def fou_stencil(gamma1: float) -> np.ndarray:
    """First-order upwind stencil [1 - gamma1, gamma1] for advection.

    ``gamma1`` is the CFL number of the discrete dynamic; at 1 the
    stencil degenerates to the exact one-cell shift.  Returned for any
    value; stability (|gamma1| <= 1) is the caller's concern.
    """
    return np.array([1.0 - gamma1, gamma1])


@dataclass(frozen=True)
class UnrollConfig:
    """Main-chain length T, branch length B, weights, and gradient cuts.

    ``time_weights`` spans t = 0..T-B and ``branch_weights`` spans
    b = 1..B; omitted weights default to one.  ``cut_bptt`` freezes the
    main-chain propagation in derivative evaluations; ``cut_branch``
    freezes the branch targets.
    """

    num_steps: int
    branch_length: int = 1
    time_weights: Optional[tuple[float, ...]] = None
    branch_weights: Optional[tuple[float, ...]] = None
    cut_bptt: bool = False
    cut_branch: bool = False

    def __post_init__(self) -> None:
        if self.num_steps < 1:
            raise ValueError("main chain length must be >= 1")
        if not 1 <= self.branch_length <= self.num_steps:
            raise ValueError("branch length must satisfy 1 <= B <= T")
        for weights, size, label in (
            (self.time_weights, self.num_steps - self.branch_length + 1, "time"),
            (self.branch_weights, self.branch_length, "branch"),
        ):
            if weights is None:
                continue
            if len(weights) != size:
                raise ValueError(f"{label} weights must have length {size}")
            if any(w < 0 for w in weights):
                raise ValueError(f"{label} weights must be nonnegative")
        t_w = self.time_weights or (1.0,) * (self.num_steps - self.branch_length + 1)
        b_w = self.branch_weights or (1.0,) * self.branch_length
        if not any(tw * bw > 0 for tw in t_w for bw in b_w):
            raise ValueError("weights must not all be zero")

    @property
    def resolved_time_weights(self) -> tuple[float, ...]:
        return self.time_weights or (1.0,) * (self.num_steps - self.branch_length + 1)

    @property
    def resolved_branch_weights(self) -> tuple[float, ...]:
        return self.branch_weights or (1.0,) * self.branch_length


def extract_windows(data: np.ndarray, window: int) -> np.ndarray:
    """All length-``window`` snippets of every trajectory, stacked.

    ``data`` has shape (S, T+1, ...); the result has shape
    (S * (T + 2 - window), window, ...).  Used for full-batch objectives.
    """
    num_steps = data.shape[1]
    if window > num_steps:
        raise ValueError(
            f"window {window} exceeds trajectory length {num_steps}"
        )
    starts = num_steps - window + 1
    pieces = [data[:, s : s + window] for s in range(starts)]
    stacked = np.concatenate(pieces, axis=0)
    return stacked


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a - b) ** 2))


def unrolled_objective(
    emulator: Emulator,
    theta: np.ndarray,
    ref_stepper: Stepper,
    data,
    cfg: UnrollConfig,
    frozen_theta: Optional[np.ndarray] = None,
) -> float:
    """Full-batch unrolled objective over all windows of the dataset.

    ``data`` is a TrajectorySet or a raw (S, T+1, C, spatial...) array.
    For the t = 0 branches the stored snapshots serve as targets (they
    are exactly the reference rollout); deeper branches call the solver
    on the fly.  ``frozen_theta`` realizes gradient cuts: when set, the
    cut paths run at the frozen parameters while live paths use ``theta``.
    """
    array = getattr(data, "data", data)
    t_len, b_len = cfg.num_steps, cfg.branch_length
    windows = extract_windows(array, t_len + 1)
    theta_main = theta if (frozen_theta is None or not cfg.cut_bptt) else frozen_theta
    theta_branch = theta if (frozen_theta is None or not cfg.cut_branch) else frozen_theta

    # Main chain. With a BPTT cut only the final application of each
    # chain prefix runs live, so keep the frozen prefix states around.
    prefix = [windows[:, 0]]
    for _ in range(t_len):
        prefix.append(emulator.apply(theta_main, prefix[-1]))
    if frozen_theta is not None and cfg.cut_bptt:
        main = [prefix[0]] + [emulator.apply(theta, prefix[k]) for k in range(t_len)]
    else:
        main = prefix

    t_weights = cfg.resolved_time_weights
    b_weights = cfg.resolved_branch_weights
    total = 0.0
    for t in range(0, t_len - b_len + 1):
        if t == 0:
            branch_source = None  # stored targets
        else:
            branch_source = main[t] if theta_branch is theta else _rechain(
                emulator, theta_branch, windows[:, 0], t
            )
        state = branch_source
        for b in range(1, b_len + 1):
            weight = t_weights[t] * b_weights[b - 1]
            if t == 0:
                target = windows[:, b]
            else:
                state = ref_stepper.step(state)
                target = state
            if weight == 0.0:
                continue
            total += weight * _mse(main[t + b], target)
    return total


def _rechain(emulator: Emulator, theta: np.ndarray, start: np.ndarray, steps: int) -> np.ndarray:
    state = start
    for _ in range(steps):
        state = emulator.apply(theta, state)
    return state


def diverted_chain_objective(
    emulator: Emulator,
    theta: np.ndarray,
    ref_stepper: Stepper,
    data,
    num_steps: int,
) -> float:
    """Unrolled objective with one-step reference branches (B = 1)."""
    cfg = UnrollConfig(num_steps=num_steps, branch_length=1)
    return unrolled_objective(emulator, theta, ref_stepper, data, cfg)


def objective_gradient(
    objective: Callable[[np.ndarray], float],
    theta: np.ndarray,
    fd_step: float = 1e-6,
) -> np.ndarray:
    """Central finite-difference gradient with relative step size."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        h = fd_step * max(1.0, abs(theta[i]))
        plus = theta.copy()
        minus = theta.copy()
        plus[i] += h
        minus[i] -= h
        grad[i] = (objective(plus) - objective(minus)) / (2.0 * h)
    return grad


def _fd_hessian(
    objective: Callable[[np.ndarray], float], theta: np.ndarray, fd_step: float
) -> np.ndarray:
    n = theta.size
    hess = np.zeros((n, n))
    f0 = objective(theta)
    steps = np.array([fd_step * max(1.0, abs(theta[i])) for i in range(n)])
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        hess[i, i] = (objective(theta + ei) - 2.0 * f0 + objective(theta - ei)) / steps[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            hess[i, j] = hess[j, i] = (
                objective(theta + ei + ej)
                - objective(theta + ei - ej)
                - objective(theta - ei + ej)
                + objective(theta - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    return hess


class NewtonError(RuntimeError):
    """Newton training failed; ``best_theta`` carries the best iterate."""

    def __init__(self, message: str, best_theta: np.ndarray) -> None:
        super().__init__(message)
        self.best_theta = best_theta


def train_newton(
    objective: Callable[[np.ndarray], float],
    theta_init: np.ndarray,
    tol: float = 1e-12,
    max_iters: int = 100,
    fd_step: float = 1e-6,
) -> np.ndarray:
    """Minimize a smooth low-dimensional objective with damped Newton steps.

    Gradient and Hessian come from central finite differences; Levenberg
    damping is added whenever the Hessian is not positive definite or the
    step fails to decrease the objective.  Stops when the gradient norm
    or the step norm falls below ``tol``.
    """
    theta = np.asarray(theta_init, dtype=np.float64).copy()
    value = objective(theta)
    if not np.isfinite(value):
        raise NewtonError("objective is non-finite at the initial point", theta)
    for _ in range(max_iters):
        grad = objective_gradient(objective, theta, fd_step)
        if np.linalg.norm(grad) < tol:
            return theta
        hess = _fd_hessian(objective, theta, fd_step)
        damping = 0.0
        scale = max(np.abs(hess).max(), 1.0)
        step = None
        for _ in range(60):
            try:
                damped = hess + damping * np.eye(theta.size)
                np.linalg.cholesky(damped)
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                candidate = theta + step
                candidate_value = objective(candidate)
                if np.isfinite(candidate_value) and candidate_value <= value + 1e-18:
                    break
                step = None
            damping = max(damping * 10.0, 1e-12 * scale)
        if step is None:
            raise NewtonError("could not find a descending Newton step", theta)
        theta = theta + step
        value = objective(theta)
        if np.linalg.norm(step) < tol:
            return theta
    raise NewtonError(f"Newton did not converge in {max_iters} iterations", theta)


@dataclass(frozen=True)
class CorrectionLayout:
    """How a corrector couples to a coarse solver.

    ``sequential`` applies the corrector to the coarse-solver output;
    ``parallel`` adds the corrector output to the coarse output; ``none``
    leaves the corrector on its own (pure prediction).
    """

    variant: str = "none"
    coarse: Optional[Stepper] = None

    def __post_init__(self) -> None:
        if self.variant not in ("none", "sequential", "parallel"):
            raise ValueError(f"unknown correction variant {self.variant!r}")
        if self.variant != "none" and self.coarse is None:
            raise ValueError("correction layouts require a coarse stepper")


class ComposedEmulator(Emulator):
    """Neural-hybrid emulator: corrector plus coarse solver."""

    def __init__(self, layout: CorrectionLayout, corrector: Emulator) -> None:
        self.layout = layout
        self.corrector = corrector
        self.num_parameters = corrector.num_parameters

    def apply(self, theta: np.ndarray, state: np.ndarray) -> np.ndarray:
        if self.layout.variant == "sequential":
            return self.corrector.apply(theta, self.layout.coarse.step(state))
        if self.layout.variant == "parallel":
            return self.layout.coarse.step(state) + self.corrector.apply(theta, state)
        return self.corrector.apply(theta, state)

    def initial_parameters(self) -> np.ndarray:
        return self.corrector.initial_parameters()


def compose_correction(layout: CorrectionLayout, corrector: Emulator) -> Emulator:
    """Wire a corrector into a correction layout (see CorrectionLayout)."""
    if layout.variant == "none":
        return corrector
    return ComposedEmulator(layout, corrector)
