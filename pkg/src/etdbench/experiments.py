"""Desk-scale emulator-training experiments on the linear stencil.

Reproduces the advection stencil-learning study: train the two-parameter
circular stencil against the exact spectral advection stepper under
one-step, supervised-unrolled, or diverted-chain objectives, then score
test rollouts with the mean normalized RMSE and compare the learned
stencil against the first-order upwind baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .metrics import metric_from_name, rollout_metrics
from .scenarios import (
    IcConfig,
    ScenarioSpec,
    build_stepper_from_spec,
    generate_dataset,
    resolve_scenario,
)
from .training import (
    CorrectionLayout,
    LinearStencilEmulator,
    NewtonError,
    UnrollConfig,
    compose_correction,
    fou_stencil,
    train_newton,
    unrolled_objective,
)

__all__ = ["parse_methodology", "stencil_scenario", "run_stencil_experiment", "emulator_rollout"]


def parse_methodology(label: str) -> tuple[str, int]:
    """Parse a methodology label: ``one``, ``sup;T``, or ``div;T``."""
    if label == "one":
        return "sup", 1
    if ";" in label:
        kind, steps = label.split(";", 1)
        if kind in ("sup", "div") and steps.isdigit() and int(steps) >= 1:
            return kind, int(steps)
    raise ValueError(f"unknown methodology {label!r}")


def stencil_scenario(
    gamma1: float = 0.75,
    resolution: int = 30,
    cutoff: int = 5,
    train_samples: int = 5,
    train_steps: int = 200,
    test_samples: int = 50,
    test_steps: int = 200,
) -> ScenarioSpec:
    """The 1D advection scenario of the stencil-learning experiment."""
    return resolve_scenario(
        "diff_adv",
        dimension=1,
        resolution=resolution,
        gammas=(0.0, gamma1, 0.0, 0.0, 0.0),
        ic=IcConfig(cutoff=cutoff),
        train_samples=train_samples,
        train_steps=train_steps,
        test_samples=test_samples,
        test_steps=test_steps,
    )


def emulator_rollout(emulator, theta: np.ndarray, ics: np.ndarray, num_steps: int) -> np.ndarray:
    """Autoregressive emulator trajectories from a batch of initial states."""
    snapshots = [ics]
    state = ics
    for _ in range(num_steps):
        state = emulator.apply(theta, state)
        snapshots.append(state)
    return np.stack(snapshots, axis=1)


@dataclass
class _Cell:
    label: str
    theta: Optional[np.ndarray]
    converged: bool
    objective: Optional[float]


def run_stencil_experiment(
    gamma1: float = 0.75,
    resolution: int = 30,
    cutoff: int = 5,
    methodologies: Sequence[str] = ("one", "sup;10", "sup;50"),
    seed: int = 0,
    horizon: int = 100,
    metric: str = "mean_nRMSE",
    coarse_proportion: float = 0.0,
    correction_variant: str = "none",
    train_samples: int = 5,
    train_steps: int = 200,
    test_samples: int = 50,
    test_steps: int = 200,
    newton_tol: float = 1e-12,
    newton_max_iters: int = 100,
) -> dict:
    """Train the stencil under each methodology and report rollout errors.

    Within each methodology family the optimizations warm-start from the
    previous unroll length's minimizer (the first from the upwind
    stencil).  A Newton failure marks the cell failed; remaining cells
    still run.
    """
    spec = stencil_scenario(
        gamma1, resolution, cutoff, train_samples, train_steps, test_samples, test_steps
    )
    stepper = build_stepper_from_spec(spec)
    train = generate_dataset(spec, "train", seed)
    test = generate_dataset(spec, "test", seed)

    emulator = LinearStencilEmulator()
    if correction_variant != "none":
        coarse_spec = stencil_scenario(
            coarse_proportion * gamma1, resolution, cutoff,
            train_samples, train_steps, test_samples, test_steps,
        )
        layout = CorrectionLayout(
            variant=correction_variant, coarse=build_stepper_from_spec(coarse_spec)
        )
        emulator = compose_correction(layout, emulator)

    fou = fou_stencil(gamma1)
    desc = metric_from_name(metric)
    grid = stepper.grid

    cells: list[_Cell] = []
    warm: dict[str, np.ndarray] = {}
    for label in methodologies:
        kind, steps = parse_methodology(label)
        cfg = UnrollConfig(num_steps=steps, branch_length=steps if kind == "sup" else 1)

        def objective(theta, cfg=cfg):
            return unrolled_objective(emulator, theta, stepper, train, cfg)

        theta_init = warm.get(kind, fou)
        try:
            theta = train_newton(
                objective, theta_init, tol=newton_tol, max_iters=newton_max_iters
            )
            warm[kind] = theta
            cells.append(_Cell(label, theta, True, objective(theta)))
        except NewtonError as err:
            cells.append(_Cell(label, err.best_theta, False, None))

    report: dict = {
        "scenario": spec.name,
        "gamma1": gamma1,
        "resolution": resolution,
        "cutoff": cutoff,
        "seed": seed,
        "metric": metric,
        "horizon": horizon,
        "fou_stencil": fou.tolist(),
        "methods": [],
    }

    reference = test.data
    ics = reference[:, 0]

    fou_traj = emulator_rollout(LinearStencilEmulator(), fou, ics, test_steps)
    fou_report = rollout_metrics(fou_traj, reference, desc, grid, horizon=horizon)
    report["fou"] = {
        "per_step": fou_report.per_step.tolist(),
        "aggregate": fou_report.aggregate,
        "degenerate": fou_report.degenerate,
    }

    for cell in cells:
        entry: dict = {"label": cell.label, "converged": cell.converged}
        if cell.theta is not None:
            entry["theta"] = np.asarray(cell.theta).tolist()
            entry["distance_to_fou"] = float(np.linalg.norm(cell.theta - fou))
            entry["train_objective"] = cell.objective
            traj = emulator_rollout(emulator, cell.theta, ics, test_steps)
            cell_report = rollout_metrics(traj, reference, desc, grid, horizon=horizon)
            entry["per_step"] = cell_report.per_step.tolist()
            entry["aggregate"] = cell_report.aggregate
            entry["degenerate"] = cell_report.degenerate
        report["methods"].append(entry)
    return report
