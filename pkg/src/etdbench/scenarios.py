"""Benchmark scenario registry: named dynamics, defaults, ICs, and datasets.

A *scenario* couples one dynamic (advection, Burgers, Kuramoto-
Sivashinsky, ...) at one spatial dimension with an interface mode, a
discretization, an initial-condition distribution, and a dataset recipe.
Three interface modes exist:

* ``difficulty`` -- dimensionless gamma/delta identifiers that scale with
  resolution and dimension like the stability numbers of compact explicit
  stencils,
* ``normalized`` -- alpha/beta coefficients of the time-discrete dynamics
  on the unit domain with unit step,
* ``physical`` -- domain extent, time step, and constitutive constants.

Difficulty and normalized modes build bitwise-identical steppers; the
conversion is ``gamma_j = alpha_j * N^j * 2^(j-1) * D`` for linear orders
and ``delta = beta * N^order * D * m`` for nonlinear components.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from . import operators as ops
from .etdrk import Stepper, TrajectoryDiverged, make_stepper, rollout
from .spectral import Grid, dealias_mask

__all__ = [
    "DifficultyCoefficients",
    "NormalizedCoefficients",
    "IcConfig",
    "ScenarioSpec",
    "TrajectorySet",
    "NONLINEAR_DERIVATIVE_ORDER",
    "GRAY_SCOTT_TYPES",
    "difficulty_to_normalized",
    "normalized_to_difficulty",
    "registry_list",
    "resolve_scenario",
    "build_stepper_from_spec",
    "sample_initial_condition",
    "derive_sample_seed",
    "simulate_sample",
    "generate_dataset",
]

# Total derivative order of each nonlinear component: derivatives before
# the nonlinearity are amplified by the polynomial order, derivatives
# after it count once.
NONLINEAR_DERIVATIVE_ORDER = {"conv": 1, "conv_sc": 1, "gn": 2, "quad": 0}

LINEAR_ORDERS = 5  # gamma/alpha vectors cover derivative orders 0..4


@dataclass(frozen=True)
class DifficultyCoefficients:
    """Dimensionless difficulty identifiers of one discrete dynamic."""

    gammas: tuple[float, ...]
    deltas: Mapping[str, float]
    resolution: int
    dimension: int
    max_abs: float = 1.0

    def __post_init__(self) -> None:
        if len(self.gammas) != LINEAR_ORDERS:
            raise ValueError(f"expected {LINEAR_ORDERS} gamma entries")
        if not self.max_abs > 0:
            raise ValueError("max_abs must be positive")
        for key in self.deltas:
            if key not in NONLINEAR_DERIVATIVE_ORDER:
                raise ValueError(f"unknown nonlinear component {key!r}")


@dataclass(frozen=True)
class NormalizedCoefficients:
    """Coefficients of the time-discrete dynamics on the unit domain."""

    alphas: tuple[float, ...]
    betas: Mapping[str, float]


def difficulty_to_normalized(diff: DifficultyCoefficients) -> NormalizedCoefficients:
    n, d, m = diff.resolution, diff.dimension, diff.max_abs
    alphas = tuple(
        g / (n**j * 2.0 ** (j - 1) * d) for j, g in enumerate(diff.gammas)
    )
    betas = {
        key: delta / (n ** NONLINEAR_DERIVATIVE_ORDER[key] * d * m)
        for key, delta in diff.deltas.items()
    }
    return NormalizedCoefficients(alphas=alphas, betas=betas)


def normalized_to_difficulty(
    norm: NormalizedCoefficients, resolution: int, dimension: int, max_abs: float = 1.0
) -> DifficultyCoefficients:
    n, d, m = resolution, dimension, max_abs
    gammas = tuple(
        a * n**j * 2.0 ** (j - 1) * d for j, a in enumerate(norm.alphas)
    )
    deltas = {
        key: beta * n ** NONLINEAR_DERIVATIVE_ORDER[key] * d * m
        for key, beta in norm.betas.items()
    }
    return DifficultyCoefficients(
        gammas=gammas, deltas=deltas, resolution=n, dimension=d, max_abs=m
    )


@dataclass(frozen=True)
class IcConfig:
    """Initial-condition distribution parameters.

    ``kind='fourier'`` draws a truncated Fourier series: independent
    uniform(-1, 1) sine/cosine coefficients for every mode combination
    with per-axis |k| <= cutoff, plus a uniform offset, rescaled to unit
    max-abs.  ``positive=True`` then maps the field into [0, 1].
    ``kind='blob'`` places one Gaussian bump (uniform random center, width
    ``blob_width * L``, unit peak) in channel 0 and its one-complement in
    channel 1.
    """

    kind: str = "fourier"
    cutoff: int = 5
    offset_range: tuple[float, float] = (0.0, 0.0)
    max_abs: float = 1.0
    positive: bool = False
    blob_width: float = 0.1


@dataclass(frozen=True)
class ScenarioSpec:
    """Fully resolved description of one benchmark scenario."""

    name: str  # canonical id, e.g. "1d_diff_adv"
    dynamic: str  # registry key, e.g. "adv"
    mode: str  # difficulty | normalized | physical
    dimension: int
    resolution: int
    num_channels: int
    gammas: Optional[tuple[float, ...]] = None
    deltas: Optional[Mapping[str, float]] = None
    alphas: Optional[tuple[float, ...]] = None
    betas: Optional[Mapping[str, float]] = None
    physical: Optional[Mapping[str, float]] = None
    order: int = 2
    substeps: int = 1
    warmup: int = 0
    max_abs: float = 1.0
    ic: IcConfig = field(default_factory=IcConfig)
    train_samples: int = 50
    train_steps: int = 50
    test_samples: int = 30
    test_steps: int = 200

    def __post_init__(self) -> None:
        if self.mode not in ("difficulty", "normalized", "physical"):
            raise ValueError(f"unknown interface mode {self.mode!r}")
        for count in (self.train_samples, self.train_steps, self.test_samples, self.test_steps):
            if count < 1:
                raise ValueError("dataset recipe sizes must be >= 1")


@dataclass(frozen=True)
class TrajectorySet:
    """Stacked trajectories of one split: shape (S, T+1, C, spatial...)."""

    data: np.ndarray
    spec: ScenarioSpec
    split: str
    seed: int


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------

MODE_TOKENS = {"diff": "difficulty", "norm": "normalized", "phy": "physical"}
TOKEN_OF_MODE = {v: k for k, v in MODE_TOKENS.items()}

DEFAULT_RESOLUTION = {1: 160, 2: 160, 3: 32}

# Feed/kill pairs of the named Gray-Scott pattern regimes.
GRAY_SCOTT_TYPES = {
    "alpha": (0.008, 0.046),
    "beta": (0.020, 0.046),
    "gamma": (0.024, 0.056),
    "delta": (0.028, 0.056),
    "epsilon": (0.02, 0.056),
    "theta": (0.04, 0.06),
    "iota": (0.05, 0.0605),
    "kappa": (0.052, 0.063),
}


@dataclass(frozen=True)
class DynamicInfo:
    """One registry row: a named dynamic and where it is available."""

    name: str
    description: str
    classes: str
    dimensions: tuple[int, ...]
    modes: tuple[str, ...]  # supported interface modes, preferred first
    counts_in_registry: bool = True


_DYNAMICS = [
    DynamicInfo("adv", "Advection", "L-I", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("diff", "Diffusion", "L-D", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("adv_diff", "Advection-Diffusion", "L-D", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("disp", "Dispersion", "L-I", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("hyp", "Hyper-Diffusion", "L-D", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("unbal_adv", "Unbalanced Advection", "L-I", (2, 3), ("physical",)),
    DynamicInfo("diag_diff", "Diagonal Diffusion", "L-D", (2, 3), ("physical",)),
    DynamicInfo("aniso_diff", "Anisotropic Diffusion", "L-D", (2, 3), ("physical",)),
    DynamicInfo("mix_disp", "Spatially-Mixed Dispersion", "L-I", (2, 3), ("physical",)),
    DynamicInfo("mix_hyp", "Spatially-Mixed Hyper-Diffusion", "L-I", (2, 3), ("physical",)),
    DynamicInfo("burgers", "Burgers", "N-D-M", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("burgers_sc", "Burgers (single-channel)", "N-D", (2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("kdv", "Korteweg-de-Vries (single-channel)", "N-D", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("ks_cons", "Kuramoto-Sivashinsky (conservative)", "N-I-C", (1,), ("difficulty", "normalized", "physical")),
    DynamicInfo("ks", "Kuramoto-Sivashinsky (combustion)", "N-I-C", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("fisher", "Fisher-KPP", "N-S", (1, 2, 3), ("difficulty", "normalized", "physical")),
    DynamicInfo("gs", "Gray-Scott", "N-S/C/I-M", (2, 3), ("physical",)),
    DynamicInfo("sh", "Swift-Hohenberg", "N-S", (2, 3), ("physical",)),
    DynamicInfo("decay_turb", "Navier-Stokes (decaying turbulence)", "N-D", (2,), ("physical",)),
    DynamicInfo("kolm_flow", "Navier-Stokes (Kolmogorov forcing)", "N-I-C", (2,), ("physical",)),
    # Interface alias: Gray-Scott configured by named pattern type rather
    # than raw feed/kill rates.  Does not add to the 46 registry rows.
    DynamicInfo("gs_type", "Gray-Scott (pattern type interface)", "N-S/C/I-M", (2, 3), ("physical",), counts_in_registry=False),
]

DYNAMICS = {info.name: info for info in _DYNAMICS}


def registry_list() -> list[dict]:
    """Every (dynamic, dimension) pair the benchmark ships; 46 rows."""
    rows = []
    for info in _DYNAMICS:
        if not info.counts_in_registry:
            continue
        for dim in info.dimensions:
            rows.append(
                {
                    "dynamic": info.name,
                    "dimension": dim,
                    "description": info.description,
                    "classes": info.classes,
                    "modes": tuple(TOKEN_OF_MODE[m] for m in info.modes),
                    "preferred_mode": TOKEN_OF_MODE[info.modes[0]],
                    "default_resolution": DEFAULT_RESOLUTION[dim],
                }
            )
    return rows


# Difficulty-mode defaults: (gammas, deltas, warmup).
_DIFFICULTY_DEFAULTS = {
    "adv": ((0.0, -4.0, 0.0, 0.0, 0.0), {}, 0),
    "diff": ((0.0, 0.0, 4.0, 0.0, 0.0), {}, 0),
    "adv_diff": ((0.0, -4.0, 4.0, 0.0, 0.0), {}, 0),
    "disp": ((0.0, 0.0, 0.0, 4.0, 0.0), {}, 0),
    "hyp": ((0.0, 0.0, 0.0, 0.0, -4.0), {}, 0),
    "burgers": ((0.0, 0.0, 1.5, 0.0, 0.0), {"conv": -1.5}, 0),
    "burgers_sc": ((0.0, 0.0, 1.5, 0.0, 0.0), {"conv_sc": -1.5}, 0),
    "kdv": ((0.0, 0.0, 0.0, -14.0, -9.0), {"conv_sc": -2.0}, 0),
    "ks_cons": ((0.0, 0.0, -2.0, 0.0, -18.0), {"conv": -1.0}, 500),
    "ks": ((0.0, 0.0, -1.2, 0.0, -15.0), {"gn": -6.0}, 500),
    "fisher": ((0.02, 0.0, 0.2, 0.0, 0.0), {"quad": -0.02}, 0),
}

# Physical-mode defaults: constants dict plus (substeps, warmup).
_PHYSICAL_DEFAULTS = {
    "unbal_adv": (
        {"domain_extent": 1.0, "time_step": 0.1, "velocity_x": 0.01, "velocity_y": -0.04, "velocity_z": 0.005},
        1,
        0,
    ),
    "diag_diff": (
        {"domain_extent": 1.0, "time_step": 0.1, "diffusivity_x": 0.001, "diffusivity_y": 0.002, "diffusivity_z": 0.0004},
        1,
        0,
    ),
    "aniso_diff": (
        {
            "domain_extent": 1.0,
            "time_step": 0.1,
            "diffusivity_xx": 0.001,
            "diffusivity_xy": 0.0005,
            "diffusivity_yy": 0.002,
            # 3D extension keeps the 2D block and adds a decoupled third axis.
            "diffusivity_xz": 0.0,
            "diffusivity_yz": 0.0,
            "diffusivity_zz": 0.0004,
        },
        1,
        0,
    ),
    "mix_disp": ({"domain_extent": 1.0, "time_step": 0.001, "dispersivity": 0.00025}, 1, 0),
    "mix_hyp": ({"domain_extent": 1.0, "time_step": 0.00001, "hyper_diffusivity": -0.000075}, 1, 0),
    "gs": (
        {"domain_extent": 1.0, "time_step": 10.0, "diffusivity_0": 2e-5, "diffusivity_1": 1e-5, "feed_rate": 0.04, "kill_rate": 0.06},
        10,
        0,
    ),
    "gs_type": (
        {"domain_extent": 2.5, "time_step": 20.0, "diffusivity_0": 2e-5, "diffusivity_1": 1e-5, "feed_rate": 0.04, "kill_rate": 0.06},
        20,
        0,
    ),
    "sh": (
        {"domain_extent": 10.0 * np.pi, "time_step": 0.1, "reactivity": 0.7, "critical_wavenumber": 1.0},
        5,
        0,
    ),
    "decay_turb": (
        {"domain_extent": 1.0, "time_step": 0.1, "viscosity": 0.0001, "convection_scale": 1.0},
        1,
        0,
    ),
    "kolm_flow": (
        {
            "domain_extent": 2.0 * np.pi,
            "time_step": 0.1,
            "reynolds": 100.0,
            "drag": -0.1,
            "forcing_wavenumber": 4.0,
            "convection_scale": 1.0,
        },
        20,
        500,
    ),
}

_CHANNELS_BY_DYNAMIC = {
    "burgers": "dims",
    "gs": 2,
    "gs_type": 2,
}


def _channels_for(dynamic: str, dimension: int) -> int:
    rule = _CHANNELS_BY_DYNAMIC.get(dynamic, 1)
    return dimension if rule == "dims" else int(rule)


def _default_ic(dynamic: str) -> IcConfig:
    if dynamic in ("gs", "gs_type"):
        return IcConfig(kind="blob")
    if dynamic == "fisher":
        return IcConfig(positive=True)
    return IcConfig()


def parse_scenario_id(scenario_id: str) -> tuple[str, Optional[str]]:
    """Split ``[mode_]name`` into (dynamic, mode or None)."""
    for token, mode in MODE_TOKENS.items():
        prefix = token + "_"
        if scenario_id.startswith(prefix) and scenario_id[len(prefix) :] in DYNAMICS:
            return scenario_id[len(prefix) :], mode
    if scenario_id in DYNAMICS:
        return scenario_id, None
    raise KeyError(f"unknown scenario id {scenario_id!r}")


def resolve_scenario(
    scenario_id: str,
    dimension: int = 1,
    resolution: Optional[int] = None,
    gs_type: Optional[str] = None,
    **overrides,
) -> ScenarioSpec:
    """Resolve a scenario id plus dimension into a full ScenarioSpec.

    ``overrides`` may replace any ScenarioSpec field (gammas, deltas,
    substeps, ic, dataset sizes, ...).  The canonical name embeds the
    dimension and mode, e.g. ``3d_diff_burgers``.
    """
    dynamic, mode = parse_scenario_id(scenario_id)
    info = DYNAMICS[dynamic]
    if mode is None:
        mode = info.modes[0]
    if mode not in info.modes:
        raise ValueError(f"mode unsupported for dynamic: {mode} / {dynamic}")
    if dimension not in info.dimensions:
        raise ValueError(f"{dynamic} is not available in {dimension}D")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[dimension]

    name = f"{dimension}d_{TOKEN_OF_MODE[mode]}_{dynamic}"
    base = dict(
        name=name,
        dynamic=dynamic,
        mode=mode,
        dimension=dimension,
        resolution=resolution,
        num_channels=_channels_for(dynamic, dimension),
        ic=_default_ic(dynamic),
    )

    if dynamic in _DIFFICULTY_DEFAULTS:
        gammas, deltas, warmup = _DIFFICULTY_DEFAULTS[dynamic]
        base.update(warmup=warmup)
        if mode in ("difficulty", "normalized"):
            base.update(gammas=gammas, deltas=dict(deltas))
            if mode == "normalized":
                norm = difficulty_to_normalized(
                    DifficultyCoefficients(gammas, deltas, resolution, dimension)
                )
                base.update(gammas=None, deltas=None, alphas=norm.alphas, betas=norm.betas)
        else:
            # Physical defaults materialize the difficulty defaults on the
            # unit domain with unit step; explicit constants may override.
            norm = difficulty_to_normalized(
                DifficultyCoefficients(gammas, deltas, resolution, dimension)
            )
            base.update(
                physical={
                    "domain_extent": 1.0,
                    "time_step": 1.0,
                    **_isotropic_constants(dynamic, norm),
                }
            )
    else:
        constants, substeps, warmup = _PHYSICAL_DEFAULTS[dynamic]
        constants = dict(constants)
        if dynamic in ("gs", "gs_type") and gs_type is not None:
            if gs_type not in GRAY_SCOTT_TYPES:
                raise ValueError(f"unknown Gray-Scott type {gs_type!r}")
            feed, kill = GRAY_SCOTT_TYPES[gs_type]
            constants.update(feed_rate=feed, kill_rate=kill, pattern_type=gs_type)
        elif dynamic == "gs_type":
            constants.setdefault("pattern_type", "theta")
        base.update(physical=constants, substeps=substeps, warmup=warmup)

    allowed = set(ScenarioSpec.__dataclass_fields__)
    unknown = set(overrides) - allowed
    if unknown:
        raise ValueError(f"unknown override keys: {sorted(unknown)}")
    base.update(overrides)
    return ScenarioSpec(**base)


def _isotropic_constants(dynamic: str, norm: NormalizedCoefficients) -> dict:
    """Express normalized isotropic coefficients as physical constants."""
    a = norm.alphas
    out: dict[str, float] = {}
    if dynamic in ("adv", "adv_diff"):
        out["velocity"] = -a[1]
    if dynamic in ("diff", "adv_diff", "burgers", "burgers_sc", "fisher"):
        out["diffusivity"] = a[2]
    if dynamic == "disp":
        out["dispersivity"] = a[3]
    if dynamic == "hyp":
        out["hyper_diffusivity"] = -a[4]
    if dynamic == "kdv":
        out["dispersivity"] = a[3]
        out["hyper_diffusivity"] = -a[4]
    if dynamic in ("ks", "ks_cons"):
        out["viscosity"] = -a[2]
        out["hyper_diffusivity"] = -a[4]
    if dynamic == "fisher":
        out["reactivity"] = a[0]
        out["quadratic_scale"] = norm.betas.get("quad", 0.0)
    if dynamic in ("burgers", "ks_cons"):
        out["convection_scale"] = norm.betas.get("conv", 0.0)
    if dynamic in ("burgers_sc", "kdv"):
        out["convection_scale"] = norm.betas.get("conv_sc", 0.0)
    if dynamic == "ks":
        out["gradient_norm_scale"] = norm.betas.get("gn", 0.0)
    return out


# --------------------------------------------------------------------------
# Stepper construction
# --------------------------------------------------------------------------


def _normalized_from_spec(spec: ScenarioSpec) -> NormalizedCoefficients:
    if spec.mode == "difficulty":
        diff = DifficultyCoefficients(
            gammas=tuple(spec.gammas),
            deltas=dict(spec.deltas or {}),
            resolution=spec.resolution,
            dimension=spec.dimension,
            max_abs=spec.max_abs,
        )
        return difficulty_to_normalized(diff)
    return NormalizedCoefficients(alphas=tuple(spec.alphas), betas=dict(spec.betas or {}))


def _nonlinear_for_betas(dynamic: str, betas: Mapping[str, float], grid: Grid, mask):
    if dynamic in ("burgers", "ks_cons"):
        return ops.build_nonlinear(ops.Convection(betas["conv"]), grid, mask)
    if dynamic in ("burgers_sc", "kdv"):
        return ops.build_nonlinear(ops.SingleChannelConvection(betas["conv_sc"]), grid, mask)
    if dynamic == "ks":
        return ops.build_nonlinear(ops.GradientNorm(betas["gn"]), grid, mask)
    if dynamic == "fisher":
        return ops.build_nonlinear(
            ops.Polynomial((0.0, 0.0, betas["quad"])), grid, mask
        )
    return None


def build_stepper_from_spec(spec: ScenarioSpec) -> Stepper:
    """Construct the reference stepper for a resolved scenario.

    Difficulty and normalized modes build on the unit domain with unit
    step; the normalization folds the time step into the coefficients.
    Physical mode uses the constants literally.
    """
    info = DYNAMICS[spec.dynamic]
    if spec.mode not in info.modes:
        raise ValueError(f"mode unsupported for dynamic: {spec.mode} / {spec.dynamic}")

    if spec.mode in ("difficulty", "normalized"):
        grid = Grid(spec.dimension, spec.resolution, 1.0)
        mask = dealias_mask(grid)
        norm = _normalized_from_spec(spec)
        linear = ops.build_isotropic_linear(norm.alphas, grid)
        nonlinear = _nonlinear_for_betas(spec.dynamic, norm.betas, grid, mask)
        return make_stepper(
            linear,
            nonlinear,
            dt=1.0,
            order=spec.order,
            substeps=spec.substeps,
            num_channels=spec.num_channels,
        )
    return _build_physical_stepper(spec)


def _build_physical_stepper(spec: ScenarioSpec) -> Stepper:
    p = dict(spec.physical or {})
    length = float(p.get("domain_extent", 1.0))
    dt = float(p.get("time_step", 1.0))
    grid = Grid(spec.dimension, spec.resolution, length)
    mask = dealias_mask(grid)
    d = spec.dimension
    dynamic = spec.dynamic

    def isotropic(**orders) -> np.ndarray:
        coeffs = [0.0] * LINEAR_ORDERS
        for j, value in orders.items():
            coeffs[int(j[1:])] = value
        return ops.build_isotropic_linear(coeffs, grid).values

    linear: np.ndarray
    nonlinear = None

    if dynamic in ("adv", "diff", "adv_diff", "disp", "hyp", "burgers", "burgers_sc", "kdv", "ks", "ks_cons", "fisher"):
        coeffs = [0.0] * LINEAR_ORDERS
        if "velocity" in p:
            coeffs[1] = -p["velocity"]
        if "diffusivity" in p:
            coeffs[2] = p["diffusivity"]
        if "viscosity" in p:
            coeffs[2] = -p["viscosity"]
        if "dispersivity" in p:
            coeffs[3] = p["dispersivity"]
        if "hyper_diffusivity" in p:
            coeffs[4] = -p["hyper_diffusivity"]
        if "reactivity" in p:
            coeffs[0] = p["reactivity"]
        linear = ops.build_isotropic_linear(coeffs, grid).values
        if dynamic in ("burgers", "ks_cons"):
            nonlinear = ops.build_nonlinear(ops.Convection(p["convection_scale"]), grid, mask)
        elif dynamic in ("burgers_sc", "kdv"):
            nonlinear = ops.build_nonlinear(
                ops.SingleChannelConvection(p["convection_scale"]), grid, mask
            )
        elif dynamic == "ks":
            nonlinear = ops.build_nonlinear(
                ops.GradientNorm(p["gradient_norm_scale"]), grid, mask
            )
        elif dynamic == "fisher":
            nonlinear = ops.build_nonlinear(
                ops.Polynomial((0.0, 0.0, p["quadratic_scale"])), grid, mask
            )
    elif dynamic == "unbal_adv":
        velocities = [p["velocity_x"], p["velocity_y"], p.get("velocity_z", 0.0)][:d]
        linear = ops.build_spatially_mixed_linear(
            ops.UnbalancedAdvection(tuple(velocities)), grid
        ).values
    elif dynamic == "diag_diff":
        nus = [p["diffusivity_x"], p["diffusivity_y"], p.get("diffusivity_z", 0.0)][:d]
        linear = ops.build_spatially_mixed_linear(
            ops.DiagonalDiffusion(tuple(nus)), grid
        ).values
    elif dynamic == "aniso_diff":
        a = np.zeros((d, d))
        a[0, 0] = p["diffusivity_xx"]
        a[0, 1] = a[1, 0] = p["diffusivity_xy"]
        a[1, 1] = p["diffusivity_yy"]
        if d == 3:
            a[0, 2] = a[2, 0] = p.get("diffusivity_xz", 0.0)
            a[1, 2] = a[2, 1] = p.get("diffusivity_yz", 0.0)
            a[2, 2] = p.get("diffusivity_zz", 0.0)
        linear = ops.build_spatially_mixed_linear(
            ops.AnisotropicDiffusion(tuple(map(tuple, a))), grid
        ).values
    elif dynamic == "mix_disp":
        linear = ops.build_spatially_mixed_linear(
            ops.MixedDispersion(p["dispersivity"]), grid
        ).values
    elif dynamic == "mix_hyp":
        linear = ops.build_spatially_mixed_linear(
            ops.MixedHyperDiffusion(p["hyper_diffusivity"]), grid
        ).values
    elif dynamic in ("gs", "gs_type"):
        lap = ops.laplacian_symbol(grid)
        feed, kill = p["feed_rate"], p["kill_rate"]
        linear = np.stack(
            [
                p["diffusivity_0"] * lap - feed,
                p["diffusivity_1"] * lap - (feed + kill),
            ]
        )
        nonlinear = ops.build_nonlinear(ops.GrayScottReaction(feed), grid, mask)
    elif dynamic == "sh":
        lap = ops.laplacian_symbol(grid)
        linear = p["reactivity"] - (p["critical_wavenumber"] + lap) ** 2
        nonlinear = ops.build_nonlinear(ops.Polynomial((0.0, 0.0, 1.0, -1.0)), grid, mask)
    elif dynamic == "decay_turb":
        linear = isotropic(a2=p["viscosity"])
        nonlinear = ops.build_nonlinear(
            ops.VorticityConvection(p.get("convection_scale", 1.0)), grid, mask
        )
    elif dynamic == "kolm_flow":
        viscosity = p.get("viscosity", 1.0 / p["reynolds"])
        k_f = p["forcing_wavenumber"]
        linear = isotropic(a0=p["drag"], a2=viscosity)
        nonlinear = ops.build_nonlinear(
            ops.VorticityConvection(
                p.get("convection_scale", 1.0),
                forcing_wavenumber=int(k_f),
                forcing_scale=p.get("forcing_scale", -k_f),
            ),
            grid,
            mask,
        )
    else:
        raise ValueError(f"cannot build physical stepper for {dynamic!r}")

    return make_stepper(
        linear,
        nonlinear,
        dt=dt,
        order=spec.order,
        substeps=spec.substeps,
        grid=grid,
        num_channels=spec.num_channels,
    )


# --------------------------------------------------------------------------
# Initial conditions and datasets
# --------------------------------------------------------------------------

_SPLIT_CODES = {"train": 0, "test": 1}


def derive_sample_seed(base_seed: int, split: str, sample_index: int) -> int:
    """Derived seed of one sample; the (seed, split, index) scheme is part
    of the reproducibility contract, so train and test streams never
    collide and samples can be generated in any order."""
    ss = np.random.SeedSequence([int(base_seed), _SPLIT_CODES[split], int(sample_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _canonical_band_modes(dimension: int, cutoff: int):
    """Mode vectors with per-axis |k| <= cutoff, one of each +-k pair.

    Order is fixed (lexicographic) so coefficient draws are reproducible.
    """
    for k in itertools.product(range(-cutoff, cutoff + 1), repeat=dimension):
        if all(c == 0 for c in k):
            continue
        first_nonzero = next(c for c in k if c != 0)
        if first_nonzero > 0:
            yield k


def _truncated_fourier_field(grid: Grid, cutoff: int, rng: np.random.Generator) -> np.ndarray:
    n = grid.num_points
    d = grid.num_dims
    full = np.zeros((n,) * d, dtype=np.complex128)
    half_volume = n**d / 2.0
    for k in _canonical_band_modes(d, cutoff):
        sin_coeff, cos_coeff = rng.uniform(-1.0, 1.0, size=2)
        value = (cos_coeff - 1j * sin_coeff) * half_volume
        full[tuple(np.mod(k, n))] = value
        full[tuple(np.mod([-c for c in k], n))] = np.conj(value)
    return np.real(np.fft.ifftn(full))


def sample_initial_condition(spec: ScenarioSpec, seed: int) -> np.ndarray:
    """Draw one initial state of shape (C, spatial...); deterministic in seed."""
    grid = Grid(spec.dimension, spec.resolution, _domain_extent(spec))
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    ic = spec.ic

    if ic.kind == "blob":
        center = rng.uniform(0.0, grid.domain_extent, size=grid.num_dims)
        mesh = grid.coordinate_mesh()
        sq = 0.0
        for x, c in zip(mesh, center):
            delta = np.abs(x - c)
            delta = np.minimum(delta, grid.domain_extent - delta)
            sq = sq + delta**2
        blob = np.exp(-sq / (2.0 * (ic.blob_width * grid.domain_extent) ** 2))
        if spec.num_channels != 2:
            raise ValueError("blob initial conditions require two channels")
        return np.stack([blob, 1.0 - blob])

    channels = []
    for _ in range(spec.num_channels):
        u = _truncated_fourier_field(grid, ic.cutoff, rng)
        if ic.offset_range != (0.0, 0.0):
            u = u + rng.uniform(*ic.offset_range)
        channels.append(u)
    state = np.stack(channels)
    peak = np.abs(state).max()
    if peak > 0:
        state = state * (ic.max_abs / peak)
    if ic.positive:
        state = 0.5 * (state + 1.0)
    return state


def _domain_extent(spec: ScenarioSpec) -> float:
    if spec.mode == "physical" and spec.physical is not None:
        return float(spec.physical.get("domain_extent", 1.0))
    return 1.0


def _split_recipe(spec: ScenarioSpec, split: str) -> tuple[int, int]:
    if split == "train":
        return spec.train_samples, spec.train_steps
    if split == "test":
        return spec.test_samples, spec.test_steps
    raise ValueError(f"unknown split {split!r}")


def simulate_sample(
    spec: ScenarioSpec,
    split: str,
    seed: int,
    sample_index: int,
    stepper: Optional[Stepper] = None,
) -> np.ndarray:
    """One trajectory of the split: shape (steps+1, C, spatial...)."""
    if stepper is None:
        stepper = build_stepper_from_spec(spec)
    _, steps = _split_recipe(spec, split)
    ic = sample_initial_condition(spec, derive_sample_seed(seed, split, sample_index))
    try:
        return rollout(stepper, ic, steps, warmup=spec.warmup)
    except TrajectoryDiverged as err:
        raise TrajectoryDiverged(
            f"sample {sample_index} of split {split!r} diverged: {err}",
            last_valid_step=err.last_valid_step,
            sample_index=sample_index,
        ) from err


def generate_dataset(spec: ScenarioSpec, split: str, seed: int) -> TrajectorySet:
    """Generate a full split; deterministic in (spec, split, seed)."""
    samples, steps = _split_recipe(spec, split)
    stepper = build_stepper_from_spec(spec)
    data = np.empty(
        (samples, steps + 1, spec.num_channels) + (spec.resolution,) * spec.dimension
    )
    for i in range(samples):
        data[i] = simulate_sample(spec, split, seed, i, stepper=stepper)
    return TrajectorySet(data=data, spec=spec, split=split, seed=seed)
