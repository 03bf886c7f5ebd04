"""Raw binary trajectory bundles with JSON sidecars.

A bundle is one split of one scenario: a payload of little-endian 64-bit
floats in C order with shape ``(S, T+1, C, N, [N, [N]])``, plus a sidecar
recording the canonical scenario name, the fully resolved spec, the
seed, the shape, a format version, and a SHA-256 checksum.  The sidecar
alone suffices to regenerate the payload byte for byte.

All randomness flows through one documented counter-based scheme:
``numpy.random.SeedSequence([seed, split_code, sample_index])`` feeding a
PCG64 generator, with split codes train=0, test=1.  The generator
algorithm is part of the format contract; see FORMAT_VERSION.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from .scenarios import (
    IcConfig,
    ScenarioSpec,
    build_stepper_from_spec,
    simulate_sample,
)

__all__ = [
    "FORMAT_VERSION",
    "spec_to_dict",
    "spec_from_dict",
    "write_bundle",
    "read_bundle",
    "read_sidecar",
    "regenerate_from_sidecar",
]

FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


def spec_to_dict(spec: ScenarioSpec) -> dict:
    """JSON-safe dictionary of a resolved spec (tuples become lists)."""
    out = dataclasses.asdict(spec)
    out["ic"] = dataclasses.asdict(spec.ic)
    return out


def spec_from_dict(data: dict) -> ScenarioSpec:
    data = dict(data)
    ic = data.pop("ic")
    ic["offset_range"] = tuple(ic["offset_range"])
    for key in ("gammas", "alphas"):
        if data.get(key) is not None:
            data[key] = tuple(data[key])
    return ScenarioSpec(ic=IcConfig(**ic), **data)


def _bundle_paths(out_dir: Path, name: str, split: str, fmt: str) -> tuple[Path, Path]:
    suffix = "raw64" if fmt == "raw64" else "csv"
    return out_dir / f"{name}.{split}.{suffix}", out_dir / f"{name}.{split}.json"


def write_bundle(
    spec: ScenarioSpec,
    split: str,
    seed: int,
    out_dir,
    fmt: str = "raw64",
    workers: int = 1,
) -> dict:
    """Generate one split and write payload plus sidecar; returns the sidecar.

    Samples are simulated independently (optionally on a thread pool) and
    written in index order, so the payload bytes do not depend on the
    worker count.
    """
    if fmt not in ("raw64", "csv"):
        raise ValueError(f"unknown export format {fmt!r}")
    if fmt == "csv" and spec.dimension != 1:
        raise ValueError("csv export is for 1D inspection only")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload_path, sidecar_path = _bundle_paths(out_dir, spec.name, split, fmt)

    samples = spec.train_samples if split == "train" else spec.test_samples
    steps = spec.train_steps if split == "train" else spec.test_steps
    shape = (samples, steps + 1, spec.num_channels) + (spec.resolution,) * spec.dimension

    stepper = build_stepper_from_spec(spec)

    def one(i: int) -> np.ndarray:
        return simulate_sample(spec, split, seed, i, stepper=stepper)

    digest = hashlib.sha256()
    with open(payload_path, "wb") as handle:
        if workers > 1:
            # Bounded look-ahead keeps memory flat; results are consumed
            # in index order so the payload is worker-count independent.
            with ThreadPoolExecutor(max_workers=workers) as pool:
                pending = {}
                horizon = 2 * workers

                def results():
                    for i in range(samples):
                        for j in range(i, min(i + horizon, samples)):
                            if j not in pending:
                                pending[j] = pool.submit(one, j)
                        yield pending.pop(i).result()

                _write_samples(handle, results(), fmt, digest)
        else:
            _write_samples(handle, (one(i) for i in range(samples)), fmt, digest)

    sidecar = {
        "format_version": FORMAT_VERSION,
        "scenario": spec.name,
        "split": split,
        "seed": int(seed),
        "shape": list(shape),
        "dtype": _DTYPE.str,
        "order": "C",
        "format": fmt,
        "checksum": f"sha256:{digest.hexdigest()}",
        "rng": {
            "scheme": "numpy.SeedSequence([seed, split_code, sample_index]) -> PCG64",
            "split_codes": {"train": 0, "test": 1},
        },
        "spec": spec_to_dict(spec),
    }
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return sidecar


def _write_samples(handle, trajectories, fmt: str, digest) -> None:
    for index, traj in enumerate(trajectories):
        if fmt == "raw64":
            blob = np.ascontiguousarray(traj, dtype=_DTYPE).tobytes()
        else:
            lines = []
            num_steps = traj.shape[0]
            for t in range(num_steps):
                for c in range(traj.shape[1]):
                    row = ",".join(repr(v) for v in traj[t, c])
                    lines.append(f"{index},{t},{c},{row}\n")
            blob = "".join(lines).encode()
        digest.update(blob)
        handle.write(blob)


def read_sidecar(sidecar_path) -> dict:
    return json.loads(Path(sidecar_path).read_text())


def read_bundle(sidecar_path) -> tuple[np.ndarray, dict]:
    """Load a raw64 bundle back into memory, verifying the checksum."""
    sidecar = read_sidecar(sidecar_path)
    if sidecar["format"] != "raw64":
        raise ValueError("only raw64 bundles can be read back")
    # The sidecar sits next to the payload: <name>.<split>.json / .raw64.
    payload_path = Path(str(sidecar_path)[: -len(".json")] + ".raw64")
    blob = payload_path.read_bytes()
    digest = hashlib.sha256(blob).hexdigest()
    recorded = sidecar["checksum"].split(":", 1)[1]
    if digest != recorded:
        raise ValueError(f"checksum mismatch for {payload_path}")
    shape = tuple(sidecar["shape"])
    expected = int(np.prod(shape)) * _DTYPE.itemsize
    if len(blob) != expected:
        raise ValueError(f"payload has {len(blob)} bytes, sidecar implies {expected}")
    array = np.frombuffer(blob, dtype=_DTYPE).reshape(shape)
    return array.astype(np.float64), sidecar


def regenerate_from_sidecar(sidecar_path, out_dir) -> dict:
    """Reproduce a payload from its sidecar alone (no original config)."""
    sidecar = read_sidecar(sidecar_path)
    spec = spec_from_dict(sidecar["spec"])
    return write_bundle(
        spec,
        sidecar["split"],
        sidecar["seed"],
        out_dir,
        fmt=sidecar.get("format", "raw64"),
    )
