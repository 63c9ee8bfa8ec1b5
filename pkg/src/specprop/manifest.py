"""Experiment manifests: parsing, validation and family construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ManifestError

DEFAULTS = {
    "epsMin": 0.04,
    "resolution": 1e-3,
    "keep": 160,
    "scheme": "second-order",
    "truncationVectors": 200,
}


@dataclass
class ExperimentManifest:
    scenario: str
    t_grid: list
    epsilon_list: list
    seed: int
    tolerance: float = 1e-9
    path: dict | None = None
    family: dict | None = None
    grid_size: int | None = None
    output: str | None = None
    options: dict = field(default_factory=lambda: dict(DEFAULTS))

    def to_json(self) -> dict:
        doc = {"scenario": self.scenario, "tGrid": self.t_grid, "epsilonList": self.epsilon_list,
               "seeds": {"sampling": self.seed}, "tolerances": {"leibniz": self.tolerance},
               "options": self.options}
        if self.path is not None:
            doc["path"] = self.path
        if self.family is not None:
            doc["family"] = self.family
        if self.grid_size is not None:
            doc["gridSize"] = self.grid_size
        return doc


def _numbers(doc, key, where=None):
    vals = doc.get(key)
    name = where or key
    if not isinstance(vals, list) or not vals:
        raise ManifestError(name, "must be a nonempty list of numbers")
    out = []
    for i, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ManifestError(f"{name}[{i}]", f"not a finite number: {v!r}")
        out.append(float(v))
    return out


def parse_manifest(text: str) -> ExperimentManifest:
    """Parse and validate manifest JSON; errors name the offending line or field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if not isinstance(doc, dict):
        raise ManifestError("<root>", "manifest must be a JSON object")

    t_grid = _numbers(doc, "tGrid")
    for i, t in enumerate(t_grid):
        if not 0 <= t <= 1:
            raise ManifestError(f"tGrid[{i}]", f"{t} is outside [0, 1]")
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ManifestError("tGrid", "must be strictly increasing")
    eps = _numbers(doc, "epsilonList")
    for i, e in enumerate(eps):
        if not 0 < e <= 1:
            raise ManifestError(f"epsilonList[{i}]", f"{e} is outside (0, 1]")

    seeds = doc.get("seeds")
    if not isinstance(seeds, dict) or "sampling" not in seeds:
        raise ManifestError("seeds.sampling", "an explicit sampling seed is required")
    seed = seeds["sampling"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ManifestError("seeds.sampling", f"must be an unsigned 64-bit integer, got {seed!r}")

    tol = doc.get("tolerances", {}).get("leibniz", 1e-9)
    if not isinstance(tol, (int, float)) or not tol >= 0:
        raise ManifestError("tolerances.leibniz", f"must be a nonnegative number, got {tol!r}")

    path, family = doc.get("path"), doc.get("family")
    if (path is None) == (family is None):
        raise ManifestError("path", "give exactly one of 'path' or 'family'")
    grid_size = doc.get("gridSize")
    if grid_size is not None and (not isinstance(grid_size, int) or grid_size < 2 or grid_size % 2):
        raise ManifestError("gridSize", f"must be an even integer >= 2, got {grid_size!r}")
    if path is not None:
        if not isinstance(path, dict):
            raise ManifestError("path", "must be an object")
        if any(t == 0 for t in t_grid):
            raise ManifestError("tGrid", "circle experiments need t > 0")
    if family is not None:
        mats = family.get("matrices") if isinstance(family, dict) else None
        if not isinstance(mats, list) or not mats:
            raise ManifestError("family.matrices", "must be a nonempty list of square matrices")

    options = dict(DEFAULTS)
    extra = doc.get("options", {})
    unknown = set(extra) - set(DEFAULTS)
    if unknown:
        raise ManifestError(f"options.{sorted(unknown)[0]}", "unknown option")
    options.update(extra)
    return ExperimentManifest(
        scenario=str(doc.get("scenario", "experiment")), t_grid=t_grid, epsilon_list=eps,
        seed=seed, tolerance=float(tol), path=path, family=family, grid_size=grid_size,
        output=doc.get("output"), options=options)


def family_operator(spec: dict):
    """``t -> sum_j t**j M_j`` from ``{"matrices": [...], "imag": [...]}``."""
    mats = []
    for j, m in enumerate(spec["matrices"]):
        arr = np.asarray(m, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ManifestError(f"family.matrices[{j}]", f"not a square matrix (shape {arr.shape})")
        mats.append(arr.astype(complex))
    if "imag" in spec:
        for j, m in enumerate(spec["imag"]):
            mats[j] = mats[j] + 1j * np.asarray(m, dtype=float)
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise ManifestError("family.matrices", f"matrices of different shapes {sorted(shapes)}")
    stack = np.array(mats)

    def operator(t: float) -> np.ndarray:
        return np.tensordot(t ** np.arange(len(stack)), stack, axes=1)

    return operator, stack.shape[1]
