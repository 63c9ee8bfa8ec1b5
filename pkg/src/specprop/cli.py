"""Command-line entry point.

Subcommands ``verify-lemmas``, ``propinquity``, ``circle-demo`` and
``report`` write ``summary.json``, ``table.csv`` and ``lemma_checks.csv``
into the output directory. The exit status is 0 exactly when no contracted
inequality was violated.

Every flag can also be set through an environment variable ``SPECPROP_<FLAG>``
(for example ``SPECPROP_SEED``); flags win over the environment, which wins
over the manifest.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import SpecPropError
from .manifest import ExperimentManifest, family_operator, parse_manifest
from .propinquity import Geometry, ReachSampling, certify_cell, delta_schedule, spectral_propinquity_ub
from .riemann_circle import (
    PolyMetricPath,
    circle_family,
    circle_geometry,
    continuity_experiment,
    family_grid,
)
from .spectral_family import check_invariants, track_eigenpairs
from .verification import circle_lemma_rows, spectral_lemma_rows

ENV_PREFIX = "SPECPROP_"
TABLE_FIELDS = ["t", "epsilon", "extent_sampled", "extent_bound", "reach_sampled", "reach_bound",
                "certified", "N", "Lambda", "delta_0", "delta_1", "delta_2", "delta_3", "delta_4",
                "secondary_extent", "quotient_defect", "modular_defect", "inner_defect",
                "partner_tn", "failed"]
LEMMA_FIELDS = ["lemma", "epsilon", "t", "quantity", "sampled", "bound", "ok"]


def _clean(v):
    """JSON-safe value: non-finite floats become strings, numpy scalars become Python ones."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path: Path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in fields})


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


class Context:
    """Family, geometry and optional circle path built from a manifest."""

    def __init__(self, m: ExperimentManifest):
        self.manifest = m
        opts = m.options
        self.grid = family_grid(m.t_grid)
        if m.path is not None:
            self.path = PolyMetricPath.from_spec(m.path, m.grid_size)
            if m.grid_size is not None and m.grid_size != self.path.grid_size:
                self.path = self.path.resample(m.grid_size)
            self.family = circle_family(self.path, self.grid, scheme=opts["scheme"], keep=opts["keep"])
            self.geometry = circle_geometry(self.path)
        else:
            self.path = None
            operator, dim = family_operator(m.family)
            self.family = track_eigenpairs(operator, self.grid)
            if "algebra" in m.family:
                self.geometry = Geometry.static(m.family["algebra"])
            else:
                self.geometry = Geometry.discrete(dim)
        self.sampling = ReachSampling(seed=m.seed)


def _lemma_rows(ctx: Context):
    m = ctx.manifest
    rows = spectral_lemma_rows(ctx.family, m.epsilon_list, m.t_grid,
                               n_vectors=int(m.options["truncationVectors"]), seed=m.seed,
                               tol=m.tolerance)
    if ctx.path is not None:
        rows += circle_lemma_rows(ctx.path, [t for t in m.t_grid if t > 0], tol=m.tolerance)
    return [r.as_dict() for r in rows]


def _cells(ctx: Context, threads: int):
    m = ctx.manifest
    scheds = {e: delta_schedule(ctx.family, e, ctx.geometry, strict=False) for e in m.epsilon_list}
    jobs = [(e, ctx.family.index(t)) for e in m.epsilon_list for t in m.t_grid]

    def run(job):
        e, k = job
        return certify_cell(ctx.family, ctx.geometry, e, k, sampling=ctx.sampling,
                            tol=m.tolerance, schedule=scheds[e])

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as ex:
        cells = list(ex.map(run, jobs))
    violations = [f"cell eps={c.epsilon:g} t={c.t:g}: {c.failed}"
                  for c, (e, k) in zip(cells, jobs)
                  if not c.certified and k <= scheds[e].certifying_index]
    return cells, violations


def cmd_verify_lemmas(ctx: Context, out: Path, threads: int) -> list[str]:
    rows = _lemma_rows(ctx)
    violations = [f"{r['lemma']}: {r['quantity']} (eps={r['epsilon']}, t={r['t']})"
                  for r in rows if not r["ok"]]
    violations += [f"eigen-family invariant: {n}" for n in check_invariants(ctx.family)]
    write_csv(out / "lemma_checks.csv", LEMMA_FIELDS, rows)
    write_csv(out / "table.csv", TABLE_FIELDS, [])
    write_json(out / "summary.json", {"command": "verify-lemmas", "scenario": ctx.manifest.scenario,
                                      "checks": len(rows), "violations": violations})
    return violations


def cmd_propinquity(ctx: Context, out: Path, threads: int) -> list[str]:
    m = ctx.manifest
    cells, violations = _cells(ctx, threads)
    bounds = []
    for t in m.t_grid:
        ub = spectral_propinquity_ub(ctx.family, t, ctx.geometry, eps_min=m.options["epsMin"],
                                     resolution=m.options["resolution"], sampling=ctx.sampling)
        bounds.append({"t": t, "spectral_bound": ub})
    write_csv(out / "table.csv", TABLE_FIELDS, [c.row() for c in cells])
    write_csv(out / "lemma_checks.csv", LEMMA_FIELDS, [])
    write_json(out / "summary.json", {"command": "propinquity", "scenario": m.scenario,
                                      "bounds": bounds, "violations": violations})
    return violations


def cmd_circle_demo(ctx: Context, out: Path, threads: int) -> list[str]:
    m = ctx.manifest
    if ctx.path is None:
        raise SpecPropError("circle-demo needs a 'path' manifest")
    rep = continuity_experiment(ctx.path, m.t_grid, m.epsilon_list, family=ctx.family,
                                eps_min=m.options["epsMin"], resolution=m.options["resolution"],
                                sampling=ctx.sampling, tol=m.tolerance, threads=threads)
    lemma = _lemma_rows(ctx)
    violations = list(rep["violations"])
    violations += [f"{r['lemma']}: {r['quantity']} (eps={r['epsilon']}, t={r['t']})"
                   for r in lemma if not r["ok"]]
    write_csv(out / "table.csv", TABLE_FIELDS, [c.row() for c in rep["cells"]])
    write_csv(out / "lemma_checks.csv", LEMMA_FIELDS, lemma)
    write_json(out / "summary.json", {
        "command": "circle-demo", "scenario": m.scenario, "C": rep["C"], "rows": rep["rows"],
        "monotone": rep["monotone"],
        "schedules": {repr(e): s.to_json() for e, s in rep["schedules"].items()},
        "violations": violations, "manifest": m.to_json()})
    return violations


def cmd_report(out: Path) -> list[str]:
    """Aggregate an existing run into ``bounds.csv`` and ``plot_data.json``."""
    summary = json.loads((out / "summary.json").read_text())
    with open(out / "table.csv", newline="") as fh:
        table = list(csv.DictReader(fh))
    per_eps = {}
    for r in table:
        e = r["epsilon"]
        per_eps.setdefault(e, {"epsilon": e, "cells": 0, "certified": 0})
        per_eps[e]["cells"] += 1
        per_eps[e]["certified"] += int(r["certified"])
    rows = summary.get("rows") or summary.get("bounds") or []
    fields = ["t", "spectral_bound", "lipd", "lipd_bound", "lip_propinquity"]
    write_csv(out / "bounds.csv", fields, [{k: r.get(k, "") for k in fields} for r in rows])
    write_json(out / "plot_data.json", {
        "t": [r["t"] for r in rows],
        "spectral_bound": [r.get("spectral_bound") for r in rows],
        "lip_propinquity": [r.get("lip_propinquity") for r in rows],
        "certification": [per_eps[e] for e in sorted(per_eps, key=float)],
    })
    return list(summary.get("violations", []))


COMMANDS = {"verify-lemmas": cmd_verify_lemmas, "propinquity": cmd_propinquity,
            "circle-demo": cmd_circle_demo}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specprop", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=[*COMMANDS, "report"])
    p.add_argument("--manifest", help="experiment manifest (JSON)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="sampling seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, help="worker threads for (eps, t) cells")
    p.add_argument("--tolerance", type=float, help="Leibniz and quotient tolerance")
    return p


def _env(args, name, cast):
    val = getattr(args, name)
    if val is None and (ENV_PREFIX + name.upper()) in os.environ:
        val = cast(os.environ[ENV_PREFIX + name.upper()])
    return val


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest_path = _env(args, "manifest", str)
    out = _env(args, "out", str)
    seed = _env(args, "seed", int)
    threads = _env(args, "threads", int) or 1
    tol = _env(args, "tolerance", float)
    try:
        if args.command == "report":
            if out is None:
                raise SpecPropError("report needs --out pointing at a finished run")
            violations = cmd_report(Path(out))
        else:
            if manifest_path is None:
                raise SpecPropError("--manifest is required")
            m = parse_manifest(Path(manifest_path).read_text())
            if seed is not None:
                m.seed = seed
            if tol is not None:
                m.tolerance = tol
            out_dir = Path(out or m.output or "specprop-out")
            out_dir.mkdir(parents=True, exist_ok=True)
            violations = COMMANDS[args.command](Context(m), out_dir, threads)
    except (SpecPropError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return 0 if not violations else 1


if __name__ == "__main__":
    sys.exit(main())
