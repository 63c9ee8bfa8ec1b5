"""Polynomial paths of metrics on the circle and their Dirac operators.

A metric on the circle ``[0, 2pi)`` is a positive density ``g(x)`` with line
element ``sqrt(g) dx``. A polynomial path is ``g(t, x) = sum_j t**j h_j(x)``.

The Dirac operator ``-i d/ds`` (``ds`` the arc length) acts on
``L^2(sqrt(g) dx)``; conjugating by the half-density ``g**(1/4)`` moves it to
the fixed space ``L^2(dx)`` where it reads ``-i g**(-1/4) d/dx g**(-1/4)``.
Discretized on ``n`` equispaced points with antiperiodic spinors, the
derivative becomes a Fourier multiplier on the half-integer modes
``k + 1/2`` and the conjugation keeps the matrix exactly Hermitian.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal

from .errors import DimensionError, ManifestError
from .metric_core import FiniteMetricSpace, LipschitzSeminorm

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class PolyMetricPath:
    """Coefficient densities ``h_0, ..., h_N`` sampled on ``grid_size`` circle points."""

    coefficients: np.ndarray  # shape (N + 1, grid_size)

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", h)
        if np.any(h[0] <= 0):
            raise ValueError("h_0 = g(0) must be positive at every grid point")
        for t in np.linspace(0.0, 1.0, 101):
            if np.any(self.density(t) <= 0):
                raise ValueError(f"metric density is not positive at t={t:.3g}")

    @property
    def grid_size(self) -> int:
        return self.coefficients.shape[1]

    @property
    def degree(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.grid_size) / self.grid_size

    def density(self, t: float) -> np.ndarray:
        powers = t ** np.arange(self.coefficients.shape[0])
        return powers @ self.coefficients

    def resample(self, grid_size: int) -> "PolyMetricPath":
        """Periodic Fourier resampling of each coefficient onto a new grid."""
        if grid_size == self.grid_size:
            return self
        return PolyMetricPath(signal.resample(self.coefficients, grid_size, axis=1))

    @classmethod
    def conformal(cls, grid_size: int, base: float = 1.0, factor: float = 0.5) -> "PolyMetricPath":
        """``g(t) = base * (1 + factor * t)`` with constant density."""
        ones = np.ones(grid_size)
        return cls(np.array([base * ones, base * factor * ones]))

    @classmethod
    def from_spec(cls, spec: dict, grid_size: int | None = None) -> "PolyMetricPath":
        """Build a path from its JSON description.

        Accepted forms are ``{"gridSize": n, "coefficients": [h0, h1, ...]}``
        where each ``h_j`` is a list of ``n`` values or a single number, and
        ``{"gridSize": n, "conformal": {"base": b, "factor": f}}``.
        """
        n = spec.get("gridSize", grid_size)
        if n is None:
            raise ManifestError("path.gridSize", "missing grid size")
        if not isinstance(n, int) or n < 2:
            raise ManifestError("path.gridSize", f"must be an integer >= 2, got {n!r}")
        if "conformal" in spec:
            conf = spec["conformal"]
            return cls.conformal(n, float(conf.get("base", 1.0)), float(conf.get("factor", 0.5)))
        if "coefficients" not in spec:
            raise ManifestError("path", "needs 'coefficients' or 'conformal'")
        rows = []
        for j, h in enumerate(spec["coefficients"]):
            if isinstance(h, (int, float)):
                rows.append(np.full(n, float(h)))
            else:
                h = np.asarray(h, dtype=float)
                if h.shape != (n,):
                    raise ManifestError(f"path.coefficients[{j}]", f"expected {n} values, got {h.shape}")
                rows.append(h)
        try:
            return cls(np.array(rows))
        except ValueError as exc:
            raise ManifestError("path.coefficients", str(exc)) from None

    def to_json(self) -> str:
        return json.dumps({"gridSize": self.grid_size,
                           "coefficients": self.coefficients.tolist()})


def metric_deriv_constant(path: PolyMetricPath, *, check_grid: int = 41, tol: float = 1e-12):
    """Constant ``C`` with ``|g(t,x) - g(t0,x)| <= C |t - t0| g(0,x)``.

    ``C = max_{x, j>=1} |h_j(x)| / h_0(x) * sum_{j=0}^{N-1} (j + 1)``. The
    inequality is then checked on a ``check_grid x check_grid`` grid of
    ``(t, t0)`` pairs at every circle point.

    Returns
    -------
    C : float
    violations : int
        Number of sampled ``(t, t0, x)`` triples breaking the inequality.
    """
    h = path.coefficients
    N = path.degree
    if N == 0:
        C = 0.0
    else:
        ratio = float(np.max(np.abs(h[1:]) / h[0]))
        if not math.isfinite(ratio):
            raise ValueError("h_j / h_0 is unbounded")
        C = ratio * sum(j + 1 for j in range(N))
    ts = np.linspace(0.0, 1.0, check_grid)
    dens = np.array([path.density(t) for t in ts])
    lhs = np.abs(dens[:, None, :] - dens[None, :, :])
    rhs = C * np.abs(ts[:, None] - ts[None, :])[:, :, None] * h[0][None, None, :]
    violations = int(np.count_nonzero(lhs > rhs + tol * (1 + rhs)))
    return C, violations


def _cell_lengths(path: PolyMetricPath, t: float) -> np.ndarray:
    """Trapezoid length of each cell ``[x_j, x_{j+1}]``."""
    s = np.sqrt(path.density(t))
    h = TWO_PI / path.grid_size
    return 0.5 * h * (s + np.roll(s, -1))


def circumference(path: PolyMetricPath, t: float) -> float:
    return float(_cell_lengths(path, t).sum())


def geodesic_matrix(path: PolyMetricPath, t: float) -> np.ndarray:
    """All pairwise geodesic distances: the shorter of the two arcs."""
    cells = _cell_lengths(path, t)
    pos = np.concatenate([[0.0], np.cumsum(cells)[:-1]])
    total = cells.sum()
    arc = np.abs(pos[:, None] - pos[None, :])
    return np.minimum(arc, total - arc)


def geodesic_distance(path: PolyMetricPath, t: float, x: int, y: int) -> float:
    n = path.grid_size
    for v in (x, y):
        if not (0 <= v < n):
            raise IndexError(f"grid index {v} outside [0, {n})")
    return float(geodesic_matrix(path, t)[x, y])


def circle_space(path: PolyMetricPath, t: float) -> FiniteMetricSpace:
    """The discretized circle with geodesic distances of ``g(t)``.

    Constructed directly; arc-length distances are metric by construction,
    and the O(n^3) triangle check is skipped on large grids.
    """
    return FiniteMetricSpace(geodesic_matrix(path, t))


def circle_lipschitz(path: PolyMetricPath, t: float) -> LipschitzSeminorm:
    return LipschitzSeminorm(circle_space(path, t))


def _offdiag_ratios(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    off = ~np.eye(num.shape[0], dtype=bool)
    return num[off] / den[off]


def lip_distance(path: PolyMetricPath, t: float, C: float | None = None):
    """Log-dilation of the identity map between ``g(0)`` and ``g(t)`` geodesic distances.

    Returns ``(numeric, bound)`` with
    ``numeric = max(ln sup d_t/d_0, ln sup d_0/d_t)`` over grid pairs and
    ``bound = ln(C t + 1)``.
    """
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if C is None:
        C, _ = metric_deriv_constant(path)
    d0 = geodesic_matrix(path, 0.0)
    dt = geodesic_matrix(path, t)
    if np.any(_offdiag_ratios(dt, np.ones_like(dt)) <= 0):
        raise ValueError("degenerate metric: zero distance between distinct grid points")
    r = _offdiag_ratios(dt, d0)
    numeric = max(math.log(r.max()), math.log((1 / r).max()), 0.0)
    return numeric, math.log(C * t + 1)


def geodesic_sandwich(path: PolyMetricPath, t: float, C: float, *, tol: float = 1e-12):
    """Count grid pairs violating ``d_0/(Ct+1) <= d_t <= (Ct+1) d_0``.

    On the trapezoid grid both sides are sums of per-cell lengths, so the
    sandwich holds cell by cell whenever ``g(t)`` lies between
    ``g(0)/(Ct+1)**2`` and ``(Ct+1)**2 g(0)``; ``tol`` only absorbs rounding.
    """
    d0 = geodesic_matrix(path, 0.0)
    dt = geodesic_matrix(path, t)
    k = C * t + 1
    low = d0 / k - dt
    high = dt - k * d0
    bad = (low > tol * (1 + d0)) | (high > tol * (1 + d0))
    return int(np.count_nonzero(bad)), float(max(low.max(), high.max(), 0.0))


def propinquity_from_lipd(lip_d: float, diam0: float, diam_t: float) -> float:
    """``(exp(LipD) - 1) * max(diam0, diamT)``, which vanishes with ``LipD``."""
    if not math.isfinite(lip_d):
        raise ValueError("LipD must be finite")
    return math.expm1(lip_d) * max(diam0, diam_t)


# --- Dirac operator -------------------------------------------------------

SCHEMES = ("second-order", "spectral")


def mode_symbol(grid_size: int, scheme: str = "second-order", spin: str = "antiperiodic") -> tuple:
    """Discrete modes and the symbol of ``-i d/dx`` on them.

    Antiperiodic modes are the half-integers ``k + 1/2`` for
    ``k = -n/2, ..., n/2 - 1``, a set symmetric about zero. The spectral
    scheme uses the exact symbol; the second-order scheme uses
    ``(2/h) sin(h m / 2)``, the signed square root of the three-point
    Laplacian symbol, which is monotone on the whole band (no doublers) and
    has relative error ``(h m)**2 / 24``.
    """
    n = grid_size
    if spin == "antiperiodic":
        modes = np.arange(-n // 2, n // 2) + 0.5
    elif spin == "periodic":
        modes = np.fft.fftfreq(n, d=1.0 / n)
        modes[n // 2] = 0.0  # the Nyquist mode has no sign; give it a zero symbol
    else:
        raise ValueError(f"unknown spin structure {spin!r}")
    h = TWO_PI / n
    if scheme == "spectral":
        sym = modes.astype(float)
    elif scheme == "second-order":
        sym = (2.0 / h) * np.sin(h * modes / 2.0)
    else:
        raise ValueError(f"unknown Dirac scheme {scheme!r}; choose from {SCHEMES}")
    return modes, sym


@lru_cache(maxsize=8)
def derivative_matrix(grid_size: int, scheme: str = "second-order",
                      spin: str = "antiperiodic") -> np.ndarray:
    """Matrix of ``-i d/dx`` on nodal values, Hermitian by construction."""
    n = grid_size
    modes, sym = mode_symbol(n, scheme, spin)
    x = TWO_PI * np.arange(n) / n
    # M[j, l] = (1/n) sum_k sym_k exp(i m_k (x_j - x_l)): a function of j - l only
    lags = np.arange(-(n - 1), n)
    col = (np.exp(1j * np.outer(TWO_PI * lags / n, modes)) @ sym) / n
    j = np.arange(n)
    M = col[(j[:, None] - j[None, :]) + (n - 1)]
    M = 0.5 * (M + M.conj().T)
    M.setflags(write=False)
    return M


def dirac_matrix(path: PolyMetricPath, t: float, grid_size: int | None = None, *,
                 scheme: str = "second-order", spin: str = "antiperiodic") -> np.ndarray:
    """Hermitian discretization of the Dirac operator of ``g(t)`` on ``L^2(dx)``."""
    if grid_size is not None and grid_size != path.grid_size:
        path = path.resample(grid_size)
    n = path.grid_size
    if n % 2:
        raise DimensionError(f"grid size must be even, got {n}")
    g = path.density(t)
    if np.any(g <= 0):
        raise ValueError(f"metric density is not positive at t={t}")
    w = g ** -0.25
    D = w[:, None] * derivative_matrix(n, scheme, spin) * w[None, :]
    return 0.5 * (D + D.conj().T)


def closed_form_spectrum(path: PolyMetricPath, t: float, count: int) -> np.ndarray:
    """The ``count`` smallest-magnitude values of ``2 pi (k + 1/2) / L(t)``, sorted by ``(|lam|, lam)``.

    ``L(t)`` is computed by the trapezoid rule, which is exact for constant
    densities.
    """
    L = circumference(path, t)
    half = count // 2 + 2
    vals = TWO_PI * (np.arange(-half, half) + 0.5) / L
    order = np.lexsort((vals, np.abs(vals)))
    return vals[order][:count]


def conformal_spectrum(factor: float, t: float, count: int, base: float = 1.0) -> np.ndarray:
    """``(k + 1/2) / sqrt(base (1 + factor t))``, sorted by ``(|lam|, lam)``."""
    half = count // 2 + 2
    vals = (np.arange(-half, half) + 0.5) / math.sqrt(base * (1 + factor * t))
    order = np.lexsort((vals, np.abs(vals)))
    return vals[order][:count]


# --- end-to-end experiment ------------------------------------------------

def family_grid(t_grid, fine: tuple = ((0.02, 0.001), (0.1, 0.0025), (1.0, 0.005))) -> np.ndarray:
    """Parameter grid for tracking: ``0``, the requested points, and a graded refinement.

    ``fine`` lists ``(upper end, step)`` bands; each band is filled up to
    ``min(upper end, max(t_grid))``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    top = float(t_grid.max()) if t_grid.size else 0.0
    pts = [np.array([0.0]), t_grid]
    lo = 0.0
    for hi, step in fine:
        hi = min(hi, top)
        if hi > lo:
            pts.append(np.arange(lo, hi + step / 2, step))
        lo = max(lo, hi)
    return np.unique(np.round(np.concatenate(pts), 10))


def circle_geometry(path: PolyMetricPath, C: float | None = None):
    from .propinquity import Geometry

    if C is None:
        C, _ = metric_deriv_constant(path)
    return Geometry(lambda t: circle_lipschitz(path, t), C)


def circle_family(path: PolyMetricPath, grid, *, scheme: str = "second-order",
                  spin: str = "antiperiodic", keep: int | None = 160):
    from .spectral_family import track_eigenpairs

    return track_eigenpairs(lambda t: dirac_matrix(path, t, scheme=scheme, spin=spin), grid, keep=keep)


def continuity_experiment(path: PolyMetricPath, t_grid, epsilon_list, grid_size: int | None = None, *,
                          scheme: str = "second-order", keep: int | None = 160, eps_min: float = 0.04,
                          resolution: float = 1e-3, sampling=None, family=None, tol: float = 1e-9,
                          threads: int = 1) -> dict:
    """Run the whole continuity pipeline on a circle path.

    Returns a dict with per-``t`` rows (certified spectral bound and the
    Lipschitz-side bounds), per-``(eps, t)`` cells, the constant-N report, the
    delta schedules, and a list of ``violations`` naming every failed check.
    """
    from .propinquity import certify_cell, delta_schedule, spectral_propinquity_ub
    from .spectral_family import check_invariants, verify_hypothesis_A

    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(not 0 < t <= 1 for t in t_grid):
        raise ValueError("t grid must be a nonempty subset of (0, 1]")
    if grid_size is not None and grid_size != path.grid_size:
        path = path.resample(grid_size)
    C, deriv_violations = metric_deriv_constant(path)
    if family is None:
        family = circle_family(path, family_grid(t_grid), scheme=scheme, keep=keep)
    geometry = circle_geometry(path, C)
    violations = []
    if deriv_violations:
        violations.append(f"metric derivative constant: {deriv_violations} sampled violations")
    for name in check_invariants(family):
        violations.append(f"eigen-family invariant: {name}")

    hyp = verify_hypothesis_A(family, [8 / e ** 2 for e in epsilon_list])
    schedules = {}
    for eps in epsilon_list:
        schedules[eps] = delta_schedule(family, eps, geometry, strict=False)

    jobs = [(eps, family.index(t)) for eps in epsilon_list for t in t_grid]

    def run(job):
        eps, k = job
        return certify_cell(family, geometry, eps, k, sampling=sampling, tol=tol, schedule=schedules[eps])

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as ex:
        cells = list(ex.map(run, jobs))
    for cell, (eps, k) in zip(cells, jobs):
        if not cell.certified and k <= schedules[eps].certifying_index:
            violations.append(f"cell eps={eps:g} t={cell.t:g}: {cell.failed}")

    rows = []
    diam0 = float(geodesic_matrix(path, 0.0).max())
    for t in t_grid:
        lipd, bound = lip_distance(path, t, C)
        n_bad, worst = geodesic_sandwich(path, t, C)
        diam_t = float(geodesic_matrix(path, t).max())
        ub = spectral_propinquity_ub(family, t, geometry, eps_min=eps_min, resolution=resolution,
                                     sampling=sampling)
        rows.append({"t": t, "spectral_bound": ub, "lipd": lipd, "lipd_bound": bound,
                     "sandwich_violations": n_bad, "lip_propinquity": propinquity_from_lipd(lipd, diam0, diam_t)})
        if lipd > bound + 1e-9:
            violations.append(f"lipschitz distance at t={t:g}: {lipd:.6g} > {bound:.6g}")
        if n_bad:
            violations.append(f"geodesic sandwich at t={t:g}: {n_bad} pairs")

    by_t = sorted(rows, key=lambda r: r["t"])
    bounds = [r["spectral_bound"] for r in by_t]
    monotone = all(a <= b for a, b in zip(bounds, bounds[1:]))
    if not monotone:
        violations.append("spectral bounds are not nonincreasing as t decreases")
    for eps in epsilon_list:
        if not any(b < eps for b in bounds):
            violations.append(f"no t in the grid has a spectral bound below eps={eps:g}")
    return {"C": C, "family": family, "rows": rows, "cells": cells, "hypothesis": hyp,
            "schedules": schedules, "monotone": monotone, "violations": violations}
