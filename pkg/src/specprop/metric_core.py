"""Finite metric spaces, Lipschitz seminorms, states and Monge-Kantorovich distances.

On a finite space the Monge-Kantorovich distance of the Lipschitz seminorm
is the Wasserstein-1 distance, computed here as a transport LP. The optimal
dual potentials are turned into a 1-Lipschitz function realizing the
supremum, which is returned as a certificate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, MetricError
from .simplex import solve_equality_lp

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Labelled points together with a validated distance matrix."""

    dist: np.ndarray
    points: tuple = ()

    def __post_init__(self):
        if not self.points:
            object.__setattr__(self, "points", tuple(range(self.dist.shape[0])))

    @property
    def size(self) -> int:
        return self.dist.shape[0]


def validate_metric(dist, points: Sequence | None = None, *, tol: float = DEFAULT_TOL,
                    exact: bool = False) -> FiniteMetricSpace:
    """Check the metric axioms and wrap ``dist`` as a :class:`FiniteMetricSpace`.

    Raises :class:`MetricError` naming the first violated axiom and the
    offending indices. Axioms are checked in the order: shape, finiteness,
    diagonal, negativity/separation, symmetry, triangle inequality.
    """
    arr = np.asarray(dist, dtype=object if exact else float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MetricError("shape", (), f"distance matrix must be square, got shape {arr.shape}")
    n = arr.shape[0]
    if n == 0:
        raise MetricError("shape", (), "distance matrix is empty")
    if not exact and not np.all(np.isfinite(arr)):
        i, j = np.argwhere(~np.isfinite(arr))[0]
        raise MetricError("finite", (int(i), int(j)), f"non-finite entry at ({i},{j})")
    if points is not None and len(points) != n:
        raise DimensionError(f"{len(points)} labels for {n} points")
    t = 0 if exact else tol
    for i in range(n):
        if abs(arr[i, i]) > t:
            raise MetricError("diagonal", (i, i), f"nonzero diagonal at ({i},{i})")
    for i in range(n):
        for j in range(n):
            if arr[i, j] < -t:
                raise MetricError("negative", (i, j), f"negative entry at ({i},{j})")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(arr[i, j] - arr[j, i]) > t:
                raise MetricError("symmetry", (i, j), f"asymmetry at ({i},{j})")
            if arr[i, j] <= t:
                raise MetricError("separation", (i, j), f"zero distance between distinct points ({i},{j})")
    if exact:
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    if arr[i, j] > arr[i, k] + arr[k, j]:
                        raise MetricError("triangle", (i, j, k),
                                          f"triangle violation d({i},{j}) > d({i},{k}) + d({k},{j})")
    else:
        # vectorized over (i, j) for each pivot k
        for k in range(n):
            excess = arr - (arr[:, k][:, None] + arr[k, :][None, :])
            bad = np.argwhere(excess > tol * (1 + np.abs(arr)))
            if bad.size:
                i, j = (int(v) for v in bad[0])
                raise MetricError("triangle", (i, j, k),
                                  f"triangle violation d({i},{j}) > d({i},{k}) + d({k},{j})")
    return FiniteMetricSpace(dist=arr, points=tuple(points) if points is not None else ())


@dataclass(frozen=True)
class LipschitzSeminorm:
    """``Lip(f) = max_{i != j} |f(i) - f(j)| / dist(i, j)``."""

    space: FiniteMetricSpace
    _inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = np.asarray(self.space.dist, dtype=float)
        inv = np.zeros_like(d)
        off = ~np.eye(d.shape[0], dtype=bool)
        inv[off] = 1.0 / d[off]
        object.__setattr__(self, "_inv", inv)

    def __call__(self, f) -> float:
        f = np.asarray(f)
        if f.shape[-1] != self.space.size:
            raise DimensionError(f"function has {f.shape[-1]} values, space has {self.space.size} points")
        diff = np.abs(f[..., :, None] - f[..., None, :])
        return (diff * self._inv).max(axis=(-2, -1))


@dataclass(frozen=True)
class State:
    """A probability vector over the points of a finite space."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise DimensionError("state weights must be a vector")
        if w.dtype == object:
            if any(v < 0 for v in w) or sum(w) != 1:
                raise ValueError("state weights must be nonnegative and sum to 1")
        elif np.any(w < -1e-12) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("state weights must be nonnegative and sum to 1")

    def __call__(self, f) -> float:
        return float(np.dot(self.weights.astype(float), np.asarray(f, dtype=float)))


def point_mass(n: int, i: int) -> State:
    w = np.zeros(n)
    w[i] = 1.0
    return State(w)


@dataclass
class MKResult:
    """Result record emitted for a Monge-Kantorovich computation."""

    value: float
    method: str
    certificate: np.ndarray | None = None
    plan: np.ndarray | None = None

    def to_json(self) -> dict:
        cert = None if self.certificate is None else [float(v) for v in self.certificate]
        return {"value": float(self.value), "method": self.method, "certificate": cert}


def _transport_constraints(m: int, n: int) -> np.ndarray:
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        A[m + j, j::n] = 1
    return A


def _wasserstein(phi, psi, dist, exact: bool):
    phi = np.asarray(phi, dtype=object if exact else float)
    psi = np.asarray(psi, dtype=object if exact else float)
    dist = np.asarray(dist, dtype=object if exact else float)
    # drop empty rows/columns; the LP stays exact on the remaining support
    rows = np.flatnonzero(phi != 0)
    cols = np.flatnonzero(psi != 0)
    cost = dist[np.ix_(rows, cols)]
    m, n = len(rows), len(cols)
    A = _transport_constraints(m, n)
    b = np.concatenate([phi[rows], psi[cols]])
    res = solve_equality_lp(cost.reshape(-1), A, b, exact=exact)
    u = res.duals[:m]
    v = res.duals[m:]
    # c-transform of the column potentials: 1-Lipschitz and optimal
    cert = np.array([min(dist[x, cols[j]] - v[j] for j in range(n)) for x in range(dist.shape[0])],
                    dtype=object if exact else float)
    plan = np.zeros((dist.shape[0], dist.shape[0]), dtype=object if exact else float)
    plan[np.ix_(rows, cols)] = res.x.reshape(m, n)
    return res.value, cert, plan, u


def mk_distance(phi: State, psi: State, lip: LipschitzSeminorm, *, exact: bool = False,
                with_result: bool = False):
    """Monge-Kantorovich distance ``sup {|phi(f) - psi(f)| : Lip(f) <= 1}``.

    Solved as the Wasserstein-1 transport LP over the space's distances.
    With ``exact=True`` states and distances are pivoted as Fractions and
    the returned value is a Fraction.
    """
    n = lip.space.size
    if phi.weights.shape[0] != n or psi.weights.shape[0] != n:
        raise DimensionError(f"states of length {phi.weights.shape[0]}/{psi.weights.shape[0]} "
                             f"on a space of {n} points")
    value, cert, plan, _ = _wasserstein(phi.weights, psi.weights, lip.space.dist, exact)
    if not exact:
        value = max(float(value), 0.0)
    if with_result:
        return MKResult(value=value, method="lp", certificate=cert, plan=plan)
    return value


def mk_distance_matrix(states: np.ndarray, others: np.ndarray, lip: LipschitzSeminorm) -> np.ndarray:
    """Pairwise float MK distances between two stacks of weight vectors."""
    out = np.empty((len(states), len(others)))
    for i, p in enumerate(states):
        for j, q in enumerate(others):
            out[i, j] = mk_distance(State(p), State(q), lip)
    return out


def hausdorff_distance(A: Sequence, B: Sequence, metric: Callable, *,
                       directed: bool = False):
    """Hausdorff distance ``max(sup_a inf_b d, sup_b inf_a d)`` between finite sets.

    ``metric`` is called on pairs ``(a, b)`` with ``a`` from ``A`` and ``b``
    from ``B``. With ``directed=True`` returns ``(value, d_AB, d_BA)``.
    """
    if len(A) == 0 or len(B) == 0:
        raise ValueError("Hausdorff distance needs nonempty sets")
    D = np.array([[float(metric(a, b)) for b in B] for a in A])
    d_ab = float(D.min(axis=1).max())
    d_ba = float(D.min(axis=0).max())
    value = max(d_ab, d_ba)
    if directed:
        return value, d_ab, d_ba
    return value


def diameter(lip: LipschitzSeminorm) -> float:
    """Largest pairwise distance; on finite spaces this is the quantum diameter."""
    return float(np.max(np.asarray(lip.space.dist, dtype=float)))


@dataclass(frozen=True)
class StateSampling:
    """Declared finite sample of a state space.

    Vertices, all pairwise midpoints of vertices, and ``n_random``
    Dirichlet(1, ..., 1) draws from ``seed``.
    """

    n_random: int = 512
    seed: int = 0
    midpoints: bool = True

    def states(self, n: int) -> np.ndarray:
        parts = [np.eye(n)]
        if self.midpoints and n > 1:
            i, j = np.triu_indices(n, k=1)
            mid = np.zeros((len(i), n))
            mid[np.arange(len(i)), i] = 0.5
            mid[np.arange(len(i)), j] = 0.5
            parts.append(mid)
        if self.n_random:
            rng = np.random.default_rng(self.seed)
            parts.append(rng.dirichlet(np.ones(n), size=self.n_random))
        return np.vstack(parts)


def load_problem(text: str):
    """Parse ``{"dist": [[...]], "states": [[...]]}`` into a space and states."""
    doc = json.loads(text)
    space = validate_metric(doc["dist"])
    states = [State(np.asarray(s, dtype=float)) for s in doc.get("states", [])]
    return space, states


def fraction_matrix(rows) -> np.ndarray:
    return np.array([[Fraction(v) for v in r] for r in rows], dtype=object)


def circle_arc_metric(n: int, length: float = 2 * math.pi) -> np.ndarray:
    """Arc-length distances of ``n`` equispaced points on a circle of the given length."""
    k = np.arange(n)
    steps = np.abs(k[:, None] - k[None, :])
    return np.minimum(steps, n - steps) * (length / n)
