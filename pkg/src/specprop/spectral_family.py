"""Eigenbranch tracking for one-parameter self-adjoint families and truncation lemmas.

Branches are matched between consecutive grid points by maximal total
overlap (Hungarian assignment on ``|<e_n(t_k), e_m(t_{k+1})>|**2``) and
phase-aligned so that consecutive inner products are real and nonnegative.
Branch labels are fixed at the first grid point by sorting the squared
eigenvalues weakly increasingly, ties broken by the sign of the eigenvalue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    AmbiguousMatchingError,
    DimensionError,
    TruncationDimensionError,
)

GRAM_TOL = 1e-9
RESIDUAL_TOL = 1e-8


def canonical_order(lams: np.ndarray) -> np.ndarray:
    """Indices sorting eigenvalues by ``lam**2`` then by ``lam``."""
    return np.lexsort((lams, np.round(lams ** 2, 10)))


@dataclass
class EigenFamily:
    """Tracked eigenbranches on a parameter grid.

    Attributes
    ----------
    grid : (T,) array
    lambdas : (T, B) array
        Eigenvalue of every branch at every grid point.
    vectors : (T, dim, K) complex array
        Eigenvectors of the first ``K`` branches as columns.
    operator : callable, optional
        ``t -> matrix``; needed for graph norms of arbitrary vectors and for
        full bases when ``K < dim``.
    """

    grid: np.ndarray
    lambdas: np.ndarray
    vectors: np.ndarray
    operator: Callable | None = None
    gram_defect: np.ndarray | None = None
    residual: np.ndarray | None = None
    lambda_jumps: np.ndarray | None = None
    vector_jumps: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def alphas(self) -> np.ndarray:
        return self.lambdas ** 2

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_branches(self) -> int:
        return self.lambdas.shape[1]

    @property
    def n_vectors(self) -> int:
        return self.vectors.shape[2]

    @property
    def complete(self) -> bool:
        return self.n_vectors == self.dim

    def index(self, t: float) -> int:
        hits = np.flatnonzero(np.isclose(self.grid, t, rtol=0, atol=1e-12))
        if hits.size == 0:
            raise KeyError(f"t={t} is not a grid point")
        return int(hits[0])

    def matrix(self, k: int) -> np.ndarray:
        if self.operator is None:
            raise ValueError("family was built without an operator")
        if k not in self._cache:
            if len(self._cache) >= 4:
                self._cache.pop(next(iter(self._cache)))
            self._cache[k] = np.asarray(self.operator(float(self.grid[k])))
        return self._cache[k]

    def graph_norm(self, xi: np.ndarray, k: int) -> float:
        """``||xi|| + ||D_t xi||`` at grid index ``k`` for a vector of the model space."""
        xi = np.asarray(xi)
        if xi.shape[0] != self.dim:
            raise DimensionError(f"vector of length {xi.shape[0]} in a {self.dim}-dimensional model")
        if self.operator is not None:
            Dxi = self.matrix(k) @ xi
            return float(np.linalg.norm(xi) + np.linalg.norm(Dxi))
        if not self.complete:
            raise ValueError("graph norm of arbitrary vectors needs the operator or a complete basis")
        c = self.vectors[k].conj().T @ xi
        return float(np.linalg.norm(c) + np.linalg.norm(self.lambdas[k] * c))

    def full_basis(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Complete eigenbasis at grid index ``k`` with tracked branches first.

        Columns ``0..K-1`` are the stored tracked vectors; the remaining
        eigenvectors come from a fresh diagonalization with the tracked
        directions removed, ordered by squared eigenvalue.
        """
        if self.complete:
            return self.lambdas[k].copy(), self.vectors[k].copy()
        H = self.matrix(k)
        w, V = np.linalg.eigh(H)
        E = self.vectors[k]
        taken = np.argmax(np.abs(E.conj().T @ V) ** 2, axis=1)
        if np.unique(taken).size != taken.size:
            raise AmbiguousMatchingError((self.grid[k], self.grid[k]), 0.0)
        rest = np.setdiff1d(np.arange(self.dim), taken)
        rest = rest[canonical_order(w[rest])]
        lams = np.concatenate([self.lambdas[k, :self.n_vectors], w[rest]])
        vecs = np.concatenate([E, V[:, rest]], axis=1)
        return lams, vecs

    def truncation(self, N: int, k: int) -> "DiracTruncation":
        if N + 1 > self.n_branches:
            raise DimensionError(f"N={N} beyond model dimension {self.n_branches}")
        return DiracTruncation(N=N, t=float(self.grid[k]), alphas=self.alphas[k, :N + 1].copy())

    def to_json(self, sidecar: str | Path | None = None) -> dict:
        """JSON document ``{grid, lambdas[branch][t]}``; vectors go to a binary sidecar.

        The sidecar holds little-endian float64 values in row-major order of
        shape ``(T, dim, K, 2)``, the last axis being real and imaginary parts.
        """
        doc = {"grid": [float(t) for t in self.grid],
               "lambdas": [[float(v) for v in row] for row in self.lambdas.T]}
        if sidecar is not None:
            arr = np.stack([self.vectors.real, self.vectors.imag], axis=-1).astype("<f8")
            Path(sidecar).write_bytes(np.ascontiguousarray(arr).tobytes())
            doc["vectors"] = {"file": Path(sidecar).name, "shape": list(self.vectors.shape),
                              "layout": "little-endian float64, row-major, (re, im) last"}
        return doc

    @classmethod
    def from_json(cls, doc: dict, directory: str | Path = ".") -> "EigenFamily":
        grid = np.asarray(doc["grid"], dtype=float)
        lambdas = np.asarray(doc["lambdas"], dtype=float).T
        if "vectors" in doc:
            shape = tuple(doc["vectors"]["shape"])
            raw = np.frombuffer((Path(directory) / doc["vectors"]["file"]).read_bytes(), dtype="<f8")
            arr = raw.reshape(shape + (2,))
            vectors = arr[..., 0] + 1j * arr[..., 1]
        else:
            vectors = np.zeros((grid.size, 0, 0), dtype=complex)
        return cls(grid=grid, lambdas=lambdas, vectors=vectors)


def _check_hermitian(H: np.ndarray, t: float, tol: float) -> None:
    defect = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if defect >= tol:
        raise ValueError(f"operator at t={t} is not self-adjoint (defect {defect:.3e})")


def _swap_gap(O: np.ndarray, cols: np.ndarray) -> float:
    """Smallest loss in total overlap from exchanging the targets of two branches."""
    P = O[:, cols]
    d = np.diag(P)
    G = P + P.T - d[:, None] - d[None, :]
    np.fill_diagonal(G, -np.inf)
    return float(-G.max()) if G.size > 1 else math.inf


def track_eigenpairs(operator: Callable, grid: Sequence[float], *, keep: int | None = None,
                     ambiguity_tol: float = 1e-6, hermitian_tol: float = 1e-10) -> EigenFamily:
    """Diagonalize ``operator(t)`` along ``grid`` and follow each branch.

    Parameters
    ----------
    operator
        ``t -> self-adjoint matrix`` (dense, complex or real).
    grid
        Strictly increasing parameter values.
    keep
        Number of branches, in canonical order at the first grid point,
        whose eigenvectors are stored. Defaults to all of them.
    ambiguity_tol
        If exchanging the targets of two branches changes the total overlap
        by less than this, the matching is ambiguous and
        :class:`AmbiguousMatchingError` names the interval to refine.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a nonempty strictly increasing sequence")
    lam_rows, vec_rows, gram, resid = [], [], [], []
    lam_jump, vec_jump = [], []
    prev = None
    for k, t in enumerate(grid):
        H = np.asarray(operator(float(t)))
        _check_hermitian(H, t, hermitian_tol)
        w, V = np.linalg.eigh(H)
        V = V.astype(complex)
        if prev is None:
            order = canonical_order(w)
            if keep is None:
                keep = len(w)
            keep = min(keep, len(w))
        else:
            O = np.abs(prev.conj().T @ V) ** 2
            _, order = linear_sum_assignment(O, maximize=True)
            gap = _swap_gap(O, order)
            if gap < ambiguity_tol:
                raise AmbiguousMatchingError((float(grid[k - 1]), float(t)), gap)
        w = w[order]
        V = V[:, order]
        if prev is not None:
            ov = np.einsum("ij,ij->j", prev.conj(), V)
            mag = np.abs(ov)
            phase = np.where(mag > 0, ov.conj() / np.where(mag > 0, mag, 1), 1.0)
            V = V * phase[None, :]
            lam_jump.append(float(np.max(np.abs(w - lam_rows[-1]))))
            vec_jump.append(float(np.max(np.linalg.norm(V[:, :keep] - prev[:, :keep], axis=0))))
        E = V[:, :keep]
        gram.append(float(np.max(np.abs(E.conj().T @ E - np.eye(keep)))))
        res = np.linalg.norm(H @ E - E * w[None, :keep], axis=0)
        resid.append(float(np.max(res / (1 + np.abs(w[:keep])))))
        lam_rows.append(w)
        vec_rows.append(E)
        prev = V
    fam = EigenFamily(
        grid=grid,
        lambdas=np.array(lam_rows),
        vectors=np.array(vec_rows),
        operator=operator,
        gram_defect=np.array(gram),
        residual=np.array(resid),
        lambda_jumps=np.array(lam_jump),
        vector_jumps=np.array(vec_jump),
    )
    return fam


def check_invariants(family: EigenFamily, *, lambda_modulus: float | None = None,
                     vector_modulus: float | None = None) -> list[str]:
    """Names of violated family invariants (empty when all hold)."""
    problems = []
    if family.gram_defect is not None and np.any(family.gram_defect >= GRAM_TOL):
        problems.append("orthonormality")
    if family.residual is not None and np.any(family.residual >= RESIDUAL_TOL):
        problems.append("eigen-residual")
    a0 = family.alphas[0]
    if np.any(np.diff(a0) < -1e-9 * (1 + np.abs(a0[1:]))):
        problems.append("reindexing")
    if lambda_modulus is not None and family.lambda_jumps is not None \
            and np.any(family.lambda_jumps > lambda_modulus):
        problems.append("eigenvalue continuity")
    if vector_modulus is not None and family.vector_jumps is not None \
            and np.any(family.vector_jumps > vector_modulus):
        problems.append("eigenvector continuity")
    return problems


def _prefix_end(ok: np.ndarray, grid: np.ndarray) -> tuple[float, int]:
    """Last grid point of the longest all-true prefix (``ok[0]`` is expected true)."""
    bad = np.flatnonzero(~ok)
    last = (bad[0] - 1) if bad.size else ok.size - 1
    if last < 0:
        return 0.0, -1
    return float(grid[last]), int(last)


@dataclass
class HypothesisRow:
    Lambda: float
    count0: int
    delta: float
    delta_index: int
    counts: list[int]
    rejected: bool = False


def verify_hypothesis_A(family: EigenFamily, Lambdas: Sequence[float], *,
                        tol: float = 1e-9) -> list[HypothesisRow]:
    """Grid prefix on which ``|spec(D_t^2) ∩ [0, Lambda]|`` keeps its value at the first grid point.

    A ``Lambda`` within ``tol`` of some squared eigenvalue at the first grid
    point is rejected (reported with ``rejected=True``).
    """
    a = family.alphas
    rows = []
    for L in Lambdas:
        if np.any(np.abs(a[0] - L) <= tol):
            rows.append(HypothesisRow(float(L), -1, 0.0, -1, [], rejected=True))
            continue
        counts = np.count_nonzero(a <= L, axis=1)
        delta, idx = _prefix_end(counts == counts[0], family.grid)
        rows.append(HypothesisRow(float(L), int(counts[0]), delta, idx, counts.tolist()))
    return rows


@dataclass
class TruncationLevel:
    Lambda: float
    N: int
    delta: float
    delta_index: int
    margin_above: float  # min_{n >= N} alpha_n(0) - Lambda
    margin_below: float  # Lambda - max_{n < N} alpha_n(0)
    margin_prefix: float  # min over the delta prefix of min_{n >= N} alpha_n(t) - Lambda
    nudged: bool = False


def truncation_level(family: EigenFamily, epsilon: float, *, tol: float = 1e-9) -> TruncationLevel:
    """``Lambda = 8 / eps**2``, the first index past it, and the grid prefix keeping the tail above it.

    ``N`` is the smallest index with ``alpha_n(0) > Lambda`` for every
    ``n >= N``. If ``Lambda`` collides with some ``alpha_n(0)`` it is moved
    up to the middle of the spectral gap above that eigenvalue.
    """
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    a0 = family.alphas[0]
    Lam = 8.0 / epsilon ** 2
    nudged = False
    if np.any(np.abs(a0 - Lam) <= tol):
        hit = a0[np.abs(a0 - Lam) <= tol].max()
        above = a0[a0 > hit + tol]
        Lam = 0.5 * (hit + above.min()) if above.size else hit + 1.0
        nudged = True
    N = int(np.count_nonzero(a0 <= Lam))
    if np.any(a0[N:] <= Lam):
        # only possible if the first grid point is not canonically ordered
        raise ValueError("squared eigenvalues at the first grid point are not weakly increasing")
    if not family.complete and N + 1 > family.n_vectors:
        raise TruncationDimensionError(
            f"truncation needs branches 0..{N} but only {family.n_vectors} are stored; "
            "increase the truncation dimension")
    tail = family.alphas[:, N:]
    if tail.shape[1] == 0:
        tail_min = np.full(family.grid.size, np.inf)
    else:
        tail_min = tail.min(axis=1)
    delta, idx = _prefix_end(tail_min > Lam, family.grid)
    return TruncationLevel(
        Lambda=Lam,
        N=N,
        delta=delta,
        delta_index=idx,
        margin_above=float(tail_min[0] - Lam),
        margin_below=float(Lam - a0[:N].max()) if N else float(Lam),
        margin_prefix=float(tail_min[:idx + 1].min() - Lam),
        nudged=nudged,
    )


def projection_basis(family: EigenFamily, k: int, N: int) -> np.ndarray:
    """Columns ``e_0(t), ..., e_N(t)`` (fewer when the model has fewer branches)."""
    if N > family.dim:
        raise DimensionError(f"N={N} beyond model dimension {family.dim}")
    m = min(N + 1, family.dim)
    if m > family.n_vectors:
        raise TruncationDimensionError(f"branches 0..{N} are not all stored")
    return family.vectors[k][:, :m]


def truncation_defect(family: EigenFamily, k: int, N: int, xi: np.ndarray) -> float:
    """``||xi - P_N(t) xi||`` with ``P_N(t)`` onto ``span{e_0(t), ..., e_N(t)}``."""
    E = projection_basis(family, k, N)
    xi = np.asarray(xi)
    if xi.shape[0] != family.dim:
        raise DimensionError(f"vector of length {xi.shape[0]} in a {family.dim}-dimensional model")
    return float(np.linalg.norm(xi - E @ (E.conj().T @ xi)))


@dataclass
class DiracTruncation:
    """Graph norm on coefficient space ``C^{N+1}`` at parameter ``t``."""

    N: int
    t: float
    alphas: np.ndarray


def dnorm(trunc: DiracTruncation, z) -> float:
    """``||z||_2 + sqrt(sum_j alpha_j(t) |z_j|**2)``."""
    z = np.asarray(z)
    if z.shape[-1] != trunc.N + 1:
        raise DimensionError(f"coefficient vector of length {z.shape[-1]}, expected {trunc.N + 1}")
    mag = np.abs(z) ** 2
    return np.sqrt(mag.sum(axis=-1)) + np.sqrt(mag @ np.abs(trunc.alphas))


def _ball_samples(dim: int, radius: float, n_random: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    axes = radius * np.eye(dim, dtype=complex)
    z = rng.standard_normal((n_random, dim)) + 1j * rng.standard_normal((n_random, dim))
    z *= radius / np.linalg.norm(z, axis=1, keepdims=True)
    return np.vstack([axes, z])


@dataclass
class GapRow:
    t: float
    sampled: float
    bound: float


def dnorm_uniform_gap(family: EigenFamily, N: int, C: float = 1.0, t_indices=None, *,
                      n_random: int = 256, seed: int = 0) -> list[GapRow]:
    """Sampled ``sup_{||z|| <= C} | ||z||_{t,N} - ||z||_{0,N} |`` with its analytic bound.

    The bound is ``C max_j |sqrt(alpha_j(t)) - sqrt(alpha_j(0))|``. The
    difference of norms is 1-homogeneous, so sampling the sphere of radius
    ``C`` (axis points and seeded random points) covers the ball.
    """
    if N + 1 > family.n_branches:
        raise DimensionError(f"N={N} beyond model dimension {family.n_branches}")
    idx = range(family.grid.size) if t_indices is None else t_indices
    Z = _ball_samples(N + 1, C, n_random, seed)
    base = family.truncation(N, 0)
    n0 = dnorm(base, Z)
    rows = []
    for k in idx:
        tr = family.truncation(N, k)
        sampled = float(np.max(np.abs(dnorm(tr, Z) - n0)))
        bound = C * float(np.max(np.abs(np.sqrt(np.abs(tr.alphas)) - np.sqrt(np.abs(base.alphas)))))
        rows.append(GapRow(float(family.grid[k]), sampled, bound))
    return rows


@dataclass
class ChainStep:
    name: str
    lhs: float
    rhs: float
    ok: bool
    equality: bool = False


def truncation_chain(coeffs: np.ndarray, alphas: np.ndarray, N: int, epsilon: float,
                     graph_norm: float, operator_energy: float | None = None, *,
                     tol: float = 1e-9) -> list[ChainStep]:
    """Every intermediate inequality of the uniform-truncation estimate for one vector.

    Parameters
    ----------
    coeffs, alphas
        Coefficients ``a_n = <xi, e_n(t)>`` and ``alpha_n(t)`` over a complete
        basis in branch order.
    N
        First tail index, from :func:`truncation_level`.
    graph_norm
        ``DN_t(xi)``, computed independently of ``coeffs``.
    operator_energy
        ``||xi||**2 + ||D_t xi||**2`` computed from the operator, checked
        against ``sum mu_n |a_n|**2``.

    The tail ``n >= N`` is reordered by increasing ``mu_n = alpha_n + 1``
    before the summation-by-parts step, which leaves every tail sum unchanged.
    Steps marked ``equality`` are identities checked to ``tol``.
    """
    a2 = np.abs(np.asarray(coeffs)) ** 2
    mu = np.asarray(alphas, dtype=float) + 1.0
    dn2 = graph_norm ** 2
    tail_sq = float(a2[N:].sum())
    A = float((a2[N:] / mu[N:]).sum())
    B = float((mu[N:] * a2[N:]).sum())
    total_energy = float((mu * a2).sum())
    steps = []

    def add(name, lhs, rhs, equality=False):
        ok = abs(lhs - rhs) <= tol * max(1.0, abs(rhs)) if equality else lhs <= rhs + tol
        steps.append(ChainStep(name, float(lhs), float(rhs), bool(ok), equality))

    add("parseval ||xi||^2 <= DN^2", float(a2.sum()), dn2)
    if operator_energy is not None:
        add("energy identity sum mu|a|^2 = ||xi||^2 + ||D xi||^2", total_energy, operator_energy,
            equality=True)
    add("energy bound sum mu|a|^2 <= 2 DN^2", total_energy, 2 * dn2)
    add("cauchy-schwarz tail", tail_sq, math.sqrt(A) * math.sqrt(B))
    add("tail energy <= 4 DN^2", math.sqrt(B), 2 * graph_norm)
    if a2.size > N:
        order = N + np.argsort(mu[N:], kind="stable")
        b = a2[order]
        m = mu[order]
        S = np.cumsum(b)  # partial tail sums S_j
        # summation by parts: sum b_j/m_j = S_last/m_last + sum_{j<last} S_j (1/m_j - 1/m_{j+1})
        abel = S[-1] / m[-1] + float(np.sum(S[:-1] * (1 / m[:-1] - 1 / m[1:])))
        add("abel summation identity", A, abel, equality=True)
        add("abel bound <= tail / mu_N", abel, S[-1] / m[0])
        add("tail / mu_N <= 2 DN^2 / mu_N", S[-1] / m[0], 2 * dn2 / m[0])
        add("2 DN^2 / mu_N <= eps^2/4 DN^2", 2 * dn2 / m[0], epsilon ** 2 / 4 * dn2)
    add("tail^2 <= 2 sqrt(A) DN", tail_sq, 2 * math.sqrt(A) * graph_norm)
    add("2 sqrt(A) DN <= eps DN^2", 2 * math.sqrt(A) * graph_norm, epsilon * dn2)
    # the last two steps bound the tail norm itself rather than its square
    if a2.size > N:
        mu_min = float(mu[N:].min())
        add("tail^2 <= sum mu|a|^2 / mu_N", tail_sq, total_energy / mu_min)
        add("sum mu|a|^2 / mu_N <= eps^2/4 DN^2", total_energy / mu_min, epsilon ** 2 / 4 * dn2)
    add("||xi - P xi|| <= eps/2 DN", math.sqrt(tail_sq), epsilon / 2 * graph_norm)
    add("eps/2 DN <= eps DN", epsilon / 2 * graph_norm, epsilon * graph_norm)
    return steps
