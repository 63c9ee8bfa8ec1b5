"""Direct-sum tunnels between Lipschitz seminorms on a common finite carrier.

The tunnel seminorm ``T(a, b) = max{L(a), R(b), ||a - b||_sup / kappa}`` is
the Lipschitz seminorm of the shortest-path metric on two copies of the
carrier joined by bridges of length ``kappa`` between matching points: the
unit ball of ``T`` is cut out by exactly those edge constraints. This turns
every Monge-Kantorovich computation for ``T`` into a Wasserstein-1 problem on
``2n`` points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import dijkstra, shortest_path

from .errors import DimensionError
from .metric_core import (
    LipschitzSeminorm,
    StateSampling,
    diameter,
    validate_metric,
)
from .simplex import solve_equality_lp


@dataclass
class DirectSumTunnel:
    left: LipschitzSeminorm
    right: LipschitzSeminorm
    kappa: float
    identity: bool = False
    _metric: np.ndarray | None = field(default=None, init=False, repr=False)

    @property
    def size(self) -> int:
        return self.left.space.size

    def seminorm(self, a, b) -> float:
        """``T(a, b)``; on the identity tunnel the sup-norm term forces ``a == b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        gap = float(np.max(np.abs(a - b)))
        if self.identity:
            cross = 0.0 if gap == 0 else math.inf
        else:
            cross = gap / self.kappa
        return max(float(self.left(a)), float(self.right(b)), cross)

    __call__ = seminorm

    def _graph(self) -> np.ndarray:
        n = self.size
        w = np.zeros((2 * n, 2 * n))
        w[:n, :n] = np.asarray(self.left.space.dist, dtype=float)
        w[n:, n:] = np.asarray(self.right.space.dist, dtype=float)
        idx = np.arange(n)
        w[idx, idx + n] = w[idx + n, idx] = self.kappa
        return w

    def metric(self) -> np.ndarray:
        """Shortest-path distances on the doubled carrier (left copy first)."""
        if self.identity:
            raise ValueError("the identity tunnel is not a metric on the doubled carrier")
        if self._metric is None:
            self._metric = shortest_path(self._graph(), method="FW", directed=False)
        return self._metric

    def distance_to_side(self, side: int) -> np.ndarray:
        """Distance from every point of the doubled carrier to the left (0) or right (1) copy."""
        n = self.size
        if self._metric is not None:
            cols = slice(0, n) if side == 0 else slice(n, 2 * n)
            return self._metric[:, cols].min(axis=1)
        sources = np.arange(n) + (0 if side == 0 else n)
        return dijkstra(self._graph(), directed=False, indices=sources, min_only=True)

    def lip(self) -> LipschitzSeminorm:
        """The tunnel seminorm as a Lipschitz seminorm on ``2n`` points."""
        if self.identity:
            raise ValueError("the identity tunnel is not a metric on the doubled carrier")
        return LipschitzSeminorm(validate_metric(self.metric()))

    def to_json(self) -> dict:
        return {
            "kappa": None if self.identity else float(self.kappa),
            "identity": self.identity,
            "left": np.asarray(self.left.space.dist, dtype=float).tolist(),
            "right": np.asarray(self.right.space.dist, dtype=float).tolist(),
        }

    @classmethod
    def from_json(cls, text: str) -> "DirectSumTunnel":
        doc = json.loads(text)
        left = LipschitzSeminorm(validate_metric(doc["left"]))
        right = LipschitzSeminorm(validate_metric(doc["right"]))
        if doc.get("identity") or doc.get("kappa") is None:
            return cls(left, right, 0.0, identity=True)
        return build_direct_sum_tunnel(left, right, doc["kappa"])


def build_direct_sum_tunnel(left: LipschitzSeminorm, right: LipschitzSeminorm,
                            kappa: float) -> DirectSumTunnel:
    """Tunnel with ``T(a,b) = max{left(a), right(b), ||a-b|| / kappa}``.

    The main theorem's coefficient ``2/eps`` is ``kappa = eps / 2``.
    """
    if left.space.size != right.space.size:
        raise DimensionError(
            f"carrier mismatch: {left.space.size} vs {right.space.size} points")
    if not kappa > 0 or not math.isfinite(kappa):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    return DirectSumTunnel(left, right, float(kappa))


def build_base_tunnel(lip0: LipschitzSeminorm, lipt: LipschitzSeminorm, C: float,
                      t: float) -> DirectSumTunnel:
    """Tunnel with ``kappa = C |t| diam(lip0)``; ``t == 0`` gives the flagged identity tunnel."""
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    kappa = C * abs(t) * diameter(lip0)
    if t == 0 or kappa == 0:
        if lip0.space.size != lipt.space.size:
            raise DimensionError("carrier mismatch")
        return DirectSumTunnel(lip0, lipt, 0.0, identity=True)
    return build_direct_sum_tunnel(lip0, lipt, kappa)


@dataclass
class ExtentReport:
    sampled: float
    analytic: float
    direction_A: float
    direction_B: float
    # directed components per side: (tunnel -> pullback, pullback -> tunnel)
    directed_A: tuple[float, float] = (0.0, 0.0)
    directed_B: tuple[float, float] = (0.0, 0.0)

    def to_json(self) -> dict:
        return {
            "sampled": self.sampled,
            "analytic": self.analytic,
            "direction_A": self.direction_A,
            "direction_B": self.direction_B,
            "directed_A": list(self.directed_A),
            "directed_B": list(self.directed_B),
        }


def _plan_max(sampling: StateSampling, r: np.ndarray) -> float:
    """Max of the linear functional ``mu -> mu . r`` over the sampling plan."""
    best = float(r.max())
    if sampling.midpoints and r.size > 1:
        top = np.sort(r)[-2:]
        best = max(best, float(top.mean()))
    if sampling.n_random:
        rng = np.random.default_rng(sampling.seed)
        draws = rng.dirichlet(np.ones(r.size), size=sampling.n_random)
        best = max(best, float((draws @ r).max()))
    return best


def nearest_pullback(tunnel: DirectSumTunnel, mu: np.ndarray, side: int) -> np.ndarray:
    """Pulled-back state of ``side`` minimizing the MK distance to ``mu``.

    Each point's mass moves to its nearest point on the chosen copy; no
    coupling can do better, since every unit of mass must travel at least
    that far.
    """
    n = tunnel.size
    d = tunnel.metric()
    offset = 0 if side == 0 else n
    target = offset + d[:, offset:offset + n].argmin(axis=1)
    nu = np.zeros(2 * n)
    np.add.at(nu, target, mu)
    return nu


def _pullback_infimum_lp(tunnel: DirectSumTunnel, mu: np.ndarray, side: int) -> float:
    """``inf_nu W1(mu, nu)`` over states ``nu`` on one copy, as a transport LP with a free target marginal."""
    n = tunnel.size
    d = tunnel.metric()
    support = np.flatnonzero(mu > 0)
    offset = 0 if side == 0 else n
    cost = d[np.ix_(support, np.arange(offset, offset + n))]
    k = len(support)
    A = np.zeros((k, k * n))
    for i in range(k):
        A[i, i * n:(i + 1) * n] = 1
    return float(solve_equality_lp(cost.reshape(-1), A, mu[support]).value)


def tunnel_extent(tunnel: DirectSumTunnel, sampling: StateSampling | None = None, *,
                  method: str = "closed") -> ExtentReport:
    """Sampled extent and its certified bound ``2 kappa``.

    For each sampled tunnel state the infimum over pulled-back states is
    exact (see :func:`nearest_pullback`); the supremum runs over the
    sampling plan, so ``sampled`` is a lower estimate of the true extent.
    ``method="lp"`` re-derives each infimum with a transport LP over the
    explicit sampled states, which is only practical on small carriers.
    """
    sampling = sampling or StateSampling()
    if tunnel.identity:
        return ExtentReport(0.0, 0.0, 0.0, 0.0)
    sides = []
    for side in (0, 1):
        if method == "closed":
            value = _plan_max(sampling, tunnel.distance_to_side(side))
        elif method == "lp":
            value = max(_pullback_infimum_lp(tunnel, mu, side)
                        for mu in sampling.states(2 * tunnel.size))
        else:
            raise ValueError(f"unknown extent method {method!r}")
        sides.append(value)
    return ExtentReport(
        sampled=max(sides),
        analytic=2 * tunnel.kappa,
        direction_A=sides[0],
        direction_B=sides[1],
        # pulled-back states are tunnel states, so that direction is zero
        directed_A=(sides[0], 0.0),
        directed_B=(sides[1], 0.0),
    )


def _min_partner(T, a, side, s_grid, sweeps):
    """Minimize ``T`` over partners of ``a`` on the other side of the tunnel."""
    def value(b):
        return T(a, b) if side == 0 else T(b, a)

    c = 0.5 * (a.max() + a.min())
    best_b, best = a.copy(), value(a)
    for s in s_grid:
        b = c + (a - c) / (1.0 + s)
        v = value(b)
        if v < best:
            best, best_b = v, b
    if sweeps:
        step = 0.25 * (float(a.max() - a.min()) or 1.0)
        b = best_b.copy()
        for _ in range(sweeps):
            improved = False
            for i in range(b.size):
                for sign in (1.0, -1.0):
                    trial = b.copy()
                    trial[i] += sign * step
                    v = value(trial)
                    if v < best:
                        best, b, improved = v, trial, True
            if not improved:
                step *= 0.5
        best_b = b
    return best, best_b


def quotient_isometry_defect(tunnel: DirectSumTunnel, samples, *, s_grid=None,
                             sweeps: int = 0) -> float:
    """Worst gap between a seminorm and the quotient of ``T`` onto that side.

    For each sample ``a`` (real-valued, ``left(a) <= 1``) the partner search
    runs over ``b = c + (a - c)/(1 + s)`` with ``c`` the midrange of ``a`` and
    ``s`` on ``s_grid``, then optionally polishes ``b`` by coordinate descent.
    The same is done with the roles of the two sides exchanged.
    """
    samples = [np.asarray(a, dtype=float) for a in samples]
    if not samples:
        raise ValueError("quotient_isometry_defect needs at least one sample")
    if s_grid is None:
        s_grid = np.linspace(0.0, 2.0, 401)
    worst = 0.0
    for a in samples:
        for side, own in ((0, tunnel.left), (1, tunnel.right)):
            target = float(own(a))
            best, _ = _min_partner(tunnel.seminorm, a, side, s_grid, sweeps)
            worst = max(worst, abs(best - target))
    return worst
