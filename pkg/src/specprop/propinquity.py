"""Metrical tunnel between two members of a spectral family and the resulting propinquity bound.

Vectors on each side are handled through their coefficients in that side's
tracked eigenbasis. The unitary group then acts diagonally, and the partner
map sends coefficient ``n <= N`` of one side to the same coefficient of the
other side scaled by ``6 / (6 + eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GridRefinementError, TruncationDimensionError
from .metric_core import LipschitzSeminorm, diameter, validate_metric
from .spectral_family import EigenFamily, _prefix_end, truncation_level
from .tunnels import DirectSumTunnel, build_direct_sum_tunnel, quotient_isometry_defect, tunnel_extent

TN_TOL = 1e-9
LEIBNIZ_TOL = 1e-9


@dataclass
class Geometry:
    """Lipschitz seminorms of the base algebra along the family.

    The algebra acts on ambient vectors by pointwise multiplication, so its
    carrier must have one point per ambient coordinate. ``C`` is the constant
    of the sandwich ``d_0 / (1 + C t) <= d_t <= (1 + C t) d_0``.
    """

    lip_at: Callable[[float], LipschitzSeminorm]
    C: float
    _cache: dict = field(default_factory=dict, repr=False)

    def lip(self, t: float) -> LipschitzSeminorm:
        key = round(float(t), 12)
        if key not in self._cache:
            self._cache[key] = self.lip_at(float(t))
        return self._cache[key]

    @property
    def diam0(self) -> float:
        return diameter(self.lip(0.0))

    @classmethod
    def static(cls, dist) -> "Geometry":
        """Parameter-independent base metric (``C = 0``)."""
        lip = LipschitzSeminorm(validate_metric(dist))
        return cls(lambda t: lip, 0.0)

    @classmethod
    def discrete(cls, n: int) -> "Geometry":
        d = np.ones((n, n)) - np.eye(n)
        return cls.static(d)


@dataclass
class MetricalTunnel:
    """Module, algebra and scalar levels of the tunnel at parameter index ``k``."""

    family: EigenFamily
    epsilon: float
    k: int
    algebra: DirectSumTunnel
    secondary: DirectSumTunnel

    @property
    def t(self) -> float:
        return float(self.family.grid[self.k])


def build_metrical_tunnel(family: EigenFamily, geometry: Geometry, epsilon: float,
                          k: int) -> MetricalTunnel:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    t = float(family.grid[k])
    algebra = build_direct_sum_tunnel(geometry.lip(0.0), geometry.lip(t), epsilon / 2)
    point = LipschitzSeminorm(validate_metric([[0.0]]))
    # scalar level: Q(z, w) = (2/eps)|z - w| is the bridge term on one point
    secondary = build_direct_sum_tunnel(point, point, epsilon / 2)
    return MetricalTunnel(family, float(epsilon), int(k), algebra, secondary)


def tn_seminorm(tunnel: MetricalTunnel, xi, eta) -> float:
    """``max{DN_0(xi), DN_t(eta), (2/eps)||xi - eta||}`` on ambient vectors."""
    fam = tunnel.family
    xi = np.asarray(xi)
    eta = np.asarray(eta)
    vals = [fam.graph_norm(xi, 0), fam.graph_norm(eta, tunnel.k),
            2.0 / tunnel.epsilon * float(np.linalg.norm(xi - eta))]
    if not all(math.isfinite(v) for v in vals):
        return math.inf
    return max(vals)


def partner_scale(epsilon: float) -> float:
    return 6.0 / (6.0 + epsilon)


def partner_vector(family: EigenFamily, xi, src: int, dst: int, epsilon: float, N: int, *,
                   tol: float = TN_TOL) -> np.ndarray:
    """``(6/(6+eps)) sum_{n<=N} <xi, e_n(src)> e_n(dst)`` for an ambient vector ``xi``.

    ``src`` and ``dst`` are grid indices. Raises ``ValueError`` when
    ``DN_src(xi) > 1``.
    """
    xi = np.asarray(xi, dtype=complex)
    dn = family.graph_norm(xi, src)
    if dn > 1 + tol:
        raise ValueError(f"partner_vector needs DN(xi) <= 1, got {dn:.6g}")
    m = N + 1
    Es = family.vectors[src][:, :m]
    Ed = family.vectors[dst][:, :m]
    return partner_scale(epsilon) * (Ed @ (Es.conj().T @ xi))


def leibniz_defects(tunnel: MetricalTunnel, samples) -> tuple[float, float]:
    """Worst modular and inner Leibniz defects over ``(a, b, xi, eta, xi2, eta2)`` samples.

    A nonpositive defect means the inequality holds on that sample.
    """
    eps = tunnel.epsilon
    modular = inner = -math.inf
    for a, b, xi, eta, xi2, eta2 in samples:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        tn = tn_seminorm(tunnel, xi, eta)
        tn2 = tn_seminorm(tunnel, xi2, eta2)
        T = tunnel.algebra.seminorm(a, b)
        norm_ab = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        lhs = 2 / eps * float(np.linalg.norm(a * xi - b * eta))
        modular = max(modular, lhs - (norm_ab + T) * tn)
        lhs = 2 / eps * abs(np.vdot(xi2, xi) - np.vdot(eta2, eta))
        inner = max(inner, float(lhs) - 2 * tn * tn2)
    return modular, inner


@dataclass(frozen=True)
class ReachSampling:
    """Declared sample of the D-norm unit balls used for the covariant reach.

    Vectors are drawn from the span of branches ``0..N + tail`` on each side:
    ``n_axis`` ellipsoid axis points (lowest branches, plus branch ``N + 1``)
    and ``n_random`` seeded complex Gaussian directions scaled to unit D-norm.
    Test vectors ``omega`` are drawn the same way.
    """

    n_axis: int = 4
    n_random: int = 4
    n_omega_axis: int = 3
    n_omega_random: int = 3
    tail: int = 6
    seed: int = 0
    chunk: int = 8192


def _coeff_dn(c: np.ndarray, lam: np.ndarray) -> np.ndarray:
    mag = np.abs(c) ** 2
    return np.sqrt(mag.sum(axis=-1)) + np.sqrt(mag @ (lam ** 2))


def _ball_boundary(lam: np.ndarray, axis_idx, n_random: int, rng) -> np.ndarray:
    K = lam.size
    axes = np.zeros((len(axis_idx), K), dtype=complex)
    for r, j in enumerate(axis_idx):
        axes[r, j] = 1.0 / (1.0 + abs(lam[j]))
    z = rng.standard_normal((n_random, K)) + 1j * rng.standard_normal((n_random, K))
    z /= _coeff_dn(z, lam)[:, None]
    return np.vstack([axes, z])


@dataclass
class ReachReport:
    sampled: float
    bound: float
    side_0: float
    side_t: float
    n_times: int
    step: float
    partner_tn: float

    def to_json(self) -> dict:
        return {k: float(v) if isinstance(v, float) else v for k, v in self.__dict__.items()}


def time_grid(epsilon: float, max_lambda: float) -> np.ndarray:
    """Uniform grid on ``[0, 1/eps]`` with step at most ``eps / (8 max|lambda|)``."""
    horizon = 1.0 / epsilon
    step = epsilon / (8.0 * max(max_lambda, 1e-300))
    n = max(int(math.ceil(horizon / step)), 1) + 1
    return np.linspace(0.0, horizon, n)


def _sup_abs(x, lam0, lamt, U, V, chunk) -> np.ndarray:
    """``max_x |exp(i x lam0) @ U - exp(i x lamt) @ V|`` column-wise."""
    best = np.zeros(U.shape[1])
    for s in range(0, x.size, chunk):
        xs = x[s:s + chunk, None]
        F = np.exp(1j * xs * lam0[None, :]) @ U - np.exp(1j * xs * lamt[None, :]) @ V
        np.maximum(best, np.abs(F).max(axis=0), out=best)
    return best


def covariant_reach(family: EigenFamily, k: int, epsilon: float, N: int, times=None,
                    sampling: ReachSampling | None = None) -> ReachReport:
    """Sampled covariant reach of the metrical tunnel at grid index ``k``.

    For a pair ``(xi, eta)`` (side 0, side t) the distance is
    ``sup_x sup_(w0, wt) |<exp(ix D_0) xi, w0> - <exp(ix D_t) eta, wt>|`` over
    ``x`` in ``times`` and sampled test pairs with ``TN(w0, wt) <= 1``. Each
    sampled unit-D-norm vector on either side is compared with its partner
    vector on the other side, which bounds its distance to the other ball.
    ``sampled`` is the worst such value; the certified bound is ``eps``.
    """
    sampling = sampling or ReachSampling()
    if k == 0:
        return ReachReport(0.0, float(epsilon), 0.0, 0.0, 0, 0.0, 0.0)
    K = min(N + 1 + sampling.tail, family.n_vectors)
    m = min(N + 1, K)
    lam0 = family.lambdas[0, :K]
    lamt = family.lambdas[k, :K]
    if times is None:
        times = time_grid(epsilon, float(max(np.abs(lam0).max(), np.abs(lamt).max())))
    times = np.asarray(times, dtype=float)
    if times.min() < 0 or times.max() > 1.0 / epsilon * (1 + 1e-12):
        raise ValueError(f"time grid leaves [0, 1/eps] = [0, {1 / epsilon:.6g}]")
    rng = np.random.default_rng(sampling.seed)
    s = partner_scale(epsilon)
    axis_idx = sorted(set(range(min(sampling.n_axis - 1, m))) | ({m} if m < K else set()))
    omega_idx = list(range(min(sampling.n_omega_axis, m)))

    def partner(c):
        out = np.zeros_like(c)
        out[..., :m] = s * c[..., :m]
        return out

    E0 = family.vectors[0][:, :K]
    Et = family.vectors[k][:, :K]

    def tn(c0, ct):
        diff = np.linalg.norm(E0 @ c0.T - Et @ ct.T, axis=0)
        return np.maximum.reduce([_coeff_dn(c0, lam0), _coeff_dn(ct, lamt), 2 / epsilon * diff])

    # test pairs (w0, wt) from both balls, scaled into TN <= 1
    W0 = _ball_boundary(lam0, omega_idx, sampling.n_omega_random, rng)
    Wt = _ball_boundary(lamt, omega_idx, sampling.n_omega_random, rng)
    w0 = np.vstack([W0, partner(Wt)])
    wt = np.vstack([partner(W0), Wt])
    w_tn = tn(w0, wt)
    scale = np.where(w_tn > 1, 1 / w_tn, 1.0)
    w0 *= scale[:, None]
    wt *= scale[:, None]

    X0 = _ball_boundary(lam0, axis_idx, sampling.n_random, rng)
    Xt = _ball_boundary(lamt, axis_idx, sampling.n_random, rng)
    xi = np.vstack([X0, partner(Xt)])
    eta = np.vstack([partner(X0), Xt])
    partner_tn = float(tn(xi, eta).max())

    P = w0.shape[0]
    # column (i, p) holds coefficients of <., w_p> applied to pair i
    U = (xi[:, :, None] * w0.conj().T[None, :, :]).transpose(1, 0, 2).reshape(K, -1)
    V = (eta[:, :, None] * wt.conj().T[None, :, :]).transpose(1, 0, 2).reshape(K, -1)
    sup = _sup_abs(times, lam0, lamt, U, V, sampling.chunk).reshape(xi.shape[0], P).max(axis=1)
    n0 = X0.shape[0]
    side0 = float(sup[:n0].max())
    sidet = float(sup[n0:].max())
    step = float(times[1] - times[0]) if times.size > 1 else 0.0
    return ReachReport(max(side0, sidet), float(epsilon), side0, sidet, int(times.size), step, partner_tn)


def reach_budget(epsilon: float) -> dict:
    """Term-by-term allotment of the reach estimate; the vector part sums to eps/2."""
    parts = {"truncation": epsilon / 6, "phases": epsilon / 12, "eigenvectors": epsilon / 12,
             "rescaling": epsilon / 6}
    vector = sum(parts.values())
    return {**parts, "vector": vector, "test_vectors": epsilon / 2, "total": vector + epsilon / 2}


@dataclass
class DeltaSchedule:
    epsilon: float
    Lambda: float
    N: int
    deltas: list[float]  # delta_0 .. delta_4
    indices: list[int]
    margins: list[float]
    delta: float
    certifying: float  # min(delta_0, delta_2): the two that gate certification
    certifying_index: int

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "Lambda": self.Lambda, "N": self.N,
                "deltas": self.deltas, "margins": self.margins, "delta": self.delta,
                "certifying": self.certifying}


def delta_schedule(family: EigenFamily, epsilon: float, geometry: Geometry | None = None, *,
                   strict: bool = True) -> DeltaSchedule:
    """Grid prefixes for the five continuity requirements of the main estimate.

    delta_0: tail squared eigenvalues stay above ``8/eps**2``.
    delta_1: ``max_{j<=N} |sqrt(alpha_j(t)) - sqrt(alpha_j(0))| < eps/6``.
    delta_2: ``C t diam_0 <= eps``, so the algebra tunnel with ``kappa = eps/2``
    has the right quotients.
    delta_3: ``max_{n<=N} ||e_n(t) - e_n(0)|| < eps / (12 (N+1))``.
    delta_4: ``|exp(i x lambda_j(t)) - exp(i x lambda_j(0))| < eps/12`` for all
    ``x, t`` in ``[0, delta_4]`` and ``j <= N``.

    Each margin is the smallest slack of its inequality over its prefix. With
    ``strict`` a prefix ending at the first grid point (``delta_i = 0``) raises
    :class:`GridRefinementError`.
    """
    level = truncation_level(family, epsilon)
    N = level.N
    grid = family.grid
    m = min(N + 1, family.n_branches)
    lam = family.lambdas[:, :m]

    gaps = np.abs(np.abs(lam) - np.abs(lam[0])).max(axis=1) if m else np.zeros(grid.size)
    q1 = epsilon / 6 - gaps

    if geometry is None or geometry.C == 0:
        q2 = np.full(grid.size, epsilon)
    else:
        q2 = epsilon - geometry.C * grid * geometry.diam0

    if m > family.n_vectors:
        raise TruncationDimensionError(f"branches 0..{N} are not all stored")
    E = family.vectors[:, :, :m]
    moves = np.linalg.norm(E - E[0][None], axis=1).max(axis=1) if m else np.zeros(grid.size)
    q3 = epsilon / (12 * (N + 1)) - moves

    dl = np.abs(lam - lam[0][None])
    worst = np.zeros(grid.size)
    for i, tk in enumerate(grid):
        # sup over x in [0, t_k] and parameters up to t_k
        arg = np.minimum(tk * dl[:i + 1] / 2, math.pi / 2)
        worst[i] = 2 * np.sin(arg).max() if arg.size else 0.0
    q4 = epsilon / 12 - worst

    a_tail = family.alphas[:, N:]
    tail_min = a_tail.min(axis=1) if a_tail.shape[1] else np.full(grid.size, np.inf)
    q0 = tail_min - level.Lambda

    deltas, idxs, margins = [], [], []
    for i, q in enumerate((q0, q1, q2, q3, q4)):
        ok = q > 0 if i != 2 else q >= 0
        d, idx = _prefix_end(ok, grid)
        if strict and grid.size > 1 and idx <= 0:
            raise GridRefinementError(
                f"delta_{i} is zero at eps={epsilon}: the inequality fails at t={grid[1]:.6g}; "
                "refine the parameter grid near 0")
        deltas.append(d)
        idxs.append(idx)
        margins.append(float(q[:idx + 1].min()) if idx >= 0 else float(q[0]))
    cert_idx = min(idxs[0], idxs[2])
    return DeltaSchedule(
        epsilon=float(epsilon), Lambda=level.Lambda, N=N, deltas=deltas, indices=idxs,
        margins=margins, delta=min(deltas), certifying=float(grid[max(cert_idx, 0)]),
        certifying_index=cert_idx)


@dataclass
class CellReport:
    t: float
    epsilon: float
    N: int
    Lambda: float
    deltas: list[float]
    extent_sampled: float
    extent_bound: float
    secondary_extent: float
    quotient_defect: float
    modular_defect: float
    inner_defect: float
    partner_tn: float
    reach_sampled: float
    reach_bound: float
    certified: bool
    failed: str = ""

    def row(self) -> dict:
        return {
            "t": self.t, "epsilon": self.epsilon,
            "extent_sampled": self.extent_sampled, "extent_bound": self.extent_bound,
            "reach_sampled": self.reach_sampled, "reach_bound": self.reach_bound,
            "certified": int(self.certified), "N": self.N, "Lambda": self.Lambda,
            "delta_0": self.deltas[0], "delta_1": self.deltas[1], "delta_2": self.deltas[2],
            "delta_3": self.deltas[3], "delta_4": self.deltas[4],
            "secondary_extent": self.secondary_extent, "quotient_defect": self.quotient_defect,
            "modular_defect": self.modular_defect, "inner_defect": self.inner_defect,
            "partner_tn": self.partner_tn, "failed": self.failed,
        }


def _leibniz_samples(family: EigenFamily, geometry: Geometry, k: int, epsilon: float, N: int,
                     C: float, n: int, seed: int):
    """Seeded ``(a, b, xi, eta, xi2, eta2)`` tuples with ``b`` the rescaled partner of ``a``."""
    rng = np.random.default_rng(seed)
    t = float(family.grid[k])
    m = min(N + 1, family.n_vectors)
    lam0 = family.lambdas[0, :m]
    E0 = family.vectors[0][:, :m]
    dist0 = np.asarray(geometry.lip(0.0).space.dist, dtype=float)
    out = []
    vecs = []
    for _ in range(2 * n):
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        z /= _coeff_dn(z, lam0)
        xi = E0 @ z
        vecs.append((xi, partner_vector(family, xi, 0, k, epsilon, N)))
    for i in range(n):
        # 1-Lipschitz test function: signed combination of distance functions
        p, q = rng.integers(0, dist0.shape[0], size=2)
        a = rng.uniform(0.2, 1.0) * (dist0[p] - 0.5 * dist0[q]) / 1.5 + rng.normal()
        c = 0.5 * (a.max() + a.min())
        b = c + (a - c) / (1 + C * t)
        out.append((a, b, *vecs[2 * i], *vecs[2 * i + 1]))
    return out


def certify_cell(family: EigenFamily, geometry: Geometry, epsilon: float, k: int, *,
                 sampling: ReachSampling | None = None, n_leibniz: int = 8,
                 tol: float = LEIBNIZ_TOL, schedule: DeltaSchedule | None = None) -> CellReport:
    """Every check of the main estimate at one ``(eps, t)`` cell.

    The cell is certified when ``t`` lies in the delta_0 and delta_2 prefixes,
    the algebra tunnel's quotients are exact on samples, sampled partners
    have ``TN <= 1``, both Leibniz defects are within ``tol``, and the
    sampled extent and covariant reach are below ``eps``. The first failing
    check is named in ``failed``.
    """
    sampling = sampling or ReachSampling()
    t = float(family.grid[k])
    half = epsilon / 2
    if k == 0:
        # identical triples: the identity tunnel has zero extent and reach
        sched = schedule or delta_schedule(family, epsilon, geometry, strict=False)
        return CellReport(t, epsilon, sched.N, sched.Lambda, sched.deltas, 0.0, 0.0, half,
                          0.0, 0.0, 0.0, 1.0, 0.0, float(epsilon), True)
    try:
        sched = schedule or delta_schedule(family, epsilon, geometry, strict=False)
    except TruncationDimensionError:
        return CellReport(t, epsilon, -1, 8 / epsilon ** 2, [0.0] * 5, math.nan, epsilon, half,
                          math.nan, math.nan, math.nan, math.nan, math.nan, float(epsilon), False,
                          "truncation dimension")
    base = dict(t=t, epsilon=float(epsilon), N=sched.N, Lambda=sched.Lambda, deltas=sched.deltas)
    nan = math.nan
    if k > sched.indices[0]:
        return CellReport(**base, extent_sampled=nan, extent_bound=float(epsilon),
                          secondary_extent=half, quotient_defect=nan, modular_defect=nan,
                          inner_defect=nan, partner_tn=nan, reach_sampled=nan,
                          reach_bound=float(epsilon), certified=False, failed="constant-N prefix")
    if k > sched.indices[2]:
        return CellReport(**base, extent_sampled=nan, extent_bound=float(epsilon),
                          secondary_extent=half, quotient_defect=nan, modular_defect=nan,
                          inner_defect=nan, partner_tn=nan, reach_sampled=nan,
                          reach_bound=float(epsilon), certified=False, failed="lipschitz sandwich")
    tunnel = build_metrical_tunnel(family, geometry, epsilon, k)
    ext = tunnel_extent(tunnel.algebra)
    sec = tunnel_extent(tunnel.secondary).sampled
    C = geometry.C
    dist0 = np.asarray(geometry.lip(0.0).space.dist, dtype=float)
    funcs = [dist0[0], dist0[dist0.shape[0] // 3] - dist0[0]]
    qd = quotient_isometry_defect(tunnel.algebra, funcs, s_grid=np.append(np.linspace(0, 1, 11), C * t))
    mod, inner = leibniz_defects(tunnel, _leibniz_samples(family, geometry, k, epsilon, sched.N, C,
                                                          n_leibniz, sampling.seed))
    reach = covariant_reach(family, k, epsilon, sched.N, sampling=sampling)
    checks = [
        ("quotient isometry", qd <= tol),
        ("partner TN", reach.partner_tn <= 1 + TN_TOL),
        ("modular Leibniz", mod <= tol),
        ("inner Leibniz", inner <= tol),
        ("extent", ext.sampled < epsilon),
        ("covariant reach", reach.sampled < epsilon),
    ]
    failed = next((name for name, ok in checks if not ok), "")
    return CellReport(**base, extent_sampled=ext.sampled, extent_bound=ext.analytic,
                      secondary_extent=sec, quotient_defect=qd, modular_defect=mod,
                      inner_defect=inner, partner_tn=reach.partner_tn,
                      reach_sampled=reach.sampled, reach_bound=reach.bound,
                      certified=not failed, failed=failed)


def same_triple(family: EigenFamily, geometry: Geometry, k: int, tol: float = 1e-12) -> bool:
    """Whether grid index ``k`` carries the same Dirac operator and metric as index 0."""
    if family.operator is not None:
        same_op = np.allclose(family.matrix(k), family.matrix(0), rtol=0, atol=tol)
    else:
        same_op = family.complete and np.allclose(family.lambdas[k], family.lambdas[0], rtol=0, atol=tol) \
            and np.allclose(family.vectors[k], family.vectors[0], rtol=0, atol=tol)
    if not same_op:
        return False
    d0 = np.asarray(geometry.lip(0.0).space.dist, dtype=float)
    dt = np.asarray(geometry.lip(float(family.grid[k])).space.dist, dtype=float)
    return bool(np.allclose(d0, dt, rtol=0, atol=tol))


@dataclass
class PropinquityBound:
    t: float
    value: float
    cell: CellReport | None
    evaluated: int


def spectral_propinquity_ub(family: EigenFamily, t: float, geometry: Geometry | None = None, *,
                            eps_min: float = 0.04, eps_max: float = 1.0, resolution: float = 1e-3,
                            sampling: ReachSampling | None = None, details: bool = False):
    """Smallest ``eps`` on an ascending ``resolution`` grid of ``[eps_min, eps_max]`` that certifies at ``t``.

    Certification is not monotone in ``eps`` (the constant-N prefix opens and
    closes as ``8/eps**2`` crosses squared eigenvalues), so the grid is
    scanned upward instead of bisected. Returns ``inf`` when no grid value
    certifies and ``0`` at ``t = 0``.
    """
    geometry = geometry or Geometry.discrete(family.dim)
    k = family.index(t)
    if k == 0 or same_triple(family, geometry, k):
        out = PropinquityBound(float(t), 0.0, None, 0)
        return out if details else 0.0
    n = int(math.floor((eps_max - eps_min) / resolution + 1e-9)) + 1
    evaluated = 0
    for eps in np.round(eps_min + resolution * np.arange(n), 12):
        eps = float(eps)
        if eps <= 0 or eps > 1:
            continue
        try:
            sched = delta_schedule(family, eps, geometry, strict=False)
        except TruncationDimensionError:
            continue
        if k > sched.certifying_index:
            continue
        evaluated += 1
        cell = certify_cell(family, geometry, eps, k, sampling=sampling, schedule=sched)
        if cell.certified:
            out = PropinquityBound(float(t), eps, cell, evaluated)
            return out if details else eps
    out = PropinquityBound(float(t), math.inf, None, evaluated)
    return out if details else math.inf
