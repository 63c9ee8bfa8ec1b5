"""Lemma-level checks shared by the CLI and the acceptance suite.

Each check returns rows ``(lemma, epsilon, t, quantity, sampled, bound, ok)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .spectral_family import (
    EigenFamily,
    dnorm_uniform_gap,
    truncation_chain,
    truncation_defect,
    truncation_level,
    verify_hypothesis_A,
)

TOL = 1e-9


@dataclass
class LemmaRow:
    lemma: str
    epsilon: float
    t: float
    quantity: str
    sampled: float
    bound: float
    ok: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = int(self.ok)
        return d


def unit_dn_vectors(family: EigenFamily, k: int, n: int, seed: int) -> np.ndarray:
    """``n`` seeded ambient vectors (columns) with ``DN_t = 1`` at grid index ``k``.

    Coefficients in the full eigenbasis are complex Gaussians damped by
    ``(1 + |lambda|)**(-p)`` with ``p`` uniform on ``[0, 2]``, so the sample
    mixes rough and smooth vectors. Each vector is normalized with the graph
    norm computed from the operator, not from the coefficients.
    """
    rng = np.random.default_rng(seed)
    lams, V = family.full_basis(k)
    p = rng.uniform(0.0, 2.0, size=n)
    z = rng.standard_normal((lams.size, n)) + 1j * rng.standard_normal((lams.size, n))
    z *= (1.0 + np.abs(lams))[:, None] ** -p[None, :]
    X = V @ z
    if family.operator is not None:
        H = family.matrix(k)
        dn = np.linalg.norm(X, axis=0) + np.linalg.norm(H @ X, axis=0)
    else:
        dn = np.linalg.norm(z, axis=0) + np.linalg.norm(lams[:, None] * z, axis=0)
    return X / dn[None, :]


def prefix_points(family: EigenFamily, delta: float, count: int) -> list[int]:
    """Up to ``count`` grid indices with ``t < delta``, spread over the prefix."""
    idx = np.flatnonzero(family.grid < delta - 1e-15)
    if idx.size <= count:
        return idx.tolist()
    pick = np.unique(np.round(np.linspace(0, idx.size - 1, count)).astype(int))
    return idx[pick].tolist()


@dataclass
class TruncationCheck:
    epsilon: float
    Lambda: float
    N: int
    delta: float
    t_values: list
    n_vectors: int
    max_defect: float
    violations: int
    chain_violations: int
    chain_steps: dict


def uniform_truncation_check(family: EigenFamily, epsilon: float, *, n_vectors: int = 1000,
                             n_points: int = 5, seed: int = 0, tol: float = TOL) -> TruncationCheck:
    """Truncation defects and the full Abel chain on seeded unit-D-norm vectors.

    ``chain_steps`` maps each step name to its worst slack ``rhs - lhs`` (or
    ``-|lhs - rhs|`` for identities) over all samples.
    """
    level = truncation_level(family, epsilon)
    points = prefix_points(family, level.delta, n_points)
    worst = 0.0
    bad = chain_bad = 0
    slack: dict[str, float] = {}
    for j, k in enumerate(points):
        X = unit_dn_vectors(family, k, n_vectors, seed + j)
        lams, V = family.full_basis(k)
        coeffs = V.conj().T @ X
        H = family.matrix(k) if family.operator is not None else None
        energy = (np.linalg.norm(X, axis=0) ** 2 + np.linalg.norm(H @ X, axis=0) ** 2) if H is not None else None
        for i in range(X.shape[1]):
            xi = X[:, i]
            dn = family.graph_norm(xi, k)
            d = truncation_defect(family, k, level.N, xi)
            worst = max(worst, d / dn)
            if d > epsilon * dn + tol:
                bad += 1
            steps = truncation_chain(coeffs[:, i], lams ** 2, level.N, epsilon, dn,
                                     None if energy is None else float(energy[i]), tol=tol)
            for st in steps:
                gap = -abs(st.lhs - st.rhs) if st.equality else st.rhs - st.lhs
                slack[st.name] = min(slack.get(st.name, math.inf), gap)
                if not st.ok:
                    chain_bad += 1
    return TruncationCheck(epsilon, level.Lambda, level.N, level.delta,
                           [float(family.grid[k]) for k in points], n_vectors, worst, bad, chain_bad, slack)


def spectral_lemma_rows(family: EigenFamily, epsilon_list, t_grid, *, n_vectors: int = 200,
                        seed: int = 0, tol: float = TOL) -> list[LemmaRow]:
    """Constant-N, uniform-truncation (with its chain) and D-norm field checks."""
    rows = []
    for eps in epsilon_list:
        lv = truncation_level(family, eps)
        hyp = verify_hypothesis_A(family, [lv.Lambda])[0]
        rows.append(LemmaRow("constant-N", eps, lv.delta, "tail margin above Lambda",
                             lv.margin_prefix, 0.0, lv.margin_prefix > 0))
        rows.append(LemmaRow("constant-N", eps, hyp.delta, "count below Lambda on prefix",
                             float(hyp.count0), float(lv.N), not hyp.rejected and hyp.count0 == lv.N))
        chk = uniform_truncation_check(family, eps, n_vectors=n_vectors, seed=seed, tol=tol)
        rows.append(LemmaRow("uniform-truncation", eps, max(chk.t_values, default=0.0),
                             "max ||xi - P xi|| / DN", chk.max_defect, eps, chk.violations == 0))
        for name, gap in chk.chain_steps.items():
            rows.append(LemmaRow("uniform-truncation", eps, max(chk.t_values, default=0.0),
                                 f"chain: {name}", -gap, 0.0, gap >= -tol))
        ks = [family.index(t) for t in t_grid if t <= lv.delta]
        # a finite model can sit entirely below Lambda
        n_gap = min(lv.N, family.n_branches - 1)
        for g in dnorm_uniform_gap(family, n_gap, 1.0, ks, seed=seed):
            rows.append(LemmaRow("continuous-field-D-norms", eps, g.t, "sup |DN_t - DN_0| on unit ball",
                                 g.sampled, g.bound, g.sampled <= g.bound + tol))
    return rows


def circle_lemma_rows(path, t_grid, *, tol: float = TOL) -> list[LemmaRow]:
    """Metric-derivative constant and the geodesic and Lipschitz sandwiches."""
    from .riemann_circle import (
        circle_lipschitz,
        geodesic_sandwich,
        lip_distance,
        metric_deriv_constant,
    )

    C, viol = metric_deriv_constant(path)
    rows = [LemmaRow("diff-poly-path", math.nan, math.nan, "sampled (t, t0, x) violations",
                     float(viol), 0.0, viol == 0)]
    rng = np.random.default_rng(0)
    lip0 = circle_lipschitz(path, 0.0)
    funcs = rng.standard_normal((16, path.grid_size)).cumsum(axis=1)
    for t in t_grid:
        n_bad, worst = geodesic_sandwich(path, t, C)
        rows.append(LemmaRow("lipschitz-sandwich", math.nan, t, "geodesic sandwich violations",
                             float(n_bad), 0.0, n_bad == 0))
        lipd, bound = lip_distance(path, t, C)
        rows.append(LemmaRow("lipschitz-sandwich", math.nan, t, "LipD", lipd, bound, lipd <= bound + tol))
        lipt = circle_lipschitz(path, t)
        k = C * t + 1
        a = lip0(funcs)
        b = lipt(funcs)
        ratio = float(max(np.max(b / a), np.max(a / b)))
        rows.append(LemmaRow("lipschitz-sandwich", math.nan, t, "seminorm ratio", ratio, k,
                             ratio <= k * (1 + tol)))
    return rows
