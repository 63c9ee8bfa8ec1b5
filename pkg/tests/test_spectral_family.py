import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import eig2
from specprop.errors import AmbiguousMatchingError, DimensionError, TruncationDimensionError
from specprop.riemann_circle import PolyMetricPath, circle_family, conformal_spectrum, dirac_matrix
from specprop.spectral_family import (
    DiracTruncation,
    EigenFamily,
    check_invariants,
    dnorm,
    dnorm_uniform_gap,
    track_eigenpairs,
    truncation_chain,
    truncation_defect,
    truncation_level,
    verify_hypothesis_A,
)


def test_constant_family(constant_toy):
    fam = constant_toy
    assert np.allclose(fam.lambdas[:, 0], 0.5) and np.allclose(fam.lambdas[:, 1], 1.5)
    assert np.allclose(fam.vectors, fam.vectors[0][None])
    assert check_invariants(fam, lambda_modulus=1e-12, vector_modulus=1e-12) == []


def test_crossing_is_followed_smoothly(crossing_toy):
    fam = crossing_toy
    for k, t in enumerate(fam.grid):
        H = [[1 + t, 0], [0, 2 - t]]
        lo, hi = eig2(H)
        assert sorted(fam.lambdas[k]) == pytest.approx([lo, hi], abs=1e-12)
    assert fam.lambdas[:, 0] == pytest.approx(1 + fam.grid, abs=1e-12)
    assert fam.lambdas[-1, 0] == pytest.approx(2.0)


def test_rotating_family_matches_closed_form():
    # D_t = R(t) diag(1, 3) R(t)^T: eigenvalues fixed, vectors rotate smoothly
    def op(t):
        c, s = math.cos(t), math.sin(t)
        R = np.array([[c, -s], [s, c]])
        return R @ np.diag([1.0, 3.0]) @ R.T

    fam = track_eigenpairs(op, np.linspace(0, 1, 41))
    assert np.allclose(fam.lambdas, [[1.0, 3.0]] * 41)
    for k, t in enumerate(fam.grid):
        v = fam.vectors[k][:, 0]
        assert abs(abs(np.vdot(v, [math.cos(t), math.sin(t)])) - 1) < 1e-12
    # phases aligned: consecutive overlaps real and nonnegative
    ov = np.einsum("kij,kij->kj", fam.vectors[:-1].conj(), fam.vectors[1:])
    assert np.all(ov.real > 0) and np.allclose(ov.imag, 0)


def test_ambiguous_matching_names_interval():
    def op(t):
        return np.diag([1.0, 2.0]) if t < 0.5 else np.array([[1.5, 0.5], [0.5, 1.5]])

    with pytest.raises(AmbiguousMatchingError) as exc:
        track_eigenpairs(op, [0.0, 1.0])
    assert exc.value.interval == (0.0, 1.0)
    assert "refine" in str(exc.value)


def test_non_self_adjoint_rejected():
    with pytest.raises(ValueError, match="self-adjoint"):
        track_eigenpairs(lambda t: np.array([[1.0, 1.0], [0.0, 1.0]]), [0.0])


def test_circle_branches_match_closed_form(conformal_family):
    fam = conformal_family
    for k, t in enumerate(fam.grid):
        ref = conformal_spectrum(0.5, t, 21)
        assert np.max(np.abs(fam.lambdas[k, :21] - ref) / np.abs(ref)) < 0.01
    assert check_invariants(fam) == []


def test_hypothesis_A_examples(constant_toy, crossing_toy, conformal_family):
    row = verify_hypothesis_A(constant_toy, [1.0])[0]
    assert row.delta == 1.0 and row.count0 == 1
    row = verify_hypothesis_A(crossing_toy, [2.5])[0]
    assert row.count0 == 1 and row.delta < 1.0  # alpha of the 1+t branch passes 2.5
    row = verify_hypothesis_A(crossing_toy, [4.5])[0]
    assert row.count0 == 2 and row.delta == 1.0
    row = verify_hypothesis_A(conformal_family, [32.0])[0]
    assert row.count0 == 12
    counts = np.array(row.counts[:row.delta_index + 1])
    assert np.all(counts == 12)
    assert verify_hypothesis_A(constant_toy, [0.25])[0].rejected


def test_diag_crossing_counts_with_spec_lambda():
    # eigenvalues 1+t and 2-t: squares stay below 4 <= 2.5? no; count the closed form directly
    fam = track_eigenpairs(lambda t: np.diag([1 + t, 2 - t]), np.linspace(0, 1, 11))
    row = verify_hypothesis_A(fam, [2.5])[0]
    oracle = [sum(v ** 2 <= 2.5 for v in (1 + t, 2 - t)) for t in fam.grid]
    assert row.counts == oracle


def test_truncation_level_examples(conformal_family):
    lv = truncation_level(conformal_family, 0.5)
    assert lv.Lambda == 32.0 and lv.N == 12 and lv.delta > 0
    toy = track_eigenpairs(lambda t: np.diag([1.0, 2.0]), np.linspace(0, 1, 5))
    lv = truncation_level(toy, 1.0)
    assert lv.N == 2 and lv.delta == 1.0
    with pytest.raises(ValueError):
        truncation_level(toy, 1.5)


def test_truncation_level_nudges_collisions():
    fam = track_eigenpairs(lambda t: np.diag([math.sqrt(8.0), 3.0]), [0.0, 0.5])
    lv = truncation_level(fam, 1.0)
    assert lv.nudged and lv.Lambda == pytest.approx(8.5) and lv.N == 1


def test_truncation_dimension_error():
    path = PolyMetricPath.conformal(64)
    fam = circle_family(path, [0.0, 0.1], keep=10)
    with pytest.raises(TruncationDimensionError, match="increase"):
        truncation_level(fam, 0.25)


def test_truncation_defect_examples(conformal_family):
    fam = conformal_family
    k = 3
    e0 = fam.vectors[k][:, 0]
    assert truncation_defect(fam, k, 12, e0) < 1e-12
    # uniform over the first 2N branches: tail norm is sqrt of the tail share
    N = 12
    xi = fam.vectors[k][:, :2 * N].sum(axis=1) / math.sqrt(2 * N)
    assert truncation_defect(fam, k, N, xi) == pytest.approx(math.sqrt((2 * N - N - 1) / (2 * N)), abs=1e-10)
    with pytest.raises(DimensionError):
        truncation_defect(fam, k, N, xi[:10])


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 1000))
def test_truncation_defect_homogeneous(c, seed):
    fam = track_eigenpairs(lambda t: np.diag(np.arange(1.0, 9.0)) * (1 + t), [0.0, 0.5])
    xi = np.random.default_rng(seed).normal(size=8)
    assert truncation_defect(fam, 1, 3, c * xi) == pytest.approx(abs(c) * truncation_defect(fam, 1, 3, xi),
                                                                 rel=1e-10, abs=1e-12)


def test_dnorm_examples():
    tr = DiracTruncation(N=2, t=0.0, alphas=np.array([0.25, 0.25, 2.25]))
    assert dnorm(tr, np.zeros(3)) == 0
    assert dnorm(tr, [1, 0, 0]) == pytest.approx(1.5)
    zero = DiracTruncation(N=2, t=0.0, alphas=np.zeros(3))
    z = np.array([1.0, -2.0, 0.5j])
    assert dnorm(zero, z) == pytest.approx(np.linalg.norm(z))
    with pytest.raises(DimensionError):
        dnorm(tr, [1, 2])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(-3, 3))
def test_dnorm_dominates_and_is_homogeneous(zs, c):
    tr = DiracTruncation(N=3, t=0.1, alphas=np.array([0.2, 1.0, 4.0, 9.0]))
    z = np.array(zs)
    assert dnorm(tr, z) >= np.linalg.norm(z) - 1e-12
    assert dnorm(tr, c * z) == pytest.approx(abs(c) * dnorm(tr, z), rel=1e-12, abs=1e-12)


def test_dnorm_gap(conformal_family, constant_toy):
    rows = dnorm_uniform_gap(conformal_family, 12, 1.0)
    assert rows[0].sampled == 0 and rows[0].bound == 0
    assert all(r.sampled <= r.bound + 1e-12 for r in rows)
    k = conformal_family.index(0.1)
    gap = [r for r in rows if r.t == conformal_family.grid[k]][0]
    alphas = conformal_spectrum(0.5, 0.0, 13) ** 2
    bound = np.max(np.abs(np.sqrt(alphas) / math.sqrt(1.05) - np.sqrt(alphas)))
    assert gap.bound == pytest.approx(bound, rel=1e-3)
    assert all(r.sampled == 0 for r in dnorm_uniform_gap(constant_toy, 1, 1.0))
    # values shrink as t -> 0
    bounds = [r.bound for r in rows]
    assert all(a <= b + 1e-15 for a, b in zip(bounds, bounds[1:]))


def test_chain_flags_a_false_step():
    # a vector entirely in the tail at a level chosen too low breaks the chain
    alphas = np.array([0.0, 1.0, 4.0])
    coeffs = np.array([0.0, 0.0, 1.0])
    dn = 1.0 + 2.0
    steps = truncation_chain(coeffs / dn, alphas, 2, 0.5, 1.0)
    assert not all(s.ok for s in steps)


def test_json_round_trip_with_sidecar(tmp_path, crossing_toy):
    doc = crossing_toy.to_json(tmp_path / "vectors.bin")
    (tmp_path / "family.json").write_text(json.dumps(doc))
    back = EigenFamily.from_json(json.loads((tmp_path / "family.json").read_text()), tmp_path)
    assert np.array_equal(back.grid, crossing_toy.grid)
    assert np.array_equal(back.lambdas, crossing_toy.lambdas)
    assert np.array_equal(back.vectors, crossing_toy.vectors)
    raw = (tmp_path / "vectors.bin").read_bytes()
    assert len(raw) == crossing_toy.vectors.size * 16
    assert np.frombuffer(raw[:8], "<f8")[0] == crossing_toy.vectors.real.flat[0]
    assert len(doc["lambdas"]) == crossing_toy.n_branches
