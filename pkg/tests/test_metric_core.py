import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_diameter, brute_hausdorff, brute_w1
from specprop.errors import DimensionError, MetricError
from specprop.metric_core import (
    LipschitzSeminorm,
    State,
    StateSampling,
    circle_arc_metric,
    diameter,
    fraction_matrix,
    hausdorff_distance,
    load_problem,
    mk_distance,
    point_mass,
    validate_metric,
)

CORPUS = json.loads((Path(__file__).parent / "data" / "mk_corpus.json").read_text())["instances"]
PATH3 = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]


def _metric(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, size=(n, 2))
    return np.linalg.norm(pts[:, None] - pts[None, :], axis=2)


def test_two_point_space_is_valid():
    assert validate_metric([[0, 1], [1, 0]]).size == 2


@pytest.mark.parametrize("dist, axiom, indices", [
    ([[0, 1], [2, 0]], "symmetry", (0, 1)),
    ([[0, -1], [-1, 0]], "negative", (0, 1)),
    ([[1, 1], [1, 0]], "diagonal", (0, 0)),
    ([[0, 1, 5], [1, 0, 1], [5, 1, 0]], "triangle", (0, 2, 1)),
    ([[0, 0], [0, 0]], "separation", (0, 1)),
])
def test_axiom_violations_are_named(dist, axiom, indices):
    with pytest.raises(MetricError) as exc:
        validate_metric(dist)
    assert exc.value.axiom == axiom
    assert exc.value.indices == indices


def test_asymmetry_message():
    with pytest.raises(MetricError, match=r"asymmetry at \(0,1\)"):
        validate_metric([[0, 1], [2, 0]])


def test_circle_grid_metric_valid_and_matches_arc_oracle():
    d = circle_arc_metric(64)
    space = validate_metric(d)
    i, j = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
    oracle = np.minimum(abs(i - j), 64 - abs(i - j)) * (2 * math.pi / 64)
    assert np.allclose(space.dist, oracle, atol=1e-15)
    assert diameter(LipschitzSeminorm(space)) == pytest.approx(math.pi)


def test_mk_basic_examples():
    lip = LipschitzSeminorm(validate_metric(PATH3))
    phi = State(np.array([1.0, 0, 0]))
    assert mk_distance(phi, phi, lip) == 0
    two = LipschitzSeminorm(validate_metric([[0, 1], [1, 0]]))
    assert mk_distance(point_mass(2, 0), point_mass(2, 1), two) == 1
    mid = State(np.array([0.5, 0, 0.5]))
    assert mk_distance(phi, mid, lip) == pytest.approx(1.0, abs=1e-12)


def test_mk_exact_path3():
    space = validate_metric(fraction_matrix(PATH3), exact=True)
    lip = LipschitzSeminorm(space)
    phi = State(np.array([Fraction(1), Fraction(0), Fraction(0)], dtype=object))
    psi = State(np.array([Fraction(1, 2), Fraction(0), Fraction(1, 2)], dtype=object))
    assert mk_distance(phi, psi, lip, exact=True) == Fraction(1)


@pytest.mark.parametrize("inst", CORPUS, ids=[i["name"] for i in CORPUS])
def test_mk_matches_brute_force_on_corpus(inst):
    dist = [[Fraction(v) for v in row] for row in inst["dist"]]
    phi = [Fraction(v) for v in inst["phi"]]
    psi = [Fraction(v) for v in inst["psi"]]
    oracle = brute_w1(dist, phi, psi)
    space = validate_metric(np.array(dist, dtype=object), exact=True)
    lip = LipschitzSeminorm(space)
    exact = mk_distance(State(np.array(phi, dtype=object)), State(np.array(psi, dtype=object)), lip,
                        exact=True)
    assert exact == oracle
    flt = mk_distance(State(np.array(phi, dtype=float)), State(np.array(psi, dtype=float)),
                      LipschitzSeminorm(validate_metric(np.array(dist, dtype=float))))
    assert abs(flt - float(oracle)) <= 1e-9


def test_certificate_is_optimal_and_1_lipschitz():
    d = _metric(5, 1)
    lip = LipschitzSeminorm(validate_metric(d))
    rng = np.random.default_rng(2)
    p, q = rng.dirichlet(np.ones(5), size=2)
    res = mk_distance(State(p), State(q), lip, with_result=True)
    f = res.certificate
    assert lip(f) <= 1 + 1e-9
    assert abs(p @ f - q @ f) == pytest.approx(res.value, abs=1e-9)
    assert set(res.to_json()) == {"value", "method", "certificate"}


def test_point_masses_give_distances_exactly():
    d = _metric(4, 5)
    lip = LipschitzSeminorm(validate_metric(d))
    for i in range(4):
        for j in range(4):
            assert mk_distance(point_mass(4, i), point_mass(4, j), lip) == pytest.approx(d[i, j], abs=1e-12)
    sup = max(mk_distance(point_mass(4, i), point_mass(4, j), lip) for i in range(4) for j in range(4))
    assert diameter(lip) == pytest.approx(sup, abs=1e-12)


def test_dimension_mismatch():
    lip = LipschitzSeminorm(validate_metric(PATH3))
    with pytest.raises(DimensionError):
        mk_distance(point_mass(2, 0), point_mass(3, 0), lip)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000))
def test_mk_symmetric_and_triangle(n, seed):
    lip = LipschitzSeminorm(validate_metric(_metric(n, seed)))
    rng = np.random.default_rng(seed)
    a, b, c = (State(w) for w in rng.dirichlet(np.ones(n), size=3))
    ab, ba = mk_distance(a, b, lip), mk_distance(b, a, lip)
    assert ab == pytest.approx(ba, abs=1e-9)
    assert mk_distance(a, c, lip) <= ab + mk_distance(b, c, lip) + 1e-9


def test_hausdorff_examples():
    m = lambda a, b: abs(a - b)  # noqa: E731
    assert hausdorff_distance([1.0, 2.0], [1.0, 2.0], m) == 0
    assert hausdorff_distance([1.0], [3.5], m) == 2.5
    with pytest.raises(ValueError):
        hausdorff_distance([], [1.0], m)
    val, ab, ba = hausdorff_distance([0.0, 1.0], [0.0], m, directed=True)
    assert (val, ab, ba) == (1.0, 1.0, 0.0)


def test_hausdorff_vertices_vs_barycenter_exhaustive():
    lip = LipschitzSeminorm(validate_metric(PATH3))
    vertices = [np.eye(3)[i] for i in range(3)]
    bary = [np.full(3, 1 / 3)]

    def metric(p, q):
        return mk_distance(State(p), State(q), lip)

    assert hausdorff_distance(vertices, bary, metric) == pytest.approx(
        brute_hausdorff(vertices, bary, metric), abs=1e-12)
    # from the corner the barycenter is (0 + 1 + 2)/3 = 1 away
    assert hausdorff_distance(vertices, bary, metric) == pytest.approx(1.0, abs=1e-12)


def test_diameter_matches_exhaustive():
    for seed in range(5):
        d = _metric(6, seed)
        assert diameter(LipschitzSeminorm(validate_metric(d))) == brute_diameter(d)


def test_lipschitz_invariants_and_leibniz():
    d = _metric(7, 11)
    lip = LipschitzSeminorm(validate_metric(d))
    rng = np.random.default_rng(0)
    f = rng.normal(size=(1000, 7))
    g = rng.normal(size=(1000, 7))
    assert lip(np.ones(7)) == 0
    assert np.allclose(lip(f + 3.0), lip(f))
    assert np.allclose(lip(-2.5 * f), 2.5 * lip(f))
    lhs = lip(f * g)
    rhs = np.abs(f).max(axis=1) * lip(g) + np.abs(g).max(axis=1) * lip(f)
    assert np.all(lhs <= rhs + 1e-12)


def test_state_validation():
    with pytest.raises(ValueError):
        State(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        State(np.array([1.5, -0.5]))


def test_sampling_plan_and_loader():
    plan = StateSampling(n_random=4, seed=1).states(3)
    assert plan.shape == (3 + 3 + 4, 3)
    assert np.allclose(plan.sum(axis=1), 1)
    assert np.array_equal(plan, StateSampling(n_random=4, seed=1).states(3))
    space, states = load_problem(json.dumps({"dist": PATH3, "states": [[1, 0, 0]]}))
    assert space.size == 3 and len(states) == 1
