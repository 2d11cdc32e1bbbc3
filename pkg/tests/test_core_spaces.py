"""Core space model: construction, closures, thickenings, components, unions."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from coarsehom import (
    BadScales,
    BornologyDoesNotCover,
    CoarseError,
    IncompatibleStructures,
    NonSymmetricMatrix,
    UnknownPoint,
    big_family_generated,
    closure_at,
    coarse_components,
    coproduct,
    free_union,
    from_metric,
    is_U_bounded,
    make_big_family,
    make_explicit_space,
    mixed_union,
    product_p,
    semidirect,
    subspace,
    thicken,
    windowed_builtin,
)

from genspaces import random_explicit_space
from oracles import bfs_distance_pairs, union_find_components


def path_space(n):
    pts = list(range(n + 1))
    return make_explicit_space(pts, [[(i, i + 1) for i in range(n)]], [pts])


# ---------------------------------------------------------------- construction

def test_one_point_space():
    X = make_explicit_space(["a"], [], [["a"]])
    assert X.closure_at(0).pairs == frozenset({("a", "a")})
    assert X.closure_at(5).pairs == frozenset({("a", "a")})
    assert X.coarse.stabilization() == 0


def test_explicit_symmetric_diagonal_closure():
    X = make_explicit_space([0, 1, 2], [[(0, 1)]], [[0, 1, 2]])
    expected = {(0, 0), (1, 1), (2, 2), (0, 1), (1, 0)}
    assert X.closure_at(1).pairs == frozenset(expected)


def test_incompatible_structures():
    with pytest.raises(IncompatibleStructures):
        make_explicit_space([0, 1], [[(0, 1)]], [[0]])


def test_bornology_must_cover():
    with pytest.raises(BornologyDoesNotCover):
        make_explicit_space([0, 1], [], [[0]])


def test_unknown_point_in_generator():
    with pytest.raises(UnknownPoint):
        make_explicit_space([0, 1], [[(0, 7)]], [[0, 1]])


def test_duplicate_points_rejected():
    with pytest.raises(UnknownPoint):
        make_explicit_space([0, 0], [], [[0]])


# ---------------------------------------------------------------- from_metric

def test_metric_two_points_one_component():
    X = from_metric(["a", "b"], [[0, 1], [1, 0]], [2])
    assert ("a", "b") in X.coarse.generators[0].pairs
    assert len(coarse_components(X)) == 1


def test_metric_strict_inequality():
    X = from_metric(["a", "b"], [[0, 1], [1, 0]], [1])
    # d = 1 is not < 1, so the generator is empty and the points stay apart
    assert X.coarse.generators[0].pairs == frozenset()
    assert len(coarse_components(X)) == 2


def test_metric_empty_scales():
    X = from_metric([0, 1, 2], [[0, 1, 2], [1, 0, 1], [2, 1, 0]], [])
    for k in (0, 1, 4):
        assert X.closure_at(k).pairs == frozenset({(p, p) for p in (0, 1, 2)})


def test_metric_validation():
    with pytest.raises(NonSymmetricMatrix):
        from_metric([0, 1], [[0, 1], [2, 0]], [1])
    with pytest.raises(CoarseError):
        from_metric([0, 1], [[0, -1], [-1, 0]], [1])
    with pytest.raises(BadScales):
        from_metric([0, 1], [[0, 1], [1, 0]], [2, 2])


def test_metric_rational_scales():
    X = from_metric([0, 1], [[0, Fraction(3, 2)], [Fraction(3, 2), 0]], ["3/2"])
    assert X.coarse.generators[0].pairs == frozenset()
    Y = from_metric([0, 1], [[0, Fraction(3, 2)], [Fraction(3, 2), 0]], ["7/4"])
    assert (0, 1) in Y.coarse.generators[0].pairs


# ---------------------------------------------------------------- builtins

def test_half_line_builtin():
    X = windowed_builtin("half_line", 3)
    assert X.points == (0, 1, 2, 3)
    expected = {(t, t) for t in range(4)} | {(t, t + 1) for t in range(3)} | {(t + 1, t) for t in range(3)}
    assert X.closure_at(1).pairs == frozenset(expected)
    assert X.window_tag.name == "half_line"
    assert X.window_tag.radius == 3


def test_int_window_builtin():
    X = windowed_builtin("int_window", 1)
    assert X.points == (-1, 0, 1)


def test_grid2_builtin():
    X = windowed_builtin("grid2_window", 1)
    assert len(X.points) == 9
    # unit l^1 steps only
    assert ((0, 0), (1, 0)) in X.closure_at(1).pairs
    assert ((0, 0), (1, 1)) not in X.closure_at(1).pairs
    assert ((0, 0), (1, 1)) in X.closure_at(2).pairs


def test_builtin_bad_radius():
    with pytest.raises(CoarseError):
        windowed_builtin("half_line", 0)
    with pytest.raises(CoarseError):
        windowed_builtin("no_such", 2)


# ---------------------------------------------------------------- thicken / closure

def test_thicken_examples():
    X = make_explicit_space([0, 1, 2], [[(0, 1)]], [[0, 1, 2]])
    assert thicken(X, 0, {1}) == {1}
    assert thicken(X, 1, {0}) == {0, 1}
    assert thicken(X, 1, set()) == set()
    with pytest.raises(UnknownPoint):
        thicken(X, 1, {9})


def test_path_closure_stabilizes():
    X = path_space(3)
    full = {(a, b) for a in range(4) for b in range(4)}
    assert X.closure_at(3).pairs == frozenset(full)
    X.coarse.stabilization()
    assert X.coarse.stabilized_at == 3


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_closure_matches_bfs_oracle(data):
    n = data.draw(st.integers(1, 12))
    m = data.draw(st.integers(0, 20))
    edges = data.draw(
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=m, max_size=m)
    )
    X = make_explicit_space(list(range(n)), [edges], [list(range(n))])
    k = data.draw(st.integers(0, 5))
    assert X.closure_at(k).pairs == frozenset(bfs_distance_pairs(range(n), edges, k))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_thickening_laws(data):
    n = data.draw(st.integers(1, 10))
    edges = data.draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=15))
    X = make_explicit_space(list(range(n)), [edges], [list(range(n))])
    B1 = data.draw(st.sets(st.integers(0, n - 1)))
    B2 = data.draw(st.sets(st.integers(0, n - 1)))
    k = data.draw(st.integers(0, 4))
    assert thicken(X, k, B1 | B2) == thicken(X, k, B1) | thicken(X, k, B2)
    if B1 <= B2:
        assert thicken(X, k, B1) <= thicken(X, k, B2)
    assert thicken(X, 0, B1) == frozenset(B1)
    # monotone in the scale
    assert thicken(X, k, B1) <= thicken(X, k + 1, B1)


def test_closure_monotone_symmetric_reflexive():
    rng = random.Random(7)
    for _ in range(10):
        X = random_explicit_space(rng, max_points=15, max_pairs=30)
        s = X.coarse.stabilization()
        for k in range(s + 1):
            U = X.closure_at(k)
            assert U.pairs <= X.closure_at(k + 1).pairs
            if k >= 1:
                assert U.is_symmetric()
                assert U.contains_diagonal()


# ---------------------------------------------------------------- boundedness

def test_is_U_bounded():
    X = path_space(3)
    assert is_U_bounded(X, 0, {2})
    assert not is_U_bounded(X, 1, {0, 2})
    assert is_U_bounded(X, 2, {0, 2})
    assert is_U_bounded(X, 0, set())


def test_compatibility_invariant_on_random_spaces():
    rng = random.Random(11)
    for _ in range(10):
        X = random_explicit_space(rng, max_points=12, max_pairs=25)
        s = X.coarse.stabilization()
        for k in range(s + 1):
            for B in X.bornology.generators:
                assert X.bornology.bounded(thicken(X, k, B))


# ---------------------------------------------------------------- components

def test_components_metric_clusters():
    pts = [0, 1, 2, 10, 11]
    dist = [[abs(a - b) for b in pts] for a in pts]
    X = from_metric(pts, dist, [2])
    assert coarse_components(X) == [[0, 1, 2], [10, 11]]


def test_components_trivial_cases():
    X = make_explicit_space([0, 1, 2], [], [[0, 1, 2]])
    assert coarse_components(X) == [[0], [1], [2]]
    full = [(a, b) for a in range(3) for b in range(3)]
    Y = make_explicit_space([0, 1, 2], [full], [[0, 1, 2]])
    assert coarse_components(Y) == [[0, 1, 2]]


def test_components_match_union_find_oracle():
    rng = random.Random(23)
    for _ in range(25):
        X = random_explicit_space(rng, max_points=30, max_pairs=60)
        edges = [p for g in X.coarse.generators for p in g.pairs]
        expect = union_find_components(X.points, edges)
        got = {frozenset(c) for c in coarse_components(X)}
        assert got == expect


# ---------------------------------------------------------------- constructions

def test_product_with_point_is_unit():
    P = make_explicit_space(["*"], [], [["*"]])
    X = path_space(4)
    prod = product_p(P, X)
    assert len(prod) == len(X)
    comps = coarse_components(prod)
    assert len(comps) == 1
    # scale-k closures agree with X's through the relabeling
    for k in (0, 1, 2):
        relabeled = {((("*",) + (a,))[1], (("*",) + (b,))[1]) for (_, a), (_, b) in prod.closure_at(k).pairs}
        assert relabeled == {(a, b) for a, b in X.closure_at(k).pairs}


def test_product_closure_is_product_of_closures():
    X = path_space(3)
    Y = path_space(2)
    prod = product_p(X, Y)
    for k in (0, 1, 2):
        expected = {
            ((a, c), (b, d))
            for a, b in X.closure_at(k).pairs
            for c, d in Y.closure_at(k).pairs
        }
        assert prod.closure_at(k).pairs == expected


def test_free_union_of_points():
    P = make_explicit_space(["*"], [], [["*"]])
    U = free_union([P] * 4)
    assert len(U) == 4
    assert len(coarse_components(U)) == 4
    assert U.bornology.bounded(U.points)


def test_union_flavours_agree_on_finite_families():
    rng = random.Random(5)
    factors = [random_explicit_space(rng, max_points=8, max_pairs=12) for _ in range(3)]
    cp, fu, mx = coproduct(factors), free_union(factors), mixed_union(factors)
    s = max(cp.coarse.stabilization(), fu.coarse.stabilization())
    for k in range(s + 1):
        assert cp.closure_at(k).pairs == fu.closure_at(k).pairs == mx.closure_at(k).pairs
    for S in ({(0, factors[0].points[0])}, set(cp.points)):
        assert cp.bornology.bounded(S) == fu.bornology.bounded(S) == mx.bornology.bounded(S)
    assert coarse_components(cp) == coarse_components(fu) == coarse_components(mx)


def test_semidirect_bornology():
    X = path_space(2)
    Y = windowed_builtin("half_line", 3)
    sd = semidirect(X, Y)
    # strips over bounded sets of the second factor are bounded
    strip = {(x, 0) for x in X.points}
    assert sd.bornology.bounded(strip)
    assert sd.bornology.bounded(sd.points)  # the top generator covers everything here


def test_subspace():
    X = path_space(4)
    A = {0, 1, 4}
    S = subspace(X, A)
    assert S.points == (0, 1, 4)
    assert {frozenset(c) for c in coarse_components(S)} == {frozenset({0, 1}), frozenset({4})}
    full = subspace(X, X.points)
    assert full == X
    empty = subspace(X, set())
    assert len(empty) == 0
    assert coarse_components(empty) == []


# ---------------------------------------------------------------- big families

def test_big_family_generated_path():
    X = path_space(4)
    fam = big_family_generated(X, {0}, 2)
    assert fam.members == (frozenset({0}), frozenset({0, 1}), frozenset({0, 1, 2}))
    assert fam.witness[(0, 1)] == 1
    assert fam.witness[(1, 1)] == 2
    assert (2, 1) not in fam.witness  # thickening leaves the prefix


def test_big_family_empty_and_zero_depth():
    X = path_space(3)
    fam = big_family_generated(X, set(), 2)
    assert all(m == frozenset() for m in fam.members)
    fam0 = big_family_generated(X, {1}, 0)
    assert fam0.members == (frozenset({1}),)


def test_make_big_family_validates_nesting():
    X = path_space(3)
    with pytest.raises(CoarseError):
        make_big_family(X, [{0, 1}, {0}])
    fam = make_big_family(X, [{0}, {0, 1, 2}], scale_cap=2)
    assert fam.witness[(0, 1)] == 1


# ---------------------------------------------------------------- determinism

def test_component_output_is_deterministic():
    rng = random.Random(99)
    X = random_explicit_space(rng, max_points=20, max_pairs=40)
    first = coarse_components(X)
    second = coarse_components(X)
    assert first == second
