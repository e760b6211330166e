import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from replica_tail.errors import HypergraphFormatError
from replica_tail.hypergraph import (
    Hypergraph,
    SimpleGraph,
    ap_counting_hypergraph,
    automorphism_count,
    complete_bipartite_graph,
    complete_graph,
    complete_hypergraph,
    cycle_graph,
    degree_profile,
    disjoint_union,
    edge_polynomial,
    edge_polynomial_gradient,
    edge_polynomial_hessian,
    example_family_a2,
    motif_counting_hypergraph,
    path_graph,
    read_hypergraph_json,
    subgraph_counting_hypergraph,
)


def brute_degrees(h):
    deg = [0] * h.num_vertices
    cod = {}
    for e, m in zip(h.edge_list(), h.multiplicity):
        for v in e:
            deg[v] += int(m)
        for u, v in itertools.combinations(e, 2):
            cod[(u, v)] = cod.get((u, v), 0) + int(m)
    return deg, max(cod.values(), default=0)


def brute_t(h, x):
    return sum(m * math.prod(x[v] for v in e) for e, m in zip(h.edge_list(), h.multiplicity))


@st.composite
def hypergraphs(draw, max_n=12):
    s = draw(st.integers(2, 4))
    n = draw(st.integers(s, max_n))
    subsets = list(itertools.combinations(range(n), s))
    picks = draw(st.lists(st.sampled_from(subsets), min_size=1, max_size=20))
    return Hypergraph(s, n, picks)


# --- construction ---

def test_complete_examples():
    h = complete_hypergraph(4, 2)
    p = degree_profile(h)
    assert h.num_edges == 6 and p.is_regular and p.regular_degree == 3 and p.max_codegree == 1
    h = complete_hypergraph(5, 3)
    assert h.num_edges == 10 and degree_profile(h).regular_degree == 6
    with pytest.raises(ValueError):
        complete_hypergraph(3, 4)


def test_duplicate_edges_fold_into_multiplicity():
    h = Hypergraph(2, 3, [(1, 0), (0, 1), (1, 2)])
    assert h.edge_list() == [(0, 1), (1, 2)]
    assert list(h.multiplicity) == [2, 1]
    assert h.num_edges == 3


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 5)], [(0, 1, 2)], [(-1, 1)]])
def test_bad_edges_rejected(edges):
    with pytest.raises(ValueError):
        Hypergraph(2, 3, edges)


def test_uniformity_one_rejected():
    with pytest.raises(ValueError):
        Hypergraph(1, 3, [(0,)])


def test_disjoint_union():
    k = complete_hypergraph(4, 2)
    u = disjoint_union([k, k])
    p = degree_profile(u)
    assert u.num_vertices == 8 and u.num_edges == 12 and p.is_regular and p.regular_degree == 3
    assert disjoint_union([k]) == k
    with pytest.raises(ValueError):
        disjoint_union([k, complete_hypergraph(4, 3)])
    with pytest.raises(ValueError):
        disjoint_union([])


def test_subgraph_counting_examples():
    h = subgraph_counting_hypergraph(complete_graph(3), 4)
    assert (h.num_vertices, h.num_edges, h.uniformity) == (6, 4, 3)
    assert degree_profile(h).regular_degree == 2
    h = subgraph_counting_hypergraph(path_graph(3), 3)
    assert (h.num_vertices, h.num_edges, h.uniformity) == (3, 3, 2)
    h = subgraph_counting_hypergraph(complete_graph(3), 3)
    assert (h.num_vertices, h.num_edges) == (3, 1)
    with pytest.raises(ValueError):
        subgraph_counting_hypergraph(complete_graph(5), 4)


@pytest.mark.parametrize("f", [path_graph(3), path_graph(4), cycle_graph(4), complete_bipartite_graph(1, 3)])
@pytest.mark.parametrize("n", [4, 5])
def test_subgraph_counting_matches_brute_force(f, n):
    """Copies of F counted as distinct edge sets among all injective maps."""
    h = subgraph_counting_hypergraph(f, n)
    pairs = list(itertools.combinations(range(n), 2))
    index = {p: i for i, p in enumerate(pairs)}
    copies = set()
    f_edges = [tuple(sorted(e)) for e in np.argwhere(np.triu(f.adjacency_matrix()))]
    for phi in itertools.permutations(range(n), f.num_vertices):
        copies.add(frozenset(index[tuple(sorted((phi[a], phi[b])))] for a, b in f_edges))
    expected = sorted(tuple(sorted(c)) for c in copies)
    assert h.edge_list() == expected
    assert degree_profile(h).is_regular


def test_ap_counting():
    h = ap_counting_hypergraph(5, 3)
    assert h.edge_list() == [(0, 1, 2), (0, 2, 4), (1, 2, 3), (2, 3, 4)]
    assert ap_counting_hypergraph(3, 3).num_edges == 1
    assert ap_counting_hypergraph(10, 3).num_edges == 20
    brute = sum(1 for a in range(1, 12) for d in range(1, 12) if a + 3 * d <= 12)
    assert ap_counting_hypergraph(12, 4).num_edges == brute
    with pytest.raises(ValueError):
        ap_counting_hypergraph(3, 4)


def test_motif_examples():
    h = motif_counting_hypergraph(path_graph(3), complete_graph(2))
    assert h.edge_list() == [(0, 1), (1, 2)] and list(h.multiplicity) == [1, 1]
    h = motif_counting_hypergraph(complete_graph(4), complete_graph(3))
    assert h.num_edges == 4 and set(h.multiplicity) == {1}
    h = motif_counting_hypergraph(complete_graph(4), path_graph(3))
    assert h.num_distinct_edges == 4 and set(h.multiplicity) == {3}


def test_motif_count_normalised_by_automorphisms():
    g = complete_bipartite_graph(2, 3)
    h = motif_counting_hypergraph(g, cycle_graph(4))
    adj = g.adjacency_matrix()
    injective = 0
    for phi in itertools.permutations(range(5), 4):
        if all(adj[phi[i], phi[(i + 1) % 4]] for i in range(4)):
            injective += 1
    assert automorphism_count(cycle_graph(4)) == 8
    assert h.num_edges == injective // 8


def test_automorphism_counts():
    assert automorphism_count(complete_graph(4)) == 24
    assert automorphism_count(path_graph(4)) == 2
    assert automorphism_count(cycle_graph(5)) == 10


def test_family_a2():
    h = example_family_a2(16, 3, 0.3)
    assert h.num_vertices == 3 * 7 + 16
    assert h.num_edges == 119
    assert degree_profile(h).max_codegree >= math.comb(14, 1)
    with pytest.raises(ValueError):
        example_family_a2(16, 2, 0.3)
    with pytest.raises(ValueError):
        example_family_a2(16, 3, 0.6)


def test_family_a2_exact_powers_use_exact_ceiling():
    # 243**0.4 evaluates to 9.000000000000002; the block count must stay 9
    h = example_family_a2(243, 3, 0.4)
    assert h.num_vertices == 9 * 27 + 243


# --- degree statistics ---

@settings(max_examples=100, deadline=None)
@given(hypergraphs())
def test_degree_profile_matches_brute_force(h):
    deg, cod = brute_degrees(h)
    p = degree_profile(h)
    assert list(p.per_vertex_degree) == deg
    assert p.max_codegree == cod
    assert p.max_degree == max(deg)
    assert sum(deg) == h.uniformity * h.num_edges
    assert p.max_codegree <= p.max_degree <= h.num_edges
    assert p.is_regular == (len(set(deg)) == 1)


def test_empty_hypergraph_is_regular():
    p = degree_profile(Hypergraph(3, 4, []))
    assert p.is_regular and list(p.per_vertex_degree) == [0] * 4 and p.max_codegree == 0


# --- edge polynomial ---

def test_edge_polynomial_examples():
    assert edge_polynomial(Hypergraph(3, 3, [(0, 1, 2)]), [0.5] * 3) == pytest.approx(0.125, abs=1e-15)
    assert edge_polynomial(complete_hypergraph(3, 2), [0.2, 0.4, 0.6]) == pytest.approx(0.44, abs=1e-15)
    h = motif_counting_hypergraph(complete_graph(5), path_graph(3))
    assert edge_polynomial(h, np.ones(5)) == h.num_edges
    np.testing.assert_allclose(edge_polynomial_gradient(Hypergraph(2, 2, [(0, 1)]), [0.3, 0.7]), [0.7, 0.3])
    k = complete_hypergraph(6, 3)
    np.testing.assert_array_equal(edge_polynomial_gradient(k, np.ones(6)), 10.0)


def test_edge_polynomial_rejects_bad_points():
    h = complete_hypergraph(3, 2)
    with pytest.raises(ValueError):
        edge_polynomial(h, [0.5, 0.5])
    with pytest.raises(ValueError):
        edge_polynomial(h, [0.5, 1.5, 0.1])


@settings(max_examples=100, deadline=None)
@given(hypergraphs(), st.integers(0, 2**32 - 1))
def test_polynomial_and_gradient_against_oracles(h, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.05, 0.95, h.num_vertices)
    t = edge_polynomial(h, x)
    assert t == pytest.approx(brute_t(h, x), rel=1e-12)
    g = edge_polynomial_gradient(h, x)
    # Euler identity for a homogeneous multilinear form
    assert float(x @ g) == pytest.approx(h.uniformity * t, rel=1e-12)
    step = 1e-6
    fd = np.empty(h.num_vertices)
    for v in range(h.num_vertices):
        xp, xm = x.copy(), x.copy()
        xp[v] += step
        xm[v] -= step
        fd[v] = (brute_t(h, xp) - brute_t(h, xm)) / (2 * step)
    np.testing.assert_allclose(g, fd, atol=1e-6)
    hess = edge_polynomial_hessian(h, x)
    fdh = np.empty((h.num_vertices, h.num_vertices))
    for v in range(h.num_vertices):
        xp, xm = x.copy(), x.copy()
        xp[v] += step
        xm[v] -= step
        fdh[v] = (edge_polynomial_gradient(h, xp) - edge_polynomial_gradient(h, xm)) / (2 * step)
    np.testing.assert_allclose(hess, fdh, atol=1e-6)
    assert np.all(np.diag(hess) == 0)


@settings(max_examples=50, deadline=None)
@given(hypergraphs(), st.floats(0.01, 0.99), st.integers(0, 10**6))
def test_polynomial_monotone_and_mean(h, p, seed):
    assert edge_polynomial(h, np.full(h.num_vertices, p)) == pytest.approx(p ** h.uniformity * h.num_edges, rel=1e-12)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, h.num_vertices)
    y = np.minimum(x + rng.uniform(0, 0.2, h.num_vertices), 1.0)
    assert edge_polynomial(h, y) >= edge_polynomial(h, x)


# --- JSON ---

def test_json_round_trip():
    h = motif_counting_hypergraph(complete_graph(4), path_graph(3))
    assert read_hypergraph_json(h.dumps()) == h


@pytest.mark.parametrize(
    "doc, where",
    [
        ({"s": 2, "n": 3, "edges": [[0, 1], [0, 0]]}, "edges[1]"),
        ({"s": 2, "n": 3, "edges": [[0, 1], [1, 7]]}, "edges[1]"),
        ({"s": 2, "n": 3, "edges": [[0, 1, 2]]}, "edges[0]"),
        ({"s": 2, "n": 3, "edges": [[0, 1]], "multiplicity": [0]}, "multiplicity[0]"),
        ({"s": 2, "n": 3, "edges": [[0, 1]], "multiplicity": [1, 2]}, "multiplicity"),
        ({"s": 2, "edges": []}, "'n'"),
    ],
)
def test_json_errors_are_positioned(doc, where):
    with pytest.raises(HypergraphFormatError) as err:
        read_hypergraph_json(json.dumps(doc))
    assert err.value.location is not None and where in str(err.value)


def test_json_syntax_error():
    with pytest.raises(HypergraphFormatError):
        read_hypergraph_json('{"s": 2,')


def test_simple_graph_invariants():
    with pytest.raises(ValueError):
        SimpleGraph.from_edges(3, [(0, 0)])
    g = SimpleGraph.from_edges(3, [(0, 1), (1, 0)])
    assert g.num_edges == 1
    a = g.adjacency_matrix()
    assert (a == a.T).all() and not a.diagonal().any()
