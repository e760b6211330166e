"""Uniform multi-hypergraphs, the families used throughout the package, and
the multilinear edge polynomial ``t(H, x) = sum_e prod_{v in e} x_v``.

Vertices are 0-based contiguous integers.  Edges are stored as a 2-D integer
array with strictly increasing rows, sorted lexicographically, and duplicate
rows folded into an integer multiplicity.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import HypergraphFormatError

__all__ = [
    "SimpleGraph",
    "Hypergraph",
    "DegreeProfile",
    "complete_graph",
    "path_graph",
    "cycle_graph",
    "complete_bipartite_graph",
    "circulant_regular_graph",
    "automorphism_count",
    "complete_hypergraph",
    "disjoint_union",
    "graph_hypergraph",
    "subgraph_counting_hypergraph",
    "ap_counting_hypergraph",
    "motif_counting_hypergraph",
    "example_family_a2",
    "degree_profile",
    "edge_polynomial",
    "edge_polynomial_gradient",
    "edge_polynomial_hessian",
    "read_hypergraph_json",
    "read_graph_json",
]


# ----------------------------------------------------------------------
# Simple graphs
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected graph without loops or parallel edges."""

    num_vertices: int
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Iterable[Sequence[int]]) -> "SimpleGraph":
        if num_vertices < 1:
            raise ValueError("a graph needs at least one vertex")
        canon = set()
        for k, e in enumerate(edges):
            if len(e) != 2:
                raise ValueError(f"edge {k} does not have two endpoints: {e!r}")
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError(f"edge {k} is a self-loop on vertex {u}")
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise ValueError(f"edge {k} has an endpoint outside [0, {num_vertices})")
            canon.add((min(u, v), max(u, v)))
        return cls(num_vertices, frozenset(canon))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.num_vertices)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.num_vertices, self.num_vertices), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def is_connected(self) -> bool:
        adj = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.num_vertices

    def to_json(self) -> dict:
        return {"n": self.num_vertices, "edges": [list(e) for e in sorted(self.edges)]}


def complete_graph(n: int) -> SimpleGraph:
    return SimpleGraph.from_edges(n, itertools.combinations(range(n), 2))


def path_graph(n: int) -> SimpleGraph:
    return SimpleGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> SimpleGraph:
    if n < 3:
        raise ValueError("a cycle needs at least three vertices")
    return SimpleGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_bipartite_graph(m: int, n: int) -> SimpleGraph:
    """K_{m,n} with parts ``[0, m)`` and ``[m, m + n)``."""
    return SimpleGraph.from_edges(m + n, [(i, m + j) for i in range(m) for j in range(n)])


def circulant_regular_graph(n: int, d: int) -> SimpleGraph:
    """Deterministic d-regular circulant graph on n vertices.

    Vertex i is joined to i +- 1, ..., i +- d//2 (mod n), and additionally to
    i + n/2 when d is odd (which requires n even).
    """
    if not 0 <= d < n:
        raise ValueError(f"need 0 <= d < n, got d={d}, n={n}")
    if d % 2 == 1 and n % 2 == 1:
        raise ValueError("an odd-degree regular graph needs an even number of vertices")
    edges = [(i, (i + k) % n) for i in range(n) for k in range(1, d // 2 + 1)]
    if d % 2 == 1:
        edges += [(i, i + n // 2) for i in range(n // 2)]
    g = SimpleGraph.from_edges(n, edges)
    if g.num_edges * 2 != n * d:
        raise ValueError(f"circulant construction is not {d}-regular for n={n}")
    return g


def automorphism_count(g: SimpleGraph) -> int:
    """|Aut(g)| by brute force over all vertex permutations (fine for <= 8 vertices)."""
    n = g.num_vertices
    if n > 10:
        raise ValueError("automorphism_count is brute force; graphs up to 10 vertices only")
    edges = g.edges
    count = 0
    for perm in itertools.permutations(range(n)):
        if all((min(perm[u], perm[v]), max(perm[u], perm[v])) in edges for u, v in edges):
            count += 1
    return count


def _injective_homomorphisms(pattern: SimpleGraph, host: SimpleGraph) -> Iterator[tuple[int, ...]]:
    """Yield every injective map V(pattern) -> V(host) sending edges to edges.

    Pattern vertices are placed in BFS order so each new vertex (after the
    first of its component) is constrained by an already placed neighbour.
    """
    k = pattern.num_vertices
    p_adj = pattern.neighbors()
    h_adj = host.neighbors()

    order: list[int] = []
    seen: set[int] = set()
    for root in range(k):
        if root in seen:
            continue
        seen.add(root)
        queue = [root]
        while queue:
            u = queue.pop(0)
            order.append(u)
            for w in sorted(p_adj[u]):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    position = {u: i for i, u in enumerate(order)}
    # earlier neighbours of each pattern vertex in placement order
    back = [[w for w in p_adj[u] if position[w] < position[u]] for u in order]

    image = [-1] * k
    used = [False] * host.num_vertices

    def extend(i: int) -> Iterator[tuple[int, ...]]:
        if i == k:
            yield tuple(image)
            return
        u = order[i]
        if back[i]:
            cands = set(h_adj[image[back[i][0]]])
            for w in back[i][1:]:
                cands &= h_adj[image[w]]
            cands = sorted(cands)
        else:
            cands = range(host.num_vertices)
        for c in cands:
            if used[c]:
                continue
            used[c] = True
            image[u] = c
            yield from extend(i + 1)
            used[c] = False
        image[u] = -1

    yield from extend(0)


# ----------------------------------------------------------------------
# Hypergraphs
# ----------------------------------------------------------------------


class Hypergraph:
    """An s-uniform multi-hypergraph on vertices ``0..n-1``.

    ``edges`` is an ``(m, s)`` integer array of strictly increasing rows in
    lexicographic order; ``multiplicity`` holds the positive count of each row.
    Both arrays are read-only.
    """

    __slots__ = ("uniformity", "num_vertices", "edges", "multiplicity", "_degree_profile")

    def __init__(
        self,
        uniformity: int,
        num_vertices: int,
        edges,
        multiplicity=None,
        *,
        _canonical: bool = False,
    ):
        s = int(uniformity)
        n = int(num_vertices)
        if s < 2:
            raise ValueError(f"uniformity must be at least 2, got {s}")
        if n < 1:
            raise ValueError(f"need at least one vertex, got {n}")
        arr = np.asarray(edges, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, s), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != s:
            raise ValueError(f"edges must have shape (m, {s}), got {arr.shape}")
        if multiplicity is None:
            mult = np.ones(len(arr), dtype=np.int64)
        else:
            mult = np.asarray(multiplicity, dtype=np.int64).reshape(-1)
            if len(mult) != len(arr):
                raise ValueError("multiplicity length differs from the number of edges")
            if np.any(mult < 1):
                raise ValueError("multiplicities must be positive")

        if not _canonical:
            if len(arr):
                if arr.min() < 0 or arr.max() >= n:
                    raise ValueError(f"edge vertex index outside [0, {n})")
                arr = np.sort(arr, axis=1)
                if np.any(arr[:, 1:] == arr[:, :-1]):
                    raise ValueError("an edge repeats a vertex")
                rows, inverse = np.unique(arr, axis=0, return_inverse=True)
                folded = np.zeros(len(rows), dtype=np.int64)
                np.add.at(folded, inverse.reshape(-1), mult)
                arr, mult = rows, folded

        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        mult = np.ascontiguousarray(mult)
        mult.setflags(write=False)
        self.uniformity = s
        self.num_vertices = n
        self.edges = arr
        self.multiplicity = mult
        self._degree_profile = None

    @property
    def num_edges(self) -> int:
        """|E(H)| counted with multiplicity."""
        return int(self.multiplicity.sum())

    @property
    def num_distinct_edges(self) -> int:
        return len(self.edges)

    def edge_list(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in row) for row in self.edges]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (
            self.uniformity == other.uniformity
            and self.num_vertices == other.num_vertices
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.multiplicity, other.multiplicity)
        )

    def __hash__(self):
        return hash((self.uniformity, self.num_vertices, self.edges.tobytes(), self.multiplicity.tobytes()))

    def __repr__(self) -> str:
        return (
            f"Hypergraph(s={self.uniformity}, n={self.num_vertices}, "
            f"distinct_edges={self.num_distinct_edges}, edges={self.num_edges})"
        )

    def to_json(self) -> dict:
        return {
            "s": self.uniformity,
            "n": self.num_vertices,
            "edges": self.edges.tolist(),
            "multiplicity": self.multiplicity.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


@dataclass(frozen=True)
class DegreeProfile:
    per_vertex_degree: np.ndarray
    max_degree: int
    max_codegree: int
    is_regular: bool
    regular_degree: int | None


def _robust_ceil(x: float) -> int:
    # n**a is often an integer up to rounding (e.g. 1024**0.3)
    r = round(x)
    if abs(x - r) < 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def _combination_array(n: int, s: int, offset: int = 0) -> np.ndarray:
    count = math.comb(n, s)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), s)),
                       dtype=np.int64, count=count * s)
    return flat.reshape(count, s) + offset


def complete_hypergraph(n: int, s: int) -> Hypergraph:
    """All C(n, s) s-subsets of ``range(n)``; regular of degree C(n-1, s-1)."""
    if s < 2:
        raise ValueError(f"uniformity must be at least 2, got {s}")
    if s > n:
        raise ValueError(f"uniformity {s} exceeds vertex count {n}")
    return Hypergraph(s, n, _combination_array(n, s), _canonical=True)


def disjoint_union(parts: Sequence[Hypergraph]) -> Hypergraph:
    """Place the parts side by side, shifting each part's vertex labels."""
    if not parts:
        raise ValueError("disjoint_union needs at least one part")
    s = parts[0].uniformity
    if any(h.uniformity != s for h in parts):
        raise ValueError("all parts must share the same uniformity")
    offset = 0
    blocks, mults = [], []
    for h in parts:
        blocks.append(h.edges + offset)
        mults.append(h.multiplicity)
        offset += h.num_vertices
    return Hypergraph(s, offset, np.concatenate(blocks), np.concatenate(mults), _canonical=True)


def graph_hypergraph(g: SimpleGraph) -> Hypergraph:
    """The 2-uniform hypergraph whose edges are the edges of ``g``."""
    return Hypergraph(2, g.num_vertices, sorted(g.edges))


def subgraph_counting_hypergraph(f: SimpleGraph, n: int) -> Hypergraph:
    """The F-counting hypergraph on the edges of K_n.

    The K_n edge ``(i, j)``, ``i < j``, gets the index of that pair in
    lexicographic order.  Each copy of ``f`` in K_n contributes one
    hyperedge: the set of indices of its edges.  Uniformity is |E(f)|.
    """
    if f.num_vertices > n:
        raise ValueError(f"pattern has {f.num_vertices} vertices but K_n has only {n}")
    if not f.is_connected():
        raise ValueError("pattern graph must be connected")
    if f.num_edges < 2:
        raise ValueError("pattern needs at least two edges (uniformity >= 2)")
    index = {pair: k for k, pair in enumerate(itertools.combinations(range(n), 2))}
    f_edges = sorted(f.edges)
    copies = set()
    for image in itertools.permutations(range(n), f.num_vertices):
        key = tuple(sorted(index[(min(image[u], image[v]), max(image[u], image[v]))] for u, v in f_edges))
        copies.add(key)
    return Hypergraph(f.num_edges, math.comb(n, 2), sorted(copies))


def ap_counting_hypergraph(n: int, k: int) -> Hypergraph:
    """k-term arithmetic progressions in ``{0, ..., n-1}`` with positive difference."""
    if k < 3:
        raise ValueError(f"progression length must be at least 3, got {k}")
    if k > n:
        raise ValueError(f"progression length {k} exceeds n={n}")
    rows = [
        [a + i * d for i in range(k)]
        for d in range(1, (n - 1) // (k - 1) + 1)
        for a in range(n - (k - 1) * d)
    ]
    # distinct (a, d) give distinct vertex sets, so no folding happens here
    return Hypergraph(k, n, rows)


def motif_counting_hypergraph(g: SimpleGraph, h: SimpleGraph) -> Hypergraph:
    """Vertex set V(g); one hyperedge per copy of ``h`` in ``g``.

    Copies are injective homomorphisms modulo Aut(h).  Copies sharing a vertex
    set fold into one edge whose multiplicity is the number of such copies.
    """
    if h.num_vertices > g.num_vertices:
        raise ValueError("motif has more vertices than the host graph")
    if h.num_vertices < 2:
        raise ValueError("motif needs at least two vertices")
    if not h.is_connected():
        raise ValueError("motif must be connected")
    aut = automorphism_count(h)
    counts = Counter(tuple(sorted(img)) for img in _injective_homomorphisms(h, g))
    rows, mult = [], []
    for key in sorted(counts):
        c = counts[key]
        if c % aut:
            raise AssertionError("homomorphism count not divisible by |Aut(h)|")
        rows.append(key)
        mult.append(c // aut)
    return Hypergraph(h.num_vertices, g.num_vertices, rows, mult)


def example_family_a2(n: int, s: int, a: float) -> Hypergraph:
    """Disjoint union of ceil(n^a) complete s-uniform blocks on ceil(n^(1-a))
    vertices each, followed by the pinned-pair block on n fresh vertices.

    The pinned-pair block contains every s-set through its first two vertices,
    so its co-degree is C(n-2, s-2).
    """
    if s < 3:
        raise ValueError("the family is defined for s >= 3")
    lo, hi = (s - 1) ** -2, 1.0 / (s - 1)
    if not lo < a < hi:
        raise ValueError(f"need {lo:.6g} < a < {hi:.6g}, got a={a}")
    if n < s:
        raise ValueError(f"need n >= s, got n={n}")
    blocks = _robust_ceil(n ** a)
    size = _robust_ceil(n ** (1.0 - a))
    parts = []
    if size >= s:
        one = _combination_array(size, s)
        parts = [one + j * size for j in range(blocks)]
    offset = blocks * size
    tails = _combination_array(n - 2, s - 2, offset=offset + 2)
    pinned = np.column_stack([np.full(len(tails), offset), np.full(len(tails), offset + 1), tails])
    edges = np.concatenate(parts + [pinned]) if parts else pinned
    return Hypergraph(s, offset + n, edges, _canonical=True)


# ----------------------------------------------------------------------
# Degree statistics
# ----------------------------------------------------------------------


def degree_profile(h: Hypergraph) -> DegreeProfile:
    """Degrees and maximum co-degree, all weighted by multiplicity."""
    if h._degree_profile is not None:
        return h._degree_profile
    n, s = h.num_vertices, h.uniformity
    deg = np.zeros(n, dtype=np.int64)
    max_codeg = 0
    if len(h.edges):
        for j in range(s):
            deg += np.bincount(h.edges[:, j], weights=h.multiplicity, minlength=n).astype(np.int64)
        keys = np.concatenate([h.edges[:, i] * n + h.edges[:, j] for i, j in itertools.combinations(range(s), 2)])
        weights = np.tile(h.multiplicity, s * (s - 1) // 2)
        if n * n <= 50_000_000:
            max_codeg = int(np.bincount(keys, weights=weights, minlength=0).max())
        else:
            uniq, inv = np.unique(keys, return_inverse=True)
            max_codeg = int(np.bincount(inv, weights=weights).max())
    deg.setflags(write=False)
    regular = bool(np.all(deg == deg[0]))
    prof = DegreeProfile(
        per_vertex_degree=deg,
        max_degree=int(deg.max()),
        max_codegree=max_codeg,
        is_regular=regular,
        regular_degree=int(deg[0]) if regular else None,
    )
    h._degree_profile = prof
    return prof


# ----------------------------------------------------------------------
# Edge polynomial
# ----------------------------------------------------------------------


def _check_point(h: Hypergraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (h.num_vertices,):
        raise ValueError(f"expected a vector of length {h.num_vertices}, got shape {x.shape}")
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        raise ValueError("entries of x must lie in [0, 1]")
    return x


def edge_polynomial(h: Hypergraph, x) -> float:
    """t(H, x), summing edge products with multiplicity."""
    x = _check_point(h, x)
    if not len(h.edges):
        return 0.0
    return float(np.prod(x[h.edges], axis=1) @ h.multiplicity)


def _leave_one_out_products(vals: np.ndarray) -> np.ndarray:
    # vals: (m, s); out[:, j] = prod of vals[:, i] over i != j, without division
    m, s = vals.shape
    prefix = np.ones((m, s))
    suffix = np.ones((m, s))
    for j in range(1, s):
        prefix[:, j] = prefix[:, j - 1] * vals[:, j - 1]
    for j in range(s - 2, -1, -1):
        suffix[:, j] = suffix[:, j + 1] * vals[:, j + 1]
    return prefix * suffix


def edge_polynomial_gradient(h: Hypergraph, x) -> np.ndarray:
    """Component v is sum over edges e containing v of prod_{u in e, u != v} x_u."""
    x = _check_point(h, x)
    n = h.num_vertices
    if not len(h.edges):
        return np.zeros(n)
    loo = _leave_one_out_products(x[h.edges]) * h.multiplicity[:, None]
    grad = np.zeros(n)
    for j in range(h.uniformity):
        grad += np.bincount(h.edges[:, j], weights=loo[:, j], minlength=n)
    return grad


def edge_polynomial_hessian(h: Hypergraph, x) -> np.ndarray:
    """Dense n-by-n Hessian of t(H, .); the diagonal is zero (t is multilinear)."""
    x = _check_point(h, x)
    n, s = h.num_vertices, h.uniformity
    hess = np.zeros((n, n))
    if not len(h.edges):
        return hess
    vals = x[h.edges]
    for i, j in itertools.combinations(range(s), 2):
        others = [k for k in range(s) if k not in (i, j)]
        w = h.multiplicity * (np.prod(vals[:, others], axis=1) if others else 1.0)
        np.add.at(hess, (h.edges[:, i], h.edges[:, j]), w)
    return hess + hess.T


# ----------------------------------------------------------------------
# JSON
# ----------------------------------------------------------------------


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise HypergraphFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None


def _require_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise HypergraphFormatError(f"expected an integer, got {value!r}", where)
    return value


def read_hypergraph_json(text: str) -> Hypergraph:
    """Parse ``{"s", "n", "edges", "multiplicity"}`` and validate every invariant.

    Errors carry the JSON position (parse errors) or the path of the bad
    element (e.g. ``edges[3][1]``).
    """
    doc = _load_json(text)
    if not isinstance(doc, dict):
        raise HypergraphFormatError("top level must be an object", "$")
    for key in ("s", "n", "edges"):
        if key not in doc:
            raise HypergraphFormatError(f"missing key {key!r}", "$")
    s = _require_int(doc["s"], "s")
    n = _require_int(doc["n"], "n")
    if s < 2:
        raise HypergraphFormatError("uniformity must be at least 2", "s")
    if n < 1:
        raise HypergraphFormatError("vertex count must be positive", "n")
    edges = doc["edges"]
    if not isinstance(edges, list):
        raise HypergraphFormatError("expected a list", "edges")
    mult = doc.get("multiplicity", [1] * len(edges))
    if not isinstance(mult, list) or len(mult) != len(edges):
        raise HypergraphFormatError("must be a list with one entry per edge", "multiplicity")
    prev = None
    for k, e in enumerate(edges):
        where = f"edges[{k}]"
        if not isinstance(e, list) or len(e) != s:
            raise HypergraphFormatError(f"expected a list of {s} vertices", where)
        for j, v in enumerate(e):
            _require_int(v, f"{where}[{j}]")
            if not 0 <= v < n:
                raise HypergraphFormatError(f"vertex {v} outside [0, {n})", f"{where}[{j}]")
        if any(e[j] >= e[j + 1] for j in range(s - 1)):
            raise HypergraphFormatError("vertices must be strictly increasing", where)
        if prev is not None and not prev < e:
            raise HypergraphFormatError("edges must be sorted without duplicates", where)
        prev = e
        m = _require_int(mult[k], f"multiplicity[{k}]")
        if m < 1:
            raise HypergraphFormatError("multiplicity must be positive", f"multiplicity[{k}]")
    return Hypergraph(s, n, edges if edges else np.zeros((0, s)), mult, _canonical=True)


def read_graph_json(text: str) -> SimpleGraph:
    """Parse ``{"n": int, "edges": [[u, v], ...]}`` into a SimpleGraph."""
    doc = _load_json(text)
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise HypergraphFormatError("expected an object with keys 'n' and 'edges'", "$")
    n = _require_int(doc["n"], "n")
    if not isinstance(doc["edges"], list):
        raise HypergraphFormatError("expected a list", "edges")
    for k, e in enumerate(doc["edges"]):
        if not isinstance(e, list) or len(e) != 2:
            raise HypergraphFormatError("expected a pair of vertices", f"edges[{k}]")
        for j, v in enumerate(e):
            _require_int(v, f"edges[{k}][{j}]")
    try:
        return SimpleGraph.from_edges(n, doc["edges"])
    except ValueError as exc:
        raise HypergraphFormatError(str(exc), "edges") from None
