"""Block graphons, homomorphism densities and the limiting upper-tail problem.

For a K-block graphon with weights lambda and symmetric density matrix B,

    t(H, W, x) = sum_{u in [K]^V(H)} prod_{(a,b) in E(H)} B[u_a, u_b] prod_i lambda[u_i] x[u_i],

and the limiting variational problem is the K-dimensional program

    min sum_i lambda_i I_p(x_i)   subject to   t(H, W, x) >= r^|V(H)| t(H, W).
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import logit

from .errors import HypergraphFormatError, InfeasibleError
from .hypergraph import SimpleGraph, automorphism_count, motif_counting_hypergraph
from .rate import relative_entropy
from .varsolve import SolverOptions, VariationalProblem, VariationalSolution, solve_full

__all__ = [
    "BlockGraphon",
    "MotifGraph",
    "homomorphism_density",
    "weighted_density",
    "weighted_density_batch",
    "weighted_density_gradient",
    "solve_block_variational",
    "bipartite_slope",
    "two_sided_slope",
    "graph_to_block_graphon",
    "finite_vs_limit_gap",
    "GapReport",
    "read_block_graphon_json",
]


@dataclass(frozen=True, eq=False)
class BlockGraphon:
    weights: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        b = np.array(self.densities, dtype=float)
        k = w.size
        if k < 1:
            raise ValueError("a block graphon needs at least one block")
        if b.shape != (k, k):
            raise ValueError(f"densities must be {k}x{k}, got shape {b.shape}")
        if not np.all(np.isfinite(b)) or np.any(b < 0.0) or np.any(b > 1.0):
            raise ValueError("densities must lie in [0, 1]")
        if not np.array_equal(b, b.T):
            raise ValueError("density matrix must be symmetric")
        if not b.max() > 0.0:
            raise ValueError("density matrix must have a positive entry")
        if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("block weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"block weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "densities", b)

    @property
    def K(self) -> int:
        return self.weights.size

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "densities": self.densities.tolist()}

    @classmethod
    def bipartite(cls, alpha: float) -> "BlockGraphon":
        """Two blocks of sizes alpha and 1 - alpha, empty inside and complete across."""
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        return cls(np.array([alpha, 1.0 - alpha]), np.array([[0.0, 1.0], [1.0, 0.0]]))

    @classmethod
    def constant(cls, q: float) -> "BlockGraphon":
        return cls(np.array([1.0]), np.array([[q]]))


def read_block_graphon_json(text: str) -> BlockGraphon:
    """Parse ``{"weights": [...], "densities": [[...], ...]}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HypergraphFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict) or "weights" not in doc or "densities" not in doc:
        raise HypergraphFormatError("expected an object with keys 'weights' and 'densities'", "$")
    w, b = doc["weights"], doc["densities"]
    if not isinstance(w, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in w):
        raise HypergraphFormatError("expected a list of numbers", "weights")
    if not isinstance(b, list) or len(b) != len(w):
        raise HypergraphFormatError(f"expected {len(w)} rows", "densities")
    for i, row in enumerate(b):
        if not isinstance(row, list) or len(row) != len(w):
            raise HypergraphFormatError(f"expected {len(w)} entries", f"densities[{i}]")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise HypergraphFormatError("expected a number", f"densities[{i}][{j}]")
    try:
        return BlockGraphon(np.array(w, dtype=float), np.array(b, dtype=float))
    except ValueError as exc:
        raise HypergraphFormatError(str(exc), "$") from None


@dataclass(frozen=True)
class MotifGraph:
    """A connected pattern graph together with its automorphism count."""

    graph: SimpleGraph

    def __post_init__(self):
        if self.graph.num_edges < 1:
            raise ValueError("motif needs at least one edge")
        if not self.graph.is_connected():
            raise ValueError("motif must be connected")
        if len(string.ascii_letters) - 1 < self.graph.num_vertices:
            raise ValueError("motif too large")

    @classmethod
    def from_edges(cls, num_vertices: int, edges) -> "MotifGraph":
        return cls(SimpleGraph.from_edges(num_vertices, edges))

    @classmethod
    def edge(cls) -> "MotifGraph":
        return cls.from_edges(2, [(0, 1)])

    @classmethod
    def triangle(cls) -> "MotifGraph":
        return cls.from_edges(3, [(0, 1), (1, 2), (0, 2)])

    @property
    def num_vertices(self) -> int:
        return self.graph.num_vertices

    @property
    def num_edges(self) -> int:
        return self.graph.num_edges

    @cached_property
    def aut(self) -> int:
        return automorphism_count(self.graph)

    @cached_property
    def _subscripts(self) -> tuple[list[str], list[str]]:
        letters = string.ascii_lowercase + string.ascii_uppercase[:-1]
        edge_subs = [letters[a] + letters[b] for a, b in sorted(self.graph.edges)]
        vertex_subs = [letters[a] for a in range(self.num_vertices)]
        return edge_subs, vertex_subs


# ----------------------------------------------------------------------
# Densities
# ----------------------------------------------------------------------


def _contract(h: MotifGraph, w: BlockGraphon, y: np.ndarray, batch: bool, skip: int | None = None) -> np.ndarray:
    edge_subs, vertex_subs = h._subscripts
    prefix = "Z" if batch else ""
    subs = list(edge_subs)
    ops = [w.densities] * len(edge_subs)
    for a, sub in enumerate(vertex_subs):
        if a != skip:
            subs.append(prefix + sub)
            ops.append(y)
    out = prefix + (vertex_subs[skip] if skip is not None else "")
    return np.einsum(",".join(subs) + "->" + out, *ops, optimize="greedy")


def _check_x(w: BlockGraphon, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (w.K,):
        raise ValueError(f"expected a vector of length {w.K}, got shape {x.shape}")
    return x


def homomorphism_density(h: MotifGraph, w: BlockGraphon) -> float:
    return float(_contract(h, w, w.weights, batch=False))


def weighted_density(h: MotifGraph, w: BlockGraphon, x) -> float:
    x = _check_x(w, x)
    return float(_contract(h, w, w.weights * x, batch=False))


def weighted_density_batch(h: MotifGraph, w: BlockGraphon, xs) -> np.ndarray:
    """weighted_density for each row of an (m, K) array."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != w.K:
        raise ValueError(f"expected an (m, {w.K}) array, got shape {xs.shape}")
    return _contract(h, w, xs * w.weights, batch=True)


def weighted_density_gradient(h: MotifGraph, w: BlockGraphon, x) -> np.ndarray:
    """Gradient of t(H, W, x) in x."""
    x = _check_x(w, x)
    y = w.weights * x
    total = sum(_contract(h, w, y, batch=False, skip=a) for a in range(h.num_vertices))
    return w.weights * total


# ----------------------------------------------------------------------
# Block variational problem
# ----------------------------------------------------------------------


class _BlockProblem:
    """min sum lambda_i I_p(x_i) with t(H, W, x) >= level ("ge") or <= level ("le")."""

    def __init__(self, h: MotifGraph, w: BlockGraphon, p: float, level: float, sense: str):
        self.h, self.w, self.p, self.level, self.sense = h, w, p, level, sense
        self.k = h.num_vertices

    def objective(self, x) -> float:
        return float(self.w.weights @ relative_entropy(self.p, x))

    def t(self, x) -> float:
        return weighted_density(self.h, self.w, x)

    def feasible(self, t_value: float, slack: float = 0.0) -> bool:
        if self.sense == "ge":
            return t_value >= self.level - slack
        return t_value <= self.level + slack

    def corner(self) -> np.ndarray:
        # the most favourable point for the constraint
        return np.ones(self.w.K) if self.sense == "ge" else np.zeros(self.w.K)

    def pick(self, x) -> np.ndarray:
        """Scale x toward the corner until feasible (t is monotone along the path)."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.feasible(self.t(x)):
            return x
        corner = self.corner()
        f = lambda tau: self.t(x + tau * (corner - x)) - self.level
        tau = brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        y = x + tau * (corner - x)
        while not self.feasible(self.t(y)) and tau < 1.0:
            tau = min(1.0, tau + 1e-14 + 4 * np.finfo(float).eps * tau)
            y = x + tau * (corner - x)
        return y


def _eliminated_value(bp: _BlockProblem, xs: np.ndarray, col: int) -> np.ndarray:
    """Best value of coordinate ``col`` given the other columns of ``xs``.

    For "ge" it is max(p, smallest feasible value); for "le" it is
    min(p, largest feasible value); NaN marks rows with no feasible value.
    """
    h, w, p, level = bp.h, bp.w, bp.p, bp.level
    xs = np.array(xs, dtype=float)
    m = xs.shape[0]

    def t_at(v):
        xs[:, col] = v
        return weighted_density_batch(h, w, xs)

    lo, hi = np.zeros(m), np.ones(m)
    if bp.sense == "ge":
        ok = t_at(hi) >= level
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            good = t_at(mid) >= level
            hi = np.where(good, mid, hi)
            lo = np.where(good, lo, mid)
        return np.where(ok, np.maximum(hi, p), np.nan)
    ok = t_at(lo) <= level
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        good = t_at(mid) <= level
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    return np.where(ok, np.minimum(lo, p), np.nan)


def _exact_eliminated(bp: _BlockProblem, x: np.ndarray, col: int) -> float | None:
    # scalar refinement of the bisection result, guaranteed feasible
    p = bp.p
    def f(v):
        y = x.copy()
        y[col] = v
        return bp.t(y) - bp.level
    if bp.sense == "ge":
        if f(1.0) < 0.0:
            return None
        if f(p) >= 0.0:
            return p
        v = brentq(f, p, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
        while f(v) < 0.0:
            v = np.nextafter(v, 2.0)
        return float(min(v, 1.0))
    if f(0.0) > 0.0:
        return None
    if f(p) <= 0.0:
        return p
    v = brentq(f, 0.0, p, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    while f(v) > 0.0:
        v = np.nextafter(v, -1.0)
    return float(max(v, 0.0))


def _grid_solve(bp: _BlockProblem, grid: int) -> np.ndarray | None:
    """Dense grid over K - 1 free coordinates plus local refinement (K <= 3)."""
    k = bp.w.K
    grad1 = weighted_density_gradient(bp.h, bp.w, np.ones(k))
    col = int(np.argmax(grad1))
    free = [i for i in range(k) if i != col]
    axis = np.linspace(0.0, 1.0, grid)
    mesh = np.meshgrid(*[axis] * len(free), indexing="ij")
    pts = np.zeros((mesh[0].size, k))
    for i, m in zip(free, mesh):
        pts[:, i] = m.reshape(-1)
    vals_col = _eliminated_value(bp, pts, col)
    pts[:, col] = np.nan_to_num(vals_col, nan=0.0)
    obj = np.where(np.isnan(vals_col), np.inf, relative_entropy(bp.p, pts) @ bp.w.weights)
    i = int(np.argmin(obj))
    if not np.isfinite(obj[i]):
        return None
    start = pts[i, free]

    def reduced(z):
        x = np.zeros(k)
        x[free] = np.clip(z, 0.0, 1.0)
        v = _exact_eliminated(bp, x, col)
        if v is None:
            return np.inf, None
        x[col] = v
        return bp.objective(x), x

    step = 1.0 / (grid - 1)
    if len(free) == 1:
        lo, hi = max(start[0] - step, 0.0), min(start[0] + step, 1.0)
        res = minimize_scalar(lambda z: reduced(np.array([z]))[0], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        z_best = np.array([res.x])
    else:
        res = minimize(lambda z: reduced(z)[0], start, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 4000,
                                "initial_simplex": np.vstack([start, start + step * np.eye(len(free))])})
        z_best = np.clip(res.x, 0.0, 1.0)
    val, x = reduced(z_best)
    base_val, base_x = reduced(start)
    if x is None or (base_x is not None and base_val < val):
        x = base_x
    return x


def _slsqp_solve(bp: _BlockProblem, starts: list[np.ndarray]) -> np.ndarray | None:
    h, w, p = bp.h, bp.w, bp.p
    lp = logit(p)
    scale = max(abs(bp.level), 1e-300)
    sign = 1.0 if bp.sense == "ge" else -1.0
    cons = {
        "type": "ineq",
        "fun": lambda x: sign * (weighted_density(h, w, x) - bp.level) / scale,
        "jac": lambda x: sign * weighted_density_gradient(h, w, x) / scale,
    }
    eps = 1e-12
    fun = lambda x: bp.objective(x)
    jac = lambda x: w.weights * (logit(np.clip(x, eps, 1 - eps)) - lp)
    best = None
    for x0 in starts:
        res = minimize(fun, np.clip(x0, eps, 1 - eps), jac=jac, constraints=[cons], method="SLSQP",
                       bounds=[(eps, 1 - eps)] * w.K, options={"ftol": 1e-15, "maxiter": 500})
        x = bp.pick(res.x)
        if best is None or bp.objective(x) < bp.objective(best) - 1e-15:
            best = x
    return best


def _block_solution(bp: _BlockProblem, x: np.ndarray, method: str, starts: int) -> VariationalSolution:
    w, p = bp.w, bp.p
    t = bp.t(x)
    grad = weighted_density_gradient(bp.h, w, x)
    interior = (x > 1e-9) & (x < 1 - 1e-9)
    lhs = w.weights * (logit(np.clip(x, 1e-300, 1 - 1e-16)) - logit(p))
    if interior.any() and grad[interior] @ grad[interior] > 0:
        mu = float(lhs[interior] @ grad[interior] / (grad[interior] @ grad[interior]))
    else:
        mu = 0.0
    resid = float(np.max(np.abs(lhs[interior] - mu * grad[interior]))) if interior.any() else 0.0
    return VariationalSolution(
        assignment=x,
        objective=bp.objective(x),
        constraint_value=t,
        multiplier=abs(mu),
        kkt_residual=resid,
        status="converged" if bp.feasible(t, 1e-12 * max(abs(bp.level), 1.0)) else "infeasible",
        starts_used=starts,
        method=method,
        boundary=tuple(int(i) for i in np.flatnonzero(~interior)),
    )


def _solve_block(bp: _BlockProblem, grid: int, random_starts: int, seed: int) -> VariationalSolution:
    k = bp.w.K
    t_full = homomorphism_density(bp.h, bp.w)
    top = t_full if bp.sense == "ge" else 0.0
    if not bp.feasible(top):
        raise InfeasibleError(f"no x in [0,1]^{k} satisfies the {bp.sense} constraint")
    # constant assignment meeting the level exactly (t is homogeneous of degree |V(H)|)
    c = min(max(bp.level / t_full, 0.0), 1.0) ** (1.0 / bp.k)
    const = np.full(k, max(c, bp.p) if bp.sense == "ge" else min(c, bp.p))
    const = bp.pick(const)
    if k == 1:
        return _block_solution(bp, const, "closed-form", 1)
    if k <= 3:
        x = _grid_solve(bp, grid if k == 2 else min(grid, 301))
        cands = [const] + ([x] if x is not None else [])
        method, starts = "grid", 1
    else:
        rng = np.random.Generator(np.random.Philox(seed))
        lo, hi = (bp.p, 1.0) if bp.sense == "ge" else (0.0, bp.p)
        starts = [const] + [rng.uniform(lo, hi, size=k) for _ in range(random_starts)]
        x = _slsqp_solve(bp, starts)
        cands = [const, x]
        method, starts = "slsqp", len(starts)
    best = min(cands, key=bp.objective)
    return _block_solution(bp, best, method, starts)


def solve_block_variational(h: MotifGraph, w: BlockGraphon, r: float, p: float, grid: int = 4001,
                            random_starts: int = 8, seed: int = 0) -> VariationalSolution:
    """Minimize sum lambda_i I_p(x_i) subject to t(H, W, x) >= r^|V(H)| t(H, W).

    K = 1 is solved in closed form; K <= 3 by a dense grid over all but one
    coordinate (the remaining one is set to its best feasible value) with
    local refinement; larger K by multi-start SLSQP.
    """
    if not 0.0 < p < r < 1.0:
        raise ValueError(f"need 0 < p < r < 1, got p={p}, r={r}")
    t = homomorphism_density(h, w)
    if t <= 0.0:
        raise ValueError("t(H, W) = 0: the motif has zero density in this graphon")
    bp = _BlockProblem(h, w, p, r ** h.num_vertices * t, "ge")
    return _solve_block(bp, grid, random_starts, seed)


def bipartite_slope(alpha: float, r: float, p: float) -> tuple[float, float]:
    """min of g(x) = alpha I_p(x) + (1 - alpha) I_p(r^2 / x) over [r^2, 1].

    Returns (minimum, minimizer).  g is scanned on a grid, then the
    stationary point is pinned down by bisection on g'.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0.0 < p < r < 1.0:
        raise ValueError(f"need 0 < p < r < 1, got p={p}, r={r}")
    r2 = r * r
    g = lambda x: alpha * relative_entropy(p, x) + (1 - alpha) * relative_entropy(p, np.minimum(r2 / x, 1.0))
    lp = logit(p)

    def dg(x):
        y = r2 / x
        return alpha * (logit(x) - lp) - (1 - alpha) * (logit(y) - lp) * y / x

    xs = np.linspace(r2, 1.0, 4001)
    vals = g(xs)
    i = int(np.argmin(vals))
    best_x, best_v = float(xs[i]), float(vals[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    # g' is singular at both ends, so search strictly inside
    a, b = max(lo, r2 * (1 + 1e-15)), min(hi, 1.0 - 1e-15)
    if a < b and dg(a) < 0.0 < dg(b):
        x = brentq(dg, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        x = float(res.x)
    v = float(g(x))
    if v <= best_v:
        best_x, best_v = float(x), v
    return best_v, best_x


def two_sided_slope(h: MotifGraph, w: BlockGraphon, epsilon: float, p: float, grid: int = 4001,
                    random_starts: int = 8, seed: int = 0) -> float:
    """Smaller of the upper and lower one-sided block problems.

    Upper: t(H, W, x) / p^k >= t(H, W) + epsilon.  Lower: <= t(H, W) - epsilon.
    An infeasible side counts as +inf.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    t = homomorphism_density(h, w)
    if t <= 0.0:
        raise ValueError("t(H, W) = 0: the motif has zero density in this graphon")
    pk = p ** h.num_vertices
    values = []
    for level, sense in (((t + epsilon) * pk, "ge"), ((t - epsilon) * pk, "le")):
        bp = _BlockProblem(h, w, p, level, sense)
        try:
            values.append(_solve_block(bp, grid, random_starts, seed).objective)
        except InfeasibleError:
            values.append(math.inf)
    if not any(math.isfinite(v) for v in values):
        raise InfeasibleError(f"epsilon={epsilon} exceeds both attainable deviations")
    return min(values)


def graph_to_block_graphon(g: SimpleGraph) -> BlockGraphon:
    """Empirical graphon of g: |V(g)| equal blocks with 0/1 densities."""
    n = g.num_vertices
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    return BlockGraphon(np.full(n, 1.0 / n), g.adjacency_matrix().astype(float))


class GapReport(NamedTuple):
    psi_full: float
    psi_block: float
    bound: float


def finite_vs_limit_gap(g: SimpleGraph, h: MotifGraph, r: float, p: float,
                        options: SolverOptions = SolverOptions()) -> GapReport:
    """Finite-graph mean-field value next to its graphon counterpart.

    psi_full solves the problem on the motif-counting hypergraph of g;
    psi_block solves the block problem on the empirical graphon of g.  The
    bound C(|V(H)|, 2) / |V(g)| controls the contribution of non-injective
    maps, which is what separates the two formulations.
    """
    hyper = motif_counting_hypergraph(g, h.graph)
    if hyper.num_edges == 0:
        raise ValueError("the host graph contains no copy of the motif")
    psi_full = solve_full(VariationalProblem(hyper, p, r), options).objective
    psi_block = solve_block_variational(h, graph_to_block_graphon(g), r, p, seed=options.seed).objective
    bound = math.comb(h.num_vertices, 2) / g.num_vertices
    return GapReport(psi_full, psi_block, bound)
