"""The upper-tail mean-field variational problem

    phi_H(r, p) = inf { (1/n) sum_v I_p(x_v) : t(H, x) >= r^s |E(H)|, x in [0,1]^n },

its replica-symmetric shortcut for regular hypergraphs, and explicit
symmetry-breaking certificates.

Local solves run in logit coordinates ``z = logit(x)``.  Stationarity for
interior coordinates reads ``I_p'(x_v) = beta * d_v t(H, x)``, i.e. the
mean-field fixed point ``x_v = sigmoid(logit p + beta * d_v t(H, x))``; the
reported multiplier is ``mu = beta / n`` (the multiplier of the averaged
objective).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy.optimize import brentq, minimize_scalar
from scipy.special import expit, logit

from .errors import NoBreakingPossible
from .hypergraph import (
    Hypergraph,
    complete_hypergraph,
    degree_profile,
    disjoint_union,
    edge_polynomial,
    edge_polynomial_gradient,
    edge_polynomial_hessian,
)
from .rate import (
    convex_minorant,
    entropy_derivative,
    is_replica_symmetric,
    relative_entropy,
    tilted_rate,
)

__all__ = [
    "VariationalProblem",
    "VariationalSolution",
    "SolverOptions",
    "BreakingCertificate",
    "evaluate_assignment",
    "solve_full",
    "solve_dual_bisection",
    "solve_penalty_gradient",
    "solve_two_value",
    "replica_value",
    "build_breaking_certificate",
    "concave_pair_certificate",
    "check_regular_upper_bound",
    "kkt_residual",
    "regular_stationarity_residual",
    "grid_search_oracle",
]

# x is kept inside [X_MIN, X_MAX] so that logits stay finite
X_MAX = 1.0 - 1e-12
X_MIN = 1e-12
Z_MAX = float(logit(X_MAX))
Z_MIN = float(logit(X_MIN))
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class VariationalProblem:
    hypergraph: Hypergraph
    p: float
    r: float

    def __post_init__(self):
        if not 0.0 < self.p < self.r < 1.0:
            raise ValueError(f"need 0 < p < r < 1, got p={self.p}, r={self.r}")
        if self.hypergraph.num_edges == 0:
            raise ValueError("the hypergraph has no edges")

    @property
    def n(self) -> int:
        return self.hypergraph.num_vertices

    @property
    def s(self) -> int:
        return self.hypergraph.uniformity

    @property
    def num_edges(self) -> int:
        return self.hypergraph.num_edges

    @property
    def threshold(self) -> float:
        return self.r ** self.s * self.num_edges


@dataclass
class VariationalSolution:
    assignment: np.ndarray
    objective: float
    constraint_value: float
    multiplier: float
    kkt_residual: float
    status: str
    starts_used: int = 1
    method: str = ""
    boundary: tuple[int, ...] = ()
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "assignment": [float(v) for v in self.assignment],
            "objective": float(self.objective),
            "constraint_value": float(self.constraint_value),
            "multiplier": float(self.multiplier),
            "kkt_residual": float(self.kkt_residual),
            "status": self.status,
            "starts_used": int(self.starts_used),
            "method": self.method,
            "boundary": [int(v) for v in self.boundary],
            **({"notes": self.notes} if self.notes else {}),
        }


@dataclass(frozen=True)
class SolverOptions:
    random_starts: int = 2
    seed: int = 0
    max_vertices: int = 10_000
    dense_limit: int = 1500
    newton_tol: float = 1e-12
    newton_max_iter: int = 60
    kkt_tol: float = 1e-8
    dual_route: bool = True
    fixed_point_tol: float = 1e-10
    fixed_point_max_iter: int = 400
    cross_check: bool = True
    pgd_iters: int = 600


# ----------------------------------------------------------------------
# Evaluation helpers
# ----------------------------------------------------------------------


@njit(cache=True)
def _nb_value(edges, mult, x):
    total = 0.0
    for e in range(edges.shape[0]):
        prod = mult[e]
        for j in range(edges.shape[1]):
            prod *= x[edges[e, j]]
        total += prod
    return total


@njit(cache=True)
def _nb_gradient(edges, mult, x, out):
    out[:] = 0.0
    s = edges.shape[1]
    for e in range(edges.shape[0]):
        for j in range(s):
            prod = mult[e]
            for i in range(s):
                if i != j:
                    prod *= x[edges[e, i]]
            out[edges[e, j]] += prod


@njit(cache=True)
def _nb_fixed_point(edges, mult, lp, beta, x0, tol, max_iter, x_min, x_max):
    n = x0.shape[0]
    x = x0.copy()
    grad = np.empty(n)
    omega = 1.0
    last = np.inf
    for _ in range(max_iter):
        _nb_gradient(edges, mult, x, grad)
        step = 0.0
        for v in range(n):
            new = 1.0 / (1.0 + np.exp(-(lp + beta * grad[v])))
            new = min(max(new, x_min), x_max)
            grad[v] = new - x[v]
            step = max(step, abs(grad[v]))
        if step <= tol:
            for v in range(n):
                x[v] += grad[v]
            return x, True
        if step > last:
            omega = max(0.5 * omega, 1.0 / 64)
        else:
            omega = min(1.0, 1.25 * omega)
        last = step
        for v in range(n):
            x[v] += omega * grad[v]
    return x, False


class _Kernel:
    """Unchecked t(H, x) and its gradient for inner loops."""

    def __init__(self, h: Hypergraph):
        self.edges = np.ascontiguousarray(h.edges, dtype=np.int64).reshape(-1, h.uniformity)
        self.mult = h.multiplicity.astype(float)
        self.n = h.num_vertices

    def value(self, x: np.ndarray) -> float:
        return _nb_value(self.edges, self.mult, np.ascontiguousarray(x, dtype=float))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(self.n)
        _nb_gradient(self.edges, self.mult, np.ascontiguousarray(x, dtype=float), out)
        return out


_KERNELS: dict[int, tuple[Hypergraph, _Kernel]] = {}


def _kernel(problem: VariationalProblem) -> _Kernel:
    h = problem.hypergraph
    hit = _KERNELS.get(id(h))
    if hit is not None and hit[0] is h:
        return hit[1]
    if len(_KERNELS) >= 8:
        _KERNELS.pop(next(iter(_KERNELS)))
    kern = _Kernel(h)
    _KERNELS[id(h)] = (h, kern)
    return kern


def _mean_entropy(p: float, x: np.ndarray) -> float:
    return float(np.mean(relative_entropy(p, x)))


def _stationarity_multiplier(problem: VariationalProblem, x: np.ndarray, grad: np.ndarray) -> float:
    # least-squares beta over interior coordinates, returned as mu = beta / n
    interior = (x > 1e-9) & (x < 1.0 - 1e-9)
    if not interior.any():
        return 0.0
    lhs = logit(x[interior]) - logit(problem.p)
    g = grad[interior]
    denom = float(g @ g)
    beta = float(lhs @ g) / denom if denom > 0 else 0.0
    return max(beta, 0.0) / problem.n


def _kkt_value(problem: VariationalProblem, x: np.ndarray, mu: float, grad: np.ndarray | None = None) -> float:
    if grad is None:
        grad = edge_polynomial_gradient(problem.hypergraph, x)
    interior = (x > 1e-9) & (x < 1.0 - 1e-9)
    if not interior.any():
        return 0.0
    lhs = (logit(x[interior]) - logit(problem.p)) / problem.n
    return float(np.max(np.abs(lhs - mu * grad[interior])))


def evaluate_assignment(problem: VariationalProblem, x, multiplier: float | None = None, method: str = "evaluate") -> VariationalSolution:
    """Objective, constraint value and KKT residual of a given assignment."""
    x = np.asarray(x, dtype=float)
    h = problem.hypergraph
    t = edge_polynomial(h, x)
    grad = edge_polynomial_gradient(h, x)
    mu = _stationarity_multiplier(problem, x, grad) if multiplier is None else float(multiplier)
    feasible = t >= problem.threshold - FEAS_TOL * problem.num_edges
    return VariationalSolution(
        assignment=x,
        objective=_mean_entropy(problem.p, x),
        constraint_value=t,
        multiplier=mu,
        kkt_residual=_kkt_value(problem, x, mu, grad),
        status="converged" if feasible else "infeasible",
        method=method,
        boundary=tuple(int(v) for v in np.flatnonzero(x >= X_MAX)),
    )


def _repair(problem: VariationalProblem, x: np.ndarray) -> np.ndarray:
    """Move x toward the all-ones corner until the constraint holds.

    t(H, x + tau (1 - x)) is nondecreasing in tau, so the smallest feasible
    tau is found by bracketing.
    """
    c = problem.threshold
    t = _kernel(problem).value
    x = np.clip(x, X_MIN, X_MAX)
    if t(x) >= c:
        return x
    ones = np.full_like(x, X_MAX)
    f = lambda tau: t(x + tau * (ones - x)) - c
    if f(1.0) < 0.0:
        return ones
    tau = brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    y = x + tau * (ones - x)
    while t(y) < c and tau < 1.0:
        tau = min(1.0, tau + 1e-14 + 4 * np.finfo(float).eps * tau)
        y = x + tau * (ones - x)
    return y


# ----------------------------------------------------------------------
# Local solvers
# ----------------------------------------------------------------------


def _newton_kkt(problem: VariationalProblem, x0: np.ndarray, options: SolverOptions, beta0: float | None = None):
    """Newton's method on the KKT system in (z, beta), z = logit(x).

    Unknowns: z (n) and beta.  Equations: z_v - logit p - beta g_v(x) = 0
    for free coordinates and (t(H, x) - c) / |E| = 0.  Coordinates pinned at
    the upper clamp with a residual pushing them further up are frozen
    (the boundary case of complementary slackness).
    Returns (x, beta, converged).
    """
    h = problem.hypergraph
    n = problem.n
    lp = float(logit(problem.p))
    c = problem.threshold
    scale = float(problem.num_edges)
    x = np.clip(np.asarray(x0, dtype=float), 1e-6, X_MAX)
    z = logit(x)
    g = edge_polynomial_gradient(h, x)
    if beta0 is None:
        beta = problem.n * _stationarity_multiplier(problem, x, g)
    else:
        beta = float(beta0)

    kern = _kernel(problem)

    def residual(z, beta):
        x = expit(z)
        g = kern.gradient(x)
        fv = z - lp - beta * g
        frozen = (z >= Z_MAX - 1e-9) & (fv < 0.0)
        fv = np.where(frozen, 0.0, fv)
        fc = (kern.value(x) - c) / scale
        return x, g, fv, fc, frozen

    x, g, fv, fc, frozen = residual(z, beta)
    norm = math.sqrt(float(fv @ fv) + fc * fc)
    converged = False
    for _ in range(options.newton_max_iter):
        if np.max(np.abs(fv)) <= options.newton_tol and abs(fc) <= options.newton_tol:
            converged = True
            break
        sig = x * (1.0 - x)
        hess = edge_polynomial_hessian(h, x)
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = np.eye(n) - beta * hess * sig[None, :]
        jac[:n, n] = -g
        jac[n, :n] = g * sig / scale
        idx = np.flatnonzero(frozen)
        jac[idx, :] = 0.0
        jac[idx, idx] = 1.0
        rhs = -np.concatenate([fv, [fc]])
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, rhs, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        # backtracking on the residual norm
        t = 1.0
        accepted = False
        for _ in range(40):
            z_new = np.clip(z + t * step[:n], Z_MIN, Z_MAX)
            beta_new = beta + t * step[n]
            x_new, g_new, fv_new, fc_new, frozen_new = residual(z_new, beta_new)
            norm_new = math.sqrt(float(fv_new @ fv_new) + fc_new * fc_new)
            if norm_new <= (1.0 - 1e-4 * t) * norm or norm_new < options.newton_tol:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        z, beta = z_new, beta_new
        x, g, fv, fc, frozen, norm = x_new, g_new, fv_new, fc_new, frozen_new, norm_new
    else:
        converged = np.max(np.abs(fv)) <= options.newton_tol and abs(fc) <= options.newton_tol
    return expit(z), beta, bool(converged)


def _fixed_point(problem: VariationalProblem, x0: np.ndarray, beta: float, tol: float, max_iter: int):
    """Mean-field iteration x <- sigmoid(logit p + beta grad t(x)).

    The relaxation factor halves whenever a step grows (period-two
    oscillation) and recovers while steps shrink.
    """
    kern = _kernel(problem)
    x0 = np.clip(np.asarray(x0, dtype=float), X_MIN, X_MAX)
    return _nb_fixed_point(kern.edges, kern.mult, float(logit(problem.p)), float(beta), x0,
                           float(tol), int(max_iter), X_MIN, X_MAX)


def solve_dual_bisection(problem: VariationalProblem, x0=None, options: SolverOptions = SolverOptions()) -> VariationalSolution:
    """Bisection on the constraint multiplier with the mean-field fixed point inside.

    For each trial beta the damped fixed point is computed from ``x0``; the
    bracket [0, beta_max] grows geometrically until the fixed point meets
    the threshold.  Where the Lagrangian has a duality gap (nonconvex
    region) the fixed-point constraint value jumps across the threshold and
    the upper bracket point is returned, feasible but not stationary.
    """
    h = problem.hypergraph
    c = problem.threshold
    x0 = np.full(problem.n, problem.p) if x0 is None else np.asarray(x0, dtype=float)
    dmax = max(degree_profile(h).max_degree, 1)
    tol, iters = options.fixed_point_tol, options.fixed_point_max_iter

    kern = _kernel(problem)

    def at(b, start):
        x, _ = _fixed_point(problem, start, b / dmax, tol, iters)
        return x, kern.value(x)

    lo, hi = 0.0, 1.0
    x_lo, t_lo = x0, kern.value(np.clip(x0, X_MIN, X_MAX))
    x_hi, t_hi = at(hi, x0)
    grow = 0
    while t_hi < c and grow < 60:
        lo, hi, x_lo, t_lo = hi, 2.0 * hi, x_hi, t_hi
        x_hi, t_hi = at(hi, x_hi)
        grow += 1
    if t_hi < c:
        x = _repair(problem, x_hi)
        sol = evaluate_assignment(problem, x, method="dual-bisection")
        sol.status = "max-iterations"
        return sol
    gap = False
    for _ in range(200):
        if t_hi - c <= 1e-10 * max(c, 1.0):
            break
        if hi - lo <= 1e-6 * hi and t_hi - t_lo > 1e-3 * c:
            # the constraint value jumps across the threshold: duality gap
            gap = True
            break
        if hi - lo <= 1e-14 * hi:
            break
        mid = 0.5 * (lo + hi)
        x_mid, t_mid = at(mid, x_lo)
        if t_mid >= c:
            hi, x_hi, t_hi = mid, x_mid, t_mid
        else:
            lo, x_lo, t_lo = mid, x_mid, t_mid
    x = _repair(problem, x_hi)
    sol = evaluate_assignment(problem, x, method="dual-bisection")
    if gap:
        sol.notes = {"duality_gap_at_beta": hi / dmax}
        if sol.status == "converged" and sol.kkt_residual > options.kkt_tol:
            sol.status = "max-iterations"
    return sol


def solve_penalty_gradient(problem: VariationalProblem, x0=None, options: SolverOptions = SolverOptions()) -> VariationalSolution:
    """Projected gradient descent on a quadratic-penalty objective.

    Minimizes mean I_p(x) + (rho/2) * ((c - t(x))_+ / |E|)^2 over the box with
    an increasing rho schedule and Armijo backtracking; the end point is
    pushed onto the feasible set before evaluation.
    """
    h = problem.hypergraph
    p, n = problem.p, problem.n
    c, scale = problem.threshold, float(problem.num_edges)
    x = np.clip(np.full(n, problem.r) if x0 is None else np.asarray(x0, dtype=float), 1e-9, 1 - 1e-9)
    lp = logit(p)

    kern = _kernel(problem)
    lq = math.log1p(-p)
    log_p = math.log(p)

    def value_grad(x, rho):
        t = kern.value(x)
        short = max(c - t, 0.0) / scale
        ent = float(np.sum(x * (np.log(x) - log_p) + (1.0 - x) * (np.log1p(-x) - lq))) / n
        val = ent + 0.5 * rho * short * short
        grad = (logit(x) - lp) / n - rho * short / scale * kern.gradient(x)
        return val, grad

    stages = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
    per_stage = max(1, options.pgd_iters // len(stages))
    step = 1.0
    for rho in stages:
        val, grad = value_grad(x, rho)
        for _ in range(per_stage):
            while True:
                cand = np.clip(x - step * grad, 1e-9, 1 - 1e-9)
                cval, cgrad = value_grad(cand, rho)
                if cval <= val - 1e-4 * float(grad @ (x - cand)) or step < 1e-14:
                    break
                step *= 0.5
            if np.max(np.abs(cand - x)) < 1e-14:
                break
            x, val, grad = cand, cval, cgrad
            step *= 2.0
    return evaluate_assignment(problem, _repair(problem, x), method="penalty-gradient")


# ----------------------------------------------------------------------
# Multi-start driver
# ----------------------------------------------------------------------


def _two_value_starts(problem: VariationalProblem) -> list[np.ndarray]:
    n, s, p, r = problem.n, problem.s, problem.p, problem.r
    if n < 2:
        return []
    deg = degree_profile(problem.hypergraph).per_vertex_degree
    orders = [np.arange(n)]
    if not np.all(deg == deg[0]):
        orders.append(np.argsort(-deg, kind="stable"))
    lo = 0.5 * (p + r)
    starts = []
    for order in orders:
        for frac in (0.25, 0.5, 0.75):
            k = min(max(int(round(frac * n)), 1), n - 1)
            f = k / n
            hi = ((r ** s - f * lo ** s) / (1.0 - f)) ** (1.0 / s)
            hi = min(hi, X_MAX)
            for first, second in ((lo, hi), (hi, lo)):
                x = np.empty(n)
                x[order[:k]] = first
                x[order[k:]] = second
                starts.append(x)
    return starts


def _better(a: VariationalSolution, b: VariationalSolution | None) -> bool:
    if b is None:
        return True
    if a.objective < b.objective - 1e-12:
        return True
    if a.objective > b.objective + 1e-12:
        return False
    # ties: prefer certified stationarity, then the lexicographically smallest assignment
    if (a.kkt_residual <= 1e-8) != (b.kkt_residual <= 1e-8):
        return a.kkt_residual <= 1e-8
    return tuple(a.assignment) < tuple(b.assignment)


def solve_full(problem: VariationalProblem, options: SolverOptions = SolverOptions()) -> VariationalSolution:
    """Best feasible local minimizer of the mean-field problem over several starts.

    Starts: constant r, all p, two-value splits (index order and, for
    irregular H, degree order), and ``options.random_starts`` uniform points
    in [p, 1] from a Philox generator seeded by ``options.seed``.  Every
    start is polished by Newton on the KKT system (when n <= dense_limit);
    the fixed-point dual bisection and the penalized projected gradient
    contribute independent candidates.  The objective of the returned
    solution is an upper bound on phi_H(r, p).
    """
    n = problem.n
    if n > options.max_vertices:
        raise ValueError(f"{n} vertices exceeds the solver limit of {options.max_vertices}")
    p, r = problem.p, problem.r
    rng = np.random.Generator(np.random.Philox(options.seed))
    starts = [np.full(n, r), np.full(n, p)]
    starts += _two_value_starts(problem)
    starts += [rng.uniform(p, 1.0, size=n) for _ in range(options.random_starts)]

    dense = n <= options.dense_limit
    candidates: list[VariationalSolution] = []

    def polish(x0, label, beta0=None):
        x, beta, ok = _newton_kkt(problem, x0, options, beta0)
        x = _repair(problem, x)
        sol = evaluate_assignment(problem, x, beta / n if ok else None, method=label)
        if not ok:
            sol.status = "max-iterations" if sol.status == "converged" else sol.status
        candidates.append(sol)
        return sol

    for k, x0 in enumerate(starts):
        candidates.append(evaluate_assignment(problem, _repair(problem, x0), method="start"))
        if dense:
            polish(x0, f"newton-kkt[start {k}]")
    if options.dual_route:
        sol = solve_dual_bisection(problem, np.full(n, p), options)
        candidates.append(sol)
        if dense:
            polish(sol.assignment, "dual-bisection+newton")
    if options.cross_check:
        for x0 in (starts[0], starts[-1]):
            sol = solve_penalty_gradient(problem, x0, options)
            candidates.append(sol)

    feasible = [c for c in candidates if c.status != "infeasible"]
    best = None
    for cand in feasible:
        if _better(cand, best):
            best = cand
    if best is None:
        best = min(candidates, key=lambda c: c.objective)
    if best.kkt_residual > options.kkt_tol and dense:
        again = polish(best.assignment, best.method + "+newton")
        if again.status == "converged" and _better(again, best):
            best = again

    status = "converged" if best.kkt_residual <= options.kkt_tol else "max-iterations"
    if best.constraint_value < problem.threshold - FEAS_TOL * problem.num_edges:
        status = "infeasible"
    best.status = status
    best.starts_used = len(starts)
    best.notes = {
        "candidates": len(candidates),
        "dual_objective": next((c.objective for c in candidates if c.method == "dual-bisection"), None),
        "penalty_objective": min((c.objective for c in candidates if c.method == "penalty-gradient"), default=None),
    }
    return best


# ----------------------------------------------------------------------
# Two-value ansatz
# ----------------------------------------------------------------------


def _partition_mask(n: int, partition) -> np.ndarray:
    arr = np.asarray(partition)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise ValueError("boolean partition mask must have one entry per vertex")
        return arr.copy()
    mask = np.zeros(n, dtype=bool)
    for v in np.asarray(partition, dtype=np.int64).reshape(-1):
        if not 0 <= v < n:
            raise ValueError(f"partition vertex {v} outside [0, {n})")
        if mask[v]:
            raise ValueError(f"vertex {v} listed twice in the partition")
        mask[v] = True
    return mask


def solve_two_value(problem: VariationalProblem, partition, grid: int = 4001) -> VariationalSolution:
    """Optimize over assignments equal to ``a`` on part A and ``b`` on part B.

    ``partition`` lists the vertices of part A (or is a boolean mask); the
    remaining vertices form part B.  With coefficients c_k = number of edges
    having k vertices in A, t = sum_k c_k a^k b^(s-k) is increasing in both
    values, so for each a the best b is the smallest feasible one (but not
    below p).  The resulting 1-d function is scanned on a grid and refined
    with a bounded scalar search.
    """
    h = problem.hypergraph
    n, s, p = problem.n, problem.s, problem.p
    c = problem.threshold
    mask = _partition_mask(n, partition)
    n_a = int(mask.sum())
    n_b = n - n_a
    inside = mask[h.edges].sum(axis=1) if len(h.edges) else np.zeros(0, dtype=int)
    coef = np.bincount(inside, weights=h.multiplicity, minlength=s + 1).astype(float)
    powers = np.arange(s + 1)

    def t_ab(a, b):
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        return np.sum(coef * a ** powers * b ** (s - powers), axis=-1)

    # eliminate b when part B exists and carries some edge weight, otherwise a
    swap = not (n_b > 0 and coef[:s].sum() > 0)
    if swap:
        coef = coef[::-1].copy()
        n_a, n_b = n_b, n_a
    free_weight, solved_weight = n_a / n, n_b / n

    def solved_value(a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        top = t_ab(a, np.ones_like(a))
        ok = top >= c
        lo, hi = np.zeros_like(a), np.ones_like(a)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            good = t_ab(a, mid) >= c
            hi = np.where(good, mid, hi)
            lo = np.where(good, lo, mid)
        return np.where(ok, np.maximum(hi, p), np.nan)

    def reduced(a):
        b = solved_value(a)
        val = free_weight * relative_entropy(p, np.atleast_1d(a)) + solved_weight * relative_entropy(p, np.nan_to_num(b, nan=1.0))
        return np.where(np.isnan(b), np.inf, val), b

    if n_a == 0:
        a_best = p
    else:
        a_grid = np.linspace(p, 1.0, grid)
        vals, _ = reduced(a_grid)
        i = int(np.argmin(vals))
        if not np.isfinite(vals[i]):
            x = np.full(n, X_MAX)
            sol = evaluate_assignment(problem, x, method="two-value")
            sol.status = "infeasible"
            return sol
        lo_a = a_grid[max(i - 1, 0)]
        hi_a = a_grid[min(i + 1, grid - 1)]
        res = minimize_scalar(lambda a: float(reduced(a)[0][0]), bounds=(lo_a, hi_a), method="bounded",
                              options={"xatol": 1e-13})
        a_best = float(res.x) if res.fun <= vals[i] else float(a_grid[i])
    b_best = float(solved_value(a_best)[0])
    # one extra bisection-free polish of b for exact feasibility
    if b_best > p:
        f = lambda b: float(t_ab(a_best, b)) - c
        if f(b_best) > 0 and f(p) < 0:
            b_best = brentq(f, p, b_best, xtol=1e-16, rtol=4 * np.finfo(float).eps)
            while float(t_ab(a_best, b_best)) < c:
                b_best = np.nextafter(b_best, 2.0)
    x = np.empty(n)
    a_mask = ~mask if swap else mask
    x[a_mask] = a_best
    x[~a_mask] = b_best
    sol = evaluate_assignment(problem, x, method="two-value")
    sol.notes = {"values": [a_best, b_best] if not swap else [b_best, a_best]}
    return sol


def replica_value(problem: VariationalProblem) -> float | None:
    """I_p(r) when H is regular and (r^s, I_p(r)) lies on the convex minorant, else None."""
    prof = degree_profile(problem.hypergraph)
    if not prof.is_regular:
        return None
    sym, _ = is_replica_symmetric(problem.p, problem.s, problem.r)
    if not sym:
        return None
    return relative_entropy(problem.p, problem.r)


# ----------------------------------------------------------------------
# Symmetry-breaking certificates
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BreakingCertificate:
    """A regular hypergraph and a two-valued assignment beating I_p(r).

    The witness is the disjoint union of ``M`` complete s-uniform blocks of
    ``block_size`` vertices; the first ``K`` blocks get ``r1``, the rest
    ``r2``.
    """

    kind: str
    s: int
    p: float
    r: float
    r1: float
    r2: float
    lam: float
    lambda0: float
    delta: float
    M: int
    K: int
    block_size: int
    certified_objective: float
    symmetric_objective: float
    gap: float
    constraint_slack: float
    objective_slack: float

    @property
    def c_p(self) -> float:
        return math.log(1.0 / self.p) + math.log(1.0 / (1.0 - self.p))

    @property
    def witness_hypergraph_spec(self) -> dict:
        return {"blocks": self.M, "block_size": self.block_size, "uniformity": self.s, "blocks_at_r1": self.K}

    def witness_hypergraph(self) -> Hypergraph:
        block = complete_hypergraph(self.block_size, self.s)
        return disjoint_union([block] * self.M)

    def witness_partition(self) -> np.ndarray:
        mask = np.zeros(self.M * self.block_size, dtype=bool)
        mask[: self.K * self.block_size] = True
        return mask

    def witness_assignment(self) -> np.ndarray:
        return np.where(self.witness_partition(), self.r1, self.r2)

    def witness_problem(self) -> VariationalProblem:
        return VariationalProblem(self.witness_hypergraph(), self.p, self.r)

    def proof_inequalities(self) -> tuple[float, float]:
        """Re-evaluate both margins from the stored parameters.

        Returns (constraint margin, objective margin); a chord certificate is
        valid when both are positive.  For the concave-pair kind the
        constraint holds with equality and the first margin is
        (r1^s + r2^s)/2 - r^s.
        """
        s, p, r = self.s, self.p, self.r
        i1, i2, ir = relative_entropy(p, self.r1), relative_entropy(p, self.r2), relative_entropy(p, r)
        if self.kind == "concave-pair":
            return 0.5 * (self.r1 ** s + self.r2 ** s) - r ** s, ir - 0.5 * (i1 + i2)
        l0, m = self.lambda0, self.M
        lhs_c = l0 * self.r1 ** s + (1 - l0) * self.r2 ** s - 1.0 / m
        lhs_o = l0 * i1 + (1 - l0) * i2 + self.c_p / m
        return lhs_c - r ** s, ir - lhs_o

    def to_json(self) -> dict:
        cm, om = self.proof_inequalities()
        return {
            "kind": self.kind,
            "s": self.s,
            "p": self.p,
            "r": self.r,
            "r1": self.r1,
            "r2": self.r2,
            "lambda": self.lam,
            "lambda0": self.lambda0,
            "delta": self.delta,
            "M": self.M,
            "K": self.K,
            "block_size": self.block_size,
            "certified_objective": self.certified_objective,
            "symmetric_objective": self.symmetric_objective,
            "gap": self.gap,
            "constraint_slack": cm,
            "objective_slack": om,
            "C_p": self.c_p,
            "witness_hypergraph_spec": self.witness_hypergraph_spec,
        }


def _smallest_m(lambda0: float, c_margin: float, o_margin: float, c_p: float) -> int:
    # strict inequalities 1/M < c_margin and C_p/M < o_margin, plus M * lambda0 >= 1
    m = max(math.floor(1.0 / c_margin) + 1, math.floor(c_p / o_margin) + 1, math.ceil(1.0 / lambda0 - 1e-12), 1)
    while not (1.0 / m < c_margin and c_p / m < o_margin and m * lambda0 >= 1.0):
        m += 1
    return m


def build_breaking_certificate(s: int, p: float, r: float, n_hint: int | None = None) -> BreakingCertificate:
    """Certificate that some regular s-uniform hypergraph has phi < I_p(r).

    r1^s < r^s < r2^s are the double-tangent endpoints of the convex
    minorant and lambda solves lambda r1^s + (1-lambda) r2^s = r^s.  The
    mixing weight is moved to lambda0 = lambda - delta, which creates slack
    in the constraint while the entropy stays below I_p(r); delta runs over
    1e-3 * 2^k (all admissible k) and the one giving the fewest blocks M is
    kept.  ``n_hint`` sets the witness block size to ceil(n_hint / M)
    (at least s).
    """
    if not 0.0 < p < r < 1.0:
        raise ValueError(f"need 0 < p < r < 1, got p={p}, r={r}")
    curve = convex_minorant(p, s)
    sym, gap = is_replica_symmetric(p, s, r, curve=curve)
    if sym:
        raise NoBreakingPossible(f"(r^s, I_p(r)) lies on the convex minorant for p={p}, r={r}, s={s}")
    ch = curve.chord
    x1, x2, xr = ch.x1, ch.x2, r ** s
    r1, r2 = x1 ** (1.0 / s), x2 ** (1.0 / s)
    lam = (x2 - xr) / (x2 - x1)
    i1, i2, ir = relative_entropy(p, r1), relative_entropy(p, r2), relative_entropy(p, r)
    chord_gap = ir - (lam * i1 + (1 - lam) * i2)
    c_p = math.log(1.0 / p) + math.log(1.0 / (1.0 - p))

    best = None
    for k in range(-40, 40):
        delta = 1e-3 * 2.0 ** k
        lambda0 = lam - delta
        if lambda0 <= 0.0:
            break
        c_margin = delta * (x2 - x1)
        o_margin = chord_gap - delta * (i2 - i1)
        if o_margin <= 0.0:
            break
        m = _smallest_m(lambda0, c_margin, o_margin, c_p)
        if best is None or m < best[0]:
            best = (m, delta, lambda0)
    if best is None:
        raise NoBreakingPossible("no admissible mixing weight found")
    m, delta, lambda0 = best
    k_blocks = math.floor(m * lambda0)
    block = max(s, math.ceil((n_hint or 0) / m))
    frac = k_blocks / m
    certified = frac * i1 + (1 - frac) * i2
    cert = BreakingCertificate(
        kind="chord", s=s, p=p, r=r, r1=r1, r2=r2, lam=lam, lambda0=lambda0, delta=delta,
        M=m, K=k_blocks, block_size=block, certified_objective=certified,
        symmetric_objective=ir, gap=ir - certified, constraint_slack=0.0, objective_slack=0.0,
    )
    cm, om = cert.proof_inequalities()
    return BreakingCertificate(**{**cert.__dict__, "constraint_slack": cm, "objective_slack": om})


def concave_pair_certificate(s: int, p: float, r: float, n_hint: int | None = None) -> BreakingCertificate:
    """Two equal blocks with values a^(1/s), b^(1/s) where (a + b)/2 = r^s.

    Valid when J_p(r^s) > (J_p(a) + J_p(b)) / 2 for some such pair, which is
    the case when r^s lies where J_p is strictly concave.  The half-width is
    chosen to maximize the midpoint gap.
    """
    if not 0.0 < p < r < 1.0:
        raise ValueError(f"need 0 < p < r < 1, got p={p}, r={r}")
    xr = r ** s
    jr = tilted_rate(p, s, xr)
    width = min(xr, 1.0 - xr)
    gap_at = lambda w: jr - 0.5 * (tilted_rate(p, s, xr - w) + tilted_rate(p, s, xr + w))
    ws = np.linspace(0.0, width, 2001)[1:]
    gaps = np.array([gap_at(w) for w in ws])
    i = int(np.argmax(gaps))
    if gaps[i] <= 0.0:
        raise NoBreakingPossible(f"no symmetric pair around r^s={xr:.6g} lies below J_p")
    res = minimize_scalar(lambda w: -gap_at(w), bounds=(ws[max(i - 1, 0)], ws[min(i + 1, len(ws) - 1)]),
                          method="bounded", options={"xatol": 1e-14})
    w = float(res.x) if -res.fun >= gaps[i] else float(ws[i])
    a, b = xr - w, xr + w
    r1, r2 = a ** (1.0 / s), b ** (1.0 / s)
    ir = relative_entropy(p, r)
    certified = 0.5 * (relative_entropy(p, r1) + relative_entropy(p, r2))
    cert = BreakingCertificate(
        kind="concave-pair", s=s, p=p, r=r, r1=r1, r2=r2, lam=0.5, lambda0=0.5, delta=0.0,
        M=2, K=1, block_size=max(s, math.ceil((n_hint or 0) / 2)), certified_objective=certified,
        symmetric_objective=ir, gap=ir - certified, constraint_slack=0.0, objective_slack=0.0,
    )
    cm, om = cert.proof_inequalities()
    return BreakingCertificate(**{**cert.__dict__, "constraint_slack": cm, "objective_slack": om})


# ----------------------------------------------------------------------
# Checks
# ----------------------------------------------------------------------


def check_regular_upper_bound(h: Hypergraph, x) -> tuple[float, float, bool]:
    """Compare t(H, x)/|E| with the mean of x_v^s on a regular hypergraph."""
    prof = degree_profile(h)
    if not prof.is_regular:
        raise ValueError("hypergraph is not regular")
    if h.num_edges == 0:
        raise ValueError("hypergraph has no edges")
    x = np.asarray(x, dtype=float)
    lhs = edge_polynomial(h, x) / h.num_edges
    rhs = float(np.mean(x ** h.uniformity))
    return lhs, rhs, lhs <= rhs + 1e-12


def kkt_residual(problem: VariationalProblem, solution: VariationalSolution) -> float:
    """max over interior v of |I_p'(x_v)/n - mu * d_v t(H, x)|.

    Coordinates within 1e-9 of 0 or 1 are excluded.
    """
    return _kkt_value(problem, np.asarray(solution.assignment, dtype=float), solution.multiplier)


def regular_stationarity_residual(h: Hypergraph, z) -> float:
    """max over interior v of |d z_v^(s-1) - d_v t(H, z)| for a d-regular H.

    Zero exactly at interior stationary points of d/s sum z^s - t(H, z).
    """
    prof = degree_profile(h)
    if not prof.is_regular:
        raise ValueError("hypergraph is not regular")
    z = np.asarray(z, dtype=float)
    interior = (z > 0.0) & (z < 1.0)
    if not interior.any():
        return 0.0
    g = edge_polynomial_gradient(h, z)
    d = prof.regular_degree
    return float(np.max(np.abs(d * z[interior] ** (h.uniformity - 1) - g[interior])))


def grid_search_oracle(problem: VariationalProblem, step: float = 1e-3) -> float:
    """Exhaustive grid minimum of the objective over feasible grid points (n <= 3).

    The coordinate with the largest degree is not gridded but set to the
    smallest feasible value, computed exactly from the multilinear form, so
    a step of 1e-3 resolves the objective well below 1e-4.
    """
    h = problem.hypergraph
    n, p = problem.n, problem.p
    if n > 3:
        raise ValueError("grid oracle supports at most 3 vertices")
    c = problem.threshold
    pts = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    deg = degree_profile(h).per_vertex_degree
    last = int(np.argmax(deg))
    others = [v for v in range(n) if v != last]
    mesh = np.meshgrid(*[pts] * len(others), indexing="ij") if others else []
    flat = [m.reshape(-1) for m in mesh]
    count = flat[0].size if flat else 1
    x = np.zeros((count, n))
    for v, col in zip(others, flat):
        x[:, v] = col
    # t is affine in x_last: t = alpha + beta * x_last
    x[:, last] = 0.0
    alpha = np.prod(x[:, h.edges], axis=2) @ h.multiplicity
    x[:, last] = 1.0
    beta = np.prod(x[:, h.edges], axis=2) @ h.multiplicity - alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(beta > 0, (c - alpha) / beta, np.where(alpha >= c, -np.inf, np.inf))
    feasible = need <= 1.0
    x[:, last] = np.clip(np.maximum(need, p), 0.0, 1.0)
    vals = np.mean(relative_entropy(p, x[feasible]), axis=1)
    return float(vals.min())
