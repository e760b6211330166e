"""Ground truth for the upper tail of T_p(H) and mean-field diagnostics.

T_p(H) is the number of hyperedges (with multiplicity) that survive when
every vertex is kept independently with probability p.  ``exact_tail``
enumerates all vertex subsets; the Monte Carlo estimators use a Philox
counter-based generator, so a (seed, samples) pair reproduces bit-exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Sequence

import numba
import numpy as np
from numba import njit, prange
from scipy.special import logsumexp

from .errors import ResourceLimitError
from .hypergraph import Hypergraph, degree_profile
from .varsolve import SolverOptions, VariationalProblem, replica_value, solve_full

__all__ = [
    "EXACT_MAX_VERTICES",
    "TailEstimate",
    "MeanFieldReport",
    "StudyRow",
    "exact_tail",
    "exact_subset_counts",
    "monte_carlo_tail",
    "tilted_monte_carlo",
    "meanfield_report",
    "rate_convergence_study",
    "study_csv",
]

EXACT_MAX_VERTICES = 26

# the TBB layer rejects older system TBB builds with a warning; prefer the others
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def _finite_or_none(v):
    return float(v) if v is not None and math.isfinite(v) else None


@dataclass(frozen=True)
class TailEstimate:
    """Estimate of P(T_p(H) >= r^s |E(H)|).

    ``log_rate`` is -(1/n) log(probability) (infinite when the probability
    is zero).  For importance sampling, ``effective_sample_size`` is
    (sum w)^2 / sum w^2 over the samples that hit the event; for plain
    Monte Carlo it is the hit count.
    """

    probability: float
    log_rate: float
    method: str
    num_vertices: int
    std_error: float | None = None
    samples: int | None = None
    seed: int | None = None
    effective_sample_size: float | None = None
    hits: int | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["log_rate"] = _finite_or_none(self.log_rate)
        return {k: v for k, v in d.items() if v is not None or k in ("probability", "log_rate", "method")}


def _log_rate(log_p: float, n: int) -> float:
    if log_p == -math.inf:
        return math.inf
    return max(-log_p / n, 0.0)


def _threshold(h: Hypergraph, p: float, r: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not (math.isfinite(r) and r >= 0.0):
        raise ValueError(f"r must be a nonnegative number, got {r}")
    return r ** h.uniformity * h.num_edges


# ----------------------------------------------------------------------
# Exact enumeration
# ----------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _gray_counts(n, s, inc_ptr, inc_edges, mult, num_edges, thr, high_bits):
    low = n - high_bits
    chunks = 1 << high_bits
    out = np.zeros((chunks, n + 1), dtype=np.int64)
    for c in prange(chunks):
        cnt = np.zeros(num_edges, dtype=np.int64)
        total = 0
        size = 0
        for b in range(high_bits):
            if (c >> b) & 1:
                v = low + b
                size += 1
                for idx in range(inc_ptr[v], inc_ptr[v + 1]):
                    e = inc_edges[idx]
                    cnt[e] += 1
                    if cnt[e] == s:
                        total += mult[e]
        if total >= thr:
            out[c, size] += 1
        state = 0
        for i in range(1, 1 << low):
            v = 0
            while not (i >> v) & 1:
                v += 1
            bit = 1 << v
            if state & bit:
                for idx in range(inc_ptr[v], inc_ptr[v + 1]):
                    e = inc_edges[idx]
                    if cnt[e] == s:
                        total -= mult[e]
                    cnt[e] -= 1
                size -= 1
            else:
                for idx in range(inc_ptr[v], inc_ptr[v + 1]):
                    e = inc_edges[idx]
                    cnt[e] += 1
                    if cnt[e] == s:
                        total += mult[e]
                size += 1
            state ^= bit
            if total >= thr:
                out[c, size] += 1
    return out


def exact_subset_counts(h: Hypergraph, threshold: float) -> np.ndarray:
    """N[k] = number of k-subsets S of V(H) with at least ``threshold`` edges inside S.

    Subsets are visited in Gray-code order, so each step adds or removes a
    single vertex and only its incident edges are touched.  The high bits
    split the enumeration into independent chunks.
    """
    n = h.num_vertices
    if n > EXACT_MAX_VERTICES:
        raise ResourceLimitError(
            f"exact enumeration needs 2^{n} subsets; the budget is {EXACT_MAX_VERTICES} vertices, use Monte Carlo"
        )
    m, s = len(h.edges), h.uniformity
    flat = h.edges.reshape(-1)
    order = np.argsort(flat, kind="stable")
    inc_edges = (order // s).astype(np.int64)
    inc_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=n), out=inc_ptr[1:])
    high = min(n, 6)
    counts = _gray_counts(n, s, inc_ptr, inc_edges, h.multiplicity.astype(np.int64), m, float(threshold), high)
    return counts.sum(axis=0)


def exact_tail(h: Hypergraph, p: float, r: float) -> TailEstimate:
    """P(T_p(H) >= r^s |E(H)|) by enumeration of all 2^n vertex subsets (n <= 26).

    The probability is sum_k N_k p^k (1-p)^(n-k) over exact integer counts
    N_k, accumulated with correctly rounded summation; the log-rate is
    computed in log space so it stays finite when the probability underflows.
    """
    thr = _threshold(h, p, r)
    n = h.num_vertices
    counts = exact_subset_counts(h, thr)
    k = np.arange(n + 1)
    nz = counts > 0
    if not nz.any():
        return TailEstimate(0.0, math.inf, "exact", n)
    log_terms = np.log(counts[nz].astype(float)) + k[nz] * math.log(p) + (n - k[nz]) * math.log1p(-p)
    prob = math.fsum(np.exp(log_terms))
    return TailEstimate(min(prob, 1.0), _log_rate(float(logsumexp(log_terms)), n), "exact", n)


# ----------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------


def _batches(h: Hypergraph, samples: int):
    per = max(1, int(2e7 // max(1, h.edges.size)))
    start = 0
    while start < samples:
        size = min(per, samples - start)
        yield size
        start += size


def _surviving_edges(h: Hypergraph, keep: np.ndarray) -> np.ndarray:
    if not len(h.edges):
        return np.zeros(keep.shape[0])
    return np.all(keep[:, h.edges], axis=2).astype(float) @ h.multiplicity


def monte_carlo_tail(h: Hypergraph, p: float, r: float, samples: int, seed: int = 0) -> TailEstimate:
    """Plain Monte Carlo with a binomial standard error."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    thr = _threshold(h, p, r)
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    for size in _batches(h, samples):
        keep = rng.random((size, h.num_vertices)) < p
        hits += int(np.count_nonzero(_surviving_edges(h, keep) >= thr))
    prob = hits / samples
    se = math.sqrt(prob * (1.0 - prob) / samples)
    log_rate = _log_rate(math.log(prob) if prob > 0 else -math.inf, h.num_vertices)
    return TailEstimate(prob, log_rate, "plain-mc", h.num_vertices, se, samples, seed, float(hits), hits)


def tilted_monte_carlo(h: Hypergraph, p: float, r: float, tilt, samples: int, seed: int = 0) -> TailEstimate:
    """Importance sampling from the product measure with marginals ``tilt``.

    Each sample is weighted by the likelihood ratio of Bernoulli(p)^n
    against the tilted product measure, which makes the estimator unbiased.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    thr = _threshold(h, p, r)
    n = h.num_vertices
    tilt = np.asarray(tilt, dtype=float)
    if tilt.shape != (n,):
        raise ValueError(f"tilt must have length {n}, got shape {tilt.shape}")
    if not np.all((tilt > 0.0) & (tilt < 1.0)):
        raise ValueError("tilt entries must lie strictly inside (0, 1)")
    log_in = math.log(p) - np.log(tilt)
    log_out = math.log1p(-p) - np.log1p(-tilt)
    rng = np.random.Generator(np.random.Philox(seed))
    total = total_sq = 0.0
    hits = 0
    for size in _batches(h, samples):
        keep = rng.random((size, n)) < tilt
        hit = _surviving_edges(h, keep) >= thr
        if not hit.any():
            continue
        kk = keep[hit]
        logw = np.where(kk, log_in, log_out).sum(axis=1)
        w = np.exp(logw)
        hits += int(hit.sum())
        total += math.fsum(w)
        total_sq += math.fsum(w * w)
    est = total / samples
    if samples > 1:
        var = max(total_sq / samples - est * est, 0.0) * samples / (samples - 1)
        se = math.sqrt(var / samples)
    else:
        se = 0.0
    ess = total * total / total_sq if total_sq > 0 else 0.0
    log_rate = _log_rate(math.log(est) if est > 0 else -math.inf, n)
    return TailEstimate(est, log_rate, "tilted-mc", n, se, samples, seed, ess, hits)


# ----------------------------------------------------------------------
# Mean-field diagnostics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MeanFieldReport:
    """Finite-size ratios behind the sufficient conditions for the mean-field property.

    * ``codegree_ratio``: D2 |V|^(2 - 1/(2 ceil((s-1)/2))) sqrt(log |V|) / |E|
    * ``degree_ratio``: D1 |V| / |E| (shared by all three conditions)
    * ``edge_ratio``: |V|^(s-1) / |E|
    * ``graph_edge_ratio``: |V| / |E| for graphs (s = 2), otherwise None
    * ``lipschitz_bound``: (|V| / |E|) D1
    * ``gradient_complexity_bound``: sqrt(s) |V|^((s+1)/2) / sqrt(|E|)

    Ratios tending to zero (or staying bounded for the degree ratio) along a
    family indicate the condition holds; a single instance gives no verdict.
    """

    num_vertices: int
    num_edges: int
    uniformity: int
    max_degree: int
    max_codegree: int
    codegree_ratio: float
    degree_ratio: float
    edge_ratio: float
    graph_edge_ratio: float | None
    lipschitz_bound: float
    gradient_complexity_bound: float

    @property
    def gradient_complexity_ratio(self) -> float:
        return self.gradient_complexity_bound / self.num_vertices

    def to_json(self) -> dict:
        d = asdict(self)
        d["gradient_complexity_ratio"] = self.gradient_complexity_ratio
        return d


def meanfield_report(h: Hypergraph) -> MeanFieldReport:
    if h.num_edges == 0:
        raise ValueError("the hypergraph has no edges")
    prof = degree_profile(h)
    v, e, s = h.num_vertices, h.num_edges, h.uniformity
    exponent = 2.0 - 1.0 / (2 * math.ceil((s - 1) / 2))
    return MeanFieldReport(
        num_vertices=v,
        num_edges=e,
        uniformity=s,
        max_degree=prof.max_degree,
        max_codegree=prof.max_codegree,
        codegree_ratio=prof.max_codegree * v ** exponent * math.sqrt(math.log(v)) / e,
        degree_ratio=prof.max_degree * v / e,
        edge_ratio=v ** (s - 1) / e,
        graph_edge_ratio=v / e if s == 2 else None,
        lipschitz_bound=v / e * prof.max_degree,
        gradient_complexity_bound=math.sqrt(s) * v ** ((s + 1) / 2) / math.sqrt(e),
    )


# ----------------------------------------------------------------------
# Convergence studies
# ----------------------------------------------------------------------


class StudyRow(NamedTuple):
    size: int
    num_vertices: int
    exact_log_rate: float
    phi_upper: float
    replica_value: float | None
    difference: float


def rate_convergence_study(family: Callable[[int], Hypergraph], p: float, r: float, sizes: Sequence[int],
                           options: SolverOptions = SolverOptions()) -> list[StudyRow]:
    """Exact log-rates along a family next to the mean-field value.

    ``difference`` is |exact log-rate - reference| where the reference is
    the replica value when it applies and the solver upper bound otherwise.
    All members are built and checked against the enumeration budget before
    any enumeration starts.
    """
    members = [(k, family(k)) for k in sizes]
    for k, h in members:
        if h.num_vertices > EXACT_MAX_VERTICES:
            raise ResourceLimitError(
                f"size {k} gives {h.num_vertices} vertices; exact enumeration is limited to {EXACT_MAX_VERTICES}"
            )
    rows = []
    for k, h in members:
        est = exact_tail(h, p, r)
        problem = VariationalProblem(h, p, r)
        phi = solve_full(problem, options).objective
        rv = replica_value(problem)
        ref = rv if rv is not None else phi
        rows.append(StudyRow(k, h.num_vertices, est.log_rate, phi, rv, abs(est.log_rate - ref)))
    return rows


def study_csv(rows: Sequence[StudyRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(StudyRow._fields)
    for row in rows:
        writer.writerow(["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v) for v in row])
    return buf.getvalue()
