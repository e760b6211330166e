"""Bernoulli relative entropy, the curve J_p(x) = I_p(x^(1/s)), its convex
minorant, and the replica-symmetry test built on it.

For p below the convexity threshold p0(s), J_p has exactly two inflection
points, so its convex minorant differs from J_p on a single interval
[x1, x2] where it follows the double tangent.  The chord is located
analytically and cross-checked against a sampled lower convex hull.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logit, xlogy

from .errors import ConvergenceError

__all__ = [
    "relative_entropy",
    "entropy_derivative",
    "tilted_rate",
    "tilted_rate_derivative",
    "convexity_threshold",
    "inflection_points",
    "Chord",
    "MinorantCurve",
    "convex_minorant",
    "lower_hull",
    "SymmetryVerdict",
    "is_replica_symmetric",
    "RegionRow",
    "region_scan",
    "region_csv",
    "SYMMETRY_TOL",
]

SYMMETRY_TOL = 1e-9


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def relative_entropy(p: float, x):
    """I_p(x) = x log(x/p) + (1-x) log((1-x)/(1-p)), with 0 log 0 = 0.

    Accepts scalars or arrays for ``x``.
    """
    _check_p(p)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0):
        raise ValueError("x must lie in [0, 1]")
    val = xlogy(xa, xa / p) + xlogy(1.0 - xa, (1.0 - xa) / (1.0 - p))
    val = np.maximum(val, 0.0)
    return float(val) if val.ndim == 0 else val


def entropy_derivative(p: float, x):
    """I_p'(x) = logit(x) - logit(p) for x in the open unit interval."""
    _check_p(p)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0.0) or np.any(xa >= 1.0):
        raise ValueError("entropy derivative is defined only for x in (0, 1)")
    val = logit(xa) - logit(p)
    return float(val) if val.ndim == 0 else val


def _check_s(s: int) -> None:
    if int(s) != s or s < 2:
        raise ValueError(f"s must be an integer >= 2, got {s}")


def tilted_rate(p: float, s: int, x):
    """J_p(x) = I_p(x^(1/s))."""
    _check_s(s)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0):
        raise ValueError("x must lie in [0, 1]")
    return relative_entropy(p, xa ** (1.0 / s))


def tilted_rate_derivative(p: float, s: int, x):
    """J_p'(x) = I_p'(y) * y^(1-s) / s with y = x^(1/s), for x in (0, 1)."""
    _check_s(s)
    xa = np.asarray(x, dtype=float)
    y = xa ** (1.0 / s)
    val = entropy_derivative(p, y) * y ** (1 - s) / s
    return float(val) if np.ndim(val) == 0 else val


def _curvature_sign(p: float, s: int, y):
    # sign(J_p'') in terms of y = x^(1/s): 1/(1-y) - (s-1) I_p'(y)
    return 1.0 / (1.0 - y) - (s - 1) * (logit(y) - logit(p))


def convexity_threshold(s: int) -> float:
    """p0(s) = (s-1) / (s - 1 + e^(s/(s-1))); J_p is convex iff p >= p0(s)."""
    _check_s(s)
    return (s - 1) / (s - 1 + math.exp(s / (s - 1)))


def inflection_points(p: float, s: int) -> tuple[float, float] | None:
    """The two inflection points of J_p in x-coordinates, or None if J_p is convex.

    J_p'' has the sign of 1/(1-y) - (s-1)(logit y - logit p), y = x^(1/s),
    which is positive near both ends and smallest at y = (s-1)/s.
    """
    _check_p(p)
    _check_s(s)
    if p >= convexity_threshold(s):
        return None
    y_mid = (s - 1) / s
    if _curvature_sign(p, s, y_mid) >= 0.0:
        # p sits at the threshold up to rounding
        return None
    f = lambda y: _curvature_sign(p, s, y)
    lo = brentq(f, 1e-300, y_mid, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    hi = brentq(f, y_mid, 1.0 - 1e-16, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return lo ** s, hi ** s


@dataclass(frozen=True)
class Chord:
    """Double tangent of J_p between x1 and x2 (x-coordinates)."""

    x1: float
    x2: float
    slope: float
    intercept: float
    residuals: tuple[float, float]


@dataclass(frozen=True)
class MinorantCurve:
    """Convex minorant of J_p on [0, 1]."""

    p: float
    s: int
    convex_everywhere: bool
    chord: Chord | None
    tol: float = SYMMETRY_TOL

    def rate(self, x):
        return tilted_rate(self.p, self.s, x)

    def __call__(self, x):
        """Evaluate the minorant: J_p outside the chord interval, linear inside."""
        j = np.asarray(tilted_rate(self.p, self.s, x), dtype=float)
        if self.chord is None:
            return float(j) if j.ndim == 0 else j
        xa = np.asarray(x, dtype=float)
        c = self.chord
        inside = (xa > c.x1) & (xa < c.x2)
        out = np.where(inside, c.slope * xa + c.intercept, j)
        # the line is below J_p by construction; clip rounding noise
        out = np.minimum(out, j)
        return float(out) if out.ndim == 0 else out

    def gap(self, x):
        """J_p(x) - minorant(x) >= 0."""
        g = np.asarray(tilted_rate(self.p, self.s, x)) - np.asarray(self(x))
        return float(g) if np.ndim(g) == 0 else g


def _entropy_slope(p: float, y):
    # I_p'(y) written to avoid cancellation when y is close to p
    return np.log(y / p) - np.log1p(-y) + np.log1p(-p)


def _tangent_point(p: float, s: int, slope: float, lo: float, hi: float) -> float:
    # solve J'(x) = slope for x in [lo, hi] where J' is increasing; the root is
    # taken in y = x^(1/s), which keeps full relative precision near x = 0
    g = lambda y: _entropy_slope(p, y) * y ** (1 - s) / s - slope
    ylo, yhi = lo ** (1.0 / s), min(hi ** (1.0 / s), _Y_TOP)
    if g(ylo) >= 0.0:
        return lo
    if g(yhi) <= 0.0:
        return hi
    y = brentq(g, ylo, yhi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return y ** s


# largest double below 1; right tangent points beyond it are treated as x2 = 1
_Y_TOP = 1.0 - 2.0 ** -53


def convex_minorant(p: float, s: int) -> MinorantCurve:
    """Convex minorant of J_p.

    When p < p0(s) the double tangent is found from the tangency system
    J'(x1) = J'(x2) = (J(x2) - J(x1)) / (x2 - x1): for a trial slope m the
    tangent points x1(m) < xi1 and x2(m) > xi2 (xi the inflection points)
    solve J'(x) = m on the two convex branches, and m is the root of the
    intercept difference, which is strictly increasing in m.

    If the right tangent point is closer to 1 than double precision can
    resolve (small p, larger s), the chord ends at the corner x2 = 1, where
    J' is infinite; its x2 residual is then reported as 0.  Once p^s drops
    below roughly 1e-15 the left tangent point is no longer resolvable and
    ConvergenceError is raised with the residuals.
    """
    _check_p(p)
    _check_s(s)
    infl = inflection_points(p, s)
    if infl is None:
        return MinorantCurve(p, s, True, None)
    xi1, xi2 = infl
    d1, d2 = tilted_rate_derivative(p, s, xi1), tilted_rate_derivative(p, s, xi2)
    # J' decreases on [xi1, xi2], so slopes shared by both convex branches lie in [d2, d1]
    lo_x = p ** s
    j_one = tilted_rate(p, s, 1.0)

    def right_point(m: float) -> float:
        b = _tangent_point(p, s, m, xi2, 1.0)
        return 1.0 if b >= _Y_TOP ** s else b

    def intercept_gap(m: float) -> float:
        a = _tangent_point(p, s, m, lo_x, xi1)
        b = right_point(m)
        ja = tilted_rate(p, s, a)
        jb = j_one if b == 1.0 else tilted_rate(p, s, b)
        return (ja - m * a) - (jb - m * b)

    g_lo, g_hi = intercept_gap(d2), intercept_gap(d1)
    if not (g_lo < 0.0 < g_hi):
        raise ConvergenceError("double tangent is not bracketed by the inflection slopes", (g_lo, g_hi))
    m = brentq(intercept_gap, d2, d1, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    x1 = _tangent_point(p, s, m, lo_x, xi1)
    x2 = right_point(m)
    j1, j2 = tilted_rate(p, s, x1), tilted_rate(p, s, x2)
    slope = (j2 - j1) / (x2 - x1)

    def slope_at(x: float) -> float:
        y = x ** (1.0 / s)
        return float(_entropy_slope(p, y) * y ** (1 - s) / s)

    res = (abs(slope_at(x1) - slope), 0.0 if x2 == 1.0 else abs(slope_at(x2) - slope))
    if max(res) > 1e-8 * max(1.0, abs(slope)):
        raise ConvergenceError("double tangent residuals too large", res)
    return MinorantCurve(p, s, False, Chord(x1, x2, slope, j1 - slope * x1, res))


def lower_hull(xs: Sequence[float], ys: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the lower convex hull of points sorted by x (monotone chain)."""
    hx: list[float] = []
    hy: list[float] = []
    for x, y in zip(xs, ys):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2])
            if cross <= 0.0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
    return np.array(hx), np.array(hy)


class SymmetryVerdict(NamedTuple):
    symmetric: bool
    gap: float


def is_replica_symmetric(
    p: float, s: int, r: float, tol: float = SYMMETRY_TOL, curve: MinorantCurve | None = None
) -> SymmetryVerdict:
    """Whether (r^s, I_p(r)) lies on the convex minorant of J_p.

    ``gap = J_p(r^s) - minorant(r^s)``; points with gap <= tol count as on
    the minorant.
    """
    _check_p(p)
    if not p < r < 1.0:
        raise ValueError(f"need p < r < 1, got p={p}, r={r}")
    if curve is None:
        curve = convex_minorant(p, s)
    elif (curve.p, curve.s) != (p, s):
        raise ValueError("minorant curve was built for different (p, s)")
    if curve.chord is None:
        return SymmetryVerdict(True, 0.0)
    gap = max(curve.gap(r ** s), 0.0)
    return SymmetryVerdict(gap <= tol, gap)


class RegionRow(NamedTuple):
    p: float
    r: float
    symmetric: bool
    gap: float


def region_scan(s: int, p_grid: Iterable[float], r_grid: Iterable[float], tol: float = SYMMETRY_TOL) -> list[RegionRow]:
    """One row per grid pair with p < r, p-major order."""
    p_vals = [float(v) for v in p_grid]
    r_vals = [float(v) for v in r_grid]
    if not p_vals or not r_vals:
        raise ValueError("empty grid")
    for v in p_vals + r_vals:
        if not 0.0 < v < 1.0:
            raise ValueError(f"grid value {v} outside (0, 1)")
    rows = []
    for p in p_vals:
        curve = convex_minorant(p, s)
        for r in r_vals:
            if r <= p:
                continue
            sym, gap = is_replica_symmetric(p, s, r, tol, curve)
            rows.append(RegionRow(p, r, sym, gap))
    return rows


def region_csv(rows: Iterable[RegionRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "r", "symmetric", "gap"])
    for row in rows:
        w.writerow([f"{row.p:.12g}", f"{row.r:.12g}", "true" if row.symmetric else "false", f"{row.gap:.12g}"])
    return buf.getvalue()
