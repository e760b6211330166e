import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from replica_tail.rate import (
    convex_minorant,
    convexity_threshold,
    entropy_derivative,
    inflection_points,
    is_replica_symmetric,
    lower_hull,
    region_csv,
    region_scan,
    relative_entropy,
    tilted_rate,
)


def kl(p, x):
    """Independent Bernoulli divergence with explicit boundary limits."""
    a = 0.0 if x == 0 else x * math.log(x / p)
    b = 0.0 if x == 1 else (1 - x) * math.log((1 - x) / (1 - p))
    return a + b


def hull_minorant(p, s, n=100_001):
    # the minimum sits at p^s, which a uniform grid can miss for small p
    xs = np.union1d(np.linspace(0.0, 1.0, n), [p ** s])
    ys = np.array([kl(p, x ** (1 / s)) for x in xs])
    hx, hy = lower_hull(xs, ys)
    return xs, np.interp(xs, hx, hy), ys


# --- entropy ---

def test_entropy_examples():
    assert relative_entropy(0.37, 0.37) == 0.0
    assert relative_entropy(0.5, 1.0) == pytest.approx(math.log(2), abs=1e-15)
    assert relative_entropy(0.3, 0.5) == pytest.approx(0.087176, abs=1e-6)
    assert relative_entropy(0.3, 0.0) == pytest.approx(-math.log(0.7), abs=1e-15)
    with pytest.raises(ValueError):
        relative_entropy(0.0, 0.5)
    with pytest.raises(ValueError):
        relative_entropy(1.0, 0.5)


@settings(max_examples=200)
@given(st.floats(1e-4, 1 - 1e-4), st.floats(0.0, 1.0))
def test_entropy_matches_formula(p, x):
    v = relative_entropy(p, x)
    assert v >= 0
    assert v == pytest.approx(kl(p, x), rel=1e-12, abs=1e-15)


@settings(max_examples=200)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_entropy_derivative(p, x):
    h = 1e-6
    fd = (kl(p, x + h) - kl(p, x - h)) / (2 * h)
    assert entropy_derivative(p, x) == pytest.approx(fd, abs=1e-7)
    assert entropy_derivative(p, x) == pytest.approx(-entropy_derivative(1 - p, 1 - x), abs=1e-12)
    assert entropy_derivative(p, p) == 0.0


def test_entropy_derivative_rejects_boundary():
    with pytest.raises(ValueError):
        entropy_derivative(0.3, 0.0)


def test_tilted_rate_examples():
    for p in (0.05, 0.3, 0.8):
        for s in (2, 3, 5):
            assert tilted_rate(p, s, p ** s) == pytest.approx(0.0, abs=1e-15)
            assert tilted_rate(p, s, 1.0) == pytest.approx(math.log(1 / p), rel=1e-14)
    assert tilted_rate(0.3, 2, 0.25) == pytest.approx(relative_entropy(0.3, 0.5), rel=1e-14)
    with pytest.raises(ValueError):
        tilted_rate(0.3, 1, 0.5)


# --- convexity threshold ---

def test_threshold_values():
    assert convexity_threshold(2) == pytest.approx(1 / (1 + math.e ** 2), rel=1e-14)
    assert convexity_threshold(2) == pytest.approx(0.119203, abs=5e-7)
    # direct evaluation of 2 / (2 + e^1.5)
    assert convexity_threshold(3) == pytest.approx(0.3085615, abs=5e-7)
    for s in range(2, 30):
        assert 0 < convexity_threshold(s) < 1
    with pytest.raises(ValueError):
        convexity_threshold(1)


def second_difference_sign_changes(p, s):
    xs = np.linspace(p ** s, 1.0, 20001)[1:-1]
    h = 1e-5
    d2 = np.array([tilted_rate(p, s, x + h) - 2 * tilted_rate(p, s, x) + tilted_rate(p, s, x - h) for x in xs])
    return xs, d2


@pytest.mark.parametrize("s", [2, 3, 4])
def test_threshold_separates_convex_from_nonconvex(s):
    p0 = convexity_threshold(s)
    for p in (p0 * 1.05, min(0.95, p0 * 2)):
        _, d2 = second_difference_sign_changes(p, s)
        assert d2.min() > -1e-12
        assert inflection_points(p, s) is None
    _, d2 = second_difference_sign_changes(p0 * 0.8, s)
    assert d2.min() < 0


@pytest.mark.parametrize("p, s", [(0.05, 2), (0.1, 2), (0.2, 3), (0.01, 4)])
def test_inflection_points_match_curvature_oracle(p, s):
    a, b = inflection_points(p, s)
    assert p ** s < a < b < 1
    xs, d2 = second_difference_sign_changes(p, s)
    neg = xs[d2 < 0]
    assert neg.min() == pytest.approx(a, abs=2e-4)
    assert neg.max() == pytest.approx(b, abs=2e-4)


# --- minorant ---

def test_minorant_convex_case():
    c = convex_minorant(0.2, 2)
    assert c.convex_everywhere and c.chord is None
    xs = np.linspace(0, 1, 101)
    np.testing.assert_array_equal(c(xs), tilted_rate(0.2, 2, xs))


@pytest.mark.parametrize("p, s", [(0.05, 2), (0.1, 2), (0.02, 2), (0.2, 3), (0.05, 3), (0.01, 4)])
def test_chord_against_hull_oracle(p, s):
    c = convex_minorant(p, s)
    ch = c.chord
    assert ch is not None
    assert p ** s <= ch.x1 < ch.x2 <= 1
    assert max(abs(r) for r in ch.residuals) <= 1e-10
    xs, hull, ys = hull_minorant(p, s)
    np.testing.assert_allclose(c(xs), hull, atol=1e-5)
    # hull leaves J_p exactly on the chord interval
    off = xs[ys - hull > 1e-9]
    assert off.min() == pytest.approx(ch.x1, abs=1e-3)
    assert off.max() == pytest.approx(ch.x2, abs=1e-3)


def test_chord_frozen_values():
    # oracle: 1e5-point lower hull, refined values frozen here
    ch = convex_minorant(0.1, 2).chord
    assert ch.x1 == pytest.approx(0.0625, abs=1e-3)
    assert ch.x2 == pytest.approx(0.5625, abs=1e-3)


@pytest.mark.parametrize("p, s", [(0.05, 2), (0.2, 3), (0.3, 2)])
def test_minorant_properties(p, s):
    c = convex_minorant(p, s)
    xs = np.linspace(0, 1, 10_000)
    assert np.all(c(xs) <= tilted_rate(p, s, xs) + 1e-12)
    ys = c(xs)
    assert np.diff(ys, 2).min() >= -1e-12
    right = xs[xs >= p ** s]
    assert np.all(np.diff(c(right)) >= -1e-15)


# --- symmetry ---

def test_symmetric_above_threshold():
    for s in (2, 3):
        p = convexity_threshold(s) + 0.01
        for r in np.linspace(p, 1, 202)[1:-1]:
            assert is_replica_symmetric(p, s, r).symmetric


def test_breaking_inside_chord():
    c = convex_minorant(0.05, 2)
    mid = 0.5 * (c.chord.x1 + c.chord.x2)
    v = is_replica_symmetric(0.05, 2, math.sqrt(mid))
    assert not v.symmetric and v.gap > 0
    left = math.sqrt(c.chord.x1) * 0.99
    assert is_replica_symmetric(0.05, 2, left).symmetric
    assert is_replica_symmetric(0.05, 2, 0.999).symmetric


def test_symmetry_rejects_boundary():
    with pytest.raises(ValueError):
        is_replica_symmetric(0.3, 2, 0.3)
    with pytest.raises(ValueError):
        is_replica_symmetric(0.3, 2, 1.0)


def test_gap_is_continuous_in_r():
    rs = np.linspace(0.051, 0.999, 2000)
    curve = convex_minorant(0.05, 2)
    gaps = np.array([is_replica_symmetric(0.05, 2, r, curve=curve).gap for r in rs])
    slope = np.abs(np.diff(gaps)) / np.diff(rs)
    assert slope.max() < 10


# --- region scan ---

def test_region_scan():
    rows = region_scan(2, [0.2, 0.3], np.linspace(0.1, 0.9, 9))
    assert all(r.symmetric for r in rows)
    assert all(r.r > r.p for r in rows)
    assert len(region_scan(2, [0.3], [0.5])) == 1
    with pytest.raises(ValueError):
        region_scan(2, [], [0.5])
    rows = region_scan(2, [0.05], np.linspace(0.06, 0.99, 400))
    flags = np.array([r.symmetric for r in rows])
    broken = np.flatnonzero(~flags)
    assert broken.size > 0
    assert np.all(np.diff(broken) == 1)


def test_region_csv():
    text = region_csv(region_scan(2, [0.3], [0.5, 0.6]))
    lines = text.splitlines()
    assert lines[0] == "p,r,symmetric,gap"
    assert lines[1].startswith("0.3,0.5,true,")
    assert len(lines) == 3
