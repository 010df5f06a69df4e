from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudolem import circle, parse, rounded_polygon
from pseudolem.errors import BoundaryHit, ConfigError
from pseudolem.locator import (Kind, LocatorConfig, Rect, boundary_winding, critical_points,
                               critical_points_on_curve, find_poles, isolate)

import oracles

BOX = Rect.from_bounds(-2, 2, -2, 2)

CORPUS = ["z^2 - 1", "(z - 0.3)^2", "(z^2 - 1)/z", "z^3 - 3*z", "1/(z - 0.5)^2 + z",
          "z^2*(1 - 0.4*z)/(z - 0.5)", "exp(z) - 2", "sin(z)*cos(2*z)", "(z - 0.2)^3*(z + 1.1i)",
          "exp(-z^2)/(z^2 + 1.5)"]


def summary(recs):
    return [(round(r.location.real, 8), round(r.location.imag, 8), r.order, r.kind) for r in recs]


def test_rect():
    r = Rect.from_bounds(-1, 3, 0, 2)
    assert (r.width, r.height, r.center) == (4, 2, 1 + 1j)
    with pytest.raises(ConfigError):
        Rect.from_bounds(1, 1, 0, 1)


def test_config_validation():
    with pytest.raises(ConfigError):
        LocatorConfig(min_cell=0)
    with pytest.raises(ConfigError):
        LocatorConfig(newton_max_iter=0)


def test_isolate_examples():
    assert summary(isolate(parse("z^2 - 1"), BOX)) == [(-1, 0, 1, Kind.ZERO), (1, 0, 1, Kind.ZERO)]
    assert summary(isolate(parse("(z - 0.3)^2"), BOX)) == [(0.3, 0, 2, Kind.ZERO)]
    assert summary(isolate(parse("(z^2 - 1)/z"), BOX)) == [
        (-1, 0, 1, Kind.ZERO), (0, 0, 1, Kind.POLE), (1, 0, 1, Kind.ZERO)]


def test_find_poles():
    recs = find_poles(parse("1/(z - 0.5)^2 + z"), BOX)
    assert [(r.location, r.order) for r in recs] == [(0.5, 2)]
    assert find_poles(parse("exp(z)"), BOX) == []


def test_boundary_hit():
    with pytest.raises(BoundaryHit):
        isolate(parse("z - 2"), BOX)


def test_critical_points_examples():
    assert summary(critical_points(parse("z^2"), BOX)) == [(0, 0, 1, Kind.CRITICAL)]
    assert critical_points(parse("exp(z)"), BOX) == []
    assert [r.location for r in critical_points(parse("z^3 - 3*z"), BOX)] == pytest.approx([-1, 1])
    # the poles of f' at a pole of f are not critical points
    assert [r.kind for r in critical_points(parse("1/z + z"), BOX)] == [Kind.CRITICAL] * 2


def test_critical_points_on_curve_examples():
    on = critical_points_on_curve(parse("z^2"), circle(0.5, 0.5))
    assert len(on) == 1 and abs(on[0].location) < 1e-9
    assert critical_points_on_curve(parse("z^2"), circle()) == []
    assert critical_points_on_curve(parse("exp(z)"), rounded_polygon([0, 1, 1 + 8j, 2j], 0.05)) == []


@pytest.mark.parametrize("text", CORPUS)
def test_orders_match_box_winding(text):
    f = parse(text)
    recs = isolate(f, BOX)
    zeros = sum(r.order for r in recs if r.kind is Kind.ZERO)
    poles = sum(r.order for r in recs if r.kind is Kind.POLE)
    assert zeros - poles == boundary_winding(f, BOX)


@pytest.mark.parametrize("text", CORPUS)
def test_residuals(text):
    cfg = LocatorConfig()
    for r in isolate(parse(text), BOX, cfg):
        assert r.order >= 1
        assert r.residual <= cfg.newton_tol


@pytest.mark.parametrize("text", CORPUS)
def test_halved_min_cell_is_stable(text):
    f = parse(text)
    base = isolate(f, BOX)
    half = isolate(f, BOX, LocatorConfig(min_cell=0.5e-8 * BOX.diag))
    assert Counter((r.order, r.kind) for r in base) == Counter((r.order, r.kind) for r in half)
    for a, b in zip(base, half):
        assert abs(a.location - b.location) <= 10 * LocatorConfig().newton_tol


def test_sorted_and_deterministic():
    f = parse("sin(z)*cos(2*z)")
    a = isolate(f, BOX)
    assert a == isolate(f, BOX)
    keys = [(r.location.real, r.location.imag) for r in a]
    assert keys == sorted(keys)


def test_against_polynomial_roots():
    rng = np.random.default_rng(12)
    for _ in range(15):
        coeffs = oracles.random_disk(rng, 5, 1.0)
        coeffs[-1] = 1
        f = parse(oracles.poly_text(coeffs))
        roots = np.polynomial.polynomial.polyroots(coeffs)
        box = Rect.from_bounds(-3.1, 3.07, -3.03, 3.11)
        if not np.all(box.contains(roots)):
            continue
        found = [r.location for r in isolate(f, box) for _ in range(r.order)]
        assert oracles.match_multisets(found, roots) < 1e-7


@settings(max_examples=30)
@given(r=st.floats(0, 0.99e-4), t=st.floats(0, 2 * np.pi))
def test_roots_move_continuously(r, t):
    # roots of z^2 - w stay within 1e-3 of +-1 for |w - 1| < 1e-4
    w = 1 + r * np.exp(1j * t)
    recs = isolate(parse("z^2").shifted(w), BOX)
    assert len(recs) == 2
    for rec in recs:
        assert min(abs(rec.location - 1), abs(rec.location + 1)) < 1e-3


def test_unresolved_cluster_reported_as_one_record():
    # two zeros 1e-12 apart merge below min_cell
    f = parse("(z - 0.1)*(z - 0.1 - 1e-12)")
    recs = isolate(f, BOX)
    assert sum(r.order for r in recs) == 2
    assert all(abs(r.location - 0.1) < 1e-6 for r in recs)
