import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudolem import INF, blaschke, circle, parse, rounded_polygon
from pseudolem.counting import (Method, chordal, count_on_grid, count_poles_in, count_preimages,
                                count_preimages_retracted, image_winding)
from pseudolem.errors import PoleOnCurve, TooCloseToImage, UnsupportedOperation
from pseudolem.locator import Rect
from pseudolem.trace import trace_components

import oracles

UNIT = circle()
TALL = [0, 1, 1 + 8j, 2j]
LITERAL = [0, 1, 1 + 4j, 2j]
WS3 = [1j, math.e * 1j, math.e ** 2 * 1j]

CORPUS = ["z^3 - 3*z", "(z - 0.5)/(1 - 0.5*z)", "z^2*(1 - 0.5*z)/(z - 0.5)", "1/(z - 0.5)^2 + z",
          "(z^2 - 1)/z", "exp(z)", "sin(z) + 0.3*z^2"]


@pytest.mark.parametrize("text,w,expected", [("z^3", 0, 3), ("1/z", 0, -1), ("z^2 - 4", 0, 0)])
def test_image_winding_examples(text, w, expected):
    assert image_winding(parse(text), UNIT, w) == expected


@pytest.mark.parametrize("text,expected", [("1/z", 1), ("exp(z)", 0), ("1/(z - 0.5)^2 + z", 2)])
def test_count_poles_examples(text, expected):
    assert count_poles_in(parse(text), UNIT) == expected


def test_count_poles_exp_any_curve():
    assert count_poles_in(parse("exp(z)"), rounded_polygon(TALL, 0.05)) == 0


def test_count_preimages_examples():
    B = blaschke.build([0, 0.5, -0.3j]).as_function()
    assert count_preimages(B, UNIT, 0.2).count == 3
    f = parse("1/z")
    rep = count_preimages(f, UNIT, 2)
    assert rep.count == 1 and rep.method is Method.WINDING and rep.min_image_distance > 0
    rep = count_preimages(f, UNIT, INF)
    assert rep.count == 1 and rep.w is INF
    S = rounded_polygon(TALL, 0.05)
    assert count_preimages(parse("exp(z)"), S, math.e * 1j).count == 2


def test_errors():
    with pytest.raises(TooCloseToImage):
        count_preimages(parse("z"), UNIT, 1)
    with pytest.raises(TooCloseToImage):
        count_preimages(parse("z^2"), UNIT, 1j)
    with pytest.raises(PoleOnCurve):
        count_preimages(parse("1/(z - 1)"), UNIT, 0)


def test_grid_reproduces_worked_example():
    f = parse("exp(z)")
    tall = count_on_grid(f, rounded_polygon(TALL, 0.05), WS3)
    assert [r.count for r in tall] == [1, 2, 0]
    assert [r.count for r in tall] == [oracles.exp_count(w, TALL, 0.05) for w in WS3]
    literal = count_on_grid(f, rounded_polygon(LITERAL, 0.05), WS3)
    oracle = [oracles.exp_count(w, LITERAL, 0.05) for w in WS3]
    assert [r.count for r in literal] == oracle
    assert max(oracle) <= 1


def test_grid_empty_and_duplicates():
    f = parse("z^3 - 3*z")
    assert count_on_grid(f, UNIT, []) == []
    a, b = count_on_grid(f, UNIT, [0.3 + 0.1j, 0.3 + 0.1j])
    assert a == b


def test_grid_matches_single_calls_and_workers():
    from pseudolem.config import ToleranceConfig
    f = parse("1/(z - 0.5)^2 + z")
    ws = [0.1 + 0.1j, 3, INF, 2j, -5 + 1j]
    single = [count_preimages(f, UNIT, w) for w in ws]
    assert count_on_grid(f, UNIT, ws) == single
    assert count_on_grid(f, UNIT, ws, ToleranceConfig(workers=4)) == single


def test_grid_return_exceptions():
    reps = count_on_grid(parse("z"), UNIT, [0, 1, 2], return_exceptions=True)
    assert reps[0].count == 1 and isinstance(reps[1], TooCloseToImage) and reps[2].count == 0


def test_chordal():
    assert chordal(INF, INF) == 0
    assert chordal(0, INF) == 2
    assert chordal(1, -1) == pytest.approx(2)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_blaschke_degree_counts(n):
    rng = np.random.default_rng(n)
    f = blaschke.build(oracles.random_disk(rng, n, 0.9)).as_function()
    for w in oracles.random_disk(rng, 10, 0.95):
        assert count_preimages(f, UNIT, w).count == n
    assert count_preimages(f, UNIT, INF).count == 0


def test_against_rational_oracle():
    rng = np.random.default_rng(31)
    for _ in range(10):
        num = oracles.random_disk(rng, 4, 2.0)
        den = oracles.random_disk(rng, 3, 2.0)
        f = parse(f"({oracles.poly_text(num)})/({oracles.poly_text(den)})")
        for w in oracles.random_disk(rng, 5, 3.0):
            try:
                c = count_preimages(f, UNIT, w).count
            except TooCloseToImage:
                continue
            assert c == oracles.rational_count(num, den, w)


@pytest.mark.parametrize("verts", [TALL, LITERAL, [0, 2, 2 + 14j, 14j]])
def test_exp_against_log_oracle(verts):
    S = rounded_polygon(verts, 0.05)
    rng = np.random.default_rng(8)
    ws = np.exp(rng.uniform(-1, 3, 20)) * np.exp(2j * np.pi * rng.uniform(size=20))
    for w, rep in zip(ws, count_on_grid(parse("exp(z)"), S, ws, return_exceptions=True)):
        if isinstance(rep, TooCloseToImage):
            continue
        assert rep.count == oracles.exp_count(w, verts, 0.05)


def test_retracted_count_on_the_image():
    # z = -0.5 lies on S and maps to 0.25, whose other preimage 0.5 is inside
    f = parse("z^2")
    S = circle(0.5, 1)
    with pytest.raises(TooCloseToImage):
        count_preimages(f, S, 0.25)
    assert count_preimages_retracted(f, S, 0.25).count == 1
    assert count_preimages_retracted(f, UNIT, 1).count == 0
    rep = count_preimages_retracted(parse("z"), UNIT, 1)
    assert rep.count == 0 and rep.method is Method.RETRACTED


# properties -------------------------------------------------------------------

coef = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=25)
@given(a=coef, b=coef, c=coef, d=coef, w=st.complex_numbers(max_magnitude=3.0))
def test_mobius_invariance(a, b, c, d, w):
    if abs(a * d - b * c) < 0.1:
        return
    f = parse("(z^2 - 0.25)/(z + 2)")
    g = f.mobius(a, b, c, d)
    if abs(c * w + d) < 1e-3:
        return
    rw = (a * w + b) / (c * w + d)
    try:
        n_f = count_preimages(f, UNIT, w).count
        n_g = count_preimages(g, UNIT, rw).count
    except (TooCloseToImage, PoleOnCurve):
        return
    assert n_f == n_g


@settings(max_examples=30)
@given(w=st.complex_numbers(max_magnitude=4.0), k=st.integers(0, 3))
def test_conjugation_symmetry(w, k):
    f = parse(["z^3 - 3*z", "(z^2 - 1)/z", "z^2*(1 - 0.5*z)/(z - 0.5)", "exp(z)"][k])
    S = circle(0.1, 1.3)
    try:
        a = count_preimages(f, S, w).count
        b = count_preimages(f, S, w.conjugate()).count
    except TooCloseToImage:
        return
    assert a == b


@pytest.mark.parametrize("text", CORPUS)
def test_constancy_on_faces(text):
    f = parse(text)
    S = circle(0.05, 1.1) if "exp" not in text else rounded_polygon(TALL, 0.05)
    img = f(S.param.point(np.linspace(0, 1, 20001)))
    scale = np.max(np.abs(img - img.mean()))
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(60):
        a = img.mean() + scale * oracles.random_disk(rng, 1, 1.2)[0]
        b = a + 0.2 * scale * np.exp(2j * np.pi * rng.uniform())
        seg = a + (b - a) * np.linspace(0, 1, 400)
        gap = np.min(np.abs(seg[:, None] - img[None, ::10]))
        if gap < 0.02 * scale:
            continue
        ra, rb = count_on_grid(f, S, [a, b])
        assert ra.count == rb.count
        checked += 1
    assert checked > 10


def _wind(values, w):
    steps = np.angle((values[1:] - w) / (values[:-1] - w))
    return int(round(np.sum(steps) / (2 * np.pi)))


def _ccw(points):
    area = np.sum((np.conj(points[:-1]) * points[1:]).imag)
    return points if area > 0 else points[::-1]


@pytest.mark.parametrize("text,radius", [("z^2 - 1", 0.5), ("z^3 - z", 0.2)])
def test_winding_formula_with_traced_holes(text, radius):
    """Count over a face with holes = outer winding minus the hole windings.

    Gamma is small enough that f^-1(Gamma) inside S has several components,
    so the face of f^-1(outside Gamma) is multiply connected.
    """
    f = parse(text)
    S = circle(0, 2)
    gamma = circle(0, radius)
    comps = trace_components(f, gamma, Rect.from_bounds(-2.5, 2.5, -2.5, 2.5))
    holes = [_ccw(c.points) for c in comps if c.closed and np.max(np.abs(c.points)) < 2]
    assert len(holes) >= 2
    outer = f(S.param.point(np.linspace(0, 1, 4001)))
    for w in [0.9 * radius * np.exp(0.7j), 1.5 + 0.2j, -2 - 1j]:
        n = count_preimages(f, S, w).count
        inner = [_wind(f(h), w) for h in holes]
        if abs(w) > radius:
            assert n == _wind(outer, w) - sum(inner)
            assert all(k == 0 for k in inner)
        else:
            # inside Gamma every preimage sits in one of the holes
            assert n == sum(inner)


def test_essential_singularity_is_rejected():
    with pytest.raises(UnsupportedOperation):
        count_preimages(parse("exp(1/z)"), UNIT, 2)
    # removable and outside singularities are fine
    assert count_preimages(parse("sin(z)/z"), UNIT, 2).count == 0
    assert count_preimages(parse("exp(1/(z - 3))"), UNIT, 2).count == 0
